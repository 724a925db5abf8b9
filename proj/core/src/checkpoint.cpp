// Copyright 2026 The RDenseCNN Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rdense/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "rdense/dataset.hpp"
#include "rdense/error.hpp"

namespace rdense {

namespace {

constexpr char kMagic[8] = {'R', 'D', 'N', 'S', 'C', 'K', 'P', 'T'};
constexpr char kTrailer[4] = {'E', 'N', 'D', '.'};

enum class EntryKind : std::uint8_t { kValue = 0, kVelocity = 1, kBuffer = 2 };

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out.insert(out.end(), b, b + n);
  }
  template <typename U>
  void uint(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void str(const std::string& s) {
    uint<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  template <typename T>
  void elements(const Tensor<T>& t) {
    using Bits = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
    for (const T v : t.data()) uint<Bits>(std::bit_cast<Bits>(v));
  }
  std::vector<std::uint8_t> out;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  const std::uint8_t* take(std::size_t n, const char* what) {
    if (in_.size() - pos_ < n) {
      throw FormatError("checkpoint truncated while reading " + std::string(what) +
                        " at offset " + std::to_string(pos_) + " (" + std::to_string(n) +
                        " bytes needed, " + std::to_string(in_.size() - pos_) + " left)");
    }
    const std::uint8_t* p = in_.data() + pos_;
    pos_ += n;
    return p;
  }
  template <typename U>
  U uint(const char* what) {
    const std::uint8_t* p = take(sizeof(U), what);
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(U{p[i]} << (8 * i));
    return v;
  }
  std::string str(const char* what) {
    const std::uint32_t n = uint<std::uint32_t>(what);
    const std::uint8_t* p = take(n, what);
    return std::string(reinterpret_cast<const char*>(p), n);
  }
  template <typename T>
  void elements(Tensor<T>& t, const char* what) {
    using Bits = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
    if (remaining() / sizeof(T) < t.numel()) take(t.numel() * sizeof(T), what);
    for (T& v : t.data()) v = std::bit_cast<T>(uint<Bits>(what));
  }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

void write_spec(Writer& w, const ArchSpec& s) {
  w.str(s.name);
  for (std::size_t v : {s.growth_rate, s.layers_per_block, s.num_blocks, s.input_channels,
                        s.input_height, s.input_width, s.num_classes, s.stem_stride}) {
    w.uint<std::uint64_t>(v);
  }
  w.uint<std::uint8_t>(s.residual ? 1 : 0);
}

ArchSpec read_spec(Reader& r) {
  ArchSpec s;
  s.name = r.str("spec name");
  for (std::size_t* v : {&s.growth_rate, &s.layers_per_block, &s.num_blocks, &s.input_channels,
                         &s.input_height, &s.input_width, &s.num_classes, &s.stem_stride}) {
    *v = static_cast<std::size_t>(r.uint<std::uint64_t>("spec field"));
  }
  s.residual = r.uint<std::uint8_t>("spec residual flag") != 0;
  return s;
}

CheckpointInfo read_header(Reader& r) {
  const std::uint8_t* magic = r.take(sizeof kMagic, "magic");
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw FormatError("not a checkpoint: bad magic at offset 0");
  }
  CheckpointInfo info;
  info.version = r.uint<std::uint32_t>("version");
  if (info.version != kCheckpointVersion) {
    throw FormatError("checkpoint format version " + std::to_string(info.version) +
                      " is not supported (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  info.element_bytes = r.uint<std::uint8_t>("element type");
  if (info.element_bytes != 4 && info.element_bytes != 8) {
    throw FormatError("checkpoint element size " + std::to_string(info.element_bytes) +
                      " is neither 4 nor 8");
  }
  info.spec = read_spec(r);
  info.epoch = static_cast<std::size_t>(r.uint<std::uint64_t>("epoch"));
  return info;
}

template <typename T>
void write_entry(Writer& w, EntryKind kind, const std::string& path, const Tensor<T>& t) {
  w.uint<std::uint8_t>(static_cast<std::uint8_t>(kind));
  w.str(path);
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(t.shape().rank()));
  for (std::size_t d : t.shape().dims()) w.uint<std::uint64_t>(d);
  w.elements(t);
}

}  // namespace

template <typename T>
std::vector<std::uint8_t> encode_checkpoint(const Network<T>& net, std::size_t epoch) {
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.uint<std::uint32_t>(kCheckpointVersion);
  w.uint<std::uint8_t>(sizeof(T));
  write_spec(w, net.spec());
  w.uint<std::uint64_t>(epoch);
  const auto params = net.params().parameters();
  const auto buffers = net.params().buffers();
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(2 * params.size() + buffers.size()));
  for (const Parameter<T>& p : params) {
    write_entry(w, EntryKind::kValue, p.path, p.var.value());
    write_entry(w, EntryKind::kVelocity, p.path, p.velocity);
  }
  for (const Buffer<T>& b : buffers) write_entry(w, EntryKind::kBuffer, b.path, b.var.value());
  w.bytes(kTrailer, sizeof kTrailer);
  return std::move(w.out);
}

template <typename T>
void save_checkpoint(const Network<T>& net, std::size_t epoch, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(net, epoch);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

CheckpointInfo decode_checkpoint_header(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  return read_header(r);
}

CheckpointInfo peek_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint_header(read_file(path));
}

template <typename T>
Checkpoint<T> decode_checkpoint(std::span<const std::uint8_t> bytes, const ArchSpec* expected) {
  Reader r(bytes);
  const CheckpointInfo info = read_header(r);
  if (info.element_bytes != sizeof(T)) {
    throw FormatError("checkpoint stores " + std::to_string(info.element_bytes) +
                      "-byte elements, requested " + std::to_string(sizeof(T)) + "-byte");
  }
  if (expected) {
    const auto differences = expected->diff(info.spec);
    if (!differences.empty()) {
      std::string msg = "checkpoint architecture does not match:";
      for (const std::string& d : differences) msg += "\n  " + d;
      throw ConfigError(msg);
    }
  }
  Checkpoint<T> ck{Network<T>::build(info.spec, 0), info.epoch};
  ParamStore<T>& store = ck.net.params();
  const std::size_t expected_entries = 2 * store.parameters().size() + store.buffers().size();
  const std::uint32_t count = r.uint<std::uint32_t>("entry count");
  if (count != expected_entries) {
    throw FormatError("checkpoint holds " + std::to_string(count) + " entries, the network needs " +
                      std::to_string(expected_entries));
  }
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto kind = static_cast<EntryKind>(r.uint<std::uint8_t>("entry kind"));
    const std::string path = r.str("entry path");
    const std::uint32_t rank = r.uint<std::uint32_t>("entry rank");
    if (rank > 8) throw FormatError("entry '" + path + "' has implausible rank " + std::to_string(rank));
    std::vector<std::size_t> dims(rank);
    for (std::size_t& d : dims) d = static_cast<std::size_t>(r.uint<std::uint64_t>("entry extent"));
    const Shape shape(dims);
    Tensor<T>* target = nullptr;
    if (kind == EntryKind::kBuffer) {
      if (Buffer<T>* b = store.find_buffer(path)) target = &b->var.mutable_value();
    } else if (kind == EntryKind::kValue || kind == EntryKind::kVelocity) {
      if (Parameter<T>* p = store.find(path)) {
        target = kind == EntryKind::kValue ? &p->var.mutable_value() : &p->velocity;
      }
    } else {
      throw FormatError("entry '" + path + "' has unknown kind " +
                        std::to_string(static_cast<int>(kind)));
    }
    if (!target) throw FormatError("checkpoint entry '" + path + "' has no counterpart in the network");
    if (target->shape() != shape) {
      throw FormatError("checkpoint entry '" + path + "' is " + shape.str() + ", network expects " +
                        target->shape().str());
    }
    r.elements(*target, path.c_str());
  }
  const std::uint8_t* trailer = r.take(sizeof kTrailer, "trailer");
  if (std::memcmp(trailer, kTrailer, sizeof kTrailer) != 0 || r.remaining() != 0) {
    throw FormatError("checkpoint trailer missing or followed by extra bytes at offset " +
                      std::to_string(r.pos() - sizeof kTrailer));
  }
  return ck;
}

template <typename T>
Checkpoint<T> load_checkpoint(const std::filesystem::path& path, const ArchSpec* expected) {
  return decode_checkpoint<T>(read_file(path), expected);
}

#define RDENSE_INSTANTIATE_CHECKPOINT(T)                                                     \
  template std::vector<std::uint8_t> encode_checkpoint(const Network<T>&, std::size_t);     \
  template void save_checkpoint(const Network<T>&, std::size_t, const std::filesystem::path&); \
  template Checkpoint<T> decode_checkpoint(std::span<const std::uint8_t>, const ArchSpec*);  \
  template Checkpoint<T> load_checkpoint(const std::filesystem::path&, const ArchSpec*);

RDENSE_INSTANTIATE_CHECKPOINT(float)
RDENSE_INSTANTIATE_CHECKPOINT(double)

}  // namespace rdense
