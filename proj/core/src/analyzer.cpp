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

#include "rdense/analyzer.hpp"

#include <cstdio>
#include <json.hpp>
#include <sstream>

#include "rdense/ops.hpp"

namespace rdense {

namespace {

class Tracer {
 public:
  explicit Tracer(CostReport& out) : out_(out) {}

  void conv(const std::string& path, std::size_t c_out, std::size_t kernel,
            std::size_t stride, std::size_t padding) {
    const std::size_t h = conv_output_extent(h_, kernel, stride, padding);
    const std::size_t w = conv_output_extent(w_, kernel, stride, padding);
    const std::uint64_t params = std::uint64_t{c_out} * c_ * kernel * kernel;
    emit(path, kernel == 1 ? "conv1x1" : "conv3x3", c_out, h, w, params, params * h * w);
  }
  void bn(const std::string& path) { emit(path, "bn", c_, h_, w_, 2 * std::uint64_t{c_}, 0); }
  void relu(const std::string& path) { emit(path, "relu", c_, h_, w_, 0, 0); }
  void pool(const std::string& path) {
    emit(path, "pool", c_, pool_output_extent(h_), pool_output_extent(w_), 0, 0);
  }
  void gap(const std::string& path) { emit(path, "gap", c_, 1, 1, 0, 0); }
  void fc(const std::string& path, std::size_t classes) {
    const std::uint64_t weights = std::uint64_t{classes} * c_;
    emit(path, "fc", classes, 1, 1, weights + classes, weights);
  }
  void concat(const std::string& path, std::size_t channels) {
    emit(path, "concat", channels, h_, w_, 0, 0);
  }
  void add(const std::string& path) { emit(path, "add", c_, h_, w_, 0, 0); }
  void stage(const std::string& name) { out_.stages.push_back({name, c_, h_, w_}); }

  void set_input(std::size_t c, std::size_t h, std::size_t w) { c_ = c, h_ = h, w_ = w; }
  std::size_t channels() const { return c_; }

 private:
  void emit(const std::string& path, const char* kind, std::size_t c, std::size_t h,
            std::size_t w, std::uint64_t params, std::uint64_t macs) {
    out_.rows.push_back(CostRow{path, kind, c, h, w, params, macs});
    out_.total_params += params;
    out_.total_flops += macs;
    c_ = c, h_ = h, w_ = w;
  }

  CostReport& out_;
  std::size_t c_ = 0, h_ = 0, w_ = 0;
};

}  // namespace

CostReport report(const ArchSpec& spec) {
  spec.validate();
  CostReport out;
  out.spec = spec;
  Tracer t(out);
  const std::size_t k = spec.growth_rate;
  const std::size_t k0 = spec.block_input_channels();

  t.set_input(spec.input_channels, spec.input_height, spec.input_width);
  t.conv("stem/conv3x3", k0, 3, spec.stem_stride, 1);
  t.stage("Convolution");
  t.pool("stem/pool");
  t.stage("Avg. pooling");

  for (std::size_t b = 0; b < spec.num_blocks; ++b) {
    const std::string block = "block" + std::to_string(b + 1);
    for (std::size_t l = 0; l < spec.layers_per_block; ++l) {
      const std::string layer = block + "/layer" + std::to_string(l + 1);
      const std::size_t in_channels = t.channels();
      t.bn(layer + "/bn1");
      t.relu(layer + "/relu1");
      t.conv(layer + "/conv1x1", spec.bottleneck_channels(), 1, 1, 0);
      t.bn(layer + "/bn2");
      t.relu(layer + "/relu2");
      t.conv(layer + "/conv3x3", k, 3, 1, 1);
      t.concat(layer + "/concat", in_channels + k);
    }
    t.stage("Dense block-" + std::to_string(b + 1));
    if (b + 1 == spec.num_blocks) break;
    const std::string trans = "transition" + std::to_string(b + 1);
    t.bn(trans + "/bn");
    t.relu(trans + "/relu");
    t.conv(trans + "/conv1x1", k0, 1, 1, 0);
    t.pool(trans + "/pool");
    if (spec.residual) {
      // avg_pool2 of the block input lands on the same 4k x H/2 x W/2 grid.
      t.add(trans + "/skip_add");
    }
    t.stage("Transition block-" + std::to_string(b + 1));
  }

  t.bn("head/bn");
  t.relu("head/relu");
  t.gap("head/global_pool");
  t.fc("head/fc", spec.num_classes);
  t.stage("Classification");
  return out;
}

std::uint64_t count_params(const ArchSpec& spec) { return report(spec).total_params; }

std::uint64_t count_flops(const ArchSpec& spec) { return report(spec).total_flops; }

std::string format_millions(std::uint64_t value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*fM", decimals, static_cast<double>(value) / 1e6);
  return buf;
}

std::string render_json(const CostReport& r) {
  nlohmann::ordered_json spec = {
      {"name", r.spec.name},
      {"growth_rate", r.spec.growth_rate},
      {"layers_per_block", r.spec.layers_per_block},
      {"num_blocks", r.spec.num_blocks},
      {"input", {r.spec.input_channels, r.spec.input_height, r.spec.input_width}},
      {"num_classes", r.spec.num_classes},
      {"residual", r.spec.residual},
      {"stem_stride", r.spec.stem_stride},
  };
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const CostRow& row : r.rows) {
    rows.push_back({{"path", row.path},
                    {"kind", row.kind},
                    {"output", {row.channels, row.height, row.width}},
                    {"params", row.params},
                    {"macs", row.macs}});
  }
  nlohmann::ordered_json stages = nlohmann::ordered_json::array();
  for (const CostStage& s : r.stages) {
    stages.push_back({{"name", s.name}, {"output", {s.channels, s.height, s.width}}});
  }
  nlohmann::ordered_json doc = {{"spec", spec},
                                {"rows", rows},
                                {"stages", stages},
                                {"total_params", r.total_params},
                                {"total_flops", r.total_flops}};
  return doc.dump(2) + "\n";
}

std::string render_table(const CostReport& r) {
  std::ostringstream os;
  char line[256];
  os << r.spec.name << "  (k=" << r.spec.growth_rate << ", m=" << r.spec.layers_per_block
     << ", blocks=" << r.spec.num_blocks << ", input " << r.spec.input_channels << "x"
     << r.spec.input_height << "x" << r.spec.input_width << ", " << r.spec.num_classes
     << " classes, " << (r.spec.residual ? "residual" : "plane") << ")\n\n";
  std::snprintf(line, sizeof line, "%-24s %-14s\n", "Stage", "Output size");
  os << line;
  for (const CostStage& s : r.stages) {
    const std::string extent = std::to_string(s.height) + " x " + std::to_string(s.width);
    std::snprintf(line, sizeof line, "%-24s %-14s\n", s.name.c_str(), extent.c_str());
    os << line;
  }
  os << "\n";
  std::snprintf(line, sizeof line, "%-32s %-16s %12s %14s\n", "Layer", "Output", "Params", "MACs");
  os << line;
  for (const CostRow& row : r.rows) {
    if (row.params == 0 && row.macs == 0) continue;
    const std::string shape = std::to_string(row.channels) + "x" + std::to_string(row.height) +
                              "x" + std::to_string(row.width);
    std::snprintf(line, sizeof line, "%-32s %-16s %12llu %14llu\n", row.path.c_str(),
                  shape.c_str(), static_cast<unsigned long long>(row.params),
                  static_cast<unsigned long long>(row.macs));
    os << line;
  }
  os << "\nTotal parameters: " << r.total_params << " (" << format_millions(r.total_params, 2)
     << ")\nTotal FLOPs:      " << r.total_flops << " (" << format_millions(r.total_flops, 1)
     << ")\n";
  return os.str();
}

}  // namespace rdense
