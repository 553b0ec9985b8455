//
// Project QEqNet - Copyright 2026 QEqNet Developers.
// SPDX-License-Identifier: Apache-2.0
//

#include "qeqnet/gnn.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>

#include "qeqnet/errors.hpp"

namespace qeqnet {

namespace {

void check_config(const ModelConfig &c) {
  if (c.input_width < 1 || c.hidden_width < 1 || c.n_layers < 1 ||
      c.readout_hidden_width < 1)
    throw InvalidArgument("model widths and layer count must be at least 1");
  if (c.activation != "relu")
    throw InvalidArgument("unknown activation '" + c.activation + "'");
}

int layer_input_width(const ModelConfig &c, int layer) {
  return layer == 0 ? c.input_width : c.hidden_width;
}

void check_params(const ModelParams &p) {
  check_config(p.config);
  const ModelConfig &c = p.config;
  if (static_cast<int>(p.layers.size()) != c.n_layers)
    throw ModelMismatch("layer count does not match config");
  for (int k = 0; k < c.n_layers; ++k) {
    const std::size_t in = layer_input_width(c, k);
    const std::size_t h = c.hidden_width;
    if (p.layers[k].w_self.size() != h * in ||
        p.layers[k].w_nbr.size() != h * in || p.layers[k].b.size() != h)
      throw ModelMismatch("layer " + std::to_string(k) + " has wrong shapes");
  }
  const std::size_t h = c.hidden_width;
  const std::size_t rh = c.readout_hidden_width;
  if (p.readout_w1.size() != rh * h || p.readout_b1.size() != rh ||
      p.readout_w2.size() != 2 * rh || p.readout_b2.size() != 2)
    throw ModelMismatch("readout has wrong shapes");
}

ENSParams forward_impl(const ModelParams &params,
                       const kernels::NeighborList &nl,
                       const FeatureMatrix &features, kernels::Exec exec) {
  check_params(params);
  const ModelConfig &c = params.config;
  if (features.cols != c.input_width)
    throw ModelMismatch("feature width " + std::to_string(features.cols) +
                        " does not match model input width " +
                        std::to_string(c.input_width));
  if (params.feature_layout_version != kFeatureLayoutVersion)
    throw ModelMismatch("model was built for feature layout version " +
                        std::to_string(params.feature_layout_version));
  const int n = features.rows;
  if (nl.size() != n)
    throw InvalidArgument("graph size does not match feature rows");

  std::vector<float> h = features.data;
  std::vector<float> agg;
  std::vector<float> next(static_cast<std::size_t>(n) * c.hidden_width);
  for (int k = 0; k < c.n_layers; ++k) {
    const int in = layer_input_width(c, k);
    agg.resize(static_cast<std::size_t>(n) * in);
    kernels::aggregate_neighbors(exec, nl, h.data(), in, c.aggregation,
                                 agg.data());
    kernels::sage_layer(exec, h.data(), agg.data(), n, in,
                        params.layers[k].w_self.data(),
                        params.layers[k].w_nbr.data(),
                        params.layers[k].b.data(), c.hidden_width,
                        next.data());
    h.assign(next.begin(),
             next.begin() + static_cast<std::size_t>(n) * c.hidden_width);
  }

  std::vector<float> z(static_cast<std::size_t>(n) * c.readout_hidden_width);
  kernels::linear_forward(exec, h.data(), n, c.hidden_width,
                          params.readout_w1.data(), params.readout_b1.data(),
                          c.readout_hidden_width, true, z.data());
  std::vector<float> out(static_cast<std::size_t>(n) * 2);
  kernels::linear_forward(exec, z.data(), n, c.readout_hidden_width,
                          params.readout_w2.data(), params.readout_b2.data(),
                          2, false, out.data());

  ENSParams ens;
  ens.e.resize(n);
  ens.s.resize(n);
  for (int i = 0; i < n; ++i) {
    ens.e[i] = out[2 * static_cast<std::size_t>(i)];
    ens.s[i] = out[2 * static_cast<std::size_t>(i) + 1];
  }
  return ens;
}

} // namespace

std::size_t param_count(const ModelConfig &c) {
  std::size_t total = 0;
  for (int k = 0; k < c.n_layers; ++k) {
    const std::size_t in = layer_input_width(c, k);
    total += 2 * static_cast<std::size_t>(c.hidden_width) * in +
             c.hidden_width;
  }
  total += static_cast<std::size_t>(c.readout_hidden_width) * c.hidden_width +
           c.readout_hidden_width;
  total += 2 * static_cast<std::size_t>(c.readout_hidden_width) + 2;
  return total;
}

ModelParams init_model(const ModelConfig &config) {
  check_config(config);
  ModelParams p;
  p.config = config;
  p.feature_layout_version = kFeatureLayoutVersion;

  std::mt19937_64 gen(config.seed);
  // Raw-bit uniform in [-1, 1) so the draw sequence is identical across
  // platforms and standard-library versions.
  auto uniform = [&gen]() {
    return (static_cast<double>(gen() >> 11) * 0x1.0p-53) * 2.0 - 1.0;
  };
  auto fill_glorot = [&uniform](std::vector<float> &w, int fan_out,
                                int fan_in) {
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    w.resize(static_cast<std::size_t>(fan_out) * fan_in);
    for (auto &x : w)
      x = static_cast<float>(uniform() * limit);
  };

  p.layers.resize(config.n_layers);
  for (int k = 0; k < config.n_layers; ++k) {
    const int in = layer_input_width(config, k);
    fill_glorot(p.layers[k].w_self, config.hidden_width, in);
    fill_glorot(p.layers[k].w_nbr, config.hidden_width, in);
    p.layers[k].b.assign(config.hidden_width, 0.0f);
  }
  fill_glorot(p.readout_w1, config.readout_hidden_width, config.hidden_width);
  p.readout_b1.assign(config.readout_hidden_width, 0.0f);
  fill_glorot(p.readout_w2, 2, config.readout_hidden_width);
  p.readout_b2.assign(2, 0.0f);
  return p;
}

ENSParams forward(const ModelParams &params, const Molecule &mol,
                  const FeatureMatrix &features, kernels::Exec exec) {
  if (features.rows != mol.atom_count())
    throw InvalidArgument("feature rows do not match atom count");
  return forward_impl(params, kernels::NeighborList::from_molecule(mol),
                      features, exec);
}

ENSParams forward(const ModelParams &params, const BatchedGraph &graph,
                  kernels::Exec exec) {
  const int n = graph.features.rows;
  kernels::NeighborList nl;
  {
    std::vector<std::vector<int>> adj(n);
    for (auto [a, b] : graph.edges) {
      adj[a].push_back(b);
      adj[b].push_back(a);
    }
    nl.offsets.resize(n + 1);
    nl.offsets[0] = 0;
    for (int i = 0; i < n; ++i) {
      std::sort(adj[i].begin(), adj[i].end());
      nl.offsets[i + 1] = nl.offsets[i] + static_cast<int>(adj[i].size());
      nl.neighbors.insert(nl.neighbors.end(), adj[i].begin(), adj[i].end());
    }
  }
  return forward_impl(params, nl, graph.features, exec);
}

BatchedGraph batch(const std::vector<Molecule> &mols,
                   const std::vector<FeatureMatrix> &features) {
  if (mols.empty())
    throw InvalidArgument("cannot batch zero molecules");
  if (mols.size() != features.size())
    throw InvalidArgument("molecule and feature counts differ");
  const int cols = features[0].cols;
  BatchedGraph bg;
  bg.features.cols = cols;
  int offset = 0;
  for (std::size_t m = 0; m < mols.size(); ++m) {
    if (features[m].cols != cols)
      throw InvalidArgument("feature widths differ across batch");
    if (features[m].rows != mols[m].atom_count())
      throw InvalidArgument("feature rows do not match atom count");
    bg.features.data.insert(bg.features.data.end(), features[m].data.begin(),
                            features[m].data.end());
    for (const Bond &b : mols[m].bonds)
      bg.edges.push_back({b.a + offset, b.b + offset});
    bg.segments.push_back({offset, offset + mols[m].atom_count()});
    offset += mols[m].atom_count();
  }
  bg.features.rows = offset;
  return bg;
}

std::vector<std::vector<double>> unbatch(const BatchedGraph &graph,
                                         const std::vector<double> &values) {
  if (static_cast<int>(values.size()) != graph.features.rows)
    throw InvalidArgument("value count does not match batched node count");
  std::vector<std::vector<double>> out;
  out.reserve(graph.segments.size());
  for (auto [begin, end] : graph.segments)
    out.emplace_back(values.begin() + begin, values.begin() + end);
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr const char *kMagic = "QEQNET-MODEL v1";

void append_floats(std::string &out, const std::vector<float> &v) {
  for (float f : v) {
    const auto bits = std::bit_cast<std::uint32_t>(f);
    out.push_back(static_cast<char>(bits & 0xff));
    out.push_back(static_cast<char>((bits >> 8) & 0xff));
    out.push_back(static_cast<char>((bits >> 16) & 0xff));
    out.push_back(static_cast<char>((bits >> 24) & 0xff));
  }
}

class FloatReader {
public:
  FloatReader(std::string_view bytes) : bytes_(bytes) {}

  void read(std::vector<float> &out, std::size_t count) {
    out.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      if (pos_ + 4 > bytes_.size())
        throw TruncationError("model payload ends early");
      std::uint32_t bits = 0;
      for (int b = 3; b >= 0; --b)
        bits = (bits << 8) |
               static_cast<std::uint8_t>(bytes_[pos_ + static_cast<std::size_t>(b)]);
      out[i] = std::bit_cast<float>(bits);
      pos_ += 4;
    }
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

} // namespace

std::string save_model(const ModelParams &params) {
  check_params(params);
  const ModelConfig &c = params.config;
  std::ostringstream header;
  header << kMagic << '\n';
  header << "feature_layout_version " << params.feature_layout_version << '\n';
  header << "input_width " << c.input_width << '\n';
  header << "hidden_width " << c.hidden_width << '\n';
  header << "n_layers " << c.n_layers << '\n';
  header << "aggregation "
         << (c.aggregation == kernels::Aggregate::Mean ? "mean" : "sum")
         << '\n';
  header << "activation " << c.activation << '\n';
  header << "readout_hidden_width " << c.readout_hidden_width << '\n';
  header << "seed " << c.seed << '\n';
  header << "endian little\n";
  header << "float_count " << param_count(c) << '\n';
  header << "payload\n";

  std::string out = header.str();
  for (const auto &layer : params.layers) {
    append_floats(out, layer.w_self);
    append_floats(out, layer.w_nbr);
    append_floats(out, layer.b);
  }
  append_floats(out, params.readout_w1);
  append_floats(out, params.readout_b1);
  append_floats(out, params.readout_w2);
  append_floats(out, params.readout_b2);
  return out;
}

ModelParams load_model(std::string_view bytes) {
  std::size_t pos = 0;
  auto next_line = [&]() -> std::string_view {
    if (pos >= bytes.size())
      throw TruncationError("model header ends early");
    std::size_t end = bytes.find('\n', pos);
    if (end == std::string_view::npos)
      throw TruncationError("model header ends early");
    std::string_view line = bytes.substr(pos, end - pos);
    pos = end + 1;
    return line;
  };

  if (next_line() != kMagic)
    throw VersionError("not a recognized model file version");

  ModelParams p;
  ModelConfig &c = p.config;
  std::size_t float_count = 0;
  bool have_count = false;
  for (;;) {
    std::string_view line = next_line();
    if (line == "payload")
      break;
    std::size_t space = line.find(' ');
    if (space == std::string_view::npos)
      throw VersionError("malformed model header line '" + std::string(line) +
                         "'");
    std::string key(line.substr(0, space));
    std::string value(line.substr(space + 1));
    try {
      if (key == "feature_layout_version") {
        p.feature_layout_version = std::stoi(value);
        if (p.feature_layout_version != kFeatureLayoutVersion)
          throw VersionError("unsupported feature layout version " + value);
      } else if (key == "input_width")
        c.input_width = std::stoi(value);
      else if (key == "hidden_width")
        c.hidden_width = std::stoi(value);
      else if (key == "n_layers")
        c.n_layers = std::stoi(value);
      else if (key == "aggregation") {
        if (value == "mean")
          c.aggregation = kernels::Aggregate::Mean;
        else if (value == "sum")
          c.aggregation = kernels::Aggregate::Sum;
        else
          throw VersionError("unknown aggregation '" + value + "'");
      } else if (key == "activation")
        c.activation = value;
      else if (key == "readout_hidden_width")
        c.readout_hidden_width = std::stoi(value);
      else if (key == "seed")
        c.seed = std::stoull(value);
      else if (key == "endian") {
        if (value != "little")
          throw VersionError("unsupported endianness '" + value + "'");
      } else if (key == "float_count") {
        float_count = std::stoull(value);
        have_count = true;
      } else
        throw VersionError("unknown model header field '" + key + "'");
    } catch (const std::invalid_argument &) {
      throw VersionError("malformed value for header field '" + key + "'");
    } catch (const std::out_of_range &) {
      throw VersionError("out-of-range value for header field '" + key + "'");
    }
  }

  check_config(c);
  if (!have_count || float_count != param_count(c))
    throw TruncationError("payload float count disagrees with configuration");
  if (bytes.size() - pos != 4 * float_count)
    throw TruncationError("payload size mismatch: expected " +
                          std::to_string(4 * float_count) + " bytes, found " +
                          std::to_string(bytes.size() - pos));

  FloatReader reader(bytes.substr(pos));
  p.layers.resize(c.n_layers);
  for (int k = 0; k < c.n_layers; ++k) {
    const std::size_t in = layer_input_width(c, k);
    reader.read(p.layers[k].w_self, static_cast<std::size_t>(c.hidden_width) * in);
    reader.read(p.layers[k].w_nbr, static_cast<std::size_t>(c.hidden_width) * in);
    reader.read(p.layers[k].b, c.hidden_width);
  }
  reader.read(p.readout_w1, static_cast<std::size_t>(c.readout_hidden_width) *
                                c.hidden_width);
  reader.read(p.readout_b1, c.readout_hidden_width);
  reader.read(p.readout_w2, 2 * static_cast<std::size_t>(c.readout_hidden_width));
  reader.read(p.readout_b2, 2);
  check_params(p);
  return p;
}

void save_model_file(const ModelParams &params, const std::string &path) {
  const std::string bytes = save_model(params);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw InvalidArgument("cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out)
    throw InvalidArgument("failed writing '" + path + "'");
}

ModelParams load_model_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw InvalidArgument("cannot open model file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_model(ss.str());
}

} // namespace qeqnet
