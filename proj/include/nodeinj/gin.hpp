#pragma once

// Inference for a graph isomorphism network with final-layer sum-pooled
// readout. Each layer computes, per node v,
//   h'_v = MLP((1 + eps) * h_v + sum_{u in N(v)} h_u)
// where the MLP applies ReLU between (not after) its dense sub-layers.

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nodeinj/error.hpp"
#include "nodeinj/graph.hpp"
#include "nodeinj/matrix.hpp"
#include "nodeinj/victim.hpp"

namespace nodeinj {

/// y = weight * x + bias, weight is (out x in).
struct DenseLayer {
  Matrix weight;
  std::vector<double> bias;

  [[nodiscard]] std::size_t in_dim() const noexcept { return weight.cols(); }
  [[nodiscard]] std::size_t out_dim() const noexcept { return weight.rows(); }

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

struct GinLayer {
  double eps = 0.0;
  std::vector<DenseLayer> mlp;

  friend bool operator==(const GinLayer&, const GinLayer&) = default;
};

struct GinWeights {
  std::size_t input_dim = 0;
  std::size_t num_classes = 0;
  std::vector<GinLayer> layers;
  DenseLayer readout;
  nlohmann::json metadata = nlohmann::json::object();

  [[nodiscard]] std::size_t hidden_dim() const {
    return layers.empty() ? input_dim : layers.back().mlp.back().out_dim();
  }

  /// Throws ShapeError unless every matrix chains into the next.
  void validate() const {
    if (num_classes < 2) throw ShapeError("GIN needs at least two classes");
    if (input_dim == 0) throw ShapeError("GIN input_dim must be >= 1");
    std::size_t width = input_dim;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      if (layers[l].mlp.empty()) throw ShapeError("layer " + std::to_string(l) + " has an empty MLP");
      for (std::size_t s = 0; s < layers[l].mlp.size(); ++s) {
        const auto& d = layers[l].mlp[s];
        if (d.in_dim() != width) {
          throw ShapeError("layer " + std::to_string(l) + " sub-layer " + std::to_string(s) + " expects width " +
                           std::to_string(d.in_dim()) + ", got " + std::to_string(width));
        }
        if (d.bias.size() != d.out_dim()) throw ShapeError("bias length does not match weight rows");
        width = d.out_dim();
      }
    }
    if (readout.in_dim() != width) throw ShapeError("readout input width does not match final hidden width");
    if (readout.out_dim() != num_classes) throw ShapeError("readout output width does not match num_classes");
    if (readout.bias.size() != num_classes) throw ShapeError("readout bias length does not match num_classes");
  }

  friend bool operator==(const GinWeights& a, const GinWeights& b) {
    return a.input_dim == b.input_dim && a.num_classes == b.num_classes && a.layers == b.layers &&
           a.readout == b.readout;
  }
};

namespace gin_detail {

inline void apply_dense(const DenseLayer& d, std::span<const double> x, std::vector<double>& out) {
  out.assign(d.bias.begin(), d.bias.end());
  for (std::size_t r = 0; r < d.out_dim(); ++r) {
    const auto w = d.weight.row(r);
    double acc = 0.0;
    for (std::size_t c = 0; c < x.size(); ++c) acc += w[c] * x[c];
    out[r] += acc;
  }
}

inline Matrix matrix_from_json(const nlohmann::json& j) {
  if (j.is_object()) {
    const auto shape = j.at("shape").get<std::vector<std::size_t>>();
    if (shape.size() != 2) throw ShapeError("matrix shape must have two entries");
    return Matrix(shape[0], shape[1], j.at("data").get<std::vector<double>>());
  }
  return Matrix::from_rows(j.get<std::vector<std::vector<double>>>());
}

inline nlohmann::json matrix_to_json(const Matrix& m) {
  const auto flat = m.flat();
  return {{"shape", {m.rows(), m.cols()}}, {"data", std::vector<double>(flat.begin(), flat.end())}};
}

inline DenseLayer dense_from_json(const nlohmann::json& j) {
  return {matrix_from_json(j.at("weight")), j.at("bias").get<std::vector<double>>()};
}

inline nlohmann::json dense_to_json(const DenseLayer& d) {
  return {{"weight", matrix_to_json(d.weight)}, {"bias", d.bias}};
}

}  // namespace gin_detail

inline GinWeights gin_weights_from_json(const nlohmann::json& j) {
  using namespace gin_detail;
  GinWeights w;
  try {
    w.input_dim = j.at("input_dim").get<std::size_t>();
    w.num_classes = j.at("num_classes").get<std::size_t>();
    for (const auto& lj : j.at("layers")) {
      GinLayer layer;
      layer.eps = lj.at("eps").get<double>();
      for (const auto& dj : lj.at("mlp")) layer.mlp.push_back(dense_from_json(dj));
      w.layers.push_back(std::move(layer));
    }
    w.readout = dense_from_json(j.at("readout"));
    if (j.contains("metadata")) w.metadata = j["metadata"];
  } catch (const nlohmann::json::exception& ex) {
    throw ParseError(std::string("invalid GIN weight file: ") + ex.what());
  }
  w.validate();
  return w;
}

inline nlohmann::json gin_weights_to_json(const GinWeights& w) {
  using namespace gin_detail;
  nlohmann::json j;
  j["input_dim"] = w.input_dim;
  j["num_classes"] = w.num_classes;
  auto& layers = j["layers"] = nlohmann::json::array();
  for (const auto& l : w.layers) {
    nlohmann::json mlp = nlohmann::json::array();
    for (const auto& d : l.mlp) mlp.push_back(dense_to_json(d));
    layers.push_back({{"eps", l.eps}, {"mlp", std::move(mlp)}});
  }
  j["readout"] = dense_to_json(w.readout);
  j["metadata"] = w.metadata;
  return j;
}

inline GinWeights load_gin_weights(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open weight file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& ex) {
    throw ParseError(path.string() + ": " + ex.what());
  }
  return gin_weights_from_json(j);
}

/// Class scores before argmax.
inline std::vector<double> gin_logits(const GinWeights& w, const Graph& g) {
  using gin_detail::apply_dense;
  if (g.feature_dim() != w.input_dim) {
    throw ShapeError("graph feature width " + std::to_string(g.feature_dim()) + " != GIN input_dim " +
                     std::to_string(w.input_dim));
  }
  const std::size_t n = g.num_nodes();
  const auto adj = g.adjacency_lists();
  Matrix h = g.features();
  std::vector<double> agg, a, b;
  for (const auto& layer : w.layers) {
    Matrix next(n, layer.mlp.back().out_dim());
    for (std::size_t v = 0; v < n; ++v) {
      const auto hv = h.row(v);
      agg.assign(hv.begin(), hv.end());
      for (double& x : agg) x *= 1.0 + layer.eps;
      for (NodeId u : adj[v]) {
        const auto hu = h.row(u);
        for (std::size_t c = 0; c < agg.size(); ++c) agg[c] += hu[c];
      }
      const std::vector<double>* cur = &agg;
      for (std::size_t s = 0; s < layer.mlp.size(); ++s) {
        std::vector<double>& dst = (s % 2 == 0) ? a : b;
        apply_dense(layer.mlp[s], *cur, dst);
        if (s + 1 < layer.mlp.size()) {
          for (double& x : dst) x = std::max(0.0, x);
        }
        cur = &dst;
      }
      std::copy(cur->begin(), cur->end(), next.row(v).begin());
    }
    h = std::move(next);
  }
  std::vector<double> pooled(h.cols(), 0.0);
  for (std::size_t v = 0; v < n; ++v) {
    const auto hv = h.row(v);
    for (std::size_t c = 0; c < pooled.size(); ++c) pooled[c] += hv[c];
  }
  std::vector<double> logits;
  apply_dense(w.readout, pooled, logits);
  return logits;
}

/// argmax of the logits; ties go to the smallest class index.
inline Label gin_predict(const GinWeights& w, const Graph& g) {
  const auto logits = gin_logits(w, g);
  return static_cast<Label>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

class GinVictim final : public VictimOracle {
 public:
  explicit GinVictim(GinWeights weights) : weights_(std::move(weights)) { weights_.validate(); }
  Label predict(const Graph& g) override { return gin_predict(weights_, g); }
  [[nodiscard]] std::size_t num_classes() const override { return weights_.num_classes; }
  [[nodiscard]] const GinWeights& weights() const noexcept { return weights_; }

 private:
  GinWeights weights_;
};

}  // namespace nodeinj
