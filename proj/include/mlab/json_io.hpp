#pragma once

#include <cstdio>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mlab/geometry.hpp"
#include "mlab/learner.hpp"
#include "mlab/manifold.hpp"
#include "mlab/nn.hpp"
#include "mlab/targets.hpp"

namespace mlab::io {

using nlohmann::json;

// Fails fast on unknown keys so config typos surface immediately.
inline void check_keys(const json& j, const std::set<std::string>& allowed,
                       const std::set<std::string>& required, const std::string& context) {
  if (!j.is_object()) throw std::runtime_error(context + ": expected a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) throw std::runtime_error(context + ": unknown key '" + key + "'");
  }
  for (const auto& key : required) {
    if (!j.count(key)) throw std::runtime_error(context + ": missing key '" + key + "'");
  }
}

inline json manifold_spec_to_json(const manifold::ManifoldSpec& spec) {
  return json{{"reach_bound", spec.reach_bound()},
              {"intrinsic_dim", spec.intrinsic_dim()},
              {"code_bits", spec.code_bits()}};
}

// Derived fields (repeat count, ambient dimension) are recomputed by the
// constructor and therefore revalidated on load.
inline manifold::ManifoldSpec manifold_spec_from_json(const json& j) {
  check_keys(j, {"reach_bound", "intrinsic_dim", "code_bits"},
             {"reach_bound", "intrinsic_dim", "code_bits"}, "manifold spec");
  return manifold::ManifoldSpec(j.at("reach_bound").get<double>(),
                                j.at("intrinsic_dim").get<int>(),
                                j.at("code_bits").get<int>());
}

inline json hard_target_spec_to_json(const targets::HardTargetSpec& spec) {
  return json{{"manifold", manifold_spec_to_json(spec.manifold_spec)},
              {"subset", spec.subset.indices()},
              {"truncation", spec.truncation}};
}

inline targets::HardTargetSpec hard_target_spec_from_json(const json& j) {
  check_keys(j, {"manifold", "subset", "truncation"}, {"manifold", "subset"},
             "hard target spec");
  auto ms = manifold_spec_from_json(j.at("manifold"));
  targets::HardTargetSpec spec(
      ms, targets::ParitySubset(j.at("subset").get<std::vector<int>>(),
                                ms.code_bits() - ms.code_bits() / 2));
  if (j.count("truncation") && j.at("truncation").get<int>() != spec.truncation)
    throw std::runtime_error("hard target spec: truncation must equal floor(code_bits/2)");
  return spec;
}

inline json network_to_json(const nn::ReluNetwork& net) {
  json layers = json::array();
  for (const auto& layer : net.layers()) {
    layers.push_back(json{{"rows", layer.weights.rows()},
                          {"cols", layer.weights.cols()},
                          {"weights", layer.weights.data()},
                          {"bias", layer.bias}});
  }
  return json{{"input_dim", net.input_dim()},
              {"bias_placement",
               net.placement() == nn::BiasPlacement::after_relu ? "after_relu" : "inside_relu"},
              {"layers", layers},
              {"readout", net.readout()}};
}

inline nn::ReluNetwork network_from_json(const json& j) {
  check_keys(j, {"input_dim", "bias_placement", "layers", "readout"},
             {"input_dim", "bias_placement", "layers", "readout"}, "network checkpoint");
  std::vector<nn::Layer> layers;
  for (const auto& lj : j.at("layers")) {
    check_keys(lj, {"rows", "cols", "weights", "bias"}, {"rows", "cols", "weights", "bias"},
               "network layer");
    const auto rows = lj.at("rows").get<std::size_t>();
    const auto cols = lj.at("cols").get<std::size_t>();
    const auto weights = lj.at("weights").get<std::vector<double>>();
    if (weights.size() != rows * cols)
      throw std::runtime_error("network checkpoint: weight count does not match shape");
    nn::Layer layer;
    layer.weights = Matrix(rows, cols);
    layer.weights.data() = weights;
    layer.bias = lj.at("bias").get<Vec>();
    layers.push_back(std::move(layer));
  }
  const std::string placement = j.at("bias_placement").get<std::string>();
  if (placement != "after_relu" && placement != "inside_relu")
    throw std::runtime_error("network checkpoint: bad bias placement tag");
  nn::ReluNetwork net(std::move(layers), j.at("readout").get<Vec>(),
                      placement == "after_relu" ? nn::BiasPlacement::after_relu
                                                : nn::BiasPlacement::inside_relu);
  if (net.input_dim() != j.at("input_dim").get<std::size_t>())
    throw std::runtime_error("network checkpoint: input_dim does not match first layer");
  return net;
}

inline json epsilon_net_to_json(const geom::EpsilonNet& net) {
  json anchors = json::array();
  for (const auto& a : net.anchors) anchors.push_back(json{{"x", a.x}, {"y", a.y}});
  return json{{"epsilon", net.epsilon},
              {"delta", net.delta},
              {"certification",
               json{{"trials", net.certification.trials},
                    {"misses", net.certification.misses},
                    {"miss_upper_bound", net.certification.miss_upper_bound},
                    {"certified", net.certification.certified},
                    {"total_draws", net.certification.total_draws}}},
              {"anchors", anchors}};
}

inline geom::EpsilonNet epsilon_net_from_json(const json& j) {
  check_keys(j, {"epsilon", "delta", "certification", "anchors"},
             {"epsilon", "delta", "certification", "anchors"}, "epsilon net");
  geom::EpsilonNet net;
  net.epsilon = j.at("epsilon").get<double>();
  net.delta = j.at("delta").get<double>();
  const auto& c = j.at("certification");
  net.certification.trials = c.at("trials").get<std::size_t>();
  net.certification.misses = c.at("misses").get<std::size_t>();
  net.certification.miss_upper_bound = c.at("miss_upper_bound").get<double>();
  net.certification.certified = c.at("certified").get<bool>();
  net.certification.total_draws = c.at("total_draws").get<std::size_t>();
  for (const auto& aj : j.at("anchors"))
    net.anchors.push_back({aj.at("x").get<Vec>(), aj.at("y").get<double>()});
  return net;
}

inline json interpolation_model_to_json(const learner::InterpolationModel& model) {
  return json{{"lipschitz_bound", model.lipschitz_bound},
              {"target_error", model.target_error},
              {"fallback_value", model.fallback_value},
              {"net", epsilon_net_to_json(model.net)}};
}

inline learner::InterpolationModel interpolation_model_from_json(const json& j) {
  check_keys(j, {"lipschitz_bound", "target_error", "fallback_value", "net"},
             {"lipschitz_bound", "net"}, "interpolation model");
  learner::InterpolationModel model;
  model.lipschitz_bound = j.at("lipschitz_bound").get<double>();
  model.target_error = j.value("target_error", 0.0);
  model.fallback_value = j.value("fallback_value", 0.0);
  model.net = epsilon_net_from_json(j.at("net"));
  return model;
}

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j;
  in >> j;
  return j;
}

// Full-file durability: write to a temporary sibling, then rename over the
// target.
inline void write_json_atomic(const std::string& path, const json& j) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot open " + tmp);
    out << j.dump(2) << '\n';
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("cannot rename " + tmp + " to " + path);
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << text;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace mlab::io
