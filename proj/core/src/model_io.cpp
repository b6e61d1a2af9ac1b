/*
 * Copyright 2026 The hte Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "hte/model_io.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"

#include "hte/error.hpp"
#include "hte/util.hpp"

namespace hte {

namespace {

constexpr const char* kFormat = "hte.causal_forest";
constexpr int kVersion = 1;

using nlohmann::json;

json config_to_json(const ForestConfig& cfg) {
  return json{{"n_trees", cfg.n_trees},
              {"subsample_fraction", cfg.subsample_fraction},
              {"honesty_fraction", cfg.honesty_fraction},
              {"mtry", cfg.mtry},
              {"min_leaf_treated", cfg.min_leaf_treated},
              {"min_leaf_control", cfg.min_leaf_control},
              {"group_size", cfg.group_size},
              {"seed", cfg.seed},
              {"cluster_aware", cfg.cluster_aware},
              {"center", cfg.center}};
}

ForestConfig config_from_json(const json& j) {
  ForestConfig cfg;
  cfg.n_trees = j.at("n_trees").get<uint32_t>();
  cfg.subsample_fraction = j.at("subsample_fraction").get<double>();
  cfg.honesty_fraction = j.at("honesty_fraction").get<double>();
  cfg.mtry = j.at("mtry").get<uint32_t>();
  cfg.min_leaf_treated = j.at("min_leaf_treated").get<uint32_t>();
  cfg.min_leaf_control = j.at("min_leaf_control").get<uint32_t>();
  cfg.group_size = j.at("group_size").get<uint32_t>();
  cfg.seed = j.at("seed").get<uint64_t>();
  cfg.cluster_aware = j.at("cluster_aware").get<bool>();
  cfg.center = j.at("center").get<bool>();
  return cfg;
}

std::string bitmap_to_hex(const std::vector<uint64_t>& words) {
  std::string out;
  out.reserve(words.size() * 16);
  for (uint64_t w : words) out += hex_u64(w);
  return out;
}

std::vector<uint64_t> bitmap_from_hex(const std::string& hex) {
  if (hex.size() % 16 != 0) throw SchemaError("model artifact: bad subsample bitmap");
  std::vector<uint64_t> words(hex.size() / 16);
  for (size_t k = 0; k < words.size(); ++k) {
    uint64_t w = 0;
    for (size_t c = 0; c < 16; ++c) {
      const char ch = hex[k * 16 + c];
      uint64_t digit;
      if (ch >= '0' && ch <= '9') {
        digit = static_cast<uint64_t>(ch - '0');
      } else if (ch >= 'a' && ch <= 'f') {
        digit = static_cast<uint64_t>(ch - 'a' + 10);
      } else {
        throw SchemaError("model artifact: bad subsample bitmap");
      }
      w = (w << 4) | digit;
    }
    words[k] = w;
  }
  return words;
}

}  // namespace

void save_model(const CausalForestModel& model, const std::string& path) {
  json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["config"] = config_to_json(model.config);
  j["schema_digest"] = hex_u64(model.schema_digest);
  j["n_train"] = model.n_train;
  j["feature_names"] = model.feature_names;
  j["profile"] = model.profile;
  j["oob_m"] = model.oob_m;
  j["oob_e"] = model.oob_e;
  j["digest"] = hex_u64(model.digest());

  json trees = json::array();
  for (const Tree& tree : model.trees) {
    json nodes = json::array();
    for (const TreeNode& nd : tree.nodes) {
      nodes.push_back(json::array({nd.feature, nd.threshold, nd.left, nd.right, nd.parent,
                                   std::isnan(nd.value) ? 0.0 : nd.value, nd.source,
                                   nd.est_treated, nd.est_control}));
    }
    trees.push_back(json{{"nodes", std::move(nodes)},
                         {"subsample", bitmap_to_hex(tree.in_subsample)},
                         {"degenerate", tree.degenerate}});
  }
  j["trees"] = std::move(trees);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValueError("cannot open file for writing: " + path);
  out << j.dump();
  out << '\n';
  if (!out) throw ValueError("write failed: " + path);
}

CausalForestModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValueError("cannot open model file: " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw SchemaError(std::string("model artifact: parse error: ") + e.what());
  }

  if (!j.contains("format") || j["format"] != kFormat) {
    throw SchemaError("model artifact: unknown format");
  }
  if (!j.contains("version") || j["version"].get<int>() != kVersion) {
    throw SchemaError("model artifact: unsupported version");
  }

  CausalForestModel model;
  model.config = config_from_json(j.at("config"));
  model.schema_digest = std::stoull(j.at("schema_digest").get<std::string>(), nullptr, 16);
  model.n_train = j.at("n_train").get<size_t>();
  model.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  model.profile = j.at("profile").get<std::vector<double>>();
  model.oob_m = j.at("oob_m").get<std::vector<double>>();
  model.oob_e = j.at("oob_e").get<std::vector<double>>();

  for (const json& tj : j.at("trees")) {
    Tree tree;
    tree.degenerate = tj.at("degenerate").get<bool>();
    tree.in_subsample = bitmap_from_hex(tj.at("subsample").get<std::string>());
    for (const json& nj : tj.at("nodes")) {
      TreeNode nd;
      nd.feature = nj.at(0).get<int32_t>();
      nd.threshold = nj.at(1).get<double>();
      nd.left = nj.at(2).get<int32_t>();
      nd.right = nj.at(3).get<int32_t>();
      nd.parent = nj.at(4).get<int32_t>();
      nd.value = nj.at(5).get<double>();
      nd.source = nj.at(6).get<int32_t>();
      nd.est_treated = nj.at(7).get<uint32_t>();
      nd.est_control = nj.at(8).get<uint32_t>();
      tree.nodes.push_back(nd);
    }
    model.trees.push_back(std::move(tree));
  }

  const std::string stored = j.at("digest").get<std::string>();
  if (hex_u64(model.digest()) != stored) {
    throw SchemaError("model artifact: digest mismatch (corrupted or edited payload)");
  }
  return model;
}

}  // namespace hte
