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
#include "hte/pipeline.hpp"

#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "hte/error.hpp"
#include "hte/model_io.hpp"
#include "hte/report.hpp"
#include "hte/util.hpp"

namespace hte {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

void check_keys(const json& j, const std::string& block,
                std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* key : allowed) {
      if (it.key() == key) {
        ok = true;
        break;
      }
    }
    if (!ok) throw ConfigError("config: unknown key '" + it.key() + "' in " + block);
  }
}

EffectShape parse_effect_shape(const std::string& s) {
  if (s == "mismatch") return EffectShape::kMismatch;
  if (s == "constant") return EffectShape::kConstant;
  if (s == "null") return EffectShape::kNull;
  throw ConfigError("config: unknown effect_shape '" + s + "'");
}

PayoffShape parse_payoff_shape(const std::string& s) {
  if (s == "lognormal") return PayoffShape::kLognormal;
  if (s == "constant_mean") return PayoffShape::kConstantMean;
  throw ConfigError("config: unknown payoff_shape '" + s + "'");
}

PolicyKind parse_policy_kind(const std::string& s) {
  if (s == "risk_threshold") return PolicyKind::kRiskThreshold;
  if (s == "cate_topk_per_ventile") return PolicyKind::kCateTopkPerVentile;
  if (s == "utility_topk_per_ventile") return PolicyKind::kUtilityTopkPerVentile;
  throw ConfigError("config: unknown policy kind '" + s + "'");
}

json policies_to_json(const std::vector<PolicySpec>& policies) {
  json arr = json::array();
  for (const PolicySpec& p : policies) {
    json jp;
    switch (p.kind) {
      case PolicyKind::kRiskThreshold:
        jp["kind"] = "risk_threshold";
        jp["threshold"] = p.threshold;
        break;
      case PolicyKind::kCateTopkPerVentile:
        jp["kind"] = "cate_topk_per_ventile";
        jp["k"] = p.k;
        break;
      case PolicyKind::kUtilityTopkPerVentile:
        jp["kind"] = "utility_topk_per_ventile";
        jp["k"] = p.k;
        jp["constant_payoff"] = p.constant_payoff;
        break;
    }
    jp["post_only"] = p.post_only;
    arr.push_back(jp);
  }
  return arr;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValueError("cannot open file for writing: " + path);
  out << content;
  if (!out) throw ValueError("write failed: " + path);
}

struct PipelineState {
  const RunConfig& cfg;
  std::ostream& log;
  std::vector<std::string> artifacts;

  std::optional<Cohort> full_cohort;   // as generated/loaded (unfiltered)
  std::optional<OracleColumns> oracle;
  std::optional<CausalForestModel> model;
  std::optional<std::vector<TauEstimate>> eval_taus;  // aligned with eval cohort
  std::optional<Cohort> train_cohort;
  std::optional<Cohort> eval_cohort;
};

const Cohort& full_cohort(PipelineState& st) {
  if (!st.full_cohort) {
    const std::string path = st.cfg.resolved_cohort_path();
    if (!fs::exists(path)) throw ValueError("missing cohort file: " + path);
    st.full_cohort = load_cohort(path, st.cfg.resolve_schema(), Provenance::kExternal);
  }
  return *st.full_cohort;
}

const Cohort& train_cohort(PipelineState& st) {
  if (!st.train_cohort) {
    const Cohort& full = full_cohort(st);
    if (st.cfg.train_max_year) {
      if (!full.has_year()) {
        throw ConfigError("config: train_max_year requires a cohort with a YEAR column");
      }
      std::vector<uint32_t> keep;
      for (size_t i = 0; i < full.size(); ++i) {
        if (full.year[i] <= *st.cfg.train_max_year) keep.push_back(static_cast<uint32_t>(i));
      }
      st.train_cohort = subset_cohort(full, keep);
    } else {
      st.train_cohort = full;
    }
  }
  return *st.train_cohort;
}

const Cohort& eval_cohort(PipelineState& st) {
  if (!st.eval_cohort) {
    const Cohort& full = full_cohort(st);
    if (st.cfg.predict_year) {
      if (!full.has_year()) {
        throw ConfigError("config: predict_year requires a cohort with a YEAR column");
      }
      std::vector<uint32_t> keep;
      for (size_t i = 0; i < full.size(); ++i) {
        if (full.year[i] == *st.cfg.predict_year) keep.push_back(static_cast<uint32_t>(i));
      }
      st.eval_cohort = subset_cohort(full, keep);
    } else {
      st.eval_cohort = train_cohort(st);
    }
  }
  return *st.eval_cohort;
}

const CausalForestModel& model(PipelineState& st) {
  if (!st.model) {
    const std::string path = st.cfg.resolved_model_path();
    if (!fs::exists(path)) throw ValueError("missing model file: " + path);
    st.model = load_model(path);
  }
  return *st.model;
}

bool eval_is_training(const PipelineState& st) { return !st.cfg.predict_year.has_value(); }

const std::vector<TauEstimate>& eval_taus(PipelineState& st) {
  if (!st.eval_taus) {
    const Cohort& cohort = eval_cohort(st);
    const CausalForestModel& m = model(st);
    if (st.cfg.predict_mode == PredictMode::kOob && eval_is_training(st)) {
      st.eval_taus = predict_oob(m, cohort, st.cfg.threads);
    } else {
      st.eval_taus = predict(m, cohort, st.cfg.threads);
    }
  }
  return *st.eval_taus;
}

void stage_simulate(PipelineState& st) {
  DGPConfig dgp = st.cfg.dgp;
  dgp.seed = st.cfg.seed;
  SyntheticCohort synth = generate(dgp, st.cfg.threads);
  const std::string cohort_path = st.cfg.resolved_cohort_path();
  const std::string oracle_path = st.cfg.resolved_oracle_path();
  export_cohort(synth.cohort, cohort_path);
  export_oracle(synth.cohort, synth.oracle, oracle_path);
  st.artifacts.push_back(cohort_path);
  st.artifacts.push_back(oracle_path);
  st.log << "simulate: n=" << synth.cohort.size() << " -> " << cohort_path << "\n";
  st.full_cohort = std::move(synth.cohort);
  st.oracle = std::move(synth.oracle);
  st.train_cohort.reset();
  st.eval_cohort.reset();
}

void stage_fit(PipelineState& st) {
  const Cohort& cohort = train_cohort(st);
  ForestConfig forest_cfg = st.cfg.forest;
  forest_cfg.seed = st.cfg.seed;
  CausalForestModel fitted = fit_causal_forest(cohort, forest_cfg, st.cfg.threads);
  const std::string path = st.cfg.resolved_model_path();
  save_model(fitted, path);
  st.artifacts.push_back(path);
  st.log << "fit: " << fitted.trees.size() << " trees on n=" << cohort.size() << " -> " << path
         << " (digest " << hex_u64(fitted.digest()) << ")\n";
  st.model = std::move(fitted);
  st.eval_taus.reset();
}

void stage_predict(PipelineState& st) {
  const Cohort& cohort = eval_cohort(st);
  const std::vector<TauEstimate>& taus = eval_taus(st);
  const std::vector<double> variances = variance_estimates(model(st), cohort, st.cfg.threads);

  std::ostringstream out;
  out << "unit_id,tau_hat,variance\n";
  for (size_t i = 0; i < cohort.size(); ++i) {
    out << cohort.unit_ids[i] << ',' << format_double(taus[i].tau_hat) << ','
        << format_double(variances[i]) << '\n';
  }
  const std::string path = st.cfg.resolved_predictions_path();
  write_text(path, out.str());
  st.artifacts.push_back(path);
  st.log << "predict: " << cohort.size() << " units -> " << path << "\n";
}

void stage_calibrate(PipelineState& st) {
  const Cohort& cohort = train_cohort(st);
  const CausalForestModel& m = model(st);
  if (m.oob_m.empty() || m.oob_e.empty()) {
    throw EstimationError(
        "calibrate: the model was fit without centering; OOB nuisance estimates are unavailable");
  }
  const std::vector<TauEstimate> taus = predict_oob(m, cohort, st.cfg.threads);
  const CalibrationReport report =
      best_linear_predictor(cohort, taus, m.oob_m, m.oob_e, st.cfg.calibration);
  const std::string text_path = st.cfg.out_dir + "/calibration.txt";
  const std::string csv_path = st.cfg.out_dir + "/calibration.csv";
  write_text(text_path, render_calibration(report));
  write_text(csv_path, calibration_csv(report));
  st.artifacts.push_back(text_path);
  st.artifacts.push_back(csv_path);
  st.log << "calibrate: alpha=" << report.alpha
         << " beta=" << (report.beta_degenerate ? std::string("degenerate")
                                                : std::to_string(report.beta))
         << " p_beta=" << report.p_beta << "\n";
}

std::vector<double> load_predictions(const std::string& path, const Cohort& cohort) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValueError("cannot open predictions file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("empty predictions file: " + path);
  std::vector<double> taus;
  taus.reserve(cohort.size());
  size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    ++row;
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
      if (c == ',') {
        cells.push_back(cur);
        cur.clear();
      } else if (c != '\r') {
        cur.push_back(c);
      }
    }
    cells.push_back(cur);
    if (cells.size() < 2) throw ValueError("predictions row " + std::to_string(row) + " malformed");
    int64_t unit_id;
    double tau;
    if (!parse_int64(cells[0], &unit_id) || !parse_double(cells[1], &tau)) {
      throw ValueError("predictions row " + std::to_string(row) + " unparseable");
    }
    if (row > cohort.size() || unit_id != cohort.unit_ids[row - 1]) {
      throw ValueError("predictions do not align with the evaluation cohort at row " +
                       std::to_string(row));
    }
    taus.push_back(tau);
  }
  if (taus.size() != cohort.size()) {
    throw ValueError("predictions cover " + std::to_string(taus.size()) + " of " +
                     std::to_string(cohort.size()) + " units");
  }
  return taus;
}

void stage_policy_eval(PipelineState& st) {
  const Cohort& cohort = eval_cohort(st);
  const std::string pred_path = st.cfg.resolved_predictions_path();
  if (!fs::exists(pred_path)) {
    throw ValueError("missing predictions file: " + pred_path +
                     " (run `predict` first or set paths.predictions)");
  }
  const std::vector<double> taus = load_predictions(pred_path, cohort);
  const CausalForestModel& m = model(st);

  std::vector<PolicyRow> rows;
  for (const PolicySpec& spec : st.cfg.policies) {
    PolicyRow row;
    row.strategy = spec.label();
    row.impact = evaluate_policy(spec, cohort, taus, &m, st.cfg.threads);
    rows.push_back(std::move(row));
  }
  const std::string csv_path = st.cfg.out_dir + "/policy_table.csv";
  const std::string text_path = st.cfg.out_dir + "/policy_table.txt";
  write_text(csv_path, emit_report(rows, ReportFormat::kCsv));
  write_text(text_path, emit_report(rows, ReportFormat::kTextTable));
  st.artifacts.push_back(csv_path);
  st.artifacts.push_back(text_path);
  st.log << "policy-eval: " << rows.size() << " strategies -> " << text_path << "\n";
}

void stage_diagnose(PipelineState& st) {
  const Cohort& cohort = train_cohort(st);
  const CausalForestModel& m = model(st);
  const std::vector<TauEstimate> taus = predict_oob(m, cohort, st.cfg.threads);
  const std::vector<double> tau_vals = tau_values(taus);

  if (!m.oob_e.empty()) {
    const OverlapReport overlap = overlap_report(m.oob_e, cohort, st.cfg.overlap_epsilon);
    const std::string path = st.cfg.out_dir + "/overlap.csv";
    write_text(path, overlap_csv(overlap));
    st.artifacts.push_back(path);
  } else {
    st.log << "diagnose: overlap skipped (model fit without centering)\n";
  }

  {
    const auto rows = cate_by_ventile(tau_vals, cohort.ventile);
    const std::string path = st.cfg.out_dir + "/cate_by_ventile.csv";
    write_text(path, cate_by_ventile_csv(rows));
    st.artifacts.push_back(path);
  }
  {
    const auto grids = cate_surface(m, cohort, st.cfg.surface);
    const std::string path = st.cfg.out_dir + "/cate_surface.csv";
    write_text(path, surface_csv(grids));
    st.artifacts.push_back(path);
  }
  {
    const auto rows = los_by_ventile(cohort);
    const std::string path = st.cfg.out_dir + "/los_by_ventile.csv";
    write_text(path, los_by_ventile_csv(rows));
    st.artifacts.push_back(path);
  }
  st.log << "diagnose: wrote ventile, surface, and LOS diagnostics\n";
}

void write_manifest(PipelineState& st, const std::string& command) {
  json j;
  j["command"] = command;
  j["seed"] = st.cfg.seed;
  j["config_digest"] = hex_u64(st.cfg.digest());
  j["artifacts"] = st.artifacts;
  std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  j["generated_at"] = buf;
  const std::string path = st.cfg.out_dir + "/manifest.json";
  write_text(path, j.dump(2) + "\n");
  st.log << "manifest -> " << path << "\n";
}

}  // namespace

RunConfig RunConfig::from_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }

  try {
    check_keys(j, "the top level",
               {"seed", "threads", "out_dir", "simulate", "forest", "policies", "calibration",
                "diagnostics", "paths", "schema", "predict_mode", "train_max_year",
                "predict_year"});
    RunConfig cfg;
    cfg.seed = j.value("seed", cfg.seed);
    cfg.threads = j.value("threads", cfg.threads);
    cfg.out_dir = j.value("out_dir", cfg.out_dir);

    if (j.contains("simulate")) {
      const json& s = j["simulate"];
      check_keys(s, "simulate",
                 {"n", "p_extra", "baseline_rate", "post_fraction", "clusters", "effect_shape",
                  "payoff_shape", "emit_years"});
      cfg.dgp.n = s.value("n", cfg.dgp.n);
      cfg.dgp.p_extra = s.value("p_extra", cfg.dgp.p_extra);
      cfg.dgp.baseline_rate = s.value("baseline_rate", cfg.dgp.baseline_rate);
      cfg.dgp.post_fraction = s.value("post_fraction", cfg.dgp.post_fraction);
      cfg.dgp.clusters = s.value("clusters", cfg.dgp.clusters);
      if (s.contains("effect_shape")) {
        cfg.dgp.effect_shape = parse_effect_shape(s["effect_shape"].get<std::string>());
      }
      if (s.contains("payoff_shape")) {
        cfg.dgp.payoff_shape = parse_payoff_shape(s["payoff_shape"].get<std::string>());
      }
      cfg.dgp.emit_years = s.value("emit_years", cfg.dgp.emit_years);
    }

    if (j.contains("forest")) {
      const json& f = j["forest"];
      check_keys(f, "forest",
                 {"n_trees", "subsample_fraction", "honesty_fraction", "mtry", "min_leaf_treated",
                  "min_leaf_control", "group_size", "cluster_aware", "center"});
      cfg.forest.n_trees = f.value("n_trees", cfg.forest.n_trees);
      cfg.forest.subsample_fraction = f.value("subsample_fraction", cfg.forest.subsample_fraction);
      cfg.forest.honesty_fraction = f.value("honesty_fraction", cfg.forest.honesty_fraction);
      cfg.forest.mtry = f.value("mtry", cfg.forest.mtry);
      cfg.forest.min_leaf_treated = f.value("min_leaf_treated", cfg.forest.min_leaf_treated);
      cfg.forest.min_leaf_control = f.value("min_leaf_control", cfg.forest.min_leaf_control);
      cfg.forest.group_size = f.value("group_size", cfg.forest.group_size);
      cfg.forest.cluster_aware = f.value("cluster_aware", cfg.forest.cluster_aware);
      cfg.forest.center = f.value("center", cfg.forest.center);
    }

    if (j.contains("policies")) {
      for (const json& p : j["policies"]) {
        check_keys(p, "policies[]", {"kind", "threshold", "k", "constant_payoff", "post_only"});
        PolicySpec spec;
        spec.kind = parse_policy_kind(p.at("kind").get<std::string>());
        spec.threshold = p.value("threshold", spec.threshold);
        spec.k = p.value("k", spec.k);
        spec.constant_payoff = p.value("constant_payoff", spec.constant_payoff);
        spec.post_only = p.value("post_only", spec.post_only);
        cfg.policies.push_back(spec);
      }
    } else {
      PolicySpec risk;
      risk.kind = PolicyKind::kRiskThreshold;
      risk.threshold = 0.25;
      cfg.policies.push_back(risk);
      for (double k : {0.1, 0.2, 0.5}) {
        PolicySpec topk;
        topk.kind = PolicyKind::kCateTopkPerVentile;
        topk.k = k;
        cfg.policies.push_back(topk);
      }
    }

    if (j.contains("calibration")) {
      const json& c = j["calibration"];
      check_keys(c, "calibration", {"cluster_robust", "propensity_clip"});
      cfg.calibration.cluster_robust = c.value("cluster_robust", cfg.calibration.cluster_robust);
      cfg.calibration.propensity_clip = c.value("propensity_clip", cfg.calibration.propensity_clip);
    }

    if (j.contains("diagnostics")) {
      const json& d = j["diagnostics"];
      check_keys(d, "diagnostics", {"epsilon", "surface"});
      cfg.overlap_epsilon = d.value("epsilon", cfg.overlap_epsilon);
      if (d.contains("surface")) {
        const json& s = d["surface"];
        check_keys(s, "diagnostics.surface",
                   {"feature_x", "feature_y", "nx", "ny", "x_lo_pct", "x_hi_pct", "y_lo_pct",
                    "y_hi_pct", "age_overrides"});
        cfg.surface.feature_x = s.value("feature_x", cfg.surface.feature_x);
        cfg.surface.feature_y = s.value("feature_y", cfg.surface.feature_y);
        cfg.surface.nx = s.value("nx", cfg.surface.nx);
        cfg.surface.ny = s.value("ny", cfg.surface.ny);
        cfg.surface.x_lo_pct = s.value("x_lo_pct", cfg.surface.x_lo_pct);
        cfg.surface.x_hi_pct = s.value("x_hi_pct", cfg.surface.x_hi_pct);
        cfg.surface.y_lo_pct = s.value("y_lo_pct", cfg.surface.y_lo_pct);
        cfg.surface.y_hi_pct = s.value("y_hi_pct", cfg.surface.y_hi_pct);
        if (s.contains("age_overrides")) {
          cfg.surface.age_overrides = s["age_overrides"].get<std::vector<double>>();
        }
      }
    }

    if (j.contains("paths")) {
      const json& p = j["paths"];
      check_keys(p, "paths", {"cohort", "oracle", "model", "predictions"});
      cfg.cohort_path = p.value("cohort", cfg.cohort_path);
      cfg.oracle_path = p.value("oracle", cfg.oracle_path);
      cfg.model_path = p.value("model", cfg.model_path);
      cfg.predictions_path = p.value("predictions", cfg.predictions_path);
    }

    if (j.contains("schema")) {
      const std::string s = j["schema"].get<std::string>();
      if (s == "synthetic") {
        cfg.schema_choice = SchemaChoice::kSynthetic;
      } else if (s == "production") {
        cfg.schema_choice = SchemaChoice::kProduction;
      } else {
        throw ConfigError("config: unknown schema '" + s + "'");
      }
    }
    if (j.contains("predict_mode")) {
      const std::string s = j["predict_mode"].get<std::string>();
      if (s == "oob") {
        cfg.predict_mode = PredictMode::kOob;
      } else if (s == "fresh") {
        cfg.predict_mode = PredictMode::kFresh;
      } else {
        throw ConfigError("config: unknown predict_mode '" + s + "'");
      }
    }
    if (j.contains("train_max_year")) cfg.train_max_year = j["train_max_year"].get<int32_t>();
    if (j.contains("predict_year")) cfg.predict_year = j["predict_year"].get<int32_t>();

    cfg.dgp.seed = cfg.seed;
    cfg.forest.seed = cfg.seed;
    cfg.dgp.validate();
    cfg.forest.validate();
    for (const PolicySpec& p : cfg.policies) p.validate();
    return cfg;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

uint64_t RunConfig::digest() const {
  json j;
  j["seed"] = seed;
  j["simulate"] = {{"n", dgp.n},
                   {"p_extra", dgp.p_extra},
                   {"baseline_rate", dgp.baseline_rate},
                   {"post_fraction", dgp.post_fraction},
                   {"clusters", dgp.clusters},
                   {"effect_shape", effect_shape_name(dgp.effect_shape)},
                   {"payoff_shape", payoff_shape_name(dgp.payoff_shape)},
                   {"emit_years", dgp.emit_years}};
  j["forest"] = {{"n_trees", forest.n_trees},
                 {"subsample_fraction", forest.subsample_fraction},
                 {"honesty_fraction", forest.honesty_fraction},
                 {"mtry", forest.mtry},
                 {"min_leaf_treated", forest.min_leaf_treated},
                 {"min_leaf_control", forest.min_leaf_control},
                 {"group_size", forest.group_size},
                 {"cluster_aware", forest.cluster_aware},
                 {"center", forest.center}};
  j["policies"] = policies_to_json(policies);
  j["calibration"] = {{"cluster_robust", calibration.cluster_robust},
                      {"propensity_clip", calibration.propensity_clip}};
  j["diagnostics"] = {{"epsilon", overlap_epsilon},
                      {"surface",
                       {{"feature_x", surface.feature_x},
                        {"feature_y", surface.feature_y},
                        {"nx", surface.nx},
                        {"ny", surface.ny},
                        {"x_lo_pct", surface.x_lo_pct},
                        {"x_hi_pct", surface.x_hi_pct},
                        {"y_lo_pct", surface.y_lo_pct},
                        {"y_hi_pct", surface.y_hi_pct},
                        {"age_overrides", surface.age_overrides}}}};
  j["paths"] = {{"cohort", cohort_path},
                {"oracle", oracle_path},
                {"model", model_path},
                {"predictions", predictions_path}};
  j["schema"] = schema_choice == SchemaChoice::kSynthetic ? "synthetic" : "production";
  j["predict_mode"] = predict_mode == PredictMode::kOob ? "oob" : "fresh";
  j["train_max_year"] = train_max_year ? json(*train_max_year) : json(nullptr);
  j["predict_year"] = predict_year ? json(*predict_year) : json(nullptr);

  Fnv64 h;
  h.add_string(j.dump());
  return h.digest();
}

std::string RunConfig::resolved_cohort_path() const {
  return cohort_path.empty() ? out_dir + "/cohort.csv" : cohort_path;
}
std::string RunConfig::resolved_oracle_path() const {
  return oracle_path.empty() ? out_dir + "/cohort_oracle.csv" : oracle_path;
}
std::string RunConfig::resolved_model_path() const {
  return model_path.empty() ? out_dir + "/model.json" : model_path;
}
std::string RunConfig::resolved_predictions_path() const {
  return predictions_path.empty() ? out_dir + "/predictions.csv" : predictions_path;
}
FeatureSchema RunConfig::resolve_schema() const {
  return schema_choice == SchemaChoice::kSynthetic ? synthetic_schema(dgp.p_extra)
                                                   : FeatureSchema::production_default();
}

const std::vector<std::string>& known_commands() {
  static const std::vector<std::string> kCommands = {"simulate",  "fit",      "predict",
                                                     "calibrate", "policy-eval", "diagnose",
                                                     "all"};
  return kCommands;
}

int run_command(const std::string& command, const RunConfig& config, std::ostream& log) {
  try {
    fs::create_directories(config.out_dir);
    PipelineState st{config, log, {}, {}, {}, {}, {}, {}, {}};
    if (command == "simulate") {
      stage_simulate(st);
    } else if (command == "fit") {
      stage_fit(st);
    } else if (command == "predict") {
      stage_predict(st);
    } else if (command == "calibrate") {
      stage_calibrate(st);
    } else if (command == "policy-eval") {
      stage_policy_eval(st);
    } else if (command == "diagnose") {
      stage_diagnose(st);
    } else if (command == "all") {
      stage_simulate(st);
      stage_fit(st);
      stage_predict(st);
      stage_calibrate(st);
      stage_policy_eval(st);
      stage_diagnose(st);
    } else {
      log << "error: unknown command '" << command << "'\n";
      return 2;
    }
    write_manifest(st, command);
    return 0;
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return 2;
  } catch (const SchemaError& e) {
    log << "input error: " << e.what() << "\n";
    return 2;
  } catch (const ValueError& e) {
    log << "input error: " << e.what() << "\n";
    return 2;
  } catch (const ArgumentError& e) {
    log << "input error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace hte
