#ifndef SVINFER_CONFIG_JSON_HPP
#define SVINFER_CONFIG_JSON_HPP

#include <json.hpp>

#include "svinfer/harness.hpp"
#include "svinfer/inference.hpp"

namespace svinfer {

using Json = nlohmann::json;

inline Json to_json(const SummaryReport& report, const ExperimentConfig& cfg) {
  Json j;
  j["mode"] = to_string(cfg.mode);
  j["m1"] = cfg.dims.m1;
  j["m2"] = cfg.dims.m2;
  j["r"] = cfg.dims.r;
  j["sigma"] = cfg.sigma;
  j["reps"] = cfg.reps;
  j["alpha"] = cfg.alpha;
  j["master_seed"] = cfg.master_seed;
  Json per_n = Json::array();
  for (const auto& s : report.per_n) {
    per_n.push_back({{"n", s.n},
                     {"mean_dist2", s.mean_dist2},
                     {"theory_first_order", s.theory_first_order},
                     {"theory_empirical", s.theory_empirical},
                     {"ks_oracle", s.ks_oracle},
                     {"ks_plugin", s.ks_plugin},
                     {"coverage_rate", s.coverage_rate},
                     {"excluded", s.excluded},
                     {"wall_time_sec", s.wall_time_sec}});
  }
  j["per_n"] = per_n;
  return j;
}

inline Json to_json(const InferenceSummary& s, const ProblemDims& dims,
                    const Vector& lambda_hat) {
  Json j;
  j["m1"] = dims.m1;
  j["m2"] = dims.m2;
  j["r"] = dims.r;
  j["n"] = dims.n;
  j["m_star"] = dims.m_star();
  j["lambda_hat"] = std::vector<double>(lambda_hat.begin(), lambda_hat.end());
  j["lambda_tilde2"] = std::vector<double>(s.lambda_tilde2.begin(),
                                           s.lambda_tilde2.end());
  j["sigma2_hat"] = s.sigma2_hat;
  j["b_n"] = s.b_n;
  j["v_n"] = s.v_n;
  j["alpha"] = s.alpha;
  j["center"] = s.center;
  j["half_width"] = s.half_width;
  j["beta_diag"] = s.beta_diag;
  j["clamp_fired"] = s.clamp_fired;
  return j;
}

inline InferenceSummary summary_from_json(const Json& j, ProblemDims* dims,
                                          Vector* lambda_hat) {
  InferenceSummary s;
  if (dims) {
    dims->m1 = j.at("m1").get<int>();
    dims->m2 = j.at("m2").get<int>();
    dims->r = j.at("r").get<int>();
    dims->n = j.at("n").get<int>();
  }
  if (lambda_hat) {
    auto v = j.at("lambda_hat").get<std::vector<double>>();
    *lambda_hat = Eigen::Map<const Vector>(v.data(), v.size());
  }
  auto lt = j.at("lambda_tilde2").get<std::vector<double>>();
  s.lambda_tilde2 = Eigen::Map<const Vector>(lt.data(), lt.size());
  s.sigma2_hat = j.at("sigma2_hat").get<double>();
  s.b_n = j.at("b_n").get<double>();
  s.v_n = j.at("v_n").get<double>();
  s.alpha = j.at("alpha").get<double>();
  s.center = j.at("center").get<double>();
  s.half_width = j.at("half_width").get<double>();
  s.beta_diag = j.value("beta_diag", 0.0);
  s.clamp_fired = j.value("clamp_fired", false);
  return s;
}

/// Experiment config document; field names mirror ExperimentConfig.
inline ExperimentConfig experiment_config_from_json(const Json& j) {
  ExperimentConfig cfg;
  auto require = [&](const char* key) -> const Json& {
    if (!j.contains(key))
      throw std::invalid_argument(std::string("config: missing key '") + key +
                                  "'");
    return j.at(key);
  };
  try {
    cfg.dims.m1 = require("m1").get<int>();
    cfg.dims.m2 = require("m2").get<int>();
    cfg.dims.r = require("r").get<int>();
    cfg.sigma = require("sigma").get<double>();
    cfg.n_grid = require("n_grid").get<std::vector<int>>();
    cfg.reps = require("reps").get<int>();
    cfg.master_seed = j.value("master_seed", std::uint64_t{0});
    cfg.alpha = j.value("alpha", 0.05);
    cfg.mode = experiment_mode_from_string(j.value("mode", std::string("loss")));
    cfg.threads = j.value("threads", 1);
    cfg.lambda_c = j.value("lambda_c", 2.0);
    if (j.contains("lambdas"))
      cfg.lambda_spec = j.at("lambdas").get<std::vector<double>>();
    if (j.contains("solver")) {
      const Json& s = j.at("solver");
      cfg.solver.lambda_reg = s.value("lambda", 0.0);
      cfg.solver.rho = s.value("rho", cfg.solver.rho);
      cfg.solver.max_iter = s.value("max_iter", cfg.solver.max_iter);
      cfg.solver.tol_primal = s.value("tol_primal", cfg.solver.tol_primal);
      cfg.solver.tol_dual = s.value("tol_dual", cfg.solver.tol_dual);
      cfg.solver.cg_tol = s.value("cg_tol", cfg.solver.cg_tol);
      cfg.solver.cg_max_iter = s.value("cg_max_iter", cfg.solver.cg_max_iter);
    }
  } catch (const Json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  cfg.dims.n = cfg.n_grid.empty() ? 0 : cfg.n_grid.front();
  cfg.validate();
  return cfg;
}

}  // namespace svinfer

#endif  // SVINFER_CONFIG_JSON_HPP
