// Command-line front end: data generation, fitting, inference, region
// checks, rank estimation, and Monte Carlo sweeps.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "svinfer/config_json.hpp"
#include "svinfer/harness.hpp"
#include "svinfer/inference.hpp"
#include "svinfer/io.hpp"
#include "svinfer/model.hpp"
#include "svinfer/solver.hpp"

namespace {

using namespace svinfer;

// All numeric output uses 9 significant digits.
std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

LambdaSpec parse_lambda_spec(const std::vector<double>& lambdas) {
  if (lambdas.empty()) return GeometricSpectrum{};
  return lambdas;
}

struct SolverFlags {
  SolverConfig config;
  double sigma = 0.0;
  double lambda = 0.0;
  double lambda_c = 2.0;

  void attach(CLI::App* cmd, bool require_penalty) {
    cmd->add_option("--sigma", sigma, "known noise standard deviation");
    cmd->add_option("--lambda", lambda, "explicit nuclear-norm penalty");
    cmd->add_option("--lambda-c", lambda_c,
                    "constant c in the default penalty c*sigma*sqrt(mbar/n)");
    cmd->add_option("--rho", config.rho, "ADMM augmented-Lagrangian parameter");
    cmd->add_option("--max-iter", config.max_iter, "ADMM iteration cap");
    cmd->add_option("--tol-primal", config.tol_primal, "primal tolerance");
    cmd->add_option("--tol-dual", config.tol_dual, "dual tolerance");
    cmd->add_option("--cg-tol", config.cg_tol, "inner CG tolerance");
    cmd->add_option("--cg-max-iter", config.cg_max_iter, "inner CG cap");
    if (require_penalty) {
      cmd->callback([this] {
        if ((sigma > 0.0) == (lambda > 0.0))
          throw CLI::ValidationError(
              "exactly one of --sigma or --lambda is required");
      });
    }
  }

  SolverConfig resolve(int m1, int m2, int n) const {
    SolverConfig c = config;
    c.lambda_reg = lambda > 0.0 ? lambda
                                : default_lambda(sigma, m1, m2, n, lambda_c);
    return c;
  }
};

// Accept either the binary dataset format or its CSV variant.
Dataset load_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  char magic[4] = {};
  is.read(magic, 4);
  is.seekg(0);
  if (std::string(magic, 4) == "TRDS") return read_dataset(is);
  return read_dataset_csv(is);
}

int cmd_gen_data(int m1, int m2, int r, int n, double sigma,
                 std::uint64_t seed, const std::vector<double>& lambdas,
                 const std::string& out, bool with_truth, bool csv) {
  ProblemDims dims{m1, m2, r, n};
  Rng rng(seed);
  LowRankModel model = make_model(dims, parse_lambda_spec(lambdas), sigma, rng);
  Dataset data = sample_dataset(model, rng);
  if (csv) {
    std::ofstream os(out);
    if (!os) throw std::runtime_error("cannot open " + out);
    write_dataset_csv(data, os);
  } else {
    write_dataset(data, out);
  }
  if (with_truth) {
    write_matrix(model.u, out + ".truth.u.trmx");
    write_matrix(model.v, out + ".truth.v.trmx");
    Json j;
    j["m1"] = m1;
    j["m2"] = m2;
    j["r"] = r;
    j["n"] = n;
    j["sigma"] = sigma;
    j["lambdas"] =
        std::vector<double>(model.lambdas.begin(), model.lambdas.end());
    std::ofstream os(out + ".truth.json");
    os << j.dump(2) << "\n";
  }
  std::cout << "wrote " << data.total() << " samples (" << m1 << "x" << m2
            << ") to " << out << "\n";
  return 0;
}

int cmd_fit(const std::string& data_path, const SolverFlags& flags,
            const std::string& out) {
  Dataset data = load_dataset(data_path);
  SolverConfig cfg = flags.resolve(data.m1(), data.m2(), data.n());
  SolverResult fit = solve_nuclear(first_half(data), cfg);
  write_matrix(fit.m_nuc, out);
  std::cout << "lambda=" << num(cfg.lambda_reg)
            << " iterations=" << fit.iterations
            << " objective=" << num(fit.objective)
            << " primal_residual=" << num(fit.primal_residual)
            << " dual_residual=" << num(fit.dual_residual)
            << " converged=" << (fit.converged ? "true" : "false") << "\n";
  if (!fit.converged) {
    std::cerr << "solver did not converge within " << cfg.max_iter
              << " iterations\n";
    return 2;
  }
  return 0;
}

int cmd_infer(const std::string& data_path, const SolverFlags& flags, int rank,
              bool do_estimate_rank, double rank_c, double alpha,
              const std::string& out_prefix, const std::string& truth_u,
              const std::string& truth_v) {
  Dataset data = load_dataset(data_path);
  SolverConfig cfg = flags.resolve(data.m1(), data.m2(), data.n());
  SolverResult fit = solve_nuclear(first_half(data), cfg);
  if (!fit.converged) {
    std::cerr << "solver did not converge within " << cfg.max_iter
              << " iterations\n";
    return 2;
  }
  const double s2 = sigma_hat2(fit.m_nuc, second_half(data));
  int r = rank;
  if (do_estimate_rank) {
    Vector sv = svd(fit.m_nuc).s;
    r = estimate_rank(sv, std::sqrt(s2), data.m1(), data.m2(), data.n(),
                      rank_c);
    std::cout << "estimated rank=" << r << "\n";
    if (r < 1) {
      std::cerr << "estimated rank is zero; nothing to infer\n";
      return 2;
    }
  }
  Matrix m_hat = debias(fit.m_nuc, second_half(data));
  SubspaceEstimate est = extract_subspace(m_hat, r);
  ProblemDims dims{data.m1(), data.m2(), r, data.n()};
  InferenceSummary summary =
      confidence_region(est.lambda_hat, s2, dims.m_star(), data.n(), alpha);

  write_matrix(fit.m_nuc, out_prefix + ".m_nuc.trmx");
  write_matrix(m_hat, out_prefix + ".m_hat.trmx");
  write_matrix(est.u_hat, out_prefix + ".u_hat.trmx");
  write_matrix(est.v_hat, out_prefix + ".v_hat.trmx");
  {
    std::ofstream os(out_prefix + ".summary.json");
    os << to_json(summary, dims, est.lambda_hat).dump(2) << "\n";
  }

  std::cout << "sigma2_hat=" << num(summary.sigma2_hat)
            << " b_n=" << num(summary.b_n) << " v_n=" << num(summary.v_n)
            << " center=" << num(summary.center)
            << " half_width=" << num(summary.half_width)
            << " beta=" << num(summary.beta_diag)
            << " clamp_fired=" << (summary.clamp_fired ? "true" : "false")
            << "\n";
  if (!truth_u.empty() && !truth_v.empty()) {
    Matrix tu = read_matrix(truth_u);
    Matrix tv = read_matrix(truth_v);
    const double d2 = projection_distance2(tu, tv, est.u_hat, est.v_hat);
    std::cout << "dist2_vs_truth=" << num(d2) << " covered="
              << (std::abs(d2 - summary.center) <= summary.half_width ? "true"
                                                                      : "false")
              << "\n";
  }
  return 0;
}

int cmd_check(const std::string& summary_path, const std::string& u_hat_path,
              const std::string& v_hat_path, const std::string& u_path,
              const std::string& v_path) {
  Json j;
  {
    std::ifstream is(summary_path);
    if (!is) throw std::runtime_error("cannot open " + summary_path);
    is >> j;
  }
  ProblemDims dims;
  Vector lambda_hat;
  InferenceSummary summary = summary_from_json(j, &dims, &lambda_hat);
  SubspaceEstimate est;
  est.u_hat = read_matrix(u_hat_path);
  est.v_hat = read_matrix(v_hat_path);
  est.dims = dims;
  Matrix cu = read_matrix(u_path);
  Matrix cv = read_matrix(v_path);
  const double d2 = projection_distance2(cu, cv, est.u_hat, est.v_hat);
  const bool contained = region_contains(est, cu, cv, summary);
  std::cout << "contained=" << (contained ? "true" : "false")
            << " dist2=" << num(d2) << " center=" << num(summary.center)
            << " half_width=" << num(summary.half_width) << "\n";
  return contained ? 0 : 1;
}

int cmd_estimate_rank(const std::string& matrix_path, double sigma_hat, int n,
                      double c) {
  Matrix m = read_matrix(matrix_path);
  Vector sv = svd(m).s;
  const int r = estimate_rank(sv, sigma_hat, static_cast<int>(m.rows()),
                              static_cast<int>(m.cols()), n, c);
  std::cout << "estimated rank=" << r << "\n";
  return 0;
}

int cmd_sim(const std::string& config_path, const std::string& out_dir,
            std::optional<int> threads, std::optional<std::uint64_t> seed,
            bool svg) {
  Json j;
  {
    std::ifstream is(config_path);
    if (!is) throw std::runtime_error("cannot open " + config_path);
    is >> j;
  }
  ExperimentConfig cfg = experiment_config_from_json(j);
  if (threads) cfg.threads = *threads;
  if (seed) cfg.master_seed = *seed;

  auto [records, report] = run_experiment(cfg);

  std::filesystem::create_directories(out_dir);
  {
    std::ofstream os(out_dir + "/records.csv");
    write_records_csv(records, os);
  }
  {
    std::ofstream os(out_dir + "/summary.json");
    os << to_json(report, cfg).dump(2) << "\n";
  }
  if (svg) {
    for (const auto& s : report.per_n) {
      std::vector<double> oracle, plugin;
      for (const auto& rec : records) {
        if (rec.n != s.n || !rec.converged) continue;
        if (rec.t_oracle) oracle.push_back(*rec.t_oracle);
        if (rec.t_plugin) plugin.push_back(*rec.t_plugin);
      }
      if (!oracle.empty()) {
        std::ofstream os(out_dir + "/hist_oracle_n" + std::to_string(s.n) +
                         ".svg");
        write_histogram_svg(oracle, os);
      }
      if (!plugin.empty()) {
        std::ofstream os(out_dir + "/hist_plugin_n" + std::to_string(s.n) +
                         ".svg");
        write_histogram_svg(plugin, os);
      }
    }
  }
  for (const auto& s : report.per_n) {
    std::cout << "n=" << s.n << " mean_dist2=" << num(s.mean_dist2)
              << " theory_first_order=" << num(s.theory_first_order)
              << " theory_empirical=" << num(s.theory_empirical)
              << " ks_oracle=" << num(s.ks_oracle)
              << " ks_plugin=" << num(s.ks_plugin)
              << " coverage=" << num(s.coverage_rate)
              << " excluded=" << s.excluded
              << " wall_time=" << num(s.wall_time_sec) << "s\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"inference for singular subspaces of low-rank trace regression"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "sample a synthetic dataset");
  int g_m1 = 0, g_m2 = 0, g_r = 0, g_n = 0;
  double g_sigma = 0.0;
  std::uint64_t g_seed = 0;
  std::vector<double> g_lambdas;
  std::string g_out;
  bool g_truth = false, g_csv = false;
  gen->add_option("--m1", g_m1)->required();
  gen->add_option("--m2", g_m2)->required();
  gen->add_option("--r", g_r)->required();
  gen->add_option("--n", g_n, "per-half sample count (file holds 2n)")
      ->required();
  gen->add_option("--sigma", g_sigma)->required();
  gen->add_option("--seed", g_seed);
  gen->add_option("--lambdas", g_lambdas,
                  "explicit singular values (default: 2^(r-k+1))");
  gen->add_option("--out", g_out)->required();
  gen->add_flag("--with-truth", g_truth, "write sidecar truth factors");
  gen->add_flag("--csv", g_csv, "write the CSV variant");

  // fit
  auto* fit = app.add_subcommand("fit", "nuclear-norm penalized fit");
  std::string f_data, f_out;
  SolverFlags f_flags;
  fit->add_option("--data", f_data)->required();
  fit->add_option("--out", f_out)->required();
  f_flags.attach(fit, true);

  // infer
  auto* infer = app.add_subcommand(
      "infer", "fit, de-bias, extract subspace, confidence region");
  std::string i_data, i_prefix, i_truth_u, i_truth_v;
  SolverFlags i_flags;
  int i_rank = 0;
  bool i_est_rank = false;
  double i_rank_c = 1.0, i_alpha = 0.05;
  infer->add_option("--data", i_data)->required();
  infer->add_option("--rank", i_rank);
  infer->add_flag("--estimate-rank", i_est_rank);
  infer->add_option("--rank-c", i_rank_c, "rank threshold constant");
  infer->add_option("--alpha", i_alpha, "miscoverage level");
  infer->add_option("--out-prefix", i_prefix)->required();
  infer->add_option("--truth-u", i_truth_u);
  infer->add_option("--truth-v", i_truth_v);
  i_flags.attach(infer, true);
  infer->callback([&] {
    if (i_rank < 1 && !i_est_rank)
      throw CLI::ValidationError("provide --rank or --estimate-rank");
  });

  // check
  auto* check = app.add_subcommand(
      "check", "test whether a candidate pair lies in the region");
  std::string c_summary, c_uhat, c_vhat, c_u, c_v;
  check->add_option("--summary", c_summary)->required();
  check->add_option("--u-hat", c_uhat)->required();
  check->add_option("--v-hat", c_vhat)->required();
  check->add_option("--u", c_u)->required();
  check->add_option("--v", c_v)->required();

  // estimate-rank
  auto* er = app.add_subcommand("estimate-rank",
                                "threshold singular values of a matrix file");
  std::string e_matrix;
  double e_sigma_hat = 0.0, e_c = 1.0;
  int e_n = 0;
  er->add_option("--matrix", e_matrix)->required();
  er->add_option("--sigma-hat", e_sigma_hat)->required();
  er->add_option("--n", e_n)->required();
  er->add_option("--c", e_c);

  // sim
  auto* sim = app.add_subcommand("sim", "Monte Carlo experiment sweep");
  std::string s_config, s_out;
  int s_threads = 0;
  std::uint64_t s_seed = 0;
  bool s_svg = false, s_threads_set = false, s_seed_set = false;
  sim->add_option("--config", s_config)->required();
  sim->add_option("--out", s_out)->required();
  sim->add_option("--threads", s_threads)->each([&](const std::string&) {
    s_threads_set = true;
  });
  sim->add_option("--seed", s_seed)->each([&](const std::string&) {
    s_seed_set = true;
  });
  sim->add_flag("--svg", s_svg, "write histogram SVGs");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed())
      return cmd_gen_data(g_m1, g_m2, g_r, g_n, g_sigma, g_seed, g_lambdas,
                          g_out, g_truth, g_csv);
    if (fit->parsed()) return cmd_fit(f_data, f_flags, f_out);
    if (infer->parsed())
      return cmd_infer(i_data, i_flags, i_rank, i_est_rank, i_rank_c, i_alpha,
                       i_prefix, i_truth_u, i_truth_v);
    if (check->parsed()) return cmd_check(c_summary, c_uhat, c_vhat, c_u, c_v);
    if (er->parsed()) return cmd_estimate_rank(e_matrix, e_sigma_hat, e_n, e_c);
    if (sim->parsed())
      return cmd_sim(s_config, s_out,
                     s_threads_set ? std::optional<int>(s_threads)
                                   : std::nullopt,
                     s_seed_set ? std::optional<std::uint64_t>(s_seed)
                                : std::nullopt,
                     s_svg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
