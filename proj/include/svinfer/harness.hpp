#ifndef SVINFER_HARNESS_HPP
#define SVINFER_HARNESS_HPP

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "svinfer/inference.hpp"
#include "svinfer/linalg.hpp"
#include "svinfer/model.hpp"
#include "svinfer/solver.hpp"

namespace svinfer {

enum class ExperimentMode {
  kLoss,
  kNormalityOracle,
  kNormalityPlugin,
  kCoverage,
  kE1Oracle,
};

inline const char* to_string(ExperimentMode m) {
  switch (m) {
    case ExperimentMode::kLoss: return "loss";
    case ExperimentMode::kNormalityOracle: return "normality_oracle";
    case ExperimentMode::kNormalityPlugin: return "normality_plugin";
    case ExperimentMode::kCoverage: return "coverage";
    case ExperimentMode::kE1Oracle: return "e1_oracle";
  }
  return "?";
}

inline ExperimentMode experiment_mode_from_string(const std::string& s) {
  if (s == "loss") return ExperimentMode::kLoss;
  if (s == "normality_oracle") return ExperimentMode::kNormalityOracle;
  if (s == "normality_plugin") return ExperimentMode::kNormalityPlugin;
  if (s == "coverage") return ExperimentMode::kCoverage;
  if (s == "e1_oracle") return ExperimentMode::kE1Oracle;
  throw std::invalid_argument("unknown experiment mode: " + s);
}

struct ExperimentConfig {
  ProblemDims dims;  // dims.n ignored; n comes from n_grid
  LambdaSpec lambda_spec = GeometricSpectrum{};
  double sigma = 0.0;
  std::vector<int> n_grid;
  int reps = 1;
  std::uint64_t master_seed = 0;
  double alpha = 0.05;
  SolverConfig solver;
  double lambda_c = 2.0;  // penalty constant when solver.lambda_reg is unset
  ExperimentMode mode = ExperimentMode::kLoss;
  int threads = 1;

  void validate() const {
    if (reps < 1) throw std::invalid_argument("ExperimentConfig: reps < 1");
    if (n_grid.empty()) throw std::invalid_argument("ExperimentConfig: empty n_grid");
    if (!(alpha > 0.0 && alpha < 1.0))
      throw std::invalid_argument("ExperimentConfig: alpha outside (0,1)");
    if (threads < 1) throw std::invalid_argument("ExperimentConfig: threads < 1");
    ProblemDims d = dims;
    d.n = n_grid.front();
    d.validate();
  }
};

struct ReplicationRecord {
  int rep_index = 0;
  int n = 0;
  double dist2 = 0.0;
  std::optional<double> t_oracle;
  std::optional<double> t_plugin;
  std::optional<bool> covered;
  double sigma2_hat = 0.0;
  int solver_iters = 0;
  bool clamp_fired = false;
  bool converged = true;
};

struct PerNSummary {
  int n = 0;
  double mean_dist2 = 0.0;
  double theory_first_order = 0.0;  // sigma^2 ||Lambda^-1||_F^2 * 2 m_star / n
  double theory_empirical = 0.0;    // mean sigma2_hat in place of sigma^2
  double ks_oracle = 0.0;
  double ks_plugin = 0.0;
  double coverage_rate = 0.0;
  int excluded = 0;  // non-converged replications, dropped from KS/coverage
  double wall_time_sec = 0.0;
};

struct SummaryReport {
  std::vector<PerNSummary> per_n;
};

/// Kolmogorov-Smirnov distance of the empirical CDF to the standard normal.
inline double ks_statistic(std::vector<double> sample) {
  if (sample.empty()) throw std::invalid_argument("ks_statistic: empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double phi = normal_cdf(sample[i]);
    d = std::max(d, phi - static_cast<double>(i) / n);
    d = std::max(d, static_cast<double>(i + 1) / n - phi);
  }
  return d;
}

/// Per-replication draws of the chi-square mixture
/// (sigma^2 chi2(n) / n^2) * sum_k chi2_k(m_star) / lambda_k^2, the law of
/// ||P_perp E1 C||_F^2.
inline std::vector<double> e1_oracle_samples(const ProblemDims& dims,
                                             const Vector& lambdas,
                                             double sigma, int n, int reps,
                                             Rng& rng) {
  const int m_star = dims.m_star();
  std::vector<double> out(reps);
  for (int rep = 0; rep < reps; ++rep) {
    const double noise = sigma * sigma * rng.chi_square(n);
    double mix = 0.0;
    for (Index k = 0; k < lambdas.size(); ++k)
      mix += rng.chi_square(m_star) / (lambdas[k] * lambdas[k]);
    out[rep] = noise / (static_cast<double>(n) * n) * mix;
  }
  return out;
}

struct MomentPair {
  double mean = 0.0;
  double std_dev = 0.0;
};

inline MomentPair moments(const std::vector<double>& v) {
  MomentPair m;
  for (double x : v) m.mean += x;
  m.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - m.mean) * (x - m.mean);
    m.std_dev = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return m;
}

inline MomentPair e1_oracle(const ProblemDims& dims, const Vector& lambdas,
                            double sigma, int n, int reps, Rng& rng) {
  return moments(e1_oracle_samples(dims, lambdas, sigma, n, reps, rng));
}

/// Same quantity built from actual matrices: Z1 = (1/n) sum_i xi_i X_i and
/// ||P_perp E1 C||_F^2 = linear_term_norm2 / 2. Costs reps * n * m1 * m2.
inline MomentPair e1_matrix_check(const ProblemDims& dims,
                                  const Vector& lambdas, double sigma, int n,
                                  int reps, Rng& rng) {
  SvdFactors factors;
  factors.u = random_orthonormal(dims.m1, dims.r, rng);
  factors.v = random_orthonormal(dims.m2, dims.r, rng);
  factors.s = lambdas;
  const std::size_t d = static_cast<std::size_t>(dims.m1) * dims.m2;
  std::vector<double> z1(d);
  std::vector<double> values(reps);
  for (int rep = 0; rep < reps; ++rep) {
    std::fill(z1.begin(), z1.end(), 0.0);
    for (int i = 0; i < n; ++i) {
      const double xi = sigma * rng.normal();
      for (std::size_t j = 0; j < d; ++j) z1[j] += xi * rng.normal();
    }
    using RowMat =
        Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Matrix z = Eigen::Map<const RowMat>(z1.data(), dims.m1, dims.m2) /
               static_cast<double>(n);
    values[rep] = linear_term_norm2(factors, z) / 2.0;
  }
  return moments(values);
}

namespace detail {

inline void run_tasks(int task_count, int workers,
                      const std::function<void(int)>& task) {
  if (workers <= 1) {
    for (int i = 0; i < task_count; ++i) task(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= task_count) return;
        task(i);
      }
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace detail

/// One full sweep: a model fixed per experiment, fresh data per
/// replication, fit / de-bias / extract / studentize / cover. Output is a
/// deterministic function of (config, master_seed) regardless of the
/// worker count: each replication owns a derived RNG stream and records
/// merge by index.
inline std::pair<std::vector<ReplicationRecord>, SummaryReport> run_experiment(
    const ExperimentConfig& config) {
  config.validate();
  Rng root(config.master_seed);
  Rng model_rng = root.derive(0);
  ProblemDims dims = config.dims;
  dims.n = config.n_grid.front();
  LowRankModel model =
      make_model(dims, config.lambda_spec, config.sigma, model_rng);
  const int m_star = dims.m_star();
  const double linv2 = model.lambda_inv_norm2();    // ||Lambda^-1||_F^2
  const double linv2f = model.lambda_inv2_norm();   // ||Lambda^-2||_F

  std::vector<ReplicationRecord> records;
  SummaryReport report;

  if (config.mode == ExperimentMode::kE1Oracle) {
    for (int n : config.n_grid) {
      const auto t0 = std::chrono::steady_clock::now();
      Rng rng = root.derive(1).derive(static_cast<std::uint64_t>(n));
      auto values = e1_oracle_samples(dims, model.lambdas, config.sigma, n,
                                      config.reps, rng);
      PerNSummary s;
      s.n = n;
      s.mean_dist2 = moments(values).mean;
      // For this mode the reference value is the mixture mean
      // sigma^2 (m_star / n) ||Lambda^-1||_F^2, without the loss factor 2.
      s.theory_first_order =
          config.sigma * config.sigma * m_star / static_cast<double>(n) * linv2;
      s.theory_empirical = s.theory_first_order;
      for (int rep = 0; rep < config.reps; ++rep) {
        ReplicationRecord rec;
        rec.rep_index = rep;
        rec.n = n;
        rec.dist2 = values[rep];
        records.push_back(rec);
      }
      s.wall_time_sec = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
      report.per_n.push_back(s);
    }
    return {std::move(records), std::move(report)};
  }

  for (int n : config.n_grid) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<ReplicationRecord> batch(config.reps);
    SolverConfig solver = config.solver;
    if (solver.lambda_reg <= 0.0)
      solver.lambda_reg =
          default_lambda(config.sigma, dims.m1, dims.m2, n, config.lambda_c);

    auto run_rep = [&](int rep) {
      Rng rng = root.derive(1)
                    .derive(static_cast<std::uint64_t>(n))
                    .derive(static_cast<std::uint64_t>(rep));
      LowRankModel local = model;
      local.dims.n = n;
      Dataset data = sample_dataset(local, rng);

      ReplicationRecord rec;
      rec.rep_index = rep;
      rec.n = n;
      try {
        SolverResult fit = solve_nuclear(first_half(data), solver);
        rec.solver_iters = fit.iterations;
        rec.converged = fit.converged;
        rec.sigma2_hat = sigma_hat2(fit.m_nuc, second_half(data));
        Matrix m_hat = debias(fit.m_nuc, second_half(data));
        SubspaceEstimate est = extract_subspace(m_hat, dims.r);
        rec.dist2 = projection_distance2(model.u, model.v, est.u_hat, est.v_hat);
        InferenceSummary summary = confidence_region(
            est.lambda_hat, rec.sigma2_hat, m_star, n, config.alpha);
        rec.clamp_fired = summary.clamp_fired;
        if (!summary.clamp_fired)
          rec.t_plugin = t_statistic(rec.dist2, summary.b_n, summary.v_n,
                                     rec.sigma2_hat, m_star, n);
        rec.covered = std::abs(rec.dist2 - summary.center) <= summary.half_width;
      } catch (const std::exception&) {
        rec.converged = false;
      }
      batch[rep] = rec;
    };
    detail::run_tasks(config.reps, config.threads, run_rep);

    // Pass 2: oracle centering by the Monte Carlo mean of dist2, per the
    // replication set itself; normalization uses each rep's sigma2_hat and
    // the true ||Lambda^-2||_F.
    double mc_mean = 0.0, mean_sigma2 = 0.0;
    int n_ok = 0;
    for (const auto& rec : batch) {
      if (!rec.converged) continue;
      mc_mean += rec.dist2;
      mean_sigma2 += rec.sigma2_hat;
      ++n_ok;
    }
    if (n_ok > 0) {
      mc_mean /= n_ok;
      mean_sigma2 /= n_ok;
    }
    std::vector<double> t_oracle_sample, t_plugin_sample;
    int covered_count = 0, covered_total = 0;
    for (auto& rec : batch) {
      if (!rec.converged) continue;
      const double scale = std::sqrt(8.0) * rec.sigma2_hat * linv2f *
                           std::sqrt(static_cast<double>(m_star)) / n;
      rec.t_oracle = (rec.dist2 - mc_mean) / scale;
      t_oracle_sample.push_back(*rec.t_oracle);
      if (rec.t_plugin) t_plugin_sample.push_back(*rec.t_plugin);
      if (rec.covered) {
        ++covered_total;
        if (*rec.covered) ++covered_count;
      }
    }

    PerNSummary s;
    s.n = n;
    s.mean_dist2 = mc_mean;
    s.theory_first_order = config.sigma * config.sigma * linv2 * 2.0 * m_star /
                           static_cast<double>(n);
    s.theory_empirical = mean_sigma2 * linv2 * 2.0 * m_star /
                         static_cast<double>(n);
    s.ks_oracle = t_oracle_sample.empty() ? 1.0 : ks_statistic(t_oracle_sample);
    s.ks_plugin = t_plugin_sample.empty() ? 1.0 : ks_statistic(t_plugin_sample);
    s.coverage_rate =
        covered_total > 0
            ? static_cast<double>(covered_count) / covered_total
            : 0.0;
    s.excluded = config.reps - n_ok;
    s.wall_time_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    report.per_n.push_back(s);
    records.insert(records.end(), batch.begin(), batch.end());
  }
  return {std::move(records), std::move(report)};
}

inline void write_records_csv(const std::vector<ReplicationRecord>& records,
                              std::ostream& os) {
  os << "rep,n,dist2,t_oracle,t_plugin,covered,sigma2_hat,solver_iters,"
        "clamp_fired\n";
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf;
  };
  for (const auto& r : records) {
    os << r.rep_index << ',' << r.n << ',';
    put(r.dist2);
    os << ',';
    if (r.t_oracle) put(*r.t_oracle);
    os << ',';
    if (r.t_plugin) put(*r.t_plugin);
    os << ',';
    if (r.covered) os << (*r.covered ? 1 : 0);
    os << ',';
    put(r.sigma2_hat);
    os << ',' << r.solver_iters << ',' << (r.clamp_fired ? 1 : 0) << '\n';
  }
}

/// Fixed-layout density histogram: 640x480 viewBox, 40 bins over [-4, 4],
/// standard-normal density polyline overlay.
inline void write_histogram_svg(const std::vector<double>& values,
                                std::ostream& os) {
  constexpr int kBins = 40;
  constexpr double kLo = -4.0, kHi = 4.0;
  constexpr double kW = 640.0, kH = 480.0, kPad = 40.0;
  const double bin_width = (kHi - kLo) / kBins;
  std::vector<int> counts(kBins, 0);
  int in_range = 0;
  for (double v : values) {
    if (v < kLo || v >= kHi) continue;
    ++counts[static_cast<int>((v - kLo) / bin_width)];
    ++in_range;
  }
  const double denom =
      std::max(1, static_cast<int>(values.size())) * bin_width;
  double max_density = 0.45;  // at least the normal peak
  for (int c : counts)
    max_density = std::max(max_density, static_cast<double>(c) / denom);

  auto sx = [&](double x) {
    return kPad + (x - kLo) / (kHi - kLo) * (kW - 2 * kPad);
  };
  auto sy = [&](double dens) {
    return kH - kPad - dens / max_density * (kH - 2 * kPad);
  };

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 640 480\">\n";
  os << "<rect width=\"640\" height=\"480\" fill=\"white\"/>\n";
  char buf[256];
  for (int b = 0; b < kBins; ++b) {
    const double dens = static_cast<double>(counts[b]) / denom;
    const double x0 = sx(kLo + b * bin_width);
    const double x1 = sx(kLo + (b + 1) * bin_width);
    const double y = sy(dens);
    std::snprintf(buf, sizeof buf,
                  "<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" "
                  "fill=\"steelblue\" stroke=\"white\"/>\n",
                  x0, y, x1 - x0, kH - kPad - y);
    os << buf;
  }
  os << "<polyline fill=\"none\" stroke=\"red\" stroke-width=\"2\" points=\"";
  for (int i = 0; i <= 200; ++i) {
    const double x = kLo + (kHi - kLo) * i / 200.0;
    const double dens = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
    std::snprintf(buf, sizeof buf, "%.2f,%.2f ", sx(x), sy(dens));
    os << buf;
  }
  os << "\"/>\n";
  std::snprintf(buf, sizeof buf,
                "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" "
                "stroke=\"black\"/>\n",
                sx(kLo), kH - kPad, sx(kHi), kH - kPad);
  os << buf;
  os << "</svg>\n";
}

}  // namespace svinfer

#endif  // SVINFER_HARNESS_HPP
