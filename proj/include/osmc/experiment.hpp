#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "osmc/designs.hpp"
#include "osmc/estimators.hpp"
#include "osmc/format.hpp"
#include "osmc/metrics.hpp"

namespace osmc {

// Unconditional regenerates the full data every repetition; Conditional
// fixes one full dataset and repeats only the sampling. The two are never
// mixed within a report.
enum class Protocol { Unconditional, Conditional };

enum class PilotMethod { SimpleRandom, CaseControl };

struct Beta0Spec {
  enum class Kind { Constant, List, PresetLinear30 };
  Kind kind = Kind::Constant;
  double constant = 1.0;
  Vector list;

  Vector resolve(Index dim) const {
    switch (kind) {
      case Kind::Constant:
        return Vector::Constant(dim, constant);
      case Kind::List:
        if (list.size() != dim) {
          throw ValidationError("beta0 list has " + std::to_string(list.size()) +
                                " entries but the model has " + std::to_string(dim));
        }
        return list;
      case Kind::PresetLinear30:
        if (dim != 30) throw ValidationError("preset linear-30 requires dim = 30");
        return linear30_beta0();
    }
    throw ValidationError("unresolved beta0 spec");
  }
};

struct ExperimentConfig {
  GlmFamily family = GlmFamily::Logistic;

  // Data source: exactly one of design / csv_path.
  std::optional<DesignSpec> design;
  std::optional<std::string> csv_path;
  std::string response_column;
  bool standardize = false;

  Index n = 0;
  Beta0Spec beta0;
  Index r_p = 500;
  std::vector<Index> r_grid;
  int repetitions = 0;
  std::vector<Criterion::Kind> criteria{Criterion::Kind::AOpt, Criterion::Kind::LOpt};
  std::vector<Method> methods{Method::Unweighted, Method::Weighted};
  PilotMethod pilot_method = PilotMethod::SimpleRandom;
  std::optional<double> p_m;  // case-control marginal; defaults to the empirical fraction
  double trim_alpha = 0.0;
  std::uint64_t seed = 1;
  Intercept intercept_mode = Intercept::None;
  Protocol protocol = Protocol::Unconditional;
  double noise_sd = 3.0;
  std::string output_path = "report.csv";

  std::string setting_name() const {
    if (design.has_value()) return design_name(design->kind);
    return std::filesystem::path(csv_path.value_or("dataset")).stem().string();
  }
};

struct CellReport {
  std::string setting;
  GlmFamily family = GlmFamily::Logistic;
  Criterion::Kind criterion = Criterion::Kind::AOpt;
  Method method = Method::Unweighted;
  Index r = 0;
  Index r_p = 0;
  int repetitions = 0;
  int failures = 0;
  double emse = std::numeric_limits<double>::quiet_NaN();
  double emp_var = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> mean_trace_vhat;
  std::optional<double> rel_eff;
  double mean_iters = std::numeric_limits<double>::quiet_NaN();
  double wall_ms = 0.0;
  std::uint64_t seed = 0;

  // A cell's metrics are withheld when more than 1% of its repetitions
  // failed.
  bool dropped() const { return failures * 100 > repetitions; }
};

struct ExperimentReport {
  std::string setting;
  Protocol protocol = Protocol::Unconditional;
  std::uint64_t base_seed = 0;
  int repetitions = 0;
  Vector beta_ref;                  // true beta0, or the full-data MLE for CSV sources
  std::vector<CellReport> cells;
  double total_wall_ms = 0.0;
  std::vector<std::string> errors;  // sample of per-repetition failure messages
};

namespace detail {

struct RepCell {
  Vector beta;
  int iterations = 0;
  double trace_vhat = std::numeric_limits<double>::quiet_NaN();
  double wall_ms = 0.0;
  bool ok = false;
  std::string error;
};

inline double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since)
      .count();
}

// One repetition: (re)generate data if unconditional, build one plan per
// criterion (sharing the pilot), then fit every (r, method) cell. Both
// methods of a cell group reuse one draw, so they differ only in estimation
// weights.
inline void run_repetition(const ExperimentConfig& cfg, const Dataset* shared_data,
                           const std::vector<SamplingPlan>* shared_linear_plans,
                           const Vector& beta0, int rep, std::vector<RepCell>& out) {
  Rng rng = make_rng(substream_seed(cfg.seed, static_cast<std::uint64_t>(rep) + 1));

  Dataset local;
  const Dataset* data = shared_data;
  if (data == nullptr) {
    local = make_dataset(generate_design(*cfg.design, cfg.n, rng), std::nullopt,
                         cfg.intercept_mode);
    local.y = generate_response(cfg.family, local.x, beta0, rng, cfg.noise_sd);
    data = &local;
  }

  std::vector<SamplingPlan> plans;
  if (cfg.family == GlmFamily::Linear) {
    if (shared_linear_plans != nullptr) {
      plans = *shared_linear_plans;
    } else {
      for (const auto kind : cfg.criteria) {
        plans.push_back(linear_plan(data->x, Criterion{kind, {}}));
      }
    }
  } else {
    try {
      std::vector<Index> pilot_indices;
      if (cfg.pilot_method == PilotMethod::CaseControl) {
        if (!data->y.has_value()) throw MissingResponses("case-control pilot needs responses");
        const double p_m = cfg.p_m.value_or(data->y->mean());
        const AliasTable table(case_control_pilot_probabilities(*data->y, p_m));
        pilot_indices.resize(static_cast<std::size_t>(cfg.r_p));
        for (Index k = 0; k < cfg.r_p; ++k)
          pilot_indices[static_cast<std::size_t>(k)] = table.draw(rng);
      } else {
        pilot_indices = simple_random_pilot(data->n(), cfg.r_p, rng);
      }
      const PilotEstimate pilot = pilot_estimate(cfg.family, *data, std::move(pilot_indices));
      for (const auto kind : cfg.criteria) {
        plans.push_back(os_probabilities(cfg.family, *data, pilot, Criterion{kind, {}}));
      }
    } catch (const Error& e) {
      for (auto& rc : out) {
        rc.ok = false;
        rc.error = std::string("pilot/plan: ") + e.what();
      }
      return;
    }
  }

  std::size_t cell = 0;
  for (std::size_t ci = 0; ci < cfg.criteria.size(); ++ci) {
    for (const Index r : cfg.r_grid) {
      SubsampleDraw draw;
      std::string draw_error;
      try {
        draw = sample_with_replacement(plans[ci], r, rng);
      } catch (const Error& e) {
        draw_error = std::string("draw: ") + e.what();
      }
      for (const Method method : cfg.methods) {
        RepCell& rc = out[cell++];
        if (!draw_error.empty()) {
          rc.error = draw_error;
          continue;
        }
        const auto t0 = std::chrono::steady_clock::now();
        try {
          SubsampleEstimate est = fit_on_draw(cfg.family, *data, plans[ci], draw, method);
          if (method == Method::Unweighted) {
            rc.trace_vhat = variance_estimate(cfg.family, *data, est).trace_v;
          }
          rc.beta = std::move(est.beta);
          rc.iterations = est.fit.iterations;
          rc.ok = true;
        } catch (const Error& e) {
          rc.error = e.what();
        }
        rc.wall_ms = elapsed_ms(t0);
      }
    }
  }
}

// Runs all repetitions on a small thread pool. Results land in
// repetition-indexed slots, so scheduling cannot change the report.
inline void run_all_reps(const ExperimentConfig& cfg, const Dataset* shared_data,
                         const std::vector<SamplingPlan>* shared_linear_plans,
                         const Vector& beta0, int threads,
                         std::vector<std::vector<RepCell>>& results,
                         std::vector<std::string>& errors) {
  int pool = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  if (pool < 1) pool = 1;
  pool = std::min(pool, cfg.repetitions);

  std::mutex error_mutex;
  const auto worker = [&](int tid) {
    for (int rep = tid; rep < cfg.repetitions; rep += pool) {
      auto& slots = results[static_cast<std::size_t>(rep)];
      try {
        run_repetition(cfg, shared_data, shared_linear_plans, beta0, rep, slots);
      } catch (const std::exception& e) {
        for (auto& rc : slots) {
          rc.ok = false;
          rc.error = e.what();
        }
      }
      for (const auto& rc : slots) {
        if (!rc.ok && !rc.error.empty()) {
          std::lock_guard lock(error_mutex);
          if (errors.size() < 8) {
            errors.push_back("rep " + std::to_string(rep) + ": " + rc.error);
          }
          break;
        }
      }
    }
  };
  if (pool == 1) {
    worker(0);
  } else {
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(pool));
    for (int t = 0; t < pool; ++t) workers.emplace_back(worker, t);
    for (auto& w : workers) w.join();
  }
}

inline std::vector<CellReport> aggregate_cells(const ExperimentConfig& cfg,
                                               const std::string& setting,
                                               const Vector& beta_ref,
                                               const std::vector<std::vector<RepCell>>& results) {
  const std::size_t n_cells = cfg.criteria.size() * cfg.r_grid.size() * cfg.methods.size();
  std::vector<CellReport> cells(n_cells);
  std::size_t cell = 0;
  for (const auto criterion : cfg.criteria) {
    for (const Index r : cfg.r_grid) {
      for (const Method method : cfg.methods) {
        CellReport& c = cells[cell];
        c.setting = setting;
        c.family = cfg.family;
        c.criterion = criterion;
        c.method = method;
        c.r = r;
        c.r_p = cfg.family == GlmFamily::Linear ? 0 : cfg.r_p;
        c.repetitions = cfg.repetitions;
        c.seed = cfg.seed;

        std::vector<Vector> betas;
        std::vector<double> traces;
        double iter_sum = 0.0;
        for (int rep = 0; rep < cfg.repetitions; ++rep) {
          const RepCell& rc = results[static_cast<std::size_t>(rep)][cell];
          c.wall_ms += rc.wall_ms;
          if (!rc.ok) {
            ++c.failures;
            continue;
          }
          betas.push_back(rc.beta);
          iter_sum += rc.iterations;
          if (!std::isnan(rc.trace_vhat)) traces.push_back(rc.trace_vhat);
        }
        if (!betas.empty() && !c.dropped()) {
          c.emse = emse(betas, beta_ref, cfg.trim_alpha);
          c.mean_iters = iter_sum / static_cast<double>(betas.size());
          if (betas.size() >= 2) {
            Vector mean = Vector::Zero(betas.front().size());
            for (const auto& b : betas) mean += b;
            mean /= static_cast<double>(betas.size());
            double ss = 0.0;
            for (const auto& b : betas) ss += (b - mean).squaredNorm();
            // Trace of the sample covariance of beta across repetitions.
            c.emp_var = ss / static_cast<double>(betas.size() - 1);
          }
          if (!traces.empty()) {
            double s = 0.0;
            for (const double t : traces) s += t;
            c.mean_trace_vhat = s / static_cast<double>(traces.size());
          }
        }
        ++cell;
      }
    }
  }

  // Relative efficiency for matched (criterion, r) pairs, recorded on both
  // rows.
  for (auto& w : cells) {
    if (w.method != Method::Weighted || std::isnan(w.emse)) continue;
    for (auto& u : cells) {
      if (u.method == Method::Unweighted && u.criterion == w.criterion && u.r == w.r &&
          u.emse > 0.0) {
        const double ratio = relative_efficiency(w.emse, u.emse);
        w.rel_eff = ratio;
        u.rel_eff = ratio;
      }
    }
  }
  return cells;
}

}  // namespace detail

// Monte Carlo campaign over S repetitions of a synthetic design. Repetitions
// are independent tasks with seeds derived from the base seed, so any thread
// count produces the same report.
inline ExperimentReport run_experiment(const ExperimentConfig& cfg, int threads = 0) {
  const auto t_start = std::chrono::steady_clock::now();
  if (cfg.repetitions < 1) throw ValidationError("repetitions must be at least 1");
  if (cfg.r_grid.empty()) throw ValidationError("r_grid must not be empty");
  if (!cfg.design.has_value()) {
    throw ValidationError("run_experiment needs a design; CSV sources go through "
                          "run_experiment_on");
  }
  if (cfg.criteria.empty() || cfg.methods.empty()) {
    throw ValidationError("criteria and methods must not be empty");
  }

  ExperimentReport report;
  report.setting = cfg.setting_name();
  report.protocol = cfg.protocol;
  report.base_seed = cfg.seed;
  report.repetitions = cfg.repetitions;

  Index model_dim = cfg.design->dim;
  if (cfg.intercept_mode == Intercept::Prepend) ++model_dim;
  const Vector beta0 = cfg.beta0.resolve(model_dim);
  report.beta_ref = beta0;

  // Conditional protocol: one fixed dataset drawn from substream 0.
  std::optional<Dataset> fixed;
  if (cfg.protocol == Protocol::Conditional) {
    Rng rng = make_rng(substream_seed(cfg.seed, 0));
    fixed = make_dataset(generate_design(*cfg.design, cfg.n, rng), std::nullopt,
                         cfg.intercept_mode);
    fixed->y = generate_response(cfg.family, fixed->x, beta0, rng, cfg.noise_sd);
  }

  // Linear plans are data-deterministic; hoist them when the data is fixed.
  std::optional<std::vector<SamplingPlan>> linear_plans;
  if (fixed.has_value() && cfg.family == GlmFamily::Linear) {
    linear_plans.emplace();
    for (const auto kind : cfg.criteria) {
      linear_plans->push_back(linear_plan(fixed->x, Criterion{kind, {}}));
    }
  }

  const std::size_t n_cells = cfg.criteria.size() * cfg.r_grid.size() * cfg.methods.size();
  std::vector<std::vector<detail::RepCell>> results(
      static_cast<std::size_t>(cfg.repetitions), std::vector<detail::RepCell>(n_cells));
  detail::run_all_reps(cfg, fixed.has_value() ? &*fixed : nullptr,
                       linear_plans.has_value() ? &*linear_plans : nullptr, beta0, threads,
                       results, report.errors);

  report.cells = detail::aggregate_cells(cfg, report.setting, report.beta_ref, results);
  report.total_wall_ms = detail::elapsed_ms(t_start);
  return report;
}

// Same campaign against an already-loaded dataset (CSV sources). The
// protocol is conditional by construction and the reference coefficients are
// the full-data MLE.
inline ExperimentReport run_experiment_on(const ExperimentConfig& cfg, const Dataset& data,
                                          int threads = 0) {
  const auto t_start = std::chrono::steady_clock::now();
  if (cfg.repetitions < 1) throw ValidationError("repetitions must be at least 1");
  if (cfg.r_grid.empty()) throw ValidationError("r_grid must not be empty");
  if (cfg.criteria.empty() || cfg.methods.empty()) {
    throw ValidationError("criteria and methods must not be empty");
  }

  ExperimentReport report;
  report.setting = cfg.setting_name();
  report.protocol = Protocol::Conditional;
  report.base_seed = cfg.seed;
  report.repetitions = cfg.repetitions;
  report.beta_ref = fit_mle(cfg.family, data).beta;

  std::optional<std::vector<SamplingPlan>> linear_plans;
  if (cfg.family == GlmFamily::Linear) {
    linear_plans.emplace();
    for (const auto kind : cfg.criteria) {
      linear_plans->push_back(linear_plan(data.x, Criterion{kind, {}}));
    }
  }

  const std::size_t n_cells = cfg.criteria.size() * cfg.r_grid.size() * cfg.methods.size();
  std::vector<std::vector<detail::RepCell>> results(
      static_cast<std::size_t>(cfg.repetitions), std::vector<detail::RepCell>(n_cells));
  const Vector no_beta0;
  detail::run_all_reps(cfg, &data, linear_plans.has_value() ? &*linear_plans : nullptr, no_beta0,
                       threads, results, report.errors);

  report.cells = detail::aggregate_cells(cfg, report.setting, report.beta_ref, results);
  report.total_wall_ms = detail::elapsed_ms(t_start);
  return report;
}

inline constexpr const char* kReportCsvHeader =
    "setting,family,criterion,method,r,r_p,S,emse,emp_var,mean_trace_vhat,rel_eff,mean_iters,"
    "wall_ms,seed";

inline void write_report_csv(std::ostream& os, const ExperimentReport& report) {
  os << kReportCsvHeader << '\n';
  for (const auto& c : report.cells) {
    os << c.setting << ',' << family_name(c.family) << ',' << criterion_name(c.criterion) << ','
       << method_name(c.method) << ',' << c.r << ',' << c.r_p << ',' << c.repetitions << ','
       << format_double(c.emse) << ',' << format_double(c.emp_var) << ','
       << (c.mean_trace_vhat ? format_double(*c.mean_trace_vhat) : "NA") << ','
       << (c.rel_eff ? format_double(*c.rel_eff) : "NA") << ',' << format_double(c.mean_iters)
       << ',' << format_double(c.wall_ms) << ',' << format_u64(c.seed) << '\n';
  }
}

}  // namespace osmc
