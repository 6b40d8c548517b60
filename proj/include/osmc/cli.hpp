#pragma once

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "osmc/config.hpp"
#include "osmc/csv.hpp"
#include "osmc/experiment.hpp"

namespace osmc {

inline constexpr const char* kVersion = "0.1.0";

// Exit codes: 0 ok, 2 configuration error, 3 data error, 4 numerical failure.
inline int exit_code_for(const Error& e) {
  switch (e.category()) {
    case ErrorCategory::Config: return 2;
    case ErrorCategory::Data: return 3;
    case ErrorCategory::Numeric: return 4;
  }
  return 4;
}

namespace detail {

using json = nlohmann::ordered_json;

inline json config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["family"] = family_name(cfg.family);
  if (cfg.design.has_value()) {
    j["design"] = design_name(cfg.design->kind);
    j["dim"] = cfg.design->dim;
    j["n"] = cfg.n;
  } else {
    j["csv"] = cfg.csv_path.value_or("");
    j["response"] = cfg.response_column;
    j["standardize"] = cfg.standardize;
  }
  switch (cfg.beta0.kind) {
    case Beta0Spec::Kind::Constant:
      j["beta0"] = cfg.beta0.constant;
      break;
    case Beta0Spec::Kind::List: {
      json list = json::array();
      for (Index i = 0; i < cfg.beta0.list.size(); ++i) list.push_back(cfg.beta0.list[i]);
      j["beta0"] = list;
      break;
    }
    case Beta0Spec::Kind::PresetLinear30:
      j["beta0"] = "linear-30";
      break;
  }
  j["r_p"] = cfg.r_p;
  json grid = json::array();
  for (const Index r : cfg.r_grid) grid.push_back(r);
  j["r_grid"] = grid;
  j["s"] = cfg.repetitions;
  json criteria = json::array();
  for (const auto c : cfg.criteria) criteria.push_back(criterion_name(c));
  j["criteria"] = criteria;
  json methods = json::array();
  for (const auto m : cfg.methods) methods.push_back(method_name(m));
  j["methods"] = methods;
  j["pilot"] = cfg.pilot_method == PilotMethod::CaseControl ? "case-control" : "srs";
  if (cfg.p_m.has_value()) j["p_m"] = *cfg.p_m;
  j["trim_alpha"] = cfg.trim_alpha;
  j["seed"] = cfg.seed;
  j["intercept"] = cfg.intercept_mode == Intercept::Prepend ? "prepend" : "none";
  j["protocol"] = cfg.protocol == Protocol::Conditional ? "conditional" : "unconditional";
  j["noise_sd"] = cfg.noise_sd;
  j["output"] = cfg.output_path;
  return j;
}

inline void write_manifest(const std::string& path, json manifest) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCategory::Data, "cannot write manifest '" + path + "'");
  out << manifest.dump(2) << '\n';
}

inline Dataset load_config_dataset(const ExperimentConfig& cfg) {
  if (cfg.csv_path.has_value()) {
    return load_csv_dataset(*cfg.csv_path, cfg.response_column, cfg.standardize,
                            cfg.intercept_mode);
  }
  // Synthetic source: materialize one dataset from the data substream.
  Index model_dim = cfg.design->dim;
  if (cfg.intercept_mode == Intercept::Prepend) ++model_dim;
  const Vector beta0 = cfg.beta0.resolve(model_dim);
  Rng rng = make_rng(substream_seed(cfg.seed, 0));
  Dataset data = make_dataset(generate_design(*cfg.design, cfg.n, rng), std::nullopt,
                              cfg.intercept_mode);
  data.y = generate_response(cfg.family, data.x, beta0, rng, cfg.noise_sd);
  return data;
}

}  // namespace detail

// Runs the configured Monte Carlo campaign and writes the report CSV plus a
// JSON manifest next to it.
inline int cmd_simulate(const ExperimentConfig& cfg, int threads = 0,
                        std::ostream& log = std::cerr) {
  try {
    ExperimentReport report;
    if (cfg.csv_path.has_value()) {
      const Dataset data = detail::load_config_dataset(cfg);
      report = run_experiment_on(cfg, data, threads);
    } else {
      report = run_experiment(cfg, threads);
    }

    std::ofstream out(cfg.output_path);
    if (!out) throw Error(ErrorCategory::Data, "cannot write report '" + cfg.output_path + "'");
    write_report_csv(out, report);

    detail::json manifest;
    manifest["command"] = "simulate";
    manifest["version"] = kVersion;
    manifest["config"] = detail::config_to_json(cfg);
    manifest["seed"] = report.base_seed;
    manifest["protocol"] = report.protocol == Protocol::Conditional ? "conditional"
                                                                    : "unconditional";
    manifest["cells"] = report.cells.size();
    manifest["wall_ms"] = report.total_wall_ms;
    manifest["errors"] = report.errors;
    manifest["report"] = cfg.output_path;
    detail::write_manifest(cfg.output_path + ".manifest.json", std::move(manifest));

    int dropped = 0;
    for (const auto& c : report.cells) dropped += c.dropped() ? 1 : 0;
    log << "simulate: " << report.cells.size() << " cells (" << dropped << " dropped), "
        << format_double(report.total_wall_ms / 1000.0) << " s -> " << cfg.output_path << '\n';
    return 0;
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return 4;
  }
}

// Exports the full-data sampling probabilities (row_index, pi). Responses
// are needed only for the pilot rows; linear-family plans need none at all.
inline int cmd_probabilities(const ExperimentConfig& cfg,
                             std::optional<Criterion::Kind> criterion_override = std::nullopt,
                             std::optional<std::string> output_override = std::nullopt,
                             std::ostream& log = std::cerr) {
  try {
    const Criterion::Kind kind = criterion_override.value_or(
        cfg.criteria.empty() ? Criterion::Kind::AOpt : cfg.criteria.front());
    const Criterion criterion{kind, {}};
    const Dataset data = detail::load_config_dataset(cfg);

    SamplingPlan plan;
    std::vector<Index> pilot_indices;
    if (cfg.family == GlmFamily::Linear) {
      plan = linear_plan(data.x, criterion);
    } else {
      Rng rng = make_rng(substream_seed(cfg.seed, 1));
      pilot_indices = simple_random_pilot(data.n(), cfg.r_p, rng);
      const PilotEstimate pilot = pilot_estimate(cfg.family, data, pilot_indices);
      plan = os_probabilities(cfg.family, data, pilot, criterion);
    }

    const std::string out_path = output_override.value_or(cfg.output_path);
    std::ofstream out(out_path);
    if (!out) throw Error(ErrorCategory::Data, "cannot write '" + out_path + "'");
    out << "row_index,pi\n";
    for (Index i = 0; i < plan.n(); ++i) {
      out << i << ',' << format_double(plan.probabilities[i]) << '\n';
    }

    detail::json manifest;
    manifest["command"] = "probabilities";
    manifest["version"] = kVersion;
    manifest["config"] = detail::config_to_json(cfg);
    manifest["criterion"] = criterion_name(kind);
    manifest["seed"] = cfg.seed;
    manifest["m_hat"] = plan.m_hat;
    manifest["pilot_indices"] = pilot_indices;
    manifest["output"] = out_path;
    detail::write_manifest(out_path + ".manifest.json", std::move(manifest));

    log << "probabilities: " << plan.n() << " rows -> " << out_path << '\n';
    return 0;
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return 4;
  }
}

// One subsample fit, written as JSON. With full_mle set the full-data MLE is
// fitted as well and the distance to it reported.
inline int cmd_fit(const ExperimentConfig& cfg, Method method, Criterion::Kind criterion_kind,
                   Index r, bool full_mle = false,
                   std::optional<std::string> output_override = std::nullopt,
                   std::ostream& log = std::cerr) {
  try {
    const auto t0 = std::chrono::steady_clock::now();
    const Criterion criterion{criterion_kind, {}};
    const Dataset data = detail::load_config_dataset(cfg);
    if (r < 1 || r > data.n()) {
      throw ValidationError("r must lie in [1, n]");
    }

    Rng rng = make_rng(substream_seed(cfg.seed, 1));
    SubsampleEstimate est;
    if (cfg.family == GlmFamily::Linear) {
      est = linear_unweighted_estimate(data, r, criterion, rng);
      if (method == Method::Weighted) {
        const SamplingPlan plan = linear_plan(data.x, criterion);
        est = fit_on_draw(cfg.family, data, plan, est.draw, Method::Weighted);
      }
    } else {
      est = method == Method::Unweighted
                ? unweighted_estimate(cfg.family, data, cfg.r_p, r, criterion, rng)
                : weighted_estimate(cfg.family, data, cfg.r_p, r, criterion, rng);
    }

    detail::json j;
    j["command"] = "fit";
    j["version"] = kVersion;
    j["config"] = detail::config_to_json(cfg);
    j["method"] = method_name(method);
    j["criterion"] = criterion_name(criterion_kind);
    j["r"] = r;
    j["r_p"] = cfg.family == GlmFamily::Linear ? Index{0} : cfg.r_p;
    j["seed"] = cfg.seed;
    detail::json beta = detail::json::array();
    for (Index i = 0; i < est.beta.size(); ++i) beta.push_back(est.beta[i]);
    j["beta"] = beta;
    j["m_hat"] = est.m_hat;
    j["iterations"] = est.fit.iterations;
    j["converged"] = est.fit.converged;
    j["measured_responses"] = est.measured_responses;
    if (method == Method::Unweighted) {
      j["trace_vhat"] = variance_estimate(cfg.family, data, est).trace_v;
    }
    if (full_mle) {
      const Vector beta_mle = fit_mle(cfg.family, data).beta;
      detail::json ref = detail::json::array();
      for (Index i = 0; i < beta_mle.size(); ++i) ref.push_back(beta_mle[i]);
      j["beta_mle"] = ref;
      j["dist_to_mle"] = (est.beta - beta_mle).norm();
    }
    j["wall_ms"] = detail::elapsed_ms(t0);

    const std::string out_path = output_override.value_or(cfg.output_path);
    std::ofstream out(out_path);
    if (!out) throw Error(ErrorCategory::Data, "cannot write '" + out_path + "'");
    out << j.dump(2) << '\n';
    log << "fit: " << method_name(method) << "/" << criterion_name(criterion_kind) << " r=" << r
        << " -> " << out_path << '\n';
    return 0;
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return 4;
  }
}

}  // namespace osmc
