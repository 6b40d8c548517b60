// Command-line front end: simulate / probabilities / fit.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "osmc/cli.hpp"

namespace {

osmc::Criterion::Kind parse_criterion_flag(const std::string& value) {
  const std::string v = osmc::detail::lower(value);
  if (v == "aopt" || v == "a-os") return osmc::Criterion::Kind::AOpt;
  if (v == "lopt" || v == "l-os") return osmc::Criterion::Kind::LOpt;
  throw osmc::ParseError("--criterion expects aopt|lopt, got '" + value + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal subsampling under measurement constraints for GLMs"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_override;
  std::string criterion_flag;
  std::string method_flag = "unweighted";
  int threads = 0;
  long long r_flag = 0;
  bool full_mle = false;

  auto* simulate = app.add_subcommand("simulate", "Run a Monte Carlo campaign");
  simulate->add_option("-c,--config", config_path, "Config file")->required();
  simulate->add_option("-o,--output", output_override, "Override the report path");
  simulate->add_option("--threads", threads, "Cap the repetition worker pool");

  auto* probabilities =
      app.add_subcommand("probabilities", "Export full-data sampling probabilities");
  probabilities->add_option("-c,--config", config_path, "Config file")->required();
  probabilities->add_option("-o,--output", output_override, "Probability CSV path");
  probabilities->add_option("--criterion", criterion_flag, "aopt|lopt");

  auto* fit = app.add_subcommand("fit", "Fit one subsample estimate");
  fit->add_option("-c,--config", config_path, "Config file")->required();
  fit->add_option("-o,--output", output_override, "Estimate JSON path");
  fit->add_option("--criterion", criterion_flag, "aopt|lopt");
  fit->add_option("--method", method_flag, "unweighted|weighted");
  fit->add_option("--r", r_flag, "Subsample size")->required();
  fit->add_flag("--full-mle", full_mle, "Also fit the full-data MLE and report the distance");

  CLI11_PARSE(app, argc, argv);

  try {
    osmc::ExperimentConfig cfg = osmc::parse_config(config_path);
    if (!output_override.empty() && app.got_subcommand(simulate)) {
      cfg.output_path = output_override;
    }
    std::optional<std::string> out_opt;
    if (!output_override.empty()) out_opt = output_override;

    if (app.got_subcommand(simulate)) {
      return osmc::cmd_simulate(cfg, threads);
    }
    if (app.got_subcommand(probabilities)) {
      std::optional<osmc::Criterion::Kind> kind;
      if (!criterion_flag.empty()) kind = parse_criterion_flag(criterion_flag);
      return osmc::cmd_probabilities(cfg, kind, out_opt);
    }
    // fit
    const osmc::Criterion::Kind kind = criterion_flag.empty()
                                           ? (cfg.criteria.empty() ? osmc::Criterion::Kind::AOpt
                                                                   : cfg.criteria.front())
                                           : parse_criterion_flag(criterion_flag);
    const std::string mv = osmc::detail::lower(method_flag);
    if (mv != "unweighted" && mv != "weighted") {
      throw osmc::ParseError("--method expects unweighted|weighted, got '" + method_flag + "'");
    }
    const osmc::Method method = mv == "weighted" ? osmc::Method::Weighted
                                                 : osmc::Method::Unweighted;
    return osmc::cmd_fit(cfg, method, kind, static_cast<osmc::Index>(r_flag), full_mle, out_opt);
  } catch (const osmc::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return osmc::exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
}
