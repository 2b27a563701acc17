#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "format.hpp"
#include "ordmed/cli.hpp"
#include "ordmed/estimation.hpp"
#include "ordmed/inference.hpp"
#include "ordmed/random.hpp"

namespace ordmed::cli {

namespace {

using nlohmann::json;

// "NDE" for "logNDE", with the index kind ('j' per level, 'm' for CDE).
std::string effect_name(const EffectEntry& e) { return e.effect.substr(3); }
const char* index_type(const EffectEntry& e) { return e.effect == "logCDE" ? "m" : "j"; }

struct NamedParameter {
  std::string name;
  std::string index_type;
  int index;
};

std::vector<NamedParameter> mediator_names(std::size_t p) {
  std::vector<NamedParameter> names{{"gamma0", "", 0}, {"gammaX", "", 0}};
  for (std::size_t k = 0; k < p; ++k) names.push_back({"gammaC", "k", static_cast<int>(k + 1)});
  return names;
}

std::vector<NamedParameter> outcome_names(int J, std::size_t p) {
  std::vector<NamedParameter> names;
  for (int j = 1; j < J; ++j) names.push_back({"alpha", "j", j});
  names.push_back({"betaX", "", 0});
  names.push_back({"betaM", "", 0});
  names.push_back({"betaXM", "", 0});
  for (std::size_t k = 0; k < p; ++k) names.push_back({"betaC", "k", static_cast<int>(k + 1)});
  return names;
}

// Same keys as the parameter file, holding standard errors.
json standard_errors_json(const Eigen::VectorXd& med_se, const Eigen::VectorXd& out_se, int J,
                          std::size_t p) {
  json se;
  se["gamma0"] = jnum(med_se(0));
  se["gammaX"] = jnum(med_se(1));
  se["gammaC"] = json::array();
  for (std::size_t k = 0; k < p; ++k) se["gammaC"].push_back(jnum(med_se(2 + k)));
  se["alpha"] = json::array();
  for (int j = 0; j < J - 1; ++j) se["alpha"].push_back(jnum(out_se(j)));
  se["betaX"] = jnum(out_se(J - 1));
  se["betaM"] = jnum(out_se(J));
  se["betaXM"] = jnum(out_se(J + 1));
  se["betaC"] = json::array();
  for (std::size_t k = 0; k < p; ++k) se["betaC"].push_back(jnum(out_se(J + 2 + k)));
  return se;
}

template <typename Model>
json fit_summary_json(const FitResult<Model>& fit) {
  return json{{"loglik", fit.loglik},
              {"gradient_norm", fit.gradient_norm},
              {"iterations", fit.iterations},
              {"converged", fit.converged}};
}

json query_json(const EffectQuery& q) { return json{{"x", q.x}, {"xstar", q.xstar}, {"c", q.c}}; }

void check_finite(double v, const char* flag) {
  if (!std::isfinite(v)) throw ValidationError(std::string(flag) + " must be a finite number");
}

EffectQuery make_query(double x, double xstar, const std::vector<double>& c) {
  check_finite(x, "--x");
  check_finite(xstar, "--xstar");
  for (double v : c) check_finite(v, "--c");
  return EffectQuery{x, xstar, c};
}

}  // namespace

int cmd_effects(const EffectsOptions& opt, const Metadata& meta, std::ostream& out) {
  const ModelParameters params = read_parameters(opt.params_path);
  const EffectQuery query = make_query(opt.x, opt.xstar, opt.c);
  const EffectTable table = effect_table(query, params.med, params.out);
  const auto entries = effect_entries(params.out.levels());
  const auto values = flatten(table);

  if (opt.format == Format::json) {
    json rows = json::array();
    for (std::size_t e = 0; e < entries.size(); ++e) {
      rows.push_back({{"effect", effect_name(entries[e])},
                      {"index_type", index_type(entries[e])},
                      {"index", entries[e].index},
                      {"log_estimate", values[e]},
                      {"exp_estimate", std::exp(values[e])}});
    }
    json doc{{"metadata", meta.entries()},
             {"query", query_json(query)},
             {"parameters", parameters_to_json(params)},
             {"effects", rows}};
    out << doc.dump(2) << '\n';
  } else {
    write_comment_block(out, meta.entries());
    out << "effect,index_type,index,log_estimate,exp_estimate\n";
    for (std::size_t e = 0; e < entries.size(); ++e) {
      out << effect_name(entries[e]) << ',' << index_type(entries[e]) << ',' << entries[e].index
          << ',' << num(values[e]) << ',' << num(std::exp(values[e])) << '\n';
    }
  }
  return kSuccess;
}

int cmd_fit(const FitOptionsCli& opt, const Metadata& meta, std::ostream& out) {
  const Dataset data = read_dataset(opt.data_path, opt.levels);
  require_all_levels(data);
  const auto med = fit_mediator(data);
  const auto outc = fit_outcome(data);

  json doc = parameters_to_json({med.model, outc.model});
  doc["standard_errors"] = standard_errors_json(med.standard_errors, outc.standard_errors,
                                                data.levels(), data.covariate_dim());
  doc["fit"] = {{"mediator", fit_summary_json(med)}, {"outcome", fit_summary_json(outc)}};
  doc["data"] = {{"n", data.size()}, {"J", data.levels()}, {"p", data.covariate_dim()}};
  doc["metadata"] = meta.entries();
  out << doc.dump(2) << '\n';
  return kSuccess;
}

int cmd_analyze(const AnalyzeOptions& opt, const Metadata& meta, std::ostream& out) {
  if (opt.B > 0 && !opt.seed) throw ValidationError("--seed is required when --B > 0");
  if (!(opt.level > 0.0 && opt.level < 1.0)) throw ValidationError("--level must lie in (0,1)");
  const Dataset data = read_dataset(opt.data_path, opt.levels);
  require_all_levels(data);
  const EffectQuery query = make_query(opt.x, opt.xstar, opt.c);

  const auto med = fit_mediator(data);
  const auto outc = fit_outcome(data);
  const EffectTable point = effect_table(query, med.model, outc.model);
  const auto entries = effect_entries(data.levels());
  const auto point_flat = flatten(point);

  std::optional<BootstrapResult> boot;
  if (opt.B > 0) boot = bootstrap_effects(data, query, opt.B, opt.level, *opt.seed, opt.threads);

  const auto med_names = mediator_names(data.covariate_dim());
  const auto out_names = outcome_names(data.levels(), data.covariate_dim());
  const Eigen::VectorXd med_est = pack(med.model);
  const Eigen::VectorXd out_est = pack(outc.model);

  Metadata m = meta;
  if (opt.seed) m.seed = opt.seed;
  m.extra["n"] = std::to_string(data.size());
  m.extra["J"] = std::to_string(data.levels());
  m.extra["mediator_loglik"] = num(med.loglik);
  m.extra["outcome_loglik"] = num(outc.loglik);
  if (boot) {
    m.extra["bootstrap_B"] = std::to_string(boot->B);
    m.extra["bootstrap_level"] = num(boot->level);
    m.extra["bootstrap_failures"] = std::to_string(boot->failures);
    m.extra["bootstrap_unreliable"] = boot->unreliable ? "true" : "false";
    m.extra["quantile_method"] = "linear interpolation between order statistics (type 7)";
  }

  if (opt.format == Format::json) {
    auto param_rows = [](const std::vector<NamedParameter>& names, const Eigen::VectorXd& est,
                         const Eigen::VectorXd& se) {
      json rows = json::array();
      for (std::size_t i = 0; i < names.size(); ++i) {
        json row{{"name", names[i].name}, {"estimate", est(i)}, {"se", jnum(se(i))}};
        if (!names[i].index_type.empty()) {
          row["index_type"] = names[i].index_type;
          row["index"] = names[i].index;
        }
        rows.push_back(row);
      }
      return rows;
    };
    json effects = json::array();
    for (std::size_t e = 0; e < entries.size(); ++e) {
      json row{{"effect", effect_name(entries[e])},
               {"index_type", index_type(entries[e])},
               {"index", entries[e].index},
               {"log_estimate", point_flat[e]},
               {"exp_estimate", std::exp(point_flat[e])}};
      if (boot) {
        row["boot_sd"] = jnum(boot->boot_sd[e]);
        row["ci_lower"] = boot->ci_lower[e];
        row["ci_upper"] = boot->ci_upper[e];
        row["exp_ci_lower"] = std::exp(boot->ci_lower[e]);
        row["exp_ci_upper"] = std::exp(boot->ci_upper[e]);
      }
      effects.push_back(row);
    }
    json doc{{"metadata", m.entries()},
             {"query", query_json(query)},
             {"parameters", parameters_to_json({med.model, outc.model})},
             {"mediator", {{"fit", fit_summary_json(med)},
                           {"coefficients", param_rows(med_names, med_est, med.standard_errors)}}},
             {"outcome", {{"fit", fit_summary_json(outc)},
                          {"coefficients", param_rows(out_names, out_est, outc.standard_errors)}}},
             {"effects", effects}};
    if (boot) {
      doc["bootstrap"] = {{"B", boot->B},
                          {"level", boot->level},
                          {"seed", *opt.seed},
                          {"failures", boot->failures},
                          {"unreliable", boot->unreliable}};
    }
    out << doc.dump(2) << '\n';
  } else {
    write_comment_block(out, m.entries());
    out << "section,name,index_type,index,estimate,exp_estimate,se";
    if (boot) out << ",ci_lower,ci_upper,exp_ci_lower,exp_ci_upper";
    out << '\n';
    const std::string blank_ci = boot ? ",,,," : "";
    auto param_lines = [&](const char* section, const std::vector<NamedParameter>& names,
                           const Eigen::VectorXd& est, const Eigen::VectorXd& se) {
      for (std::size_t i = 0; i < names.size(); ++i) {
        out << section << ',' << names[i].name << ',' << names[i].index_type << ',';
        if (!names[i].index_type.empty()) out << names[i].index;
        out << ',' << num(est(i)) << ",," << num(se(i)) << blank_ci << '\n';
      }
    };
    param_lines("mediator", med_names, med_est, med.standard_errors);
    param_lines("outcome", out_names, out_est, outc.standard_errors);
    for (std::size_t e = 0; e < entries.size(); ++e) {
      out << "effect," << effect_name(entries[e]) << ',' << index_type(entries[e]) << ','
          << entries[e].index << ',' << num(point_flat[e]) << ',' << num(std::exp(point_flat[e]))
          << ',';
      if (boot) {
        out << num(boot->boot_sd[e]) << ',' << num(boot->ci_lower[e]) << ','
            << num(boot->ci_upper[e]) << ',' << num(std::exp(boot->ci_lower[e])) << ','
            << num(std::exp(boot->ci_upper[e]));
      }
      out << '\n';
    }
  }
  return boot && boot->unreliable ? kBootstrapUnreliable : kSuccess;
}

SimulationDesign build_design(const DesignOptions& opt) {
  SimulationDesign d;
  bool have_models = false;
  if (!opt.preset.empty()) {
    if (opt.preset == "table1") {
      d = designs::table1();
    } else if (opt.preset == "table2") {
      d = designs::table2();
    } else if (opt.preset == "sparse") {
      d = designs::sparse();
    } else {
      throw ValidationError("unknown preset '" + opt.preset + "' (table1, table2, sparse)");
    }
    have_models = true;
  }
  if (!opt.params_path.empty()) {
    const ModelParameters p = read_parameters(opt.params_path);
    d.med = p.med;
    d.out = p.out;
    have_models = true;
  }
  const bool all_flags = opt.gamma0 && opt.gammaX && opt.alpha && opt.betaX && opt.betaM && opt.betaXM;
  if (!have_models && !all_flags) {
    throw ValidationError(
        "design needs --preset, --params, or all of --gamma0 --gammaX --alpha --betaX --betaM "
        "--betaXM");
  }
  d.med = MediatorModel(opt.gamma0.value_or(d.med.gamma0()), opt.gammaX.value_or(d.med.gammaX()),
                        opt.gammaC.value_or(d.med.gammaC()));
  d.out = OutcomeModel(opt.alpha.value_or(d.out.alpha()), opt.betaX.value_or(d.out.betaX()),
                       opt.betaM.value_or(d.out.betaM()), opt.betaXM.value_or(d.out.betaXM()),
                       opt.betaC.value_or(d.out.betaC()));
  if (opt.n) d.n = *opt.n;
  if (opt.meanX) d.meanX = *opt.meanX;
  if (opt.sdX) d.sdX = *opt.sdX;
  if (opt.covMean) d.covMean = *opt.covMean;
  if (opt.covSd) d.covSd = *opt.covSd;
  if (!opt.seed) throw ValidationError("--seed is required for randomized commands");
  d.seed = *opt.seed;
  d.validate();
  return d;
}

namespace {

void add_design_metadata(Metadata& m, const SimulationDesign& d) {
  m.seed = d.seed;
  m.extra["rng"] = "splitmix64 streams keyed by (seed, index, role)";
  m.extra["normal_method"] = kNormalMethod;
  m.extra["design_n"] = std::to_string(d.n);
  m.extra["design_meanX"] = num(d.meanX);
  m.extra["design_sdX"] = num(d.sdX);
  m.extra["design_parameters"] = parameters_to_json({d.med, d.out}).dump();
  if (d.covariate_dim() > 0) {
    m.extra["design_covariates"] = nlohmann::json{{"mean", d.covMean}, {"sd", d.covSd}}.dump();
  }
}

}  // namespace

int cmd_simulate(const SimulateOptions& opt, const Metadata& meta, std::ostream& out) {
  const SimulationDesign design = build_design(opt.design);
  const Dataset data = simulate_dataset(design, opt.stream);
  Metadata m = meta;
  add_design_metadata(m, design);
  m.extra["stream"] = std::to_string(opt.stream);
  write_dataset(out, data, m.entries());
  return kSuccess;
}

int cmd_mc_study(const StudyOptions& opt, const Metadata& meta, std::ostream& summary_out,
                 std::ostream& raw, std::ostream* params) {
  const SimulationDesign design = build_design(opt.design);
  if (opt.replications == 0) throw ValidationError("--replications must be >= 1");
  const EffectQuery query = make_query(opt.x, opt.xstar, opt.c);
  const StudySummary study = monte_carlo_study(design, opt.replications, query, opt.threads);
  const auto truth = flatten(effect_table(query, design.med, design.out));

  Metadata m = meta;
  add_design_metadata(m, design);
  m.extra["replications"] = std::to_string(study.replications);
  m.extra["failures"] = std::to_string(study.failures);
  m.extra["query"] = query_json(query).dump();
  const auto entries = m.entries();

  write_comment_block(summary_out, entries);
  for (const auto& rep : study.replicates) {
    if (!rep.ok) summary_out << "# failed replicate " << rep.index << ": " << rep.failure << '\n';
  }
  summary_out << "effect,index_type,index,true_value,mc_mean,mc_sd,successes\n";
  const std::size_t successes = study.replications - study.failures;
  for (std::size_t e = 0; e < study.entries.size(); ++e) {
    summary_out << effect_name(study.entries[e]) << ',' << index_type(study.entries[e]) << ','
                << study.entries[e].index << ',' << num(truth[e]) << ',' << num(study.mean[e])
                << ',' << (study.sd[e] ? num(*study.sd[e]) : std::string()) << ',' << successes
                << '\n';
  }

  write_comment_block(raw, entries);
  raw << "replicate,effect,index_type,index,log_estimate\n";
  for (const auto& rep : study.replicates) {
    if (!rep.ok) continue;
    const auto flat = flatten(rep.table);
    for (std::size_t e = 0; e < study.entries.size(); ++e) {
      raw << rep.index << ',' << effect_name(study.entries[e]) << ','
          << index_type(study.entries[e]) << ',' << study.entries[e].index << ',' << num(flat[e])
          << '\n';
    }
  }

  if (params) {
    write_comment_block(*params, entries);
    *params << "replicate,model,name,index_type,index,estimate\n";
    const auto med_names = mediator_names(design.covariate_dim());
    const auto out_names = outcome_names(design.out.levels(), design.covariate_dim());
    for (const auto& rep : study.replicates) {
      if (!rep.ok) continue;
      auto lines = [&](const char* model, const std::vector<NamedParameter>& names,
                       const Eigen::VectorXd& est) {
        for (std::size_t i = 0; i < names.size(); ++i) {
          *params << rep.index << ',' << model << ',' << names[i].name << ','
                  << names[i].index_type << ',';
          if (!names[i].index_type.empty()) *params << names[i].index;
          *params << ',' << num(est(i)) << '\n';
        }
      };
      lines("mediator", med_names, rep.mediator_params);
      lines("outcome", out_names, rep.outcome_params);
    }
  }
  return study.failures == study.replications ? kConvergenceFailure : kSuccess;
}

namespace {

// Opens `path` for writing, or returns stdout for "-".
class OutputTarget {
 public:
  explicit OutputTarget(const std::string& path) {
    if (path != "-") {
      file_.open(path);
      if (!file_) throw ValidationError("cannot open output file '" + path + "'");
    }
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

Format parse_format(const std::string& s) {
  if (s == "csv") return Format::csv;
  if (s == "json") return Format::json;
  throw ValidationError("--format must be csv or json");
}

void add_design_flags(CLI::App* cmd, DesignOptions& d) {
  cmd->add_option("--preset", d.preset, "Reference design: table1, table2 or sparse");
  cmd->add_option("--params", d.params_path, "Model parameter JSON file");
  cmd->add_option("--n", d.n, "Sample size");
  cmd->add_option("--mean-x", d.meanX, "Mean of the Normal exposure");
  cmd->add_option("--sd-x", d.sdX, "Standard deviation of the Normal exposure");
  cmd->add_option("--gamma0", d.gamma0);
  cmd->add_option("--gammaX", d.gammaX);
  cmd->add_option("--gammaC", d.gammaC)->delimiter(',');
  cmd->add_option("--alpha", d.alpha, "Thresholds, comma separated")->delimiter(',');
  cmd->add_option("--betaX", d.betaX);
  cmd->add_option("--betaM", d.betaM);
  cmd->add_option("--betaXM", d.betaXM);
  cmd->add_option("--betaC", d.betaC)->delimiter(',');
  cmd->add_option("--cov-mean", d.covMean, "Covariate means, comma separated")->delimiter(',');
  cmd->add_option("--cov-sd", d.covSd, "Covariate standard deviations")->delimiter(',');
  cmd->add_option("--seed", d.seed, "Random seed (required)")->required();
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& err) {
  CLI::App app{"Exact mediation analysis for an ordinal outcome and a binary mediator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("ordmed ") + kVersion);

  Metadata meta;
  for (int i = 0; i < argc; ++i) meta.command_line += (i ? " " : "") + std::string(argv[i]);

  std::string out_path = "-";
  std::string format = "csv";

  EffectsOptions eff;
  auto* effects = app.add_subcommand("effects", "Closed-form effect table for given parameters");
  effects->add_option("--params", eff.params_path, "Model parameter JSON file")->required();
  effects->add_option("--x", eff.x, "Exposure level x")->required();
  effects->add_option("--xstar", eff.xstar, "Baseline exposure level x*")->required();
  effects->add_option("--c", eff.c, "Covariate values, comma separated")->delimiter(',');
  effects->add_option("--format", format, "csv or json");
  effects->add_option("--out", out_path, "Output file ('-' for stdout)");

  FitOptionsCli fit;
  auto* fitcmd = app.add_subcommand("fit", "Fit both models and write a parameter JSON file");
  fitcmd->add_option("--data", fit.data_path, "Input data CSV")->required();
  fitcmd->add_option("--levels,-J", fit.levels, "Number of outcome levels J")->required();
  fitcmd->add_option("--out", out_path, "Output file ('-' for stdout)");

  AnalyzeOptions an;
  std::uint64_t an_seed = 0;
  std::string an_format = "json";
  auto* analyze = app.add_subcommand("analyze", "Fit, estimate effects and bootstrap CIs");
  analyze->add_option("--data", an.data_path, "Input data CSV")->required();
  analyze->add_option("--levels,-J", an.levels, "Number of outcome levels J")->required();
  analyze->add_option("--x", an.x)->required();
  analyze->add_option("--xstar", an.xstar)->required();
  analyze->add_option("--c", an.c)->delimiter(',');
  analyze->add_option("--B", an.B, "Bootstrap resamples (0 skips the bootstrap)");
  analyze->add_option("--level", an.level, "Confidence level");
  auto* an_seed_opt = analyze->add_option("--seed", an_seed, "Random seed (required if B > 0)");
  analyze->add_option("--threads", an.threads, "Worker threads (0 = all cores)");
  analyze->add_option("--format", an_format, "json or csv");
  analyze->add_option("--out", out_path, "Output file ('-' for stdout)");

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Simulate a dataset from a design");
  add_design_flags(simulate, sim.design);
  simulate->add_option("--stream", sim.stream, "Independent stream index for the same seed");
  simulate->add_option("--out", out_path, "Output CSV ('-' for stdout)");

  StudyOptions study;
  std::string raw_path;
  std::string params_path;
  auto* mc = app.add_subcommand("mc-study", "Monte Carlo study of the effect estimators");
  add_design_flags(mc, study.design);
  mc->add_option("--replications", study.replications);
  mc->add_option("--x", study.x);
  mc->add_option("--xstar", study.xstar);
  mc->add_option("--c", study.c)->delimiter(',');
  mc->add_option("--threads", study.threads, "Worker threads (0 = all cores)");
  mc->add_option("--summary-out", out_path, "Summary CSV ('-' for stdout)");
  mc->add_option("--raw-out", raw_path, "Per-replicate estimates CSV");
  mc->add_option("--params-out", params_path, "Per-replicate parameter estimates CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream help_out;
    const int code = app.exit(e, help_out, err);
    std::cout << help_out.str();
    return code == 0 ? kSuccess : kValidationError;
  }

  try {
    if (*effects) {
      eff.format = parse_format(format);
      OutputTarget out(out_path);
      return cmd_effects(eff, meta, out.stream());
    }
    if (*fitcmd) {
      OutputTarget out(out_path);
      return cmd_fit(fit, meta, out.stream());
    }
    if (*analyze) {
      an.format = parse_format(an_format);
      if (*an_seed_opt) an.seed = an_seed;
      meta.seed = an.seed;
      OutputTarget out(out_path);
      return cmd_analyze(an, meta, out.stream());
    }
    if (*simulate) {
      OutputTarget out(out_path);
      return cmd_simulate(sim, meta, out.stream());
    }
    if (*mc) {
      OutputTarget summary(out_path);
      std::ofstream raw_file;
      std::ostringstream discard;
      if (!raw_path.empty()) {
        raw_file.open(raw_path);
        if (!raw_file) throw ValidationError("cannot open output file '" + raw_path + "'");
      }
      std::ofstream params_file;
      if (!params_path.empty()) {
        params_file.open(params_path);
        if (!params_file) throw ValidationError("cannot open output file '" + params_path + "'");
      }
      return cmd_mc_study(study, meta, summary.stream(),
                          raw_path.empty() ? static_cast<std::ostream&>(discard) : raw_file,
                          params_path.empty() ? nullptr : &params_file);
    }
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << '\n';
    return kValidationError;
  } catch (const FitError& e) {
    err << "fit failed (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return kConvergenceFailure;
  } catch (const BootstrapError& e) {
    err << "bootstrap failed: " << e.what() << '\n';
    return kBootstrapUnreliable;
  } catch (const InternalConsistencyError& e) {
    err << "internal consistency failure: " << e.what() << '\n';
    return kConvergenceFailure;
  }
  return kValidationError;
}

}  // namespace ordmed::cli
