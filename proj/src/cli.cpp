#include "bsm/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <json.hpp>

#include "bsm/csv.hpp"
#include "bsm/distribution.hpp"
#include "bsm/em_tpb.hpp"
#include "bsm/errors.hpp"
#include "bsm/regression.hpp"
#include "bsm/selection.hpp"
#include "bsm/simulation.hpp"

namespace bsm {

namespace {

using nlohmann::ordered_json;

struct RunConfig {
  std::string subcommand;
  std::string input;
  std::string response;
  std::vector<std::string> covariates;
  std::string family;
  std::vector<std::string> families;
  std::size_t nodes = kDefaultQuadratureNodes;
  std::uint64_t seed = 1;
  bool em = false;
  std::string boundary = "reject";
  std::string contrasts = "treatment";
  std::string format;

  // simulate
  std::size_t replicates = 500;
  std::size_t n = 500;
  double rate = 0.0;
  double beta0 = 0.5;
  double beta1 = 1.0;
  double phi = 0.25;

  // pdf-table
  double mu = 0.5;
  std::optional<double> theta;
  std::optional<double> theta1;
  std::optional<double> theta2;
  std::size_t grid = 99;
};

// Raised for bad flags or data; maps to exit status 1.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

MixingKind family_from(const std::string& label) {
  auto kind = parse_family(label);
  if (!kind) throw InputError("unknown family '" + label + "' (expected beta, tpb, gb, lnb or igb)");
  return *kind;
}

ordered_json config_json(const RunConfig& c) {
  ordered_json j;
  j["subcommand"] = c.subcommand;
  if (c.subcommand == "fit" || c.subcommand == "rank") {
    j["input"] = c.input;
    j["response"] = c.response;
    j["covariates"] = c.covariates;
    if (c.subcommand == "fit") j["family"] = c.family;
    else j["families"] = c.families;
    j["nodes"] = c.nodes;
    j["seed"] = c.seed;
    j["em"] = c.em;
    j["boundary"] = c.boundary;
    j["contrasts"] = c.contrasts;
  } else if (c.subcommand == "simulate") {
    j["families"] = c.families;
    j["replicates"] = c.replicates;
    j["n"] = c.n;
    j["rate"] = c.rate;
    j["beta0"] = c.beta0;
    j["beta1"] = c.beta1;
    j["phi"] = c.phi;
    j["nodes"] = c.nodes;
    j["seed"] = c.seed;
    j["tpb_method"] = c.em ? "em" : "mle";
  } else {
    j["family"] = c.family;
    j["mu"] = c.mu;
    j["phi"] = c.phi;
    if (c.theta) j["theta"] = *c.theta;
    if (c.theta1) j["theta1"] = *c.theta1;
    if (c.theta2) j["theta2"] = *c.theta2;
    j["grid"] = c.grid;
    j["nodes"] = c.nodes;
  }
  j["format"] = c.format;
  return j;
}

// Numbers in CSV are printed exactly as the JSON serializer prints them;
// JSON null becomes nan.
std::string num(double x) { return std::isfinite(x) ? ordered_json(x).dump() : "nan"; }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

void csv_header(std::ostream& out, const RunConfig& c) {
  out << "# config: " << config_json(c).dump() << '\n';
}

ordered_json param_json(const ParamTable& t) {
  ordered_json j = ordered_json::object();
  for (const auto& [k, v] : t.entries()) j[k] = v;
  return j;
}

Dataset load_dataset(const RunConfig& c) {
  if (c.response.empty()) throw InputError("--response is required");
  CsvTable table;
  if (c.input == "-") {
    table = read_csv(std::cin);
  } else {
    table = read_csv_file(c.input);
  }
  const auto policy = c.boundary == "squeeze" ? BoundaryPolicy::Squeeze : BoundaryPolicy::Reject;
  const auto contrast = c.contrasts == "sum" ? Contrast::Sum : Contrast::Treatment;
  return dataset_from_csv(table, c.response, c.covariates, policy, contrast);
}

struct FamilyFit {
  FitResult fit;
  std::optional<EmTrace> trace;
};

FamilyFit fit_family(const Dataset& data, MixingKind kind, const RunConfig& c) {
  FitOptions opts;
  opts.nodes = c.nodes;
  opts.seed = c.seed;
  if (kind == MixingKind::TwoPoint && c.em) {
    EmOptions em;
    em.start = opts;
    auto r = em_fit(data, em);
    return {std::move(r.fit), std::move(r.trace)};
  }
  return {fit_mle(data, kind, opts), std::nullopt};
}

std::vector<double> posteriors(const FitResult& fit, const Dataset& data) {
  TpbParams p{fit.model.coefficients, fit.model.phi, fit.model.theta1, fit.model.theta2};
  return e_step(p, data).reference;
}

int cmd_fit(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const MixingKind kind = family_from(c.family);
  const Dataset data = load_dataset(c);

  FamilyFit ff;
  try {
    ff = fit_family(data, kind, c);
  } catch (const std::exception& e) {
    err << "error: fit failed: " << e.what() << '\n';
    return kExitFitFailure;
  }
  const FitResult& f = ff.fit;
  std::vector<double> post;
  if (kind == MixingKind::TwoPoint) post = posteriors(f, data);

  const auto names = parameter_names(kind, data.columns());
  if (c.format == "csv") {
    csv_header(out, c);
    out << "section,name,value\n";
    for (std::size_t j = 0; j < data.columns(); ++j)
      out << "term," << names[j] << ',' << csv_field(data.column_names()[j]) << '\n';
    for (const auto& [k, v] : f.natural_estimates.entries()) out << "estimate," << k << ',' << num(v) << '\n';
    for (const auto& [k, v] : f.standard_errors.entries()) out << "se," << k << ',' << num(v) << '\n';
    if (!f.se_available) out << "se_diagnostic,," << csv_field(f.se_diagnostic) << '\n';
    out << "fit,observations," << f.observations << '\n';
    out << "fit,parameters," << f.parameter_count << '\n';
    out << "fit,loglik," << num(f.loglik) << '\n';
    out << "fit,aic," << num(f.aic) << '\n';
    out << "fit,bic," << num(f.bic) << '\n';
    out << "fit,converged," << (f.converged ? "true" : "false") << '\n';
    out << "fit,iterations," << f.iterations << '\n';
    for (std::size_t i = 0; i < post.size(); ++i) {
      out << "posterior," << i + 1 << ',' << num(post[i]) << '\n';
      out << "reference," << i + 1 << ',' << (tpb_is_reference(post[i]) ? "true" : "false") << '\n';
    }
  } else {
    ordered_json j;
    j["config"] = config_json(c);
    j["family"] = std::string(family_label(kind));
    j["observations"] = f.observations;
    j["parameters"] = f.parameter_count;
    ordered_json terms = ordered_json::object();
    for (std::size_t k = 0; k < data.columns(); ++k) terms[names[k]] = data.column_names()[k];
    j["terms"] = terms;
    j["estimates"] = param_json(f.natural_estimates);
    j["se"] = f.se_available ? param_json(f.standard_errors) : ordered_json(nullptr);
    if (!f.se_available) j["se_diagnostic"] = f.se_diagnostic;
    j["loglik"] = f.loglik;
    j["aic"] = f.aic;
    j["bic"] = f.bic;
    j["converged"] = f.converged;
    j["iterations"] = f.iterations;
    j["start"] = param_json(f.start_used);
    if (ff.trace) {
      j["em"] = {{"iterations", ff.trace->iterations},
                 {"converged", ff.trace->converged},
                 {"loglik_path", ff.trace->loglik_path}};
    }
    if (kind == MixingKind::TwoPoint) {
      ordered_json rows = ordered_json::array();
      for (std::size_t i = 0; i < post.size(); ++i)
        rows.push_back({{"row", i + 1}, {"probability", post[i]}, {"reference", tpb_is_reference(post[i])}});
      j["posteriors"] = rows;
    }
    out << j.dump(2) << '\n';
  }
  if (!f.converged) {
    err << "warning: " << family_label(kind) << " fit did not converge\n";
    return kExitFitFailure;
  }
  return kExitOk;
}

int cmd_rank(const RunConfig& c, std::ostream& out, std::ostream& err) {
  if (c.families.empty()) throw InputError("--families needs at least one family");
  std::vector<MixingKind> kinds;
  for (const auto& label : c.families) {
    const MixingKind k = family_from(label);
    if (std::find(kinds.begin(), kinds.end(), k) != kinds.end())
      throw InputError("family '" + label + "' listed twice");
    kinds.push_back(k);
  }
  const Dataset data = load_dataset(c);

  std::vector<ModelScore> scores;
  std::vector<std::string> failed;
  for (MixingKind k : kinds) {
    const std::string label(family_label(k));
    try {
      const auto ff = fit_family(data, k, c);
      if (ff.fit.converged) {
        scores.push_back({label, ff.fit.loglik, ff.fit.parameter_count});
        continue;
      }
      err << "warning: " << label << " fit did not converge\n";
    } catch (const std::exception& e) {
      err << "warning: " << label << " fit failed: " << e.what() << '\n';
    }
    failed.push_back(label);
  }
  RankedTable table;
  if (!scores.empty()) table = rank_models(scores, data.size());

  if (c.format == "csv") {
    csv_header(out, c);
    out << "model,k,loglik,aic,aic_rank,bic,bic_rank,status\n";
    for (const auto& label : c.families) {
      const std::string canon(family_label(family_from(label)));
      auto it = std::find_if(table.rows.begin(), table.rows.end(),
                             [&](const RankedRow& r) { return r.label == canon; });
      if (it == table.rows.end()) {
        out << canon << ",,,,,,,failed\n";
        continue;
      }
      std::string status = "ok";
      if (it->aic_tie || it->bic_tie) status = "tie";
      out << it->label << ',' << it->k << ',' << num(it->loglik) << ',' << num(it->aic) << ','
          << it->aic_rank << ',' << num(it->bic) << ',' << it->bic_rank << ',' << status << '\n';
    }
  } else {
    ordered_json j;
    j["config"] = config_json(c);
    j["observations"] = data.size();
    ordered_json rows = ordered_json::array();
    for (const auto& label : c.families) {
      const std::string canon(family_label(family_from(label)));
      auto it = std::find_if(table.rows.begin(), table.rows.end(),
                             [&](const RankedRow& r) { return r.label == canon; });
      if (it == table.rows.end()) {
        rows.push_back({{"model", canon}, {"failed", true}});
        continue;
      }
      rows.push_back({{"model", it->label},
                      {"k", it->k},
                      {"loglik", it->loglik},
                      {"aic", it->aic},
                      {"aic_rank", it->aic_rank},
                      {"aic_tie", it->aic_tie},
                      {"bic", it->bic},
                      {"bic_rank", it->bic_rank},
                      {"bic_tie", it->bic_tie},
                      {"failed", false}});
    }
    j["models"] = rows;
    j["failed"] = failed;
    out << j.dump(2) << '\n';
  }
  return failed.empty() ? kExitOk : kExitFitFailure;
}

int cmd_simulate(const RunConfig& c, std::ostream& out, std::ostream& err) {
  ScenarioConfig sc;
  sc.replicates = c.replicates;
  sc.n = c.n;
  sc.beta0 = c.beta0;
  sc.beta1 = c.beta1;
  sc.phi_true = c.phi;
  sc.contamination_rate = c.rate;
  sc.seed = c.seed;
  sc.nodes = c.nodes;
  sc.tpb_via_em = c.em;
  sc.families.clear();
  for (const auto& label : c.families) {
    const MixingKind k = family_from(label);
    if (std::find(sc.families.begin(), sc.families.end(), k) != sc.families.end())
      throw InputError("family '" + label + "' listed twice");
    sc.families.push_back(k);
  }
  try {
    sc.validate();
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }

  const SimReport rep = run_sensitivity(sc);
  err << "simulate: " << sc.replicates << " replicates in " << rep.elapsed_seconds << " s\n";

  bool any_failed = false;
  for (const auto& f : rep.families) any_failed = any_failed || f.all_failed;

  if (c.format == "csv") {
    csv_header(out, c);
    out << "measure,parameter";
    for (const auto& f : rep.families) out << ',' << family_label(f.family);
    out << '\n';
    for (const char* measure : {"bias", "mse"}) {
      for (const char* p : {"beta0", "beta1", "phi"}) {
        out << measure << ',' << p;
        for (const auto& f : rep.families) {
          auto it = std::find_if(f.cells.begin(), f.cells.end(),
                                 [&](const SimCell& s) { return s.parameter == p; });
          out << ',';
          if (it != f.cells.end()) out << num(std::string(measure) == "bias" ? it->bias : it->mse);
        }
        out << '\n';
      }
    }
    for (const char* what : {"converged", "failed"}) {
      out << what << ",";
      for (const auto& f : rep.families)
        out << ',' << (std::string(what) == "converged" ? f.converged : f.failed);
      out << '\n';
    }
  } else {
    ordered_json j;
    j["config"] = config_json(c);
    ordered_json fams = ordered_json::array();
    for (const auto& f : rep.families) {
      ordered_json cells = ordered_json::array();
      for (const auto& s : f.cells)
        cells.push_back({{"parameter", s.parameter},
                         {"truth", s.truth},
                         {"bias", s.bias},
                         {"mse", s.mse},
                         {"variance", s.variance},
                         {"count", s.count}});
      fams.push_back({{"family", std::string(family_label(f.family))},
                      {"converged", f.converged},
                      {"failed", f.failed},
                      {"all_failed", f.all_failed},
                      {"cells", cells}});
    }
    j["families"] = fams;
    out << j.dump(2) << '\n';
  }
  return any_failed ? kExitFitFailure : kExitOk;
}

MixingSpec pdf_mixing(const RunConfig& c, MixingKind kind) {
  auto need = [&](const std::optional<double>& v, const char* flag) {
    if (!v) throw InputError(std::string("family ") + c.family + " needs " + flag);
    return *v;
  };
  switch (kind) {
    case MixingKind::Degenerate:
      return MixingSpec::degenerate();
    case MixingKind::TwoPoint:
      return MixingSpec::two_point(need(c.theta1, "--theta1"), need(c.theta2, "--theta2"));
    default:
      return MixingSpec::scalar(kind, need(c.theta, "--theta"));
  }
}

int cmd_pdf_table(const RunConfig& c, std::ostream& out, std::ostream&) {
  const MixingKind kind = family_from(c.family);
  if (c.grid < 1) throw InputError("--grid must be at least 1");
  BsmParams p{BetaParams{c.mu, c.phi}, pdf_mixing(c, kind), c.nodes};
  try {
    p.validate();
  } catch (const std::exception& e) {
    throw InputError(e.what());
  }
  const QuadratureRule rule = build_quadrature(p.mixing, p.quadrature_nodes);
  std::vector<std::pair<double, double>> pts;
  pts.reserve(c.grid);
  for (std::size_t i = 1; i <= c.grid; ++i) {
    const double y = static_cast<double>(i) / static_cast<double>(c.grid + 1);
    pts.emplace_back(y, std::exp(bsm_log_pdf(y, p.base, rule)));
  }
  if (c.format == "json") {
    ordered_json j;
    j["config"] = config_json(c);
    ordered_json rows = ordered_json::array();
    for (const auto& [y, d] : pts) rows.push_back({{"y", y}, {"density", d}});
    j["points"] = rows;
    out << j.dump(2) << '\n';
  } else {
    csv_header(out, c);
    out << "y,density\n";
    for (const auto& [y, d] : pts) out << num(y) << ',' << num(d) << '\n';
  }
  return kExitOk;
}

void add_data_flags(CLI::App* sub, RunConfig& c) {
  sub->add_option("input", c.input, "CSV file with a header row ('-' for stdin)")->required();
  sub->add_option("--response", c.response, "response column, values in (0,1)")->required();
  sub->add_option("--covariates", c.covariates, "covariate columns (repeat or comma-separate)")
      ->expected(1)
      ->take_all()
      ->delimiter(',');
  sub->add_option("--boundary", c.boundary, "reject | squeeze")
      ->check(CLI::IsMember({"reject", "squeeze"}));
  sub->add_option("--contrasts", c.contrasts, "coding of text covariates: treatment | sum")
      ->check(CLI::IsMember({"treatment", "sum"}));
  sub->add_flag("--em", c.em, "fit tpb by EM instead of direct maximization");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig c;
  CLI::App app{"Beta scale mixture regression"};
  app.name("bsm");
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  auto common = [&](CLI::App* sub) {
    sub->add_option("--nodes", c.nodes, "quadrature nodes")->check(CLI::PositiveNumber);
    sub->add_option("--seed", c.seed, "random seed");
    sub->add_option("--format", c.format, "json | csv")->check(CLI::IsMember({"json", "csv"}));
  };

  auto* fit = app.add_subcommand("fit", "fit one family to a CSV dataset");
  add_data_flags(fit, c);
  common(fit);
  fit->add_option("--family", c.family, "beta | tpb | gb | lnb | igb")->required();

  auto* rank = app.add_subcommand("rank", "fit several families and rank them by AIC and BIC");
  add_data_flags(rank, c);
  common(rank);
  rank->add_option("--families,--family", c.families, "families to compare (comma-separated)")
      ->expected(1)
      ->take_all()
      ->delimiter(',')
      ->required();

  auto* sim = app.add_subcommand("simulate", "contamination sensitivity study");
  common(sim);
  sim->add_option("--replicates", c.replicates)->check(CLI::PositiveNumber);
  sim->add_option("--n", c.n)->check(CLI::PositiveNumber);
  sim->add_option("--rate", c.rate, "fraction of responses replaced by uniform noise");
  sim->add_option("--beta0", c.beta0);
  sim->add_option("--beta1", c.beta1);
  sim->add_option("--phi", c.phi, "true variability");
  sim->add_option("--families,--family", c.families)->expected(1)->take_all()->delimiter(',');
  sim->add_flag("--em", c.em, "fit tpb by EM instead of direct maximization");

  auto* pdf = app.add_subcommand("pdf-table", "tabulate a density on an open grid");
  common(pdf);
  pdf->add_option("--family", c.family)->required();
  pdf->add_option("--mu", c.mu);
  pdf->add_option("--phi", c.phi);
  pdf->add_option("--theta", c.theta);
  pdf->add_option("--theta1", c.theta1);
  pdf->add_option("--theta2", c.theta2);
  pdf->add_option("--grid", c.grid, "number of interior points")->check(CLI::PositiveNumber);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  }

  try {
    if (fit->parsed()) {
      c.subcommand = "fit";
      if (c.format.empty()) c.format = "json";
      return cmd_fit(c, out, err);
    }
    if (rank->parsed()) {
      c.subcommand = "rank";
      if (c.format.empty()) c.format = "json";
      return cmd_rank(c, out, err);
    }
    if (sim->parsed()) {
      c.subcommand = "simulate";
      if (c.format.empty()) c.format = "json";
      if (c.families.empty()) c.families = {"beta", "tpb", "gb", "lnb", "igb"};
      return cmd_simulate(c, out, err);
    }
    c.subcommand = "pdf-table";
    if (c.format.empty()) c.format = "csv";
    return cmd_pdf_table(c, out, err);
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFitFailure;
  }
}

}  // namespace bsm
