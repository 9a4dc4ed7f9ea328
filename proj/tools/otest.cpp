#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "otest/adversary.hpp"
#include "otest/error.hpp"
#include "otest/harness.hpp"
#include "otest/io.hpp"
#include "otest/optimizer.hpp"
#include "otest/oracle.hpp"
#include "otest/testers.hpp"

using namespace otest;

namespace {

SamplingMode parse_mode(const std::string& m) {
  if (m == "poisson") return SamplingMode::kPoisson;
  if (m == "fixed") return SamplingMode::kFixed;
  throw Error(ErrorKind::kUnknownName, "mode " + m);
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty()) std::cout << text;
  else io::write_text(path, text);
}

std::string format_rows(const std::vector<ResultRow>& rows, const std::string& format) {
  if (format == "csv") return io::rows_csv(rows);
  if (format == "json") return io::rows_json(rows);
  throw Error(ErrorKind::kUnknownName, "format " + format);
}

HypothesisModel hypothesis_of(const OptimalTesterModel& m) {
  std::vector<ProbabilityClass> pcs;
  for (const auto& c : m.classes) pcs.push_back({c.y, c.h});
  return HypothesisModel(std::move(pcs));
}

std::vector<AlternativeModel> conditional_alternatives(const AdversaryModel& adv, std::size_t count,
                                                       std::uint64_t seed, std::size_t max_attempts) {
  std::vector<AlternativeModel> out;
  for (std::size_t r = 0; r < count; ++r)
    out.push_back(sample_conditional(adv, derive_seed(seed, 0xad5e, r), max_attempts).alternative);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal semilinear identity testers: optimize, verify, simulate"};
  app.require_subcommand(1);

  // optimize
  std::string hyp_file, out_file;
  double k = 0.0, eps = 0.0, tol = 1e-10, trunc_tol = 1e-14;
  bool verbose = false;
  auto* opt = app.add_subcommand("optimize", "Solve for the optimal tester of a hypothesis");
  opt->add_option("--hypothesis", hyp_file, "Hypothesis JSON")->required()->check(CLI::ExistingFile);
  opt->add_option("--k", k, "Expected sample count")->required();
  opt->add_option("--eps", eps, "l1 distance")->required();
  opt->add_option("--tol", tol, "Gradient tolerance");
  opt->add_option("--truncation-tol", trunc_tol, "Poisson tail mass dropped from sums");
  opt->add_option("--out", out_file, "Model JSON; a .verify.json sidecar is written next to it");
  opt->add_flag("--verbose", verbose);

  // verify
  std::string model_file;
  std::size_t grid_points = 2000, scaling = 0;
  double verify_tol = 1e-6;
  auto* ver = app.add_subcommand("verify", "Check stationarity and certificate identities of a model");
  ver->add_option("--model", model_file, "Model JSON")->required()->check(CLI::ExistingFile);
  ver->add_option("--grid-points", grid_points, "Tangency grid size");
  ver->add_option("--tol", verify_tol, "Residual tolerance");
  ver->add_option("--scaling", scaling, "Also check the s-fold subdivision");
  ver->add_option("--out", out_file, "Report path (stdout if absent)");

  // simulate
  std::string alt_file, format = "csv", mode = "poisson";
  std::vector<std::string> adversary_spec;
  bool null_only = false;
  std::size_t trials = 0, workers = 1, max_attempts = 1000000;
  std::uint64_t seed = 0;
  double eps_hi = 0.0;
  auto* sim = app.add_subcommand("simulate", "Monte-Carlo errors of the optimal tester");
  sim->add_option("--model", model_file, "Model JSON")->required()->check(CLI::ExistingFile);
  auto* src_null = sim->add_flag("--null", null_only, "Use the hypothesis itself as the alternative");
  auto* src_alt = sim->add_option("--alt", alt_file, "Alternative JSON")->check(CLI::ExistingFile);
  auto* src_adv =
      sim->add_option("--adversary", adversary_spec, "rounded | conditional N")->expected(1, 2);
  src_null->excludes(src_alt)->excludes(src_adv);
  src_alt->excludes(src_adv);
  sim->add_option("--trials", trials)->required();
  sim->add_option("--seed", seed)->required();
  sim->add_option("--mode", mode)->check(CLI::IsMember({"poisson", "fixed"}));
  sim->add_option("--format", format)->check(CLI::IsMember({"csv", "json"}));
  sim->add_option("--workers", workers);
  sim->add_option("--eps-hi", eps_hi, "Upper distance for conditional sampling (default 1.05 eps)");
  sim->add_option("--max-attempts", max_attempts);

  // baseline
  std::string baseline_name, tester_out;
  std::size_t calibrate_trials = 0;
  auto* base = app.add_subcommand("baseline", "Calibrate a baseline tester against an alternative");
  base->add_option("--name", baseline_name)->required()->check(
      CLI::IsMember({"chisq", "tv", "collisions", "singletons"}));
  base->add_option("--hypothesis", hyp_file)->required()->check(CLI::ExistingFile);
  base->add_option("--k", k)->required();
  base->add_option("--calibrate-trials", calibrate_trials)->required();
  base->add_option("--alt", alt_file)->required()->check(CLI::ExistingFile);
  base->add_option("--seed", seed)->required();
  base->add_option("--mode", mode)->check(CLI::IsMember({"poisson", "fixed"}));
  base->add_option("--tester-out", tester_out, "Write the calibrated tester JSON here");

  // adversary
  std::size_t count = 1;
  std::string out_dir;
  auto* adv_cmd = app.add_subcommand("adversary", "Inspect and sample the worst-case alternative");
  adv_cmd->require_subcommand(1);
  auto* adv_sample = adv_cmd->add_subcommand("sample", "Draw realizations conditioned on [eps, eps_hi]");
  adv_sample->add_option("--model", model_file)->required()->check(CLI::ExistingFile);
  adv_sample->add_option("--eps-hi", eps_hi)->required();
  adv_sample->add_option("--count", count)->required();
  adv_sample->add_option("--seed", seed)->required();
  adv_sample->add_option("--max-attempts", max_attempts);
  adv_sample->add_option("--out-dir", out_dir, "Write each realization as an alternative file");
  auto* adv_hard = adv_cmd->add_subcommand("hard", "Export the rounded hard alternative");
  adv_hard->add_option("--model", model_file)->required()->check(CLI::ExistingFile);
  adv_hard->add_option("--out", out_file);

  // exact
  double grid = 0.0, slack = 1e-4;
  auto* ex = app.add_subcommand("exact", "Exact error of the optimal tester");
  ex->add_option("--model", model_file)->required()->check(CLI::ExistingFile);
  auto* ex_null = ex->add_flag("--null", null_only);
  auto* ex_alt = ex->add_option("--alt", alt_file)->check(CLI::ExistingFile);
  ex_null->excludes(ex_alt);
  ex->add_option("--grid", grid, "Starting lattice width of the Poisson oracle (0: automatic)");
  ex->add_option("--slack", slack, "Target width of the Poisson bracket");
  ex->add_option("--mode", mode)->check(CLI::IsMember({"poisson", "fixed"}));

  // sweep
  std::string config_file;
  std::optional<std::size_t> sweep_workers;
  auto* sw = app.add_subcommand("sweep", "Run a grid of experiments from a config file");
  sw->add_option("--config", config_file)->required()->check(CLI::ExistingFile);
  sw->add_option("--workers", sweep_workers, "Override the config's worker count");
  sw->add_option("--out", out_file, "Override the config's output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*opt) {
      OptimizerOptions options;
      options.tol = tol;
      options.log_tol = std::log(trunc_tol);
      options.verbose = verbose;
      const OptimalTesterModel model = optimize(io::load_hypothesis(hyp_file), k, eps, options);
      emit(io::model_json(model), out_file);
      if (!out_file.empty())
        io::write_text(io::verify_sidecar_path(out_file), io::stationarity_json(stationarity(model)));
      std::fprintf(stderr, "delta_log %.12g  alpha %.12g  u %.12g  i_max %zu\n", model.delta_log, model.alpha,
                   model.u, model.truncation.i_max);
      if (model.starts_disagreed) std::fprintf(stderr, "warning: independent starts disagreed\n");
      return 0;
    }

    if (*ver) {
      VerifyOptions options;
      options.grid_points = grid_points;
      options.tol = verify_tol;
      options.scaling = scaling;
      const VerifyReport report = verify_suite(io::load_model(model_file), options);
      emit(io::verify_json(report), out_file);
      return report.passed() ? 0 : exit_code_of(ErrorKind::kCertificateMismatch);
    }

    if (*sim) {
      const OptimalTesterModel model = io::load_model(model_file);
      const HypothesisModel p = hypothesis_of(model);
      const SemilinearTester tester = build_optimal_tester(model);
      std::vector<AlternativeModel> alts;
      if (null_only) {
        alts.push_back(as_alternative(p));
      } else if (!alt_file.empty()) {
        alts.push_back(io::load_alternative(alt_file));
      } else if (!adversary_spec.empty()) {
        const AdversaryModel adv = make_adversary(model, eps_hi > 0.0 ? eps_hi : kDefaultEpsHiFactor * model.eps);
        if (adversary_spec[0] == "rounded" && adversary_spec.size() == 1) {
          alts.push_back(hard_q_rounded(adv).alternative);
        } else if (adversary_spec[0] == "conditional" && adversary_spec.size() == 2) {
          alts = conditional_alternatives(adv, std::stoul(adversary_spec[1]), seed, max_attempts);
        } else {
          throw Error(ErrorKind::kInvalidInput, "--adversary takes 'rounded' or 'conditional N'");
        }
      } else {
        throw Error(ErrorKind::kInvalidInput, "one of --null, --alt, --adversary is required");
      }
      if (trials < 1000) throw Error(ErrorKind::kInvalidInput, "need at least 1000 trials");

      std::optional<ResultRow> worst;
      for (const auto& q : alts) {
        ResultRow row = estimate_errors(tester, p, q, model.k, trials, seed, parse_mode(mode), workers);
        row.eps = model.eps;
        if (!worst || row.type2 > worst->type2) worst = row;
      }
      std::cout << format_rows({*worst}, format);
      return 0;
    }

    if (*base) {
      const HypothesisModel p = io::load_hypothesis(hyp_file);
      const AlternativeModel q = io::load_alternative(alt_file);
      const Calibration cal = calibrate_threshold(baseline(parse_baseline_name(baseline_name), p, k), p, k, q,
                                                  calibrate_trials, seed, parse_mode(mode));
      if (!tester_out.empty()) io::write_text(tester_out, io::tester_json(cal.tester));
      ResultRow row;
      row.n = p.n();
      row.k = k;
      row.tester = baseline_name;
      row.type1 = cal.type1;
      row.type2 = cal.type2;
      row.max_err = cal.max_err();
      row.trials = calibrate_trials;
      row.seed = seed;
      const auto n1 = static_cast<std::size_t>(std::llround(cal.type1 * static_cast<double>(calibrate_trials)));
      const auto n2 = static_cast<std::size_t>(std::llround(cal.type2 * static_cast<double>(calibrate_trials)));
      row.ci_halfwidth = std::max(wilson_interval(n1, calibrate_trials).halfwidth(),
                                  wilson_interval(n2, calibrate_trials).halfwidth());
      row.adversary_distance = l1_distance(p, q);
      std::cout << io::rows_csv({row});
      return 0;
    }

    if (*adv_sample) {
      const OptimalTesterModel model = io::load_model(model_file);
      const AdversaryModel adv = make_adversary(model, eps_hi);
      nlohmann::json summary = nlohmann::json::array();
      for (std::size_t r = 0; r < count; ++r) {
        std::size_t attempts = 0;
        const CoinRealization real = sample_conditional(adv, derive_seed(seed, 0xad5e, r), max_attempts, &attempts);
        std::string file;
        if (!out_dir.empty()) {
          char name[64];
          std::snprintf(name, sizeof name, "realization_%04zu.json", r);
          file = (std::filesystem::path(out_dir) / name).string();
          io::write_text(file, io::alternative_json(real.alternative));
        }
        summary.push_back({{"index", r},
                           {"distance", real.distance},
                           {"mass", real.alternative.mass()},
                           {"attempts", attempts},
                           {"file", file}});
      }
      std::cout << summary.dump(2) << "\n";
      return 0;
    }

    if (*adv_hard) {
      const HardAlternative hard = hard_q_rounded(make_adversary(io::load_model(model_file)));
      emit(io::alternative_json(hard.alternative), out_file);
      std::fprintf(stderr, "distance %.12g  mass %.12g\n", hard.distance, hard.mass);
      return 0;
    }

    if (*ex) {
      const OptimalTesterModel model = io::load_model(model_file);
      const HypothesisModel p = hypothesis_of(model);
      const SemilinearTester tester = build_optimal_tester(model);
      if (!null_only && alt_file.empty()) throw Error(ErrorKind::kInvalidInput, "one of --null, --alt is required");
      const AlternativeModel source = null_only ? as_alternative(p) : io::load_alternative(alt_file);
      nlohmann::json out;
      out["side"] = null_only ? "type1" : "type2";
      if (parse_mode(mode) == SamplingMode::kPoisson) {
        PoissonOracleOptions options;
        options.grid_width = grid;
        options.slack_budget = slack;
        const ErrorBracket b = exact_poissonized_reject(tester, source, model.k, options);
        const double lo = null_only ? b.lower : 1.0 - b.upper;
        const double hi = null_only ? b.upper : 1.0 - b.lower;
        out["error_lower"] = lo;
        out["error_upper"] = hi;
        out["grid_width"] = b.grid_width;
        out["bins"] = b.bins;
      } else {
        const auto kk = static_cast<std::uint64_t>(std::llround(model.k));
        out["error"] = exact_fixed_k_error(tester, source, kk, null_only ? ErrorSide::kType1 : ErrorSide::kType2);
      }
      std::cout << out.dump(2) << "\n";
      return 0;
    }

    if (*sw) {
      ExperimentConfig cfg = io::load_experiment_config(config_file);
      if (sweep_workers) cfg.workers = *sweep_workers;
      if (!out_file.empty()) cfg.output = out_file;
      cfg.validate();
      const SweepResult result = run_sweep(cfg);
      const std::string text =
          cfg.format == OutputFormat::kCsv ? io::rows_csv(result.rows) : io::rows_json(result.rows);
      emit(text, cfg.output.string());
      for (const auto& f : result.failures)
        std::fprintf(stderr, "row failed: k=%g eps=%g tester=%s: %s\n", f.k, f.eps, f.tester.c_str(),
                     f.message.c_str());
      return result.failures.empty() ? 0 : exit_code_of(ErrorKind::kNoConvergence);
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "otest: %s\n", e.what());
    return exit_code_of(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "otest: %s\n", e.what());
    return 2;
  }
  return 0;
}
