// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits with the number of failures not listed in the known-red file.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "otest/adversary.hpp"
#include "otest/error.hpp"
#include "otest/harness.hpp"
#include "otest/io.hpp"
#include "otest/optimizer.hpp"
#include "otest/oracle.hpp"
#include "otest/testers.hpp"

namespace fs = std::filesystem;
using namespace otest;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Paths {
  std::string otest;
  fs::path data;
  fs::path work;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

int run(const std::string& cmd) {
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string quote(const fs::path& p) { return "'" + p.string() + "'"; }

struct Instance {
  std::string file;
  double k;
};

const std::vector<Instance>& verify_instances() {
  static const std::vector<Instance> v{{"uniform10.json", 10},  {"uniform10.json", 5},  {"uniform50.json", 50},
                                       {"uniform50.json", 25},  {"heavy80.json", 80},   {"heavy80.json", 40}};
  return v;
}

fs::path model_path(const Paths& paths, const Instance& inst) {
  return paths.work / fmt("%s_k%g.model.json", fs::path(inst.file).stem().c_str(), inst.k);
}

Outcome stationarity_certificates(const Paths& paths) {
  Outcome out{true, ""};
  for (const auto& inst : verify_instances()) {
    const fs::path model = model_path(paths, inst);
    const fs::path report = paths.work / (model.stem().string() + ".report.json");
    const auto t0 = Clock::now();
    const int rc_opt = run(paths.otest + " optimize --hypothesis " + quote(paths.data / inst.file) +
                           fmt(" --k %g --eps 0.9 --out ", inst.k) + quote(model) + " 2>/dev/null");
    const int rc_ver = rc_opt == 0 ? run(paths.otest + " verify --grid-points 2000 --tol 1e-6 --model " +
                                         quote(model) + " --out " + quote(report))
                                   : -1;
    const double secs = seconds_since(t0);
    const bool ok = rc_opt == 0 && rc_ver == 0 && secs < 30.0;
    out.pass = out.pass && ok;
    out.detail += fmt(" %s/k=%g:%s(%.1fs)", fs::path(inst.file).stem().c_str(), inst.k, ok ? "ok" : "FAIL", secs);
  }
  return out;
}

Outcome subdivision_scaling() {
  const auto t0 = Clock::now();
  const auto base = optimize(uniform_hypothesis(10), 10.0, 0.9);
  Outcome out{true, ""};
  for (std::size_t s : {2u, 5u, 10u}) {
    const double sd = static_cast<double>(s);
    const auto sub = optimize(subdivide(uniform_hypothesis(10), s), 10.0 * sd, 0.9);
    const double rel = std::abs(sub.delta_log - sd * base.delta_log) / std::abs(sd * base.delta_log);
    out.pass = out.pass && rel < 1e-6;
    out.detail += fmt(" s=%zu:rel=%.1e", s, rel);
  }
  const double secs = seconds_since(t0);
  out.pass = out.pass && secs < 120.0;
  out.detail += fmt(" total=%.1fs", secs);
  return out;
}

Outcome certificates(const Paths& paths) {
  Outcome out{true, ""};
  for (const auto& inst : verify_instances()) {
    const auto m = io::load_model(model_path(paths, inst));
    const auto rep = certificate_report(make_adversary(m), m, 1e-6);
    const bool ok = rep.gap < 1e-6 && std::abs(rep.s_derivative) < 1e-6;
    out.pass = out.pass && ok;
    out.detail += fmt(" k=%g:gap=%.1e,ds=%.1e", inst.k, rep.gap, rep.s_derivative);
  }
  return out;
}

Outcome chernoff_dominance() {
  const auto p = uniform_hypothesis(10);
  const auto m = optimize(p, 10.0, 0.9);
  const auto t = build_optimal_tester(m);
  const auto q = hard_q_rounded(make_adversary(m)).alternative;
  const double bound = std::exp(m.delta_log);
  const auto bracket = exact_poissonized_reject(t, as_alternative(p), 10.0);

  const std::size_t trials = 100000;
  const std::size_t false_rejects = count_rejections(t, as_alternative(p), 10.0, trials, 41, 0, SamplingMode::kPoisson);
  const std::size_t misses = trials - count_rejections(t, q, 10.0, trials, 41, 1, SamplingMode::kPoisson);
  const auto w1 = wilson_interval(false_rejects, trials);
  const auto w2 = wilson_interval(misses, trials);
  const double t1 = static_cast<double>(false_rejects) / trials;
  const double t2 = static_cast<double>(misses) / trials;

  Outcome out;
  out.pass = bracket.upper <= bound && t1 <= bound + 3 * w1.halfwidth() && t2 <= bound + 3 * w2.halfwidth();
  out.detail = fmt(" e^delta=%.4f exact_type1=[%.6f,%.6f] mc_type1=%.4f mc_type2=%.4f (ci %.4f/%.4f)", bound,
                   bracket.lower, bracket.upper, t1, t2, w1.halfwidth(), w2.halfwidth());
  return out;
}

Outcome heavy_element() {
  const auto t0 = Clock::now();
  const auto p = heavy_element_hypothesis(0.5, 80);
  const auto m = optimize(p, 40.0, 0.9);
  const auto hard = hard_q_rounded(make_adversary(m));
  const std::size_t trials = 100000;
  const auto opt = estimate_errors(build_optimal_tester(m), p, hard.alternative, 40.0, trials, 51);
  const auto chi =
      calibrate_threshold(baseline(BaselineName::kChiSquared, p, 40.0), p, 40.0, hard.alternative, trials, 52);
  const double secs = seconds_since(t0);

  Outcome out;
  const bool opt_ok = opt.max_err < 0.10;
  const bool chi_ok = chi.max_err() > 0.35;
  out.pass = opt_ok && chi_ok && secs < 300.0;
  out.detail = fmt(" optimal max_err=%.4f (<0.10 %s) chisq calibrated max_err=%.4f (>0.35 %s) hardQ dist=%.4f "
                   "mass=%.4f %.0fs",
                   opt.max_err, opt_ok ? "ok" : "no", chi.max_err(), chi_ok ? "ok" : "no", hard.distance, hard.mass,
                   secs);
  return out;
}

Outcome uniform_ordering() {
  const auto p = uniform_hypothesis(50);
  const auto m = optimize(p, 50.0, 0.9);
  const auto q = hard_q_rounded(make_adversary(m)).alternative;
  const std::size_t trials = 100000;
  const auto opt = estimate_errors(build_optimal_tester(m), p, q, 50.0, trials, 61);
  Outcome out{true, fmt(" optimal=%.4f", opt.max_err)};
  std::uint64_t seed = 62;
  for (auto name : {BaselineName::kChiSquared, BaselineName::kTotalVariation, BaselineName::kCollisions,
                    BaselineName::kSingletons}) {
    const auto cal = calibrate_threshold(baseline(name, p, 50.0), p, 50.0, q, trials, seed++);
    out.pass = out.pass && opt.max_err <= cal.max_err() + 0.02;
    out.detail += fmt(" %s=%.4f", to_string(name).c_str(), cal.max_err());
  }
  return out;
}

Outcome oracle_agreement() {
  Outcome out{true, ""};
  const std::size_t trials = 1000000;
  int worst_name = 0;
  double worst_z = 0.0;
  std::string worst_label;
  std::uint64_t stream = 0;
  for (std::size_t n : {3u, 6u}) {
    const double k = static_cast<double>(n);
    const auto p = uniform_hypothesis(n);
    const auto m = optimize(p, k, 0.9);
    const auto q = hard_q_rounded(make_adversary(m)).alternative;

    std::vector<SemilinearTester> testers{build_optimal_tester(m)};
    for (auto name : {BaselineName::kChiSquared, BaselineName::kTotalVariation, BaselineName::kCollisions,
                      BaselineName::kSingletons})
      testers.push_back(calibrate_threshold(baseline(name, p, k), p, k, q, 20000, 70 + n, SamplingMode::kFixed).tester);

    for (const auto& t : testers) {
      for (const AlternativeModel* src : {static_cast<const AlternativeModel*>(nullptr), &q}) {
        const AlternativeModel source = src ? *src : as_alternative(p);
        const char* side = src ? "type2" : "type1";

        const double exact = exact_fixed_k_reject(t, source, n);
        const double mc_fixed =
            static_cast<double>(count_rejections(t, source, k, trials, 71, stream++, SamplingMode::kFixed)) / trials;
        const double sd_fixed = std::sqrt(std::max(exact * (1 - exact), 1.0 / trials) / trials);
        const double z_fixed = std::abs(mc_fixed - exact) / sd_fixed;

        const auto b = exact_poissonized_reject(t, source, k);
        const double mc_pois =
            static_cast<double>(count_rejections(t, source, k, trials, 72, stream++, SamplingMode::kPoisson)) / trials;
        const double mid = 0.5 * (b.lower + b.upper);
        const double sd_pois = std::sqrt(std::max(mid * (1 - mid), 1.0 / trials) / trials);
        const double outside = std::max({0.0, b.lower - mc_pois, mc_pois - b.upper});
        const double z_pois = outside / sd_pois;

        const bool ok = z_fixed <= 4.0 && z_pois <= 4.0;
        out.pass = out.pass && ok;
        if (!ok) out.detail += fmt(" n=%zu %s %s: fixed %.5f vs %.5f, poisson [%.5f,%.5f] vs %.5f;", n,
                                   t.name().c_str(), side, exact, mc_fixed, b.lower, b.upper, mc_pois);
        for (double z : {z_fixed, z_pois})
          if (z > worst_z) {
            worst_z = z;
            worst_label = fmt("n=%zu %s %s", n, t.name().c_str(), side);
          }
        ++worst_name;
      }
    }
  }
  out.detail += fmt(" %d comparisons, worst %.2f sigma (%s)", worst_name * 2, worst_z, worst_label.c_str());
  return out;
}

Outcome tiny_sandwich() {
  Outcome out{true, ""};
  for (std::size_t n : {4u, 8u}) {
    const auto p = uniform_hypothesis(n);
    const auto m = optimize(p, static_cast<double>(n), 0.9);
    const auto adv = make_adversary(m, 1.05 * 0.9);
    const auto rep = tiny_instance_report(build_optimal_tester(m), adv, n);
    const double lower = std::exp(m.delta_log) * std::exp(m.alpha * (adv.eps_hi - adv.eps)) * 1e-2;
    const bool ok = rep.floor <= rep.tester_max() && rep.floor >= lower;
    out.pass = out.pass && ok;
    out.detail += fmt(" n=%zu: %.2e <= floor=%.4f <= tester=%.4f", n, lower, rep.floor, rep.tester_max());
  }
  return out;
}

Outcome determinism(const Paths& paths) {
  const fs::path cfg = paths.work / "determinism.json";
  {
    std::ofstream f(cfg);
    f << "{\"hypothesis\": \"" << (paths.data / "uniform10.json").string() << "\""
      << ", \"k\": [10], \"eps\": [0.9], \"testers\": [\"optimal\", \"chisq\", \"tv\", \"collisions\", "
         "\"singletons\"], \"trials\": 2000, \"seed\": 7, \"adversary\": {\"source\": \"conditional\", "
         "\"count\": 3}}\n";
  }
  std::vector<std::string> outputs;
  bool ran = true;
  for (int workers : {1, 1, 4}) {
    const fs::path csv = paths.work / fmt("sweep_%zu_w%d.csv", outputs.size(), workers);
    ran = ran && run(paths.otest + " sweep --config " + quote(cfg) + fmt(" --workers %d --out ", workers) +
                     quote(csv)) == 0;
    outputs.push_back(ran ? io::read_text(csv) : std::string());
  }
  Outcome out;
  const std::size_t rows = outputs[0].empty() ? 0 : std::count(outputs[0].begin(), outputs[0].end(), '\n') - 1;
  out.pass = ran && rows == 5 && outputs[0] == outputs[1] && outputs[0] == outputs[2];
  out.detail = fmt(" %zu rows; repeat %s; workers 1 vs 4 %s", rows, outputs[0] == outputs[1] ? "identical" : "DIFFER",
                   outputs[0] == outputs[2] ? "identical" : "DIFFER");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  Paths paths;
  std::string known_red_file;
  app.add_option("--otest", paths.otest, "Path to the otest binary")->required();
  app.add_option("--data", paths.data, "Shipped data directory")->required();
  app.add_option("--work", paths.work, "Scratch directory")->required();
  app.add_option("--known-red", known_red_file, "Criteria expected to fail");
  CLI11_PARSE(app, argc, argv);
  paths.data = fs::absolute(paths.data);
  paths.work = fs::absolute(paths.work);
  fs::create_directories(paths.work);

  std::set<int> known_red;
  if (!known_red_file.empty()) {
    std::ifstream f(known_red_file);
    std::string line;
    while (std::getline(f, line)) {
      if (line.empty() || line[0] == '#') continue;
      known_red.insert(std::stoi(line));
    }
  }

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"stationarity certificates", [&] { return stationarity_certificates(paths); }},
      {"subdivision scaling", subdivision_scaling},
      {"certificate identity", [&] { return certificates(paths); }},
      {"Chernoff dominance", chernoff_dominance},
      {"heavy-element experiment", heavy_element},
      {"uniform n=k=50 ordering", uniform_ordering},
      {"oracle agreement", oracle_agreement},
      {"tiny-instance sandwich", tiny_sandwich},
      {"sweep determinism", [&] { return determinism(paths); }},
  };

  int passed = 0, unexpected = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string(" error: ") + e.what()};
    }
    std::printf("criterion %d %s: %s%s [%.1fs]%s\n", id, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                o.detail.c_str(), seconds_since(t0), !o.pass && known_red.count(id) ? " (known red)" : "");
    std::fflush(stdout);
    if (o.pass) ++passed;
    else if (!known_red.count(id)) ++unexpected;
  }
  std::printf("%d/%zu criteria passed, %d unexpected failure(s)\n", passed, criteria.size(), unexpected);
  return unexpected;
}
