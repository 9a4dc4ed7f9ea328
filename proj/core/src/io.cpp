#include "otest/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "otest/error.hpp"
#include "otest/numerics.hpp"

namespace otest::io {

using json = nlohmann::ordered_json;

namespace {

json parse_json(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kInvalidInput, std::string("malformed JSON: ") + e.what());
  }
}

template <class T>
T field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw Error(ErrorKind::kInvalidInput, std::string("missing field ") + key);
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorKind::kInvalidInput, std::string("bad type for field ") + key);
  }
}

template <class T>
T field_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? field<T>(j, key) : fallback;
}

const json& array_field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key) || !j.at(key).is_array())
    throw Error(ErrorKind::kInvalidInput, std::string("missing array ") + key);
  return j.at(key);
}

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::kConstraintViolation, what);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kInvalidInput, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kInvalidInput, "cannot write " + path.string());
  out << text;
}

HypothesisModel parse_hypothesis(std::string_view text) {
  const json j = parse_json(text);
  std::vector<ProbabilityClass> classes;
  for (const auto& c : array_field(j, "classes")) {
    const auto count = field<long long>(c, "count");
    if (count < 1) throw Error(ErrorKind::kInvalidInput, "class count must be positive");
    classes.push_back({field<double>(c, "p"), static_cast<std::size_t>(count)});
  }
  return HypothesisModel(std::move(classes));
}

HypothesisModel load_hypothesis(const std::filesystem::path& path) { return parse_hypothesis(read_text(path)); }

std::string hypothesis_json(const HypothesisModel& p) {
  json j;
  j["classes"] = json::array();
  for (const auto& c : p.classes()) j["classes"].push_back({{"p", c.y}, {"count", c.count}});
  return j.dump(2) + "\n";
}

AlternativeModel parse_alternative(std::string_view text) {
  const json j = parse_json(text);
  AlternativeModel q;
  for (const auto& c : array_field(j, "classes")) {
    q.class_y.push_back(field<double>(c, "y"));
    auto probs = field<std::vector<double>>(c, "probs");
    for (double v : probs)
      if (!(v >= 0.0) || !std::isfinite(v)) throw Error(ErrorKind::kInvalidInput, "alternative probabilities must be >= 0");
    q.probs.push_back(std::move(probs));
  }
  return q;
}

AlternativeModel load_alternative(const std::filesystem::path& path) { return parse_alternative(read_text(path)); }

std::string alternative_json(const AlternativeModel& q) {
  json j;
  j["classes"] = json::array();
  for (std::size_t c = 0; c < q.class_y.size(); ++c) j["classes"].push_back({{"y", q.class_y[c]}, {"probs", q.probs[c]}});
  return j.dump(2) + "\n";
}

OptimalTesterModel parse_model(std::string_view text) {
  const json j = parse_json(text);
  OptimalTesterModel m;
  m.k = field<double>(j, "k");
  m.eps = field<double>(j, "eps");
  m.alpha = field<double>(j, "alpha");
  m.u = field<double>(j, "u");
  m.shift = field<double>(j, "shift");
  m.delta_log = field<double>(j, "delta_log");
  const auto i_max = field<long long>(j, "i_max");

  require(m.k > 0.0, "k must be positive");
  if (!(m.eps > 0.0)) throw Error(ErrorKind::kEpsOutOfRange, "eps must be positive");
  require(m.alpha < 0.0 && std::isfinite(m.alpha), "alpha must be negative");
  require(m.u > 0.0 && m.u < 1.0, "u must lie in (0, 1)");
  require(m.delta_log < 0.0, "delta_log must be negative");
  require(std::isfinite(m.shift), "shift must be finite");
  require(i_max >= 2, "i_max must be at least 2");

  std::vector<ProbabilityClass> pcs;
  double max_rate = 0.0;
  for (const auto& c : array_field(j, "classes")) {
    ClassSolution s;
    s.y = field<double>(c, "y");
    const auto count = field<long long>(c, "count");
    require(count >= 1, "class count must be positive");
    s.h = static_cast<std::size_t>(count);
    s.q = field<double>(c, "q");
    s.x1 = field<double>(c, "x1");
    s.x2 = field<double>(c, "x2");
    s.gamma = field_or<double>(c, "gamma", 0.0);
    require(s.y > 0.0, "class probability must be positive");
    require(s.q >= 0.0 && s.q <= 1.0, "q must lie in [0, 1]");
    require(s.x1 >= 0.0 && s.x1 <= s.y && s.y <= s.x2, "need 0 <= x1 <= y <= x2");
    pcs.push_back({s.y, s.h});
    max_rate = std::max(max_rate, m.k * std::max(s.x2, x2_cap(s.y, m.k)));
    m.classes.push_back(s);
  }
  HypothesisModel check(std::move(pcs));  // mass and positivity
  (void)check;

  m.truncation.i_max = static_cast<std::size_t>(i_max);
  m.truncation.tail_log_mass = log_poisson_upper_tail(max_rate, m.truncation.i_max);
  return m;
}

OptimalTesterModel load_model(const std::filesystem::path& path) { return parse_model(read_text(path)); }

std::string model_json(const OptimalTesterModel& m) {
  json j;
  j["k"] = m.k;
  j["eps"] = m.eps;
  j["alpha"] = m.alpha;
  j["u"] = m.u;
  j["shift"] = m.shift;
  j["delta_log"] = m.delta_log;
  j["i_max"] = m.truncation.i_max;
  j["classes"] = json::array();
  for (const auto& c : m.classes)
    j["classes"].push_back(
        {{"y", c.y}, {"count", c.h}, {"q", c.q}, {"x1", c.x1}, {"x2", c.x2}, {"gamma", c.gamma}});
  return j.dump(2) + "\n";
}

std::filesystem::path verify_sidecar_path(const std::filesystem::path& model_path) {
  auto out = model_path;
  out.replace_extension(".verify.json");
  return out;
}

std::string stationarity_json(const StationarityReport& r) {
  json j;
  j["alpha_residual"] = r.alpha_residual;
  j["u_residual"] = r.u_residual;
  j["q_residuals"] = r.q_residuals;
  j["tangency_max_violation"] = r.tangency_max_violation;
  j["tangency_point_gap"] = r.tangency_point_gap;
  j["kappa_min_second_difference"] = r.kappa_min_second_difference;
  j["s_derivative_at_zero"] = r.s_derivative_at_zero;
  j["type1_gap"] = r.type1_gap;
  j["type2_gap"] = r.type2_gap;
  return j.dump(2) + "\n";
}

std::string verify_json(const VerifyReport& r) {
  json j;
  j["passed"] = r.passed();
  j["seconds"] = r.seconds;
  j["checks"] = json::array();
  for (const auto& c : r.checks)
    j["checks"].push_back({{"name", c.name}, {"value", c.value}, {"limit", c.limit}, {"passed", c.passed}});
  return j.dump(2) + "\n";
}

std::string tester_json(const SemilinearTester& t) {
  json j;
  j["name"] = t.name();
  j["threshold"] = t.threshold();
  j["direction"] = to_string(t.direction());
  j["classes"] = json::array();
  for (const auto& col : t.columns()) {
    json c{{"y", col.y}, {"coeffs", col.table}, {"scale", col.scale}};
    if (const auto* a = std::get_if<AnalyticColumn>(&col.extension)) {
      c["ext"] = "analytic";
      c["analytic"] = {{"k", a->k}, {"shift", a->shift}, {"q", a->q}, {"x1", a->x1}, {"x2", a->x2}};
    } else {
      const auto& f = std::get<FormulaColumn>(col.extension);
      c["ext"] = "formula:" + to_string(f.name);
      c["k"] = f.k;
    }
    j["classes"].push_back(std::move(c));
  }
  return j.dump(2) + "\n";
}

SemilinearTester parse_tester(std::string_view text) {
  const json j = parse_json(text);
  std::vector<CoefficientColumn> cols;
  for (const auto& c : array_field(j, "classes")) {
    CoefficientColumn col;
    col.y = field<double>(c, "y");
    col.table = field<std::vector<double>>(c, "coeffs");
    col.scale = field_or<double>(c, "scale", 1.0);
    const auto ext = field<std::string>(c, "ext");
    if (ext == "analytic") {
      if (!c.contains("analytic")) throw Error(ErrorKind::kInvalidInput, "analytic column without parameters");
      const json& a = c.at("analytic");
      col.extension = AnalyticColumn{field<double>(a, "k"), field<double>(a, "shift"), field<double>(a, "q"),
                                     field<double>(a, "x1"), field<double>(a, "x2")};
    } else if (ext.rfind("formula:", 0) == 0) {
      col.extension = FormulaColumn{parse_baseline_name(ext.substr(8)), field<double>(c, "k")};
    } else {
      throw Error(ErrorKind::kInvalidInput, "unknown column extension " + ext);
    }
    cols.push_back(std::move(col));
  }
  return SemilinearTester(field_or<std::string>(j, "name", "tester"), std::move(cols), field<double>(j, "threshold"),
                          parse_direction(field<std::string>(j, "direction")));
}

std::string adversary_json(const AdversaryModel& adv) {
  json j;
  j["eps"] = adv.eps;
  j["eps_hi"] = adv.eps_hi;
  j["classes"] = json::array();
  for (const auto& c : adv.classes)
    j["classes"].push_back({{"y", c.y},
                            {"count", c.h},
                            {"q", c.q},
                            {"q_tilde", c.q_tilde},
                            {"x1", c.x1},
                            {"x2", c.x2}});
  return j.dump(2) + "\n";
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  const json j = parse_json(read_text(path));
  const auto base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path f(p);
    return f.is_absolute() ? f : base / f;
  };

  ExperimentConfig cfg;
  cfg.hypothesis = load_hypothesis(resolve(field<std::string>(j, "hypothesis")));
  cfg.k_values = field<std::vector<double>>(j, "k");
  cfg.eps_values = field<std::vector<double>>(j, "eps");
  cfg.testers = field<std::vector<std::string>>(j, "testers");
  cfg.trials = field<std::size_t>(j, "trials");
  cfg.calibrate_trials = field_or<std::size_t>(j, "calibrate_trials", 0);
  cfg.seed = field<std::uint64_t>(j, "seed");
  cfg.workers = field_or<std::size_t>(j, "workers", 1);

  const auto mode = field_or<std::string>(j, "mode", "poisson");
  if (mode == "poisson") cfg.mode = SamplingMode::kPoisson;
  else if (mode == "fixed") cfg.mode = SamplingMode::kFixed;
  else throw Error(ErrorKind::kUnknownName, "mode " + mode);

  if (j.contains("adversary")) {
    const json& a = j.at("adversary");
    const auto src = field<std::string>(a, "source");
    if (src == "rounded") {
      cfg.source = AdversarySource::kHardQRounded;
    } else if (src == "conditional") {
      cfg.source = AdversarySource::kConditional;
      cfg.conditional_count = field<std::size_t>(a, "count");
      cfg.max_attempts = field_or<std::size_t>(a, "max_attempts", cfg.max_attempts);
    } else {
      throw Error(ErrorKind::kUnknownName, "adversary source " + src);
    }
    cfg.eps_hi_factor = field_or<double>(a, "eps_hi_factor", cfg.eps_hi_factor);
  }

  if (j.contains("output")) cfg.output = resolve(field<std::string>(j, "output"));
  const auto format = field_or<std::string>(j, "format", "csv");
  if (format == "csv") cfg.format = OutputFormat::kCsv;
  else if (format == "json") cfg.format = OutputFormat::kJson;
  else throw Error(ErrorKind::kUnknownName, "format " + format);

  cfg.validate();
  return cfg;
}

std::string csv_header() { return "n,k,eps,tester,type1,type2,max_err,ci_halfwidth,trials,seed,adversary_distance\n"; }

std::string csv_row(const ResultRow& r) {
  return std::to_string(r.n) + "," + fmt(r.k) + "," + fmt(r.eps) + "," + r.tester + "," + fmt(r.type1) + "," +
         fmt(r.type2) + "," + fmt(r.max_err) + "," + fmt(r.ci_halfwidth) + "," + std::to_string(r.trials) + "," +
         std::to_string(r.seed) + "," + fmt(r.adversary_distance) + "\n";
}

std::string rows_csv(const std::vector<ResultRow>& rows) {
  std::string out = csv_header();
  for (const auto& r : rows) out += csv_row(r);
  return out;
}

std::string rows_json(const std::vector<ResultRow>& rows) {
  json j = json::array();
  for (const auto& r : rows)
    j.push_back({{"n", r.n},
                 {"k", r.k},
                 {"eps", r.eps},
                 {"tester", r.tester},
                 {"type1", r.type1},
                 {"type2", r.type2},
                 {"max_err", r.max_err},
                 {"ci_halfwidth", r.ci_halfwidth},
                 {"trials", r.trials},
                 {"seed", r.seed},
                 {"adversary_distance", r.adversary_distance}});
  return j.dump(2) + "\n";
}

}  // namespace otest::io
