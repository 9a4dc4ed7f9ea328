#include "otest/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "otest/error.hpp"

namespace otest {

double AdversaryModel::tilted_mean_distance() const {
  double d = 0.0;
  for (const auto& c : classes)
    d += static_cast<double>(c.h) * (c.q_tilde * (c.y - c.x1) + (1.0 - c.q_tilde) * (c.x2 - c.y));
  return d;
}

double AdversaryModel::coin_mean_distance() const {
  double d = 0.0;
  for (const auto& c : classes) d += static_cast<double>(c.h) * (c.q * (c.y - c.x1) + (1.0 - c.q) * (c.x2 - c.y));
  return d;
}

HypothesisModel AdversaryModel::hypothesis() const {
  std::vector<ProbabilityClass> pcs;
  for (const auto& c : classes) pcs.push_back({c.y, c.h});
  return HypothesisModel(std::move(pcs));
}

AdversaryModel make_adversary(const OptimalTesterModel& model, double eps_hi) {
  AdversaryModel adv;
  adv.eps = model.eps;
  adv.eps_hi = eps_hi;
  for (const auto& c : model.classes) {
    const double l1 = std::log(c.q) + model.alpha * (c.y - c.x1);
    const double l2 = std::log1p(-c.q) + model.alpha * (c.x2 - c.y);
    const double qt = std::exp(l1 - log_add_exp(l1, l2));
    adv.classes.push_back({c.y, c.h, c.q, qt, c.x1, c.x2});
  }
  return adv;
}

CoinRealization realize(const AdversaryModel& adv, std::vector<std::vector<std::uint8_t>> choice) {
  CoinRealization r;
  r.choice = std::move(choice);
  for (std::size_t j = 0; j < adv.classes.size(); ++j) {
    const auto& c = adv.classes[j];
    r.alternative.class_y.push_back(c.y);
    auto& row = r.alternative.probs.emplace_back();
    for (auto ch : r.choice[j]) {
      row.push_back(ch == 1 ? c.x1 : c.x2);
      r.distance += ch == 1 ? c.y - c.x1 : c.x2 - c.y;
    }
  }
  return r;
}

CoinRealization sample_coin_distribution(const AdversaryModel& adv, Engine& rng) {
  std::vector<std::vector<std::uint8_t>> choice;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (const auto& c : adv.classes) {
    auto& row = choice.emplace_back(c.h);
    for (auto& ch : row) ch = unif(rng) < c.q ? 1 : 2;
  }
  return realize(adv, std::move(choice));
}

CoinRealization sample_coin_distribution(const AdversaryModel& adv, std::uint64_t seed) {
  Engine rng(seed);
  return sample_coin_distribution(adv, rng);
}

CoinRealization sample_conditional(const AdversaryModel& adv, std::uint64_t seed, std::size_t max_attempts,
                                   std::size_t* attempts_used) {
  if (!(adv.eps_hi > adv.eps))
    throw Error(ErrorKind::kConditioningTooRare, "eps_hi must exceed eps for rejection sampling");
  Engine rng(seed);
  for (std::size_t a = 1; a <= max_attempts; ++a) {
    auto r = sample_coin_distribution(adv, rng);
    if (r.distance >= adv.eps && r.distance <= adv.eps_hi) {
      if (attempts_used) *attempts_used = a;
      return r;
    }
  }
  throw Error(ErrorKind::kConditioningTooRare,
              "no realization in [eps, eps_hi] after " + std::to_string(max_attempts) + " attempts");
}

HardAlternative hard_q_rounded(const AdversaryModel& adv) {
  HardAlternative out;
  const std::size_t nc = adv.classes.size();
  out.at_lower.resize(nc);
  auto distance = [&] {
    double d = 0.0;
    for (std::size_t j = 0; j < nc; ++j) {
      const auto& c = adv.classes[j];
      const double m = static_cast<double>(out.at_lower[j]);
      d += m * (c.y - c.x1) + (static_cast<double>(c.h) - m) * (c.x2 - c.y);
    }
    return d;
  };
  for (std::size_t j = 0; j < nc; ++j) {
    const auto& c = adv.classes[j];
    out.at_lower[j] = std::min<std::size_t>(c.h, static_cast<std::size_t>(std::llround(static_cast<double>(c.h) * c.q_tilde)));
  }
  // Move one element at a time from the nearer point to the farther one,
  // best gain first, until the distance reaches eps.
  double d = distance();
  while (d < adv.eps) {
    double best_gain = 0.0;
    std::size_t best_j = nc;
    int best_dir = 0;
    for (std::size_t j = 0; j < nc; ++j) {
      const auto& c = adv.classes[j];
      const double d1 = c.y - c.x1, d2 = c.x2 - c.y;
      if (d2 > d1 && out.at_lower[j] > 0 && d2 - d1 > best_gain) {
        best_gain = d2 - d1;
        best_j = j;
        best_dir = -1;
      }
      if (d1 > d2 && out.at_lower[j] < c.h && d1 - d2 > best_gain) {
        best_gain = d1 - d2;
        best_j = j;
        best_dir = +1;
      }
    }
    if (best_j == nc) break;
    if (best_dir < 0) --out.at_lower[best_j];
    else ++out.at_lower[best_j];
    d = distance();
  }

  for (std::size_t j = 0; j < nc; ++j) {
    const auto& c = adv.classes[j];
    out.alternative.class_y.push_back(c.y);
    auto& row = out.alternative.probs.emplace_back();
    row.assign(out.at_lower[j], c.x1);
    row.resize(c.h, c.x2);
  }
  out.distance = d;
  out.mass = out.alternative.mass();
  out.slack = d - adv.eps;
  return out;
}

double log_likelihood_ratio(const AdversaryModel& adv, const OptimalTesterModel& model, const SampleHistogram& hist) {
  if (hist.counts.size() != adv.classes.size() || model.classes.size() != adv.classes.size())
    throw Error(ErrorKind::kMisaligned, "histogram and adversary disagree on classes");
  double s = 0.0;
  for (std::size_t j = 0; j < hist.counts.size(); ++j) {
    if (hist.counts[j].size() != adv.classes[j].h)
      throw Error(ErrorKind::kMisaligned, "class size mismatch");
    for (auto c : hist.counts[j]) s += kappa(model.classes[j], model.k, c);
  }
  return s;
}

double log_pi_weight(const OptimalTesterModel& model, std::size_t j, int r, double u) {
  const auto& c = model.classes.at(j);
  const double k = model.k;
  const double lq1 = std::log(c.q), lq2 = std::log1p(-c.q);
  const std::size_t count = model.truncation.i_max + 1;
  std::vector<double> terms(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double lP1 = log_poisson_pmf(k * c.x1, i);
    const double lP2 = log_poisson_pmf(k * c.x2, i);
    const double lmix = log_add_exp(lq1 + lP1, lq2 + lP2);
    const double own = r == 1 ? lq1 + lP1 : lq2 + lP2;
    terms[i] = own == kNegInf ? kNegInf : u * (log_poisson_pmf(k * c.y, i) - lmix) + own;
  }
  return log_sum_exp(terms);
}

double pi_weight(const AdversaryModel& adv, const OptimalTesterModel& model, std::size_t j, int r) {
  (void)adv;
  return std::exp(log_pi_weight(model, j, r, model.u));
}

double level2_chernoff(const AdversaryModel& adv, const OptimalTesterModel& model, double s_param, double u) {
  double total = -s_param * adv.eps;
  for (std::size_t j = 0; j < adv.classes.size(); ++j) {
    const auto& c = adv.classes[j];
    total += static_cast<double>(c.h) * log_add_exp(s_param * (c.y - c.x1) + log_pi_weight(model, j, 1, u),
                                                    s_param * (c.x2 - c.y) + log_pi_weight(model, j, 2, u));
  }
  return total;
}

double level2_chernoff(const AdversaryModel& adv, const OptimalTesterModel& model, double s_param) {
  return level2_chernoff(adv, model, s_param, model.u);
}

double certificate_value(const AdversaryModel& adv, const OptimalTesterModel& model, double s_param, double u) {
  double den = 0.0;
  for (const auto& c : adv.classes)
    den += static_cast<double>(c.h) * log_add_exp(std::log(c.q) + model.alpha * (c.y - c.x1),
                                                  std::log1p(-c.q) + model.alpha * (c.x2 - c.y));
  return level2_chernoff(adv, model, s_param, u) + adv.eps * model.alpha * (1.0 - u) - (1.0 - u) * den;
}

CertificateReport certificate_report(const AdversaryModel& adv, const OptimalTesterModel& model, double tol) {
  CertificateReport rep;
  rep.value = certificate_value(adv, model, 0.0, model.u);
  rep.delta_log = model.delta_log;
  rep.gap = std::abs(rep.value - model.delta_log);
  const double hs = 1e-5;
  rep.s_derivative =
      (certificate_value(adv, model, hs, model.u) - certificate_value(adv, model, -hs, model.u)) / (2.0 * hs);
  rep.u_derivative =
      (certificate_value(adv, model, 0.0, model.u + hs) - certificate_value(adv, model, 0.0, model.u - hs)) /
      (2.0 * hs);
  const double u_up = std::min(model.u + 0.05, 1.0 - 1e-9);
  rep.u_probe_rise = certificate_value(adv, model, 0.0, u_up) - rep.value;
  rep.passed = rep.gap <= tol && std::abs(rep.s_derivative) <= tol && std::abs(rep.u_derivative) <= tol &&
               rep.u_probe_rise > 0.0;
  return rep;
}

CertificateReport certificate_check(const AdversaryModel& adv, const OptimalTesterModel& model, double tol) {
  auto rep = certificate_report(adv, model, tol);
  if (!rep.passed)
    throw Error(ErrorKind::kCertificateMismatch,
                "certificate " + std::to_string(rep.value) + " vs delta " + std::to_string(rep.delta_log));
  return rep;
}

}  // namespace otest
