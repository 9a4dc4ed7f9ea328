#include "otest/oracle.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <string>

#include "otest/error.hpp"

namespace otest {

namespace {

using cplx = std::complex<double>;

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

cplx int_pow(cplx base, std::size_t e) {
  cplx result(1.0, 0.0);
  while (e > 0) {
    if (e & 1u) result *= base;
    base *= base;
    e >>= 1u;
  }
  return result;
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1u;
  return p;
}

// Identical elements: same column, same rate.
struct ElementGroup {
  std::vector<double> values;  // oriented so that rejection means sum >= threshold
  std::vector<double> probs;
  std::size_t mult = 0;
  double tail = 0.0;  // Poisson mass beyond the last value
  double min() const { return *std::min_element(values.begin(), values.end()); }
  double max() const { return *std::max_element(values.begin(), values.end()); }
};

struct GridSum {
  double reject_mass = 0.0;
  double roundoff = 0.0;
  std::size_t bins = 0;
};

// Distribution of the grid-rounded sum via one forward transform per group
// and a single inverse transform.
GridSum grid_reject_mass(const std::vector<ElementGroup>& groups, double threshold, double w, bool round_up,
                         std::size_t max_bins) {
  auto to_grid = [&](double v) { return round_up ? std::ceil(v / w) : std::floor(v / w); };

  std::vector<double> offsets;
  double offset_total = 0.0;
  double span_total = 0.0;
  for (const auto& g : groups) {
    const double o = to_grid(g.min());
    offsets.push_back(o);
    offset_total += static_cast<double>(g.mult) * o;
    span_total += static_cast<double>(g.mult) * (to_grid(g.max()) - o);
  }
  if (span_total + 1.0 > static_cast<double>(max_bins))
    throw Error(ErrorKind::kSlackBudgetExceeded, "grid needs more than the bin cap");
  const std::size_t n_bins = static_cast<std::size_t>(span_total) + 1;
  const std::size_t len = next_pow2(n_bins);
  const std::size_t n_freq = len / 2 + 1;

  std::vector<double> real(len);
  std::vector<cplx> spec(n_freq), acc(n_freq, cplx(1.0, 0.0));
  fftw_plan fwd, inv;
  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fwd = fftw_plan_dft_r2c_1d(static_cast<int>(len), real.data(), reinterpret_cast<fftw_complex*>(spec.data()),
                               FFTW_ESTIMATE);
    inv = fftw_plan_dft_c2r_1d(static_cast<int>(len), reinterpret_cast<fftw_complex*>(spec.data()), real.data(),
                               FFTW_ESTIMATE);
  }
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const auto& g = groups[gi];
    std::fill(real.begin(), real.end(), 0.0);
    for (std::size_t i = 0; i < g.values.size(); ++i)
      real[static_cast<std::size_t>(to_grid(g.values[i]) - offsets[gi])] += g.probs[i];
    fftw_execute(fwd);
    for (std::size_t f = 0; f < n_freq; ++f) acc[f] *= int_pow(spec[f], g.mult);
  }
  spec = acc;
  fftw_execute(inv);
  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(inv);
  }

  // Sum over grid points b with w * (offset_total + b) >= threshold.
  double first = std::ceil(threshold / w - offset_total);
  while (first > 0 && w * (offset_total + first - 1.0) >= threshold) first -= 1.0;
  while (w * (offset_total + first) < threshold) first += 1.0;
  const std::size_t b0 = first <= 0.0 ? 0 : static_cast<std::size_t>(first);

  GridSum out;
  out.bins = n_bins;
  double most_negative = 0.0, largest = 0.0;
  for (std::size_t b = 0; b < n_bins; ++b) {
    const double v = real[b] / static_cast<double>(len);
    most_negative = std::min(most_negative, v);
    largest = std::max(largest, v);
    if (b >= b0) out.reject_mass += v;
  }
  const double noise =
      std::max(-most_negative, largest * 1e-16 * std::log2(static_cast<double>(len)) * 4.0);
  const std::size_t summed = b0 < n_bins ? n_bins - b0 : 0;
  out.roundoff = noise * static_cast<double>(summed);
  return out;
}

// Largest 2^-j (j <= 10) that every value sits on, or 0 if none does.
double lattice_unit(const std::vector<ElementGroup>& groups) {
  for (int j = 0; j <= 10; ++j) {
    const double scale = std::ldexp(1.0, j);
    bool on_grid = true;
    for (const auto& g : groups) {
      for (double v : g.values) {
        const double x = v * scale;
        if (std::abs(x - std::round(x)) > 1e-9 * std::max(1.0, std::abs(x))) {
          on_grid = false;
          break;
        }
      }
      if (!on_grid) break;
    }
    if (on_grid) return 1.0 / scale;
  }
  return 0.0;
}

}  // namespace

ErrorBracket exact_poissonized_error(const SemilinearTester& tester, const std::vector<std::vector<double>>& rates,
                                     const PoissonOracleOptions& options) {
  if (rates.size() != tester.columns().size())
    throw Error(ErrorKind::kMisaligned, "rates do not match tester classes");
  if (!(options.grid_width >= 0.0)) throw Error(ErrorKind::kInvalidInput, "grid width must be positive");
  const double sign = tester.direction() == Direction::kGe ? 1.0 : -1.0;
  const double threshold = sign * tester.threshold();

  std::vector<ElementGroup> groups;
  for (std::size_t j = 0; j < rates.size(); ++j) {
    std::map<double, std::size_t> by_rate;
    for (double r : rates[j]) {
      if (!(r >= 0.0)) throw Error(ErrorKind::kInvalidInput, "negative rate");
      ++by_rate[r];
    }
    for (const auto& [rate, mult] : by_rate) {
      ElementGroup g;
      g.mult = mult;
      const TruncationPlan plan = truncation_index(rate, options.log_tol);
      for (std::size_t i = 0; i <= plan.i_max; ++i) {
        g.values.push_back(sign * tester.coefficient(j, i));
        g.probs.push_back(std::exp(log_poisson_pmf(rate, i)));
      }
      g.tail = plan.tail_log_mass == kNegInf ? 0.0 : std::exp(plan.tail_log_mass);
      groups.push_back(std::move(g));
    }
  }

  ErrorBracket out;
  double log_no_tail = 0.0;
  for (const auto& g : groups) log_no_tail += static_cast<double>(g.mult) * std::log1p(-g.tail);
  const double no_tail = std::exp(log_no_tail);
  out.truncation_slack = -std::expm1(log_no_tail);

  double sum_min = 0.0, sum_max = 0.0;
  for (const auto& g : groups) {
    sum_min += static_cast<double>(g.mult) * g.min();
    sum_max += static_cast<double>(g.mult) * g.max();
  }
  if (threshold <= sum_min) {
    // Every untruncated outcome rejects.
    out.lower = no_tail;
    out.upper = 1.0;
    return out;
  }
  if (threshold > sum_max) {
    out.lower = 0.0;
    out.upper = std::min(1.0, out.truncation_slack);
    return out;
  }

  // Integer-like statistics put atoms right at the threshold, where floor and
  // ceil rounding never agree. Those are summed on their own lattice instead.
  const double unit = options.grid_width > 0.0 ? 0.0 : lattice_unit(groups);
  if (unit > 0.0)
    for (auto& g : groups)
      for (auto& v : g.values) v = std::round(v / unit) * unit;

  // Values past these levels decide the outcome whatever the other elements
  // do, so they can be pulled in without changing the event.
  for (auto& g : groups) {
    const double hi = threshold - (sum_min - g.min());
    const double lo = threshold - (sum_max - g.max());
    // Margins keep the pulled-in values clear of the threshold after rounding.
    double top = hi + 0.01 * (hi - g.min()) + 1e-12;
    double bottom = lo - 0.01 * (g.max() - lo) - 1e-12;
    if (unit > 0.0) {
      top = std::ceil(top / unit) * unit;
      bottom = std::floor(bottom / unit) * unit;
    }
    for (auto& v : g.values) {
      if (v > top) v = top;
      else if (v < bottom) v = bottom;
    }
  }

  double span = 0.0;
  for (const auto& g : groups) span += static_cast<double>(g.mult) * (g.max() - g.min());
  double w = options.grid_width > 0.0 ? options.grid_width : std::max(span / 65536.0, 1e-300);
  if (unit > 0.0) w = unit;

  for (;;) {
    const GridSum lo = grid_reject_mass(groups, threshold, w, false, options.max_bins);
    const GridSum hi = grid_reject_mass(groups, threshold, w, true, options.max_bins);
    out.grid_width = w;
    out.bins = hi.bins;
    out.discretization_slack = std::max(0.0, hi.reject_mass - lo.reject_mass);
    out.roundoff_slack = lo.roundoff + hi.roundoff;
    out.lower = std::clamp(lo.reject_mass - lo.roundoff, 0.0, 1.0);
    out.upper = std::clamp(hi.reject_mass + hi.roundoff + out.truncation_slack, 0.0, 1.0);
    if (out.upper - out.lower <= options.slack_budget) return out;
    if (2.0 * static_cast<double>(hi.bins) > static_cast<double>(options.max_bins))
      throw Error(ErrorKind::kSlackBudgetExceeded,
                  "bracket width " + std::to_string(out.upper - out.lower) + " at the bin cap");
    w *= 0.5;
  }
}

ErrorBracket exact_poissonized_reject(const SemilinearTester& tester, const AlternativeModel& source, double k,
                                      const PoissonOracleOptions& options) {
  std::vector<std::vector<double>> rates;
  for (const auto& row : source.probs) {
    auto& r = rates.emplace_back();
    for (double x : row) r.push_back(k * x);
  }
  return exact_poissonized_error(tester, rates, options);
}

double choose(std::uint64_t n, std::uint64_t r) {
  if (r > n) return 0.0;
  return std::exp(log_factorial(n) - log_factorial(r) - log_factorial(n - r));
}

namespace {

struct Arrangement {
  std::vector<std::uint32_t> counts;  // non-increasing
  double log_arrangements = 0.0;      // log of the number of distinct orderings
};

// All multisets of `slots` non-negative counts summing to `total`.
void partitions(std::uint32_t total, std::size_t slots, std::vector<Arrangement>& out) {
  std::vector<std::uint32_t> cur;
  auto rec = [&](auto&& self, std::uint32_t left, std::uint32_t cap) -> void {
    if (cur.size() == slots) {
      if (left != 0) return;
      Arrangement a;
      a.counts = cur;
      a.log_arrangements = log_factorial(slots);
      std::size_t run = 1;
      for (std::size_t i = 1; i <= cur.size(); ++i) {
        if (i < cur.size() && cur[i] == cur[i - 1]) {
          ++run;
        } else {
          a.log_arrangements -= log_factorial(run);
          run = 1;
        }
      }
      out.push_back(std::move(a));
      return;
    }
    const std::size_t remaining_slots = slots - cur.size();
    for (std::uint32_t c = std::min(left, cap) + 1; c-- > 0;) {
      if (static_cast<std::uint64_t>(c) * remaining_slots < left) break;
      cur.push_back(c);
      self(self, left - c, c);
      cur.pop_back();
    }
  };
  rec(rec, total, total);
}

void check_size(std::size_t n, std::uint64_t k, double limit) {
  const double configs = choose(n + k - 1, k);
  if (n > 0 && configs > limit)
    throw Error(ErrorKind::kInstanceTooLarge,
                "C(n+k-1, k) = " + std::to_string(configs) + " exceeds " + std::to_string(limit));
}

}  // namespace

double exact_fixed_k_reject(const SemilinearTester& tester, const AlternativeModel& source, std::uint64_t k) {
  if (source.probs.size() != tester.columns().size())
    throw Error(ErrorKind::kMisaligned, "source does not match tester classes");
  std::size_t n = 0;
  for (const auto& row : source.probs) n += row.size();
  check_size(n, k, kMaxEnumeration);
  const double mass = source.mass();
  if (!(mass > 0.0)) throw Error(ErrorKind::kInvalidInput, "source has no mass");

  struct Cell {
    std::size_t column;
    double log_p;  // -inf for a zero-probability element
    std::size_t mult;
    // Per total count K: (log weight without k!, statistic contribution).
    std::vector<std::vector<std::pair<double, double>>> by_total;
  };
  std::vector<Cell> cells;
  for (std::size_t j = 0; j < source.probs.size(); ++j) {
    std::map<double, std::size_t> by_p;
    for (double x : source.probs[j]) ++by_p[x / mass];
    for (const auto& [p, mult] : by_p) {
      Cell c{j, p > 0.0 ? std::log(p) : kNegInf, mult, {}};
      c.by_total.resize(k + 1);
      for (std::uint64_t K = 0; K <= k; ++K) {
        if (p <= 0.0 && K > 0) break;
        std::vector<Arrangement> arr;
        partitions(static_cast<std::uint32_t>(K), mult, arr);
        for (const auto& a : arr) {
          double lw = a.log_arrangements, stat = 0.0;
          for (auto s : a.counts) {
            lw += s == 0 ? 0.0 : static_cast<double>(s) * c.log_p;
            lw -= log_factorial(s);
            stat += tester.coefficient(j, s);
          }
          c.by_total[K].push_back({lw, stat});
        }
      }
      cells.push_back(std::move(c));
    }
  }

  const double log_kf = log_factorial(k);
  double reject = 0.0;
  auto rec = [&](auto&& self, std::size_t ci, std::uint64_t left, double lw, double stat) -> void {
    if (ci + 1 == cells.size()) {
      for (const auto& [w, s] : cells[ci].by_total[left]) {
        if (tester.rejects(stat + s)) reject += std::exp(log_kf + lw + w);
      }
      return;
    }
    for (std::uint64_t K = 0; K <= left; ++K)
      for (const auto& [w, s] : cells[ci].by_total[K]) self(self, ci + 1, left - K, lw + w, stat + s);
  };
  if (!cells.empty()) rec(rec, 0, k, 0.0, 0.0);
  return std::min(1.0, reject);
}

double exact_fixed_k_error(const SemilinearTester& tester, const AlternativeModel& source, std::uint64_t k,
                           ErrorSide side) {
  const double r = exact_fixed_k_reject(tester, source, k);
  return side == ErrorSide::kType1 ? r : 1.0 - r;
}

TinyInstanceReport tiny_instance_report(const SemilinearTester& tester, const AdversaryModel& adv, std::uint64_t k) {
  const std::size_t nc = adv.classes.size();
  std::size_t n = 0;
  for (const auto& c : adv.classes) n += c.h;
  if (n > 12) throw Error(ErrorKind::kInstanceTooLarge, "coin enumeration is limited to 12 elements");
  check_size(n, k, 1e6);
  if (tester.columns().size() != nc) throw Error(ErrorKind::kMisaligned, "tester does not match adversary");

  // Window members: how many elements of each class sit at the lower point.
  struct Window {
    std::vector<std::size_t> lower;
    double log_weight;  // log prod C(h,m) q^m (1-q)^{h-m}
    double log_mass;
  };
  std::vector<Window> window;
  {
    std::vector<std::size_t> m(nc, 0);
    for (;;) {
      double dist = 0.0, mass = 0.0, lw = 0.0;
      for (std::size_t j = 0; j < nc; ++j) {
        const auto& c = adv.classes[j];
        const double lo = static_cast<double>(m[j]), hi = static_cast<double>(c.h - m[j]);
        dist += lo * (c.y - c.x1) + hi * (c.x2 - c.y);
        mass += lo * c.x1 + hi * c.x2;
        lw += std::log(choose(c.h, m[j])) + lo * std::log(c.q) + hi * std::log1p(-c.q);
      }
      if (dist >= adv.eps && dist <= adv.eps_hi) window.push_back({m, lw, std::log(mass)});
      std::size_t j = 0;
      while (j < nc && ++m[j] > adv.classes[j].h) m[j++] = 0;
      if (j == nc) break;
    }
  }
  if (window.empty()) throw Error(ErrorKind::kEmptyConditioning, "no coin realization has distance in [eps, eps_hi]");
  std::vector<double> wl;
  for (const auto& w : window) wl.push_back(w.log_weight);
  const double log_window = log_sum_exp(wl);

  // Per class and total K: multisets with their polynomial coefficients.
  struct ClassPattern {
    double log_arr;
    double log_fact;               // -sum log s!
    double log_ypow;               // sum s log y
    std::vector<double> log_poly;  // log coefficient of z^m in prod(q x1^s z + (1-q) x2^s)
    double stat;
  };
  std::vector<std::vector<std::vector<ClassPattern>>> patterns(nc);
  for (std::size_t j = 0; j < nc; ++j) {
    const auto& c = adv.classes[j];
    patterns[j].resize(k + 1);
    for (std::uint64_t K = 0; K <= k; ++K) {
      std::vector<Arrangement> arr;
      partitions(static_cast<std::uint32_t>(K), c.h, arr);
      for (const auto& a : arr) {
        ClassPattern pt{a.log_arrangements, 0.0, 0.0, std::vector<double>(c.h + 1, kNegInf), 0.0};
        pt.log_poly[0] = 0.0;
        std::size_t deg = 0;
        for (auto s : a.counts) {
          const double ds = static_cast<double>(s);
          pt.log_fact -= log_factorial(s);
          pt.log_ypow += ds * std::log(c.y);
          pt.stat += tester.coefficient(j, s);
          const double up = std::log(c.q) + (s == 0 ? 0.0 : ds * std::log(c.x1));
          const double down = std::log1p(-c.q) + (s == 0 ? 0.0 : ds * std::log(c.x2));
          std::vector<double> next(c.h + 1, kNegInf);
          for (std::size_t d = 0; d <= deg; ++d) {
            next[d] = log_add_exp(next[d], pt.log_poly[d] + down);
            next[d + 1] = log_add_exp(next[d + 1], pt.log_poly[d] + up);
          }
          pt.log_poly = std::move(next);
          ++deg;
        }
        patterns[j][K].push_back(std::move(pt));
      }
    }
  }

  struct Atom {
    double p, q, stat;
  };
  std::vector<Atom> atoms;
  const double log_kf = log_factorial(k);
  std::vector<const ClassPattern*> chosen(nc);
  auto rec = [&](auto&& self, std::size_t j, std::uint64_t left) -> void {
    if (j == nc) {
      if (left != 0) return;
      double log_arr = 0.0, log_fact = 0.0, log_ypow = 0.0, stat = 0.0;
      for (std::size_t i = 0; i < nc; ++i) {
        log_arr += chosen[i]->log_arr;
        log_fact += chosen[i]->log_fact;
        log_ypow += chosen[i]->log_ypow;
        stat += chosen[i]->stat;
      }
      std::vector<double> terms;
      terms.reserve(window.size());
      for (const auto& w : window) {
        double t = -static_cast<double>(k) * w.log_mass;
        for (std::size_t i = 0; i < nc; ++i) t += chosen[i]->log_poly[w.lower[i]];
        terms.push_back(t);
      }
      const double base = log_kf + log_arr + log_fact;
      const double p = std::exp(base + log_ypow);
      const double q = std::exp(base + log_sum_exp(terms) - log_window);
      atoms.push_back({p, q, stat});
      return;
    }
    const std::uint64_t lo = j + 1 == nc ? left : 0;
    for (std::uint64_t K = lo; K <= left; ++K) {
      for (const auto& pt : patterns[j][K]) {
        chosen[j] = &pt;
        self(self, j + 1, left - K);
      }
    }
  };
  rec(rec, 0, k);

  TinyInstanceReport rep;
  rep.window_mass = std::exp(log_window);
  for (const auto& a : atoms) {
    if (tester.rejects(a.stat)) rep.tester_type1 += a.p;
    else rep.tester_type2 += a.q;
  }

  // Randomized likelihood-ratio sweep: reject the highest q/p atoms first and
  // stop where the two errors cross.
  std::sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) { return a.q * b.p > b.q * a.p; });
  double type1 = 0.0, type2 = 0.0;
  for (const auto& a : atoms) type2 += a.q;
  rep.floor = type2;
  for (const auto& a : atoms) {
    if (type1 + a.p >= type2 - a.q) {
      const double f = (type2 - type1) / (a.p + a.q);
      rep.floor = type1 + f * a.p;
      break;
    }
    type1 += a.p;
    type2 -= a.q;
  }
  return rep;
}

double np_exact_error_tiny(const OptimalTesterModel& model, const AdversaryModel& adv, std::uint64_t k) {
  return tiny_instance_report(build_optimal_tester(model), adv, k).floor;
}

}  // namespace otest
