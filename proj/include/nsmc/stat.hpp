#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>

namespace nsmc {

// ---- hypothesis testing ------------------------------------------------------

/// H0: p >= theta + delta0 against H1: p <= theta - delta1.
struct SprtParams {
  double theta = 0.5;
  double delta0 = 0.01;
  double delta1 = 0.01;
  double alpha = 0.05;
  double beta = 0.05;

  double p0() const { return theta + delta0; }
  double p1() const { return theta - delta1; }

  void validate() const {
    if (!(alpha > 0.0 && alpha <= 0.5)) throw std::invalid_argument("alpha must lie in (0, 0.5]");
    if (!(beta > 0.0 && beta <= 0.5)) throw std::invalid_argument("beta must lie in (0, 0.5]");
    if (!(delta0 > 0.0) || !(delta1 > 0.0))
      throw std::invalid_argument("indifference half-widths must be positive");
    if (!(theta >= 0.0 && theta <= 1.0)) throw std::invalid_argument("threshold must lie in [0, 1]");
    if (p0() >= 1.0 || p1() <= 0.0)
      throw std::invalid_argument("indifference region around " + std::to_string(theta) +
                                  " leaves (0, 1); choose a smaller delta");
  }
};

enum class SprtDecision { Continue, AcceptH0, AcceptH1 };

/// Wald's sequential probability ratio test over Bernoulli outcomes.
class Sprt {
 public:
  explicit Sprt(const SprtParams& p) : params_(p) {
    p.validate();
    step_success_ = std::log(p.p1() / p.p0());
    step_failure_ = std::log((1.0 - p.p1()) / (1.0 - p.p0()));
    upper_ = std::log((1.0 - p.beta) / p.alpha);
    lower_ = std::log(p.beta / (1.0 - p.alpha));
  }

  SprtDecision feed(bool success) {
    if (decision_ != SprtDecision::Continue) return decision_;
    ++runs_;
    if (success) ++successes_;
    llr_ = static_cast<double>(successes_) * step_success_ +
           static_cast<double>(runs_ - successes_) * step_failure_;
    if (llr_ >= upper_) decision_ = SprtDecision::AcceptH1;
    else if (llr_ <= lower_) decision_ = SprtDecision::AcceptH0;
    return decision_;
  }

  SprtDecision decision() const { return decision_; }
  std::int64_t runs() const { return runs_; }
  std::int64_t successes() const { return successes_; }
  double llr() const { return llr_; }
  double upper() const { return upper_; }
  double lower() const { return lower_; }
  const SprtParams& params() const { return params_; }

 private:
  SprtParams params_;
  double step_success_ = 0.0;
  double step_failure_ = 0.0;
  double upper_ = 0.0;
  double lower_ = 0.0;
  std::int64_t runs_ = 0;
  std::int64_t successes_ = 0;
  double llr_ = 0.0;
  SprtDecision decision_ = SprtDecision::Continue;
};

// ---- estimation --------------------------------------------------------------

/// Runs needed for P(|p_hat - p| > eps) <= alpha by the two-sided Hoeffding bound.
inline std::int64_t required_runs(double eps, double alpha) {
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("epsilon must lie in (0, 1)");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
  const double n = std::ceil(std::log(2.0 / alpha) / (2.0 * eps * eps));
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(n));
}

struct CpInterval {
  double lo = 0.0;
  double hi = 1.0;
};

namespace detail {

inline double log_binom_pmf(std::int64_t j, std::int64_t n, double p) {
  const double nj = static_cast<double>(n), jj = static_cast<double>(j);
  return std::lgamma(nj + 1) - std::lgamma(jj + 1) - std::lgamma(nj - jj + 1) + jj * std::log(p) +
         (nj - jj) * std::log1p(-p);
}

// Sum of pmf(j) for j from `from` stepping by `dir` away from the mode, until
// terms stop contributing. Terms decrease monotonically in that direction.
inline double tail_from(std::int64_t from, int dir, std::int64_t n, double p) {
  double term = std::exp(log_binom_pmf(from, n, p));
  double sum = 0.0;
  const double q = 1.0 - p;
  for (std::int64_t j = from; j >= 0 && j <= n; j += dir) {
    sum += term;
    if (term < sum * 1e-18 || term == 0.0) break;
    // pmf(j+1)/pmf(j) = (n-j)/(j+1) * p/q
    if (dir > 0) term *= static_cast<double>(n - j) / static_cast<double>(j + 1) * (p / q);
    else term *= static_cast<double>(j) / static_cast<double>(n - j + 1) * (q / p);
  }
  return sum;
}

}  // namespace detail

/// P(X <= k) for X ~ Binomial(n, p), summing exact terms from the far tail.
inline double binomial_cdf(std::int64_t k, std::int64_t n, double p) {
  if (k < 0) return 0.0;
  if (k >= n) return 1.0;
  if (p <= 0.0) return 1.0;
  if (p >= 1.0) return 0.0;
  const double mode = std::floor(static_cast<double>(n + 1) * p);
  if (static_cast<double>(k) < mode) return std::min(1.0, detail::tail_from(k, -1, n, p));
  return std::max(0.0, 1.0 - detail::tail_from(k + 1, +1, n, p));
}

/// Exact (Clopper-Pearson) two-sided interval with coverage 1 - alpha.
inline CpInterval clopper_pearson(std::int64_t k, std::int64_t n, double alpha) {
  if (n < 1) throw std::invalid_argument("clopper_pearson needs n >= 1");
  if (k < 0 || k > n) throw std::invalid_argument("clopper_pearson needs 0 <= k <= n");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
  const double half = alpha / 2.0;
  auto bisect = [](auto&& too_low) {
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 200 && hi - lo > 1e-12; ++i) {
      const double mid = 0.5 * (lo + hi);
      (too_low(mid) ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  };
  CpInterval ci;
  // lower: P(X >= k | p) = alpha/2, increasing in p
  if (k > 0) ci.lo = bisect([&](double p) { return 1.0 - binomial_cdf(k - 1, n, p) < half; });
  // upper: P(X <= k | p) = alpha/2, decreasing in p
  if (k < n) ci.hi = bisect([&](double p) { return binomial_cdf(k, n, p) > half; });
  return ci;
}

struct Estimate {
  double p_hat = 0.0;
  double epsilon = 0.0;
  CpInterval ci;
};

inline Estimate estimate(std::int64_t successes, std::int64_t runs, double eps, double alpha) {
  if (runs < 1) throw std::invalid_argument("estimate needs at least one run");
  return {static_cast<double>(successes) / static_cast<double>(runs), eps,
          clopper_pearson(successes, runs, alpha)};
}

// ---- comparison ----------------------------------------------------------------

enum class CompareDecision { Continue, FirstGreater, SecondGreater, Indistinguishable };

/// Paired comparison of two probabilities: ties are discarded and an SPRT at
/// theta = 0.5 runs on the discordant pairs, where a success is a pair in which
/// only the first experiment succeeded.
class PairedComparison {
 public:
  PairedComparison(double alpha, double beta, double delta, std::int64_t max_pairs)
      : sprt_(SprtParams{0.5, delta, delta, alpha, beta}), max_pairs_(max_pairs) {}

  CompareDecision feed(bool first, bool second) {
    if (decision_ != CompareDecision::Continue) return decision_;
    ++pairs_;
    if (first != second) {
      switch (sprt_.feed(first)) {
        case SprtDecision::AcceptH0: decision_ = CompareDecision::FirstGreater; break;
        case SprtDecision::AcceptH1: decision_ = CompareDecision::SecondGreater; break;
        case SprtDecision::Continue: break;
      }
    }
    if (decision_ == CompareDecision::Continue && pairs_ >= max_pairs_)
      decision_ = CompareDecision::Indistinguishable;
    return decision_;
  }

  CompareDecision decision() const { return decision_; }
  std::int64_t pairs() const { return pairs_; }
  std::int64_t discordant() const { return sprt_.runs(); }
  std::int64_t first_wins() const { return sprt_.successes(); }

 private:
  Sprt sprt_;
  std::int64_t max_pairs_;
  std::int64_t pairs_ = 0;
  CompareDecision decision_ = CompareDecision::Continue;
};

// ---- moments -------------------------------------------------------------------

struct Moments {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for a single value
};

inline Moments moments(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("moments of an empty sample");
  double sum = 0.0;
  for (double x : xs) sum += x;
  Moments m;
  m.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    m.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return m;
}

}  // namespace nsmc
