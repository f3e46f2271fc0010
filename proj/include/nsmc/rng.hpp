#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

namespace nsmc {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of run `index` under `master`. Independent of which worker runs it.
inline std::uint64_t run_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(master + index);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(uniform() * static_cast<double>(n));
  }

  /// Index drawn with probability proportional to `w`; -1 if all weights are 0.
  int weighted(std::span<const double> w) {
    double total = 0.0;
    for (double x : w) total += x;
    if (!(total > 0.0)) return -1;
    double u = uniform() * total;
    int last = -1;
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (w[i] <= 0.0) continue;
      last = static_cast<int>(i);
      if (u < w[i]) return last;
      u -= w[i];
    }
    return last;
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace nsmc
