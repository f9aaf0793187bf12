#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace omps {

// Deterministic RNG used throughout.  Only the raw mt19937_64 stream is
// consumed; all mappings to doubles/integers are hand-rolled so output is
// identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Exp(1), strictly positive.
  double exponential() { return -std::log1p(-uniform()); }

  bool coin() { return (gen_() >> 63) != 0; }

  // Index in [0, n) proportional to non-negative weights (need not sum to 1).
  int categorical(const double* w, int n) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += w[i];
    if (!(total > 0.0)) throw std::invalid_argument("categorical: zero total weight");
    double u = uniform() * total;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      acc += w[i];
      if (u < acc) return i;
    }
    return n - 1;
  }

  int uniform_int(int n) { return static_cast<int>(gen_() % static_cast<std::uint64_t>(n)); }

  // Derive an independent child seed for a named sub-stream.
  std::uint64_t derive(std::uint64_t stream) {
    std::uint64_t x = gen_() ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
    x ^= x >> 30; x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27; x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace omps
