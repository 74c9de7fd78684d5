#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace mirrorquant {

/// Thrown when an argument lies on or outside the feasible set boundary
/// (e.g. |w| >= 1 for the tanh inverse, a nonpositive simplex entry).
class OutOfDomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Thrown for invalid or inconsistent configuration values.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Interior clamp margin applied before inverses and closed-form updates.
inline constexpr double kBoundaryDelta = 1e-12;

/// Clamp w to [-1 + delta, 1 - delta].
inline double clamp_interior(double w, double delta = kBoundaryDelta) {
  if (w > 1.0 - delta) return 1.0 - delta;
  if (w < -1.0 + delta) return -1.0 + delta;
  return w;
}

/// Clamp a simplex entry to [delta, 1].
inline double clamp_simplex_entry(double u, double delta = kBoundaryDelta) {
  if (u < delta) return delta;
  if (u > 1.0) return 1.0;
  return u;
}

inline void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw std::domain_error(std::string(what) + ": non-finite value");
}

inline void require_finite(const std::vector<double>& x, const char* what) {
  for (double v : x) require_finite(v, what);
}

/// Deterministic RNG. Distribution mappings are written out explicitly
/// because the std:: distributions are implementation-defined; this keeps
/// trajectories reproducible across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  /// Uniform on [a, b).
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  /// Standard normal via Box-Muller (two fresh uniforms per draw).
  double normal() {
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  double normal(double mu, double sigma) { return mu + sigma * normal(); }

  /// Uniform integer in [0, n).
  std::size_t uniform_index(std::size_t n) {
    return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
  }

  /// Fisher-Yates shuffle (std::shuffle is implementation-defined).
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = uniform_index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 eng_;
};

/// Fixed-format double for CSV output: '.' decimal separator, no locale,
/// 12 significant digits (byte-stable for identical inputs).
std::string fmt_double(double v);

}  // namespace mirrorquant
