#include "mirrorquant/mirror_map.hpp"

#include <cmath>
#include <functional>

namespace mirrorquant {

namespace {

// Adaptive Simpson quadrature, absolute error target 1e-10, at most 2^16
// subdivisions (depth 16). The integrands here (projection inverses) are
// smooth and monotone on compact subintervals, so this converges quickly.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double fa, double fm, double fb, double whole, double tol,
                        int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b) {
  if (a == b) return 0.0;
  double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson(f, a, b, fa, fm, fb, whole, 1e-10, 16);
}

void require_open_interval(double x, const char* what) {
  if (!(std::abs(x) < 1.0))
    throw OutOfDomainError(std::string(what) + ": |x| >= 1 (x = " + std::to_string(x) + ")");
}

void require_positive(double x, const char* what) {
  if (!(x > 0.0))
    throw OutOfDomainError(std::string(what) + ": entry <= 0 (x = " + std::to_string(x) + ")");
}

}  // namespace

const char* to_string(MirrorMapKind kind) {
  switch (kind) {
    case MirrorMapKind::TanhEntropy: return "tanh_entropy";
    case MirrorMapKind::NegativeEntropy: return "negative_entropy";
    case MirrorMapKind::Quadratic: return "quadratic";
    case MirrorMapKind::Numeric: return "numeric";
  }
  return "?";
}

MirrorMapKind mirror_map_kind_from_string(const std::string& name) {
  if (name == "tanh_entropy") return MirrorMapKind::TanhEntropy;
  if (name == "negative_entropy") return MirrorMapKind::NegativeEntropy;
  if (name == "quadratic") return MirrorMapKind::Quadratic;
  if (name == "numeric" || name == "numeric_shifted_tanh") return MirrorMapKind::Numeric;
  throw ConfigError("unknown mirror map kind: " + name);
}

MirrorMap MirrorMap::tanh_entropy() {
  return MirrorMap(MirrorMapKind::TanhEntropy, ProjectionKind::Tanh);
}
MirrorMap MirrorMap::negative_entropy() {
  return MirrorMap(MirrorMapKind::NegativeEntropy, ProjectionKind::Softmax);
}
MirrorMap MirrorMap::quadratic() {
  return MirrorMap(MirrorMapKind::Quadratic, ProjectionKind::Tanh);
}
MirrorMap MirrorMap::numeric(ProjectionKind projection) {
  if (projection != ProjectionKind::Tanh && projection != ProjectionKind::ShiftedTanh)
    throw ConfigError("numeric mirror map needs a scalar invertible projection");
  return MirrorMap(MirrorMapKind::Numeric, projection);
}

MirrorMap MirrorMap::from_string(const std::string& name) {
  switch (mirror_map_kind_from_string(name)) {
    case MirrorMapKind::TanhEntropy: return tanh_entropy();
    case MirrorMapKind::NegativeEntropy: return negative_entropy();
    case MirrorMapKind::Quadratic: return quadratic();
    case MirrorMapKind::Numeric: return numeric(ProjectionKind::ShiftedTanh);
  }
  throw ConfigError("unknown mirror map kind: " + name);
}

const char* MirrorMap::name() const { return to_string(kind_); }

double MirrorMap::value1_base(double x) const {
  switch (kind_) {
    case MirrorMapKind::TanhEntropy:
      require_open_interval(x, "mirror_value(tanh_entropy)");
      return 0.5 * ((1.0 + x) * std::log1p(x) + (1.0 - x) * std::log1p(-x));
    case MirrorMapKind::NegativeEntropy:
      require_positive(x, "mirror_value(negative_entropy)");
      return x * std::log(x) - x;
    case MirrorMapKind::Quadratic:
      return 0.5 * x * x;
    case MirrorMapKind::Numeric: {
      require_open_interval(x, "mirror_value(numeric)");
      Projection p{projection_, 1.0, 2};
      return integrate([&p](double y) { return p.inverse_scalar(y); }, 0.0, x);
    }
  }
  return 0.0;
}

double MirrorMap::grad1_base(double x) const {
  switch (kind_) {
    case MirrorMapKind::TanhEntropy:
      return tanh_inverse(x, 1.0);
    case MirrorMapKind::NegativeEntropy:
      require_positive(x, "mirror_grad(negative_entropy)");
      return std::log(x);
    case MirrorMapKind::Quadratic:
      return x;
    case MirrorMapKind::Numeric: {
      Projection p{projection_, 1.0, 2};
      return p.inverse_scalar(x);
    }
  }
  return 0.0;
}

double MirrorMap::value(double x, double beta) const { return value1_base(x) / beta; }

double MirrorMap::value(const std::vector<double>& x, double beta) const {
  double sum = 0.0;
  for (double v : x) sum += value1_base(v);
  return sum / beta;
}

double MirrorMap::grad(double x, double beta) const { return grad1_base(x) / beta; }

std::vector<double> MirrorMap::grad(const std::vector<double>& x, double beta) const {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = grad1_base(x[i]) / beta;
  return out;
}

double MirrorMap::bregman(const std::vector<double>& p, const std::vector<double>& q,
                          double beta) const {
  if (p.size() != q.size()) throw ConfigError("bregman: p and q sizes differ");
  double val = value(p, beta) - value(q, beta);
  std::vector<double> gq = grad(q, beta);
  for (std::size_t i = 0; i < p.size(); ++i) val -= gq[i] * (p[i] - q[i]);
  if (val < 0.0 && val > -1e-12) return 0.0;  // rounding noise only
  return val;
}

double quadratic_bregman(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw ConfigError("quadratic_bregman: p and q sizes differ");
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    double d = p[i] - q[i];
    sum += d * d;
  }
  return 0.5 * sum;
}

}  // namespace mirrorquant
