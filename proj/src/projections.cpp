#include "mirrorquant/projections.hpp"

#include <algorithm>
#include <cmath>

namespace mirrorquant {

namespace {

std::vector<double> map_elementwise(const std::vector<double>& x, double beta,
                                    double (*fn)(double, double)) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = fn(x[i], beta);
  return out;
}

}  // namespace

const char* to_string(ProjectionKind kind) {
  switch (kind) {
    case ProjectionKind::Tanh: return "tanh";
    case ProjectionKind::ShiftedTanh: return "shifted_tanh";
    case ProjectionKind::Softmax: return "softmax";
    case ProjectionKind::Sign: return "sign";
  }
  return "?";
}

ProjectionKind projection_kind_from_string(const std::string& name) {
  if (name == "tanh") return ProjectionKind::Tanh;
  if (name == "shifted_tanh") return ProjectionKind::ShiftedTanh;
  if (name == "softmax") return ProjectionKind::Softmax;
  if (name == "sign") return ProjectionKind::Sign;
  throw ConfigError("unknown projection kind: " + name);
}

std::size_t QuantLevels::nearest_index(double w) const {
  std::size_t best = 0;
  double best_dist = std::abs(w - levels[0]);
  for (std::size_t i = 1; i < levels.size(); ++i) {
    double d = std::abs(w - levels[i]);
    if (d <= best_dist) {  // ties -> larger level
      best_dist = d;
      best = i;
    }
  }
  return best;
}

void QuantLevels::validate() const {
  if (levels.size() < 2) throw ConfigError("levels: need at least 2 quantization levels");
  for (std::size_t i = 1; i < levels.size(); ++i) {
    if (!(levels[i] > levels[i - 1]))
      throw ConfigError("levels: must be strictly ascending");
  }
  for (double q : levels) require_finite(q, "levels");
}

double tanh_project(double x_tilde, double beta) {
  require_finite(x_tilde, "tanh_project");
  return std::tanh(beta * x_tilde);
}

double tanh_inverse(double w, double beta) {
  if (!(std::abs(w) < 1.0))
    throw OutOfDomainError("tanh_inverse: |w| >= 1 (w = " + std::to_string(w) + ")");
  // (1 / (2 beta)) log((1 + w) / (1 - w)) == atanh(w) / beta
  return 0.5 * std::log((1.0 + w) / (1.0 - w)) / beta;
}

double tanh_jacobian(double x_tilde, double beta) {
  require_finite(x_tilde, "tanh_jacobian");
  double t = std::tanh(beta * x_tilde);
  return beta * (1.0 - t * t);
}

double shifted_tanh_project(double x_tilde, double beta) {
  require_finite(x_tilde, "shifted_tanh_project");
  return 0.5 * (std::tanh(beta * (x_tilde + 0.5)) + std::tanh(beta * (x_tilde - 0.5)));
}

double shifted_tanh_inverse(double w, double beta) {
  if (!(std::abs(w) < 1.0))
    throw OutOfDomainError("shifted_tanh_inverse: |w| >= 1 (w = " + std::to_string(w) + ")");
  if (w == 0.0) return 0.0;
  // Expand a bracket around the strictly increasing projection, then bisect.
  double lo = -1.0, hi = 1.0;
  while (shifted_tanh_project(lo, beta) > w) lo *= 2.0;
  while (shifted_tanh_project(hi, beta) < w) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    double r = shifted_tanh_project(mid, beta) - w;
    if (std::abs(r) < 1e-15 || hi - lo < 1e-15) return mid;
    if (r < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double shifted_tanh_jacobian(double x_tilde, double beta) {
  require_finite(x_tilde, "shifted_tanh_jacobian");
  double a = std::tanh(beta * (x_tilde + 0.5));
  double b = std::tanh(beta * (x_tilde - 0.5));
  return 0.5 * beta * ((1.0 - a * a) + (1.0 - b * b));
}

double sign_project(double x_tilde) { return x_tilde >= 0.0 ? 1.0 : -1.0; }

std::vector<double> tanh_project(const std::vector<double>& x, double beta) {
  return map_elementwise(x, beta, &tanh_project);
}
std::vector<double> tanh_inverse(const std::vector<double>& w, double beta) {
  return map_elementwise(w, beta, &tanh_inverse);
}
std::vector<double> tanh_jacobian(const std::vector<double>& x, double beta) {
  return map_elementwise(x, beta, &tanh_jacobian);
}
std::vector<double> shifted_tanh_project(const std::vector<double>& x, double beta) {
  return map_elementwise(x, beta, &shifted_tanh_project);
}
std::vector<double> shifted_tanh_jacobian(const std::vector<double>& x, double beta) {
  return map_elementwise(x, beta, &shifted_tanh_jacobian);
}
std::vector<double> sign_project(const std::vector<double>& x) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = sign_project(x[i]);
  return out;
}

std::vector<double> softmax_project(const std::vector<double>& u_tilde, double beta) {
  if (u_tilde.size() < 2) throw ConfigError("softmax_project: need d >= 2");
  require_finite(u_tilde, "softmax_project");
  double mx = beta * u_tilde[0];
  for (double v : u_tilde) mx = std::max(mx, beta * v);
  std::vector<double> out(u_tilde.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < u_tilde.size(); ++i) {
    out[i] = std::exp(beta * u_tilde[i] - mx);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

std::vector<double> softmax_inverse(const std::vector<double>& u, double beta) {
  std::vector<double> out(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!(u[i] > 0.0))
      throw OutOfDomainError("softmax_inverse: entry " + std::to_string(i) + " <= 0");
    out[i] = std::log(u[i]) / beta;
  }
  return out;
}

std::vector<double> softmax_diag_jacobian(const std::vector<double>& u_tilde, double beta) {
  std::vector<double> u = softmax_project(u_tilde, beta);
  for (double& v : u) v = beta * v * (1.0 - v);
  return u;
}

double Projection::project_scalar(double x_tilde) const {
  switch (kind) {
    case ProjectionKind::Tanh: return tanh_project(x_tilde, beta);
    case ProjectionKind::ShiftedTanh: return shifted_tanh_project(x_tilde, beta);
    case ProjectionKind::Sign: return sign_project(x_tilde);
    case ProjectionKind::Softmax:
      throw ConfigError("softmax has no scalar projection; use softmax_project");
  }
  return 0.0;
}

double Projection::inverse_scalar(double w) const {
  switch (kind) {
    case ProjectionKind::Tanh: return tanh_inverse(w, beta);
    case ProjectionKind::ShiftedTanh: return shifted_tanh_inverse(w, beta);
    default:
      throw ConfigError("no scalar inverse for this projection kind");
  }
}

double Projection::jacobian_scalar(double x_tilde) const {
  switch (kind) {
    case ProjectionKind::Tanh: return tanh_jacobian(x_tilde, beta);
    case ProjectionKind::ShiftedTanh: return shifted_tanh_jacobian(x_tilde, beta);
    default:
      throw ConfigError("no scalar jacobian for this projection kind");
  }
}

}  // namespace mirrorquant
