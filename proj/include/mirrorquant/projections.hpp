#pragma once

#include <cstddef>
#include <vector>

#include "mirrorquant/common.hpp"

namespace mirrorquant {

enum class ProjectionKind { Tanh, ShiftedTanh, Softmax, Sign };

const char* to_string(ProjectionKind kind);
ProjectionKind projection_kind_from_string(const std::string& name);

/// Admissible quantization levels, sorted ascending.
struct QuantLevels {
  std::vector<double> levels;

  static QuantLevels binary() { return {{-1.0, 1.0}}; }
  static QuantLevels ternary() { return {{-1.0, 0.0, 1.0}}; }

  std::size_t size() const { return levels.size(); }
  double lo() const { return levels.front(); }
  double hi() const { return levels.back(); }

  /// Index of the level closest to w; ties go to the larger level
  /// (consistent with sign(0) = +1).
  std::size_t nearest_index(double w) const;
  double nearest(double w) const { return levels[nearest_index(w)]; }

  void validate() const;  // throws ConfigError unless >= 2 strictly ascending levels
};

// --- scalar projections -----------------------------------------------------

/// tanh(beta * x).
double tanh_project(double x_tilde, double beta);

/// Inverse of tanh_project: (1 / (2 beta)) * log((1 + w) / (1 - w)).
/// Throws OutOfDomainError for |w| >= 1.
double tanh_inverse(double w, double beta);

/// Derivative of tanh_project: beta * (1 - tanh^2(beta x)).
double tanh_jacobian(double x_tilde, double beta);

/// Ternary soft staircase: (tanh(beta (x + 1/2)) + tanh(beta (x - 1/2))) / 2.
double shifted_tanh_project(double x_tilde, double beta);

/// Numeric inverse of shifted_tanh_project (bisection; residual < 1e-12).
/// Throws OutOfDomainError for |w| >= 1.
double shifted_tanh_inverse(double w, double beta);

/// Derivative of shifted_tanh_project.
double shifted_tanh_jacobian(double x_tilde, double beta);

/// +1 for x >= 0, -1 otherwise.
double sign_project(double x_tilde);

// --- vector projections -----------------------------------------------------

std::vector<double> tanh_project(const std::vector<double>& x_tilde, double beta);
std::vector<double> tanh_inverse(const std::vector<double>& w, double beta);
std::vector<double> tanh_jacobian(const std::vector<double>& x_tilde, double beta);
std::vector<double> shifted_tanh_project(const std::vector<double>& x_tilde, double beta);
std::vector<double> shifted_tanh_jacobian(const std::vector<double>& x_tilde, double beta);
std::vector<double> sign_project(const std::vector<double>& x_tilde);

/// softmax(beta * u_tilde), computed with max-subtraction; sums to 1 within 1e-12.
std::vector<double> softmax_project(const std::vector<double>& u_tilde, double beta);

/// Canonical inverse: v_l = (1/beta) log(u_l), so that sum exp(beta v) = 1.
/// Throws OutOfDomainError if any entry is <= 0.
std::vector<double> softmax_inverse(const std::vector<double>& u, double beta);

/// Diagonal of the softmax Jacobian: beta * u_l * (1 - u_l) at u = softmax(beta u_tilde).
std::vector<double> softmax_diag_jacobian(const std::vector<double>& u_tilde, double beta);

/// A projection family bound to concrete sharpness and row width, used by the
/// optimizer state and the numeric mirror map.
struct Projection {
  ProjectionKind kind = ProjectionKind::Tanh;
  double beta = 1.0;      // annealing sharpness, >= 1
  int label_count = 2;    // softmax row width d (ignored for scalar kinds)

  double project_scalar(double x_tilde) const;
  double inverse_scalar(double w) const;
  double jacobian_scalar(double x_tilde) const;
};

}  // namespace mirrorquant
