#pragma once

#include <vector>

#include "mirrorquant/projections.hpp"

namespace mirrorquant {

enum class MirrorMapKind { TanhEntropy, NegativeEntropy, Quadratic, Numeric };

const char* to_string(MirrorMapKind kind);
MirrorMapKind mirror_map_kind_from_string(const std::string& name);

/// A mirror map Phi: strictly convex, differentiable on the constraint
/// interior, with a gradient that covers the dual space and diverges at the
/// boundary. The annealing parameter enters only as a scale:
/// Phi_beta = Phi / beta, so every evaluation works from the beta = 1 map.
///
/// Kinds:
///  - TanhEntropy:      Phi(w) = 1/2 [(1+w) log(1+w) + (1-w) log(1-w)] on (-1,1)^n
///  - NegativeEntropy:  Phi(u) = sum_l (u_l log u_l - u_l) on the positive orthant
///  - Quadratic:        Phi(x) = 1/2 ||x||^2 (Bregman divergence = squared distance)
///  - Numeric:          Phi(x) = sum_i integral_0^{x_i} Pinv(y) dy for a scalar
///                      strictly increasing projection P (integration constant
///                      dropped; base point P(0) = 0 for the shipped kinds)
class MirrorMap {
 public:
  static MirrorMap tanh_entropy();
  static MirrorMap negative_entropy();
  static MirrorMap quadratic();
  /// Numeric map derived from a scalar projection (Tanh or ShiftedTanh).
  static MirrorMap numeric(ProjectionKind projection);

  static MirrorMap from_string(const std::string& name);

  MirrorMapKind kind() const { return kind_; }
  ProjectionKind projection() const { return projection_; }
  const char* name() const;

  /// Phi_beta(x). Throws OutOfDomainError when x touches the boundary.
  double value(const std::vector<double>& x, double beta) const;
  double value(double x, double beta) const;

  /// grad Phi_beta(x) = Pinv(x) / beta, the gradient of the scaled map. For
  /// the tanh and softmax families this equals the beta-sharpened projection
  /// preimage Pinv_beta(x); for the shifted staircase (whose level knees do
  /// not scale with beta) the two coincide only at beta = 1.
  std::vector<double> grad(const std::vector<double>& x, double beta) const;
  double grad(double x, double beta) const;

  /// D(p, q) = Phi(p) - Phi(q) - <grad Phi(q), p - q>; nonnegative, with
  /// negative rounding noise above -1e-12 clamped to zero.
  double bregman(const std::vector<double>& p, const std::vector<double>& q,
                 double beta) const;

 private:
  MirrorMap(MirrorMapKind kind, ProjectionKind projection)
      : kind_(kind), projection_(projection) {}

  double value1_base(double x) const;  // beta = 1, scalar
  double grad1_base(double x) const;

  MirrorMapKind kind_;
  ProjectionKind projection_;  // underlying projection for Numeric / gradient delegation
};

/// 1/2 ||p - q||^2 — the Bregman divergence of the quadratic map.
double quadratic_bregman(const std::vector<double>& p, const std::vector<double>& q);

}  // namespace mirrorquant
