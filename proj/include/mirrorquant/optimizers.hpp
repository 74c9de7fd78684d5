#pragma once

#include <cstdint>
#include <vector>

#include "mirrorquant/projections.hpp"

namespace mirrorquant {

/// Annealing schedule: beta_k = min(cap, beta0 * scale^floor(k / interval)).
struct BetaSchedule {
  double beta0 = 1.0;
  double scale = 1.02;
  long interval = 200;
  double cap = 1e4;

  void validate() const;
};

double anneal_beta(const BetaSchedule& schedule, long k);

/// Step-size schedule: eta_k = eta0 * lr_scale^floor(k / lr_interval).
struct StepSizeSchedule {
  double eta0 = 1e-3;
  double lr_scale = 0.3;
  long lr_interval = 30000;

  void validate() const;
};

double eta_at(const StepSizeSchedule& schedule, long k);

/// Adam moment state; call adam_precondition to consume a gradient.
struct AdamState {
  std::vector<double> m, v;
  long t = 0;
};

struct AdamSettings {
  bool enabled = true;
  double b1 = 0.9;
  double b2 = 0.999;
  double eps_hat = 1e-8;
  /// false: precondition the raw loss gradient before the dual step (default);
  /// true: precondition the dual-space direction (differs only when the step
  /// transforms the gradient first, i.e. for the projected-gradient baseline).
  bool on_dual = false;
};

/// Standard bias-corrected Adam preconditioning. Returns g_hat = m_hat / (sqrt(v_hat) + eps).
std::vector<double> adam_precondition(const std::vector<double>& g, AdamState& state,
                                      double b1, double b2, double eps_hat);

/// Closed-form mirror step for the tanh projection:
///   w' = (A e^{-2 beta eta g} - 1) / (A e^{-2 beta eta g} + 1),  A = (1+w)/(1-w),
/// which equals tanh(atanh(w) - beta eta g). Input is clamped to the interior first.
double md_tanh_step(double w, double g, double eta, double beta);
std::vector<double> md_tanh_step(const std::vector<double>& w, const std::vector<double>& g,
                                 double eta, double beta);

/// Exponentiated-gradient step: u'_l = u_l e^{-beta eta g_l} / sum_m u_m e^{-beta eta g_m},
/// computed with max-subtraction and renormalized to sum exactly 1.
/// Throws OutOfDomainError if u has a nonpositive entry.
std::vector<double> md_softmax_step(const std::vector<double>& u, const std::vector<double>& g,
                                    double eta, double beta);

/// Dual magnitude clip for stable steps; saturation only needs |dual| >= gamma,
/// so bounding the drift does not affect the reachable primal values.
inline constexpr double kDualClip = 20.0;

/// Optimizer state shared by the dual-space (stable) variants and baselines.
/// For Softmax, primal and dual are row-major with projection.label_count
/// entries per parameter; otherwise they are plain parameter vectors.
struct OptimizerState {
  Projection projection;
  std::vector<double> primal;
  std::vector<double> dual;  // empty for closed-form / primal-only variants
  double beta = 1.0;
  long step = 0;
  AdamState adam;

  /// Recompute primal = P_beta(dual), allocating primal if needed
  /// (used after beta changes; a no-op for primal-only variants).
  void project();
};

/// Stable mirror step: dual <- clip(dual - eta g, +-kDualClip); primal <- P_beta(dual).
/// g must be the loss gradient at the current primal point.
void stable_md_step(OptimizerState& state, const std::vector<double>& g, double eta);

/// Gradient descent through the projection (true chain rule):
/// dual <- dual - eta (g .* diag-Jacobian of P_beta at dual); primal <- P_beta(dual).
void gd_proj_step(OptimizerState& state, const std::vector<double>& g, double eta);

/// BinaryConnect / straight-through baseline (projection must be Sign):
/// dual <- clip(dual - eta g, -1, 1); primal <- sign(dual).
void bc_ste_step(OptimizerState& state, const std::vector<double>& g, double eta);

/// Projected gradient step onto the box [lo, hi].
std::vector<double> pgd_step(const std::vector<double>& x, const std::vector<double>& g,
                             double eta, double lo, double hi);

/// Infimum dual threshold gamma = atanh(1 - eps) / B: any |x| > gamma gives
/// 1 - |tanh(B x)| < eps. Throws std::domain_error for eps outside (0, 1).
double epsilon_gamma(double B, double eps);

enum class Space { W, U };

/// Round a state to exact levels. W-space: nearest level per parameter.
/// U-space: per-parameter argmax over the simplex row (first max on ties).
/// The result lies in Q^m exactly.
std::vector<double> finalize_quantize(const OptimizerState& state, const QuantLevels& levels,
                                      Space space);
std::vector<double> finalize_quantize_w(const std::vector<double>& w, const QuantLevels& levels);
std::vector<double> finalize_quantize_u(const std::vector<double>& u, const QuantLevels& levels);

}  // namespace mirrorquant
