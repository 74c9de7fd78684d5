#include "mirrorquant/optimizers.hpp"

#include <algorithm>
#include <cmath>

namespace mirrorquant {

namespace {

double clip(double x, double lo, double hi) { return std::min(hi, std::max(lo, x)); }

}  // namespace

void BetaSchedule::validate() const {
  if (!(beta0 >= 1.0)) throw ConfigError("beta.beta0: must be >= 1");
  if (!(scale >= 1.0)) throw ConfigError("beta.scale: must be >= 1");
  if (interval <= 0) throw ConfigError("beta.interval: must be positive");
  if (!(cap >= beta0)) throw ConfigError("beta.cap: must be >= beta0");
}

double anneal_beta(const BetaSchedule& schedule, long k) {
  double b = schedule.beta0 * std::pow(schedule.scale, static_cast<double>(k / schedule.interval));
  return std::min(schedule.cap, b);
}

void StepSizeSchedule::validate() const {
  if (!(eta0 > 0.0)) throw ConfigError("eta.eta0: must be > 0");
  if (!(lr_scale > 0.0 && lr_scale <= 1.0)) throw ConfigError("eta.lr_scale: must be in (0, 1]");
  if (lr_interval <= 0) throw ConfigError("eta.lr_interval: must be positive");
}

double eta_at(const StepSizeSchedule& schedule, long k) {
  return schedule.eta0 * std::pow(schedule.lr_scale, static_cast<double>(k / schedule.lr_interval));
}

std::vector<double> adam_precondition(const std::vector<double>& g, AdamState& state,
                                      double b1, double b2, double eps_hat) {
  if (state.m.empty()) {
    state.m.assign(g.size(), 0.0);
    state.v.assign(g.size(), 0.0);
  }
  state.t += 1;
  double corr1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  double corr2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  std::vector<double> out(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    state.m[i] = b1 * state.m[i] + (1.0 - b1) * g[i];
    state.v[i] = b2 * state.v[i] + (1.0 - b2) * g[i] * g[i];
    double m_hat = state.m[i] / corr1;
    double v_hat = state.v[i] / corr2;
    out[i] = m_hat / (std::sqrt(v_hat) + eps_hat);
  }
  return out;
}

double md_tanh_step(double w, double g, double eta, double beta) {
  require_finite(g, "md_tanh_step");
  w = clamp_interior(w);
  double A = (1.0 + w) / (1.0 - w);
  double t = A * std::exp(-2.0 * beta * eta * g);
  if (std::isinf(t)) return 1.0 - kBoundaryDelta;
  double next = (t - 1.0) / (t + 1.0);
  return clamp_interior(next);
}

std::vector<double> md_tanh_step(const std::vector<double>& w, const std::vector<double>& g,
                                 double eta, double beta) {
  if (w.size() != g.size()) throw ConfigError("md_tanh_step: w and g sizes differ");
  std::vector<double> out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) out[i] = md_tanh_step(w[i], g[i], eta, beta);
  return out;
}

std::vector<double> md_softmax_step(const std::vector<double>& u, const std::vector<double>& g,
                                    double eta, double beta) {
  if (u.size() != g.size()) throw ConfigError("md_softmax_step: u and g sizes differ");
  require_finite(g, "md_softmax_step");
  // log u_l - beta eta g_l, max-subtracted, exponentiated, renormalized.
  std::vector<double> logits(u.size());
  double mx = -HUGE_VAL;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!(u[i] > 0.0))
      throw OutOfDomainError("md_softmax_step: boundary simplex point (entry <= 0)");
    logits[i] = std::log(clamp_simplex_entry(u[i])) - beta * eta * g[i];
    mx = std::max(mx, logits[i]);
  }
  std::vector<double> out(u.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

void OptimizerState::project() {
  if (!dual.empty() && primal.size() != dual.size()) primal.resize(dual.size());
  switch (projection.kind) {
    case ProjectionKind::Tanh:
      for (std::size_t i = 0; i < dual.size(); ++i) primal[i] = tanh_project(dual[i], beta);
      break;
    case ProjectionKind::ShiftedTanh:
      for (std::size_t i = 0; i < dual.size(); ++i)
        primal[i] = shifted_tanh_project(dual[i], beta);
      break;
    case ProjectionKind::Sign:
      for (std::size_t i = 0; i < dual.size(); ++i) primal[i] = sign_project(dual[i]);
      break;
    case ProjectionKind::Softmax: {
      std::size_t d = static_cast<std::size_t>(projection.label_count);
      std::vector<double> row(d);
      for (std::size_t j = 0; j + d <= dual.size(); j += d) {
        row.assign(dual.begin() + j, dual.begin() + j + d);
        std::vector<double> p = softmax_project(row, beta);
        std::copy(p.begin(), p.end(), primal.begin() + j);
      }
      break;
    }
  }
}

void stable_md_step(OptimizerState& state, const std::vector<double>& g, double eta) {
  if (g.size() != state.dual.size()) throw ConfigError("stable_md_step: dual/gradient size mismatch");
  require_finite(g, "stable_md_step");
  for (std::size_t i = 0; i < state.dual.size(); ++i)
    state.dual[i] = clip(state.dual[i] - eta * g[i], -kDualClip, kDualClip);
  state.project();
  state.step += 1;
}

void gd_proj_step(OptimizerState& state, const std::vector<double>& g, double eta) {
  if (g.size() != state.dual.size()) throw ConfigError("gd_proj_step: dual/gradient size mismatch");
  require_finite(g, "gd_proj_step");
  switch (state.projection.kind) {
    case ProjectionKind::Tanh:
      for (std::size_t i = 0; i < state.dual.size(); ++i)
        state.dual[i] = clip(state.dual[i] - eta * g[i] * tanh_jacobian(state.dual[i], state.beta),
                             -kDualClip, kDualClip);
      break;
    case ProjectionKind::ShiftedTanh:
      for (std::size_t i = 0; i < state.dual.size(); ++i)
        state.dual[i] =
            clip(state.dual[i] - eta * g[i] * shifted_tanh_jacobian(state.dual[i], state.beta),
                 -kDualClip, kDualClip);
      break;
    case ProjectionKind::Softmax: {
      std::size_t d = static_cast<std::size_t>(state.projection.label_count);
      std::vector<double> row(d);
      for (std::size_t j = 0; j + d <= state.dual.size(); j += d) {
        row.assign(state.dual.begin() + j, state.dual.begin() + j + d);
        std::vector<double> jac = softmax_diag_jacobian(row, state.beta);
        for (std::size_t l = 0; l < d; ++l)
          state.dual[j + l] = clip(state.dual[j + l] - eta * g[j + l] * jac[l],
                                   -kDualClip, kDualClip);
      }
      break;
    }
    case ProjectionKind::Sign:
      throw ConfigError("gd_proj_step: sign projection is not differentiable");
  }
  state.project();
  state.step += 1;
}

void bc_ste_step(OptimizerState& state, const std::vector<double>& g, double eta) {
  if (state.projection.kind != ProjectionKind::Sign)
    throw ConfigError("bc_ste_step: projection must be sign");
  if (g.size() != state.dual.size()) throw ConfigError("bc_ste_step: dual/gradient size mismatch");
  require_finite(g, "bc_ste_step");
  for (std::size_t i = 0; i < state.dual.size(); ++i) {
    state.dual[i] = clip(state.dual[i] - eta * g[i], -1.0, 1.0);
    state.primal[i] = sign_project(state.dual[i]);
  }
  state.step += 1;
}

std::vector<double> pgd_step(const std::vector<double>& x, const std::vector<double>& g,
                             double eta, double lo, double hi) {
  if (!(lo < hi)) throw ConfigError("pgd_step: need lo < hi");
  if (x.size() != g.size()) throw ConfigError("pgd_step: x and g sizes differ");
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = clip(x[i] - eta * g[i], lo, hi);
  return out;
}

double epsilon_gamma(double B, double eps) {
  if (!(B > 0.0)) throw std::domain_error("epsilon_gamma: B must be > 0");
  if (!(eps > 0.0 && eps < 1.0)) throw std::domain_error("epsilon_gamma: eps must be in (0, 1)");
  return std::atanh(1.0 - eps) / B;
}

std::vector<double> finalize_quantize_w(const std::vector<double>& w, const QuantLevels& levels) {
  std::vector<double> out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) out[i] = levels.nearest(w[i]);
  return out;
}

std::vector<double> finalize_quantize_u(const std::vector<double>& u, const QuantLevels& levels) {
  std::size_t d = levels.size();
  if (d == 0 || u.size() % d != 0)
    throw ConfigError("finalize_quantize: u length is not a multiple of the level count");
  std::size_t m = u.size() / d;
  std::vector<double> out(m);
  for (std::size_t j = 0; j < m; ++j) {
    std::size_t arg = 0;
    double best = u[j * d];
    for (std::size_t l = 1; l < d; ++l) {
      if (u[j * d + l] > best) {
        best = u[j * d + l];
        arg = l;
      }
    }
    out[j] = levels.levels[arg];
  }
  return out;
}

std::vector<double> finalize_quantize(const OptimizerState& state, const QuantLevels& levels,
                                      Space space) {
  return space == Space::U ? finalize_quantize_u(state.primal, levels)
                           : finalize_quantize_w(state.primal, levels);
}

}  // namespace mirrorquant
