#include "mirrorquant/checks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "mirrorquant/convex_bench.hpp"
#include "mirrorquant/harness.hpp"
#include "mirrorquant/mirror_map.hpp"
#include "mirrorquant/nn.hpp"
#include "mirrorquant/optimizers.hpp"
#include "mirrorquant/projections.hpp"

namespace mirrorquant {

namespace {

/// Accumulates a single named check; `expect` takes the observed margin
/// (>= 0 required) and tracks the worst case.
struct Check {
  CheckResult r;
  bool seen_margin = false;

  explicit Check(std::string name) {
    r.name = std::move(name);
    r.pass = true;
    r.worst = 0.0;
  }

  /// Require err <= tol; worst tracks the max err.
  void err_below(double err, double tol, const std::string& where = "") {
    if (!(err <= tol) && r.pass) {
      r.pass = false;
      std::ostringstream os;
      os << "error " << err << " exceeds " << tol;
      if (!where.empty()) os << " at " << where;
      r.detail = os.str();
    }
    r.worst = std::max(r.worst, err);
  }

  /// Require margin > 0 (strict); worst tracks the min margin.
  void margin_positive(double margin, const std::string& where = "") {
    if (!seen_margin) {
      r.worst = margin;
      seen_margin = true;
    } else {
      r.worst = std::min(r.worst, margin);
    }
    if (!(margin > 0.0) && r.pass) {
      r.pass = false;
      std::ostringstream os;
      os << "margin " << margin << " not positive";
      if (!where.empty()) os << " at " << where;
      r.detail = os.str();
    }
  }

  void require(bool cond, const std::string& why) {
    if (!cond && r.pass) {
      r.pass = false;
      r.detail = why;
    }
  }
};

double rel_err(double got, double want) {
  double denom = std::max({std::abs(got), std::abs(want), 1e-12});
  return std::abs(got - want) / denom;
}

std::vector<double> random_simplex(Rng& rng, std::size_t d, double floor_mass = 1e-3) {
  std::vector<double> u(d);
  double s = 0.0;
  for (auto& v : u) {
    v = floor_mass + rng.uniform(0.0, 1.0);
    s += v;
  }
  for (auto& v : u) v /= s;
  return u;
}

}  // namespace

std::vector<CheckResult> check_projections(Rng& rng) {
  std::vector<CheckResult> out;

  {  // strict monotonicity for tanh and shifted_tanh, per beta
    Check c("projections/strict_monotonicity");
    for (double beta : {1.0, 10.0, 100.0}) {
      for (int i = 0; i < 10000; ++i) {
        double a = rng.uniform(-6.0 / beta, 6.0 / beta);
        double b = a + rng.uniform(1e-8 / beta, 3.0 / beta);
        c.margin_positive(tanh_project(b, beta) - tanh_project(a, beta), "tanh");
        double center = rng.uniform() < 0.5 ? -0.5 : 0.5;
        double sa = center + rng.uniform(-6.0 / beta, 6.0 / beta);
        double sb = sa + rng.uniform(1e-8 / beta, 3.0 / beta);
        c.margin_positive(shifted_tanh_project(sb, beta) - shifted_tanh_project(sa, beta),
                          "shifted_tanh");
      }
    }
    out.push_back(c.r);
  }

  {  // inverse consistency, canonical representative for softmax
    Check c("projections/inverse_consistency");
    for (int i = 0; i < 2000; ++i) {
      double beta = rng.uniform(1.0, 10.0);
      double x = rng.uniform(-7.0 / beta, 7.0 / beta);
      c.err_below(std::abs(tanh_inverse(tanh_project(x, beta), beta) - x), 1e-9, "tanh");
      double bs = rng.uniform(1.0, 3.0);
      double xs = rng.uniform(-2.0, 2.0);
      c.err_below(std::abs(shifted_tanh_inverse(shifted_tanh_project(xs, bs), bs) - xs), 1e-9,
                  "shifted_tanh");
    }
    for (int i = 0; i < 500; ++i) {
      std::size_t d = 2 + rng.uniform_index(3);
      double beta = rng.uniform(1.0, 5.0);
      std::vector<double> ut(d);
      for (auto& v : ut) v = rng.uniform(-3.0, 3.0);
      std::vector<double> u = softmax_project(ut, beta);
      std::vector<double> canon = softmax_inverse(u, beta);
      std::vector<double> u2 = softmax_project(canon, beta);
      std::vector<double> canon2 = softmax_inverse(u2, beta);
      for (std::size_t l = 0; l < d; ++l) {
        c.err_below(std::abs(u2[l] - u[l]), 1e-9, "softmax primal");
        c.err_below(std::abs(canon2[l] - canon[l]), 1e-9, "softmax canonical fixed point");
      }
    }
    out.push_back(c.r);
  }

  {  // saturation at beta = 1e4
    Check c("projections/saturation");
    const double beta = 1e4;
    for (int i = 0; i < 10000; ++i) {
      double mag = rng.uniform(0.01, 2.0);
      double x = rng.uniform() < 0.5 ? -mag : mag;
      c.margin_positive(std::abs(tanh_project(x, beta)) - (1.0 - 1e-4));
    }
    out.push_back(c.r);
  }

  {  // analytic jacobians vs central differences
    Check c("projections/jacobian_fd");
    const double h = 1e-5;
    for (int i = 0; i < 1000; ++i) {
      double beta = rng.uniform() < 0.5 ? 1.0 : 10.0;
      double x = rng.uniform(-3.0 / beta, 3.0 / beta);
      double fd = (tanh_project(x + h, beta) - tanh_project(x - h, beta)) / (2 * h);
      c.err_below(rel_err(tanh_jacobian(x, beta), fd), 1e-6, "tanh");
      double xs = rng.uniform(-2.0, 2.0);
      double fds = (shifted_tanh_project(xs + h, 1.0) - shifted_tanh_project(xs - h, 1.0)) / (2 * h);
      c.err_below(rel_err(shifted_tanh_jacobian(xs, 1.0), fds), 1e-6, "shifted_tanh");
    }
    for (int i = 0; i < 300; ++i) {
      std::size_t d = 3;
      double beta = rng.uniform(1.0, 2.0);
      std::vector<double> ut(d);
      for (auto& v : ut) v = rng.uniform(-3.0, 3.0);
      std::vector<double> jac = softmax_diag_jacobian(ut, beta);
      for (std::size_t l = 0; l < d; ++l) {
        std::vector<double> up = ut, um = ut;
        up[l] += h;
        um[l] -= h;
        double fd = (softmax_project(up, beta)[l] - softmax_project(um, beta)[l]) / (2 * h);
        c.err_below(rel_err(jac[l], fd), 1e-6, "softmax diag");
      }
    }
    out.push_back(c.r);
  }

  {  // softmax normalization over the full double-exp range
    Check c("projections/softmax_normalization");
    for (int i = 0; i < 1000; ++i) {
      std::size_t d = 2 + rng.uniform_index(9);
      std::vector<double> ut(d);
      for (auto& v : ut) v = rng.uniform(-700.0, 700.0);
      std::vector<double> u = softmax_project(ut, 1.0);
      double s = 0.0;
      for (double v : u) s += v;
      c.err_below(std::abs(s - 1.0), 1e-12);
    }
    out.push_back(c.r);
  }

  {  // image bounds: tanh interior, softmax entries positive on moderate inputs
    Check c("projections/image_bounds");
    for (int i = 0; i < 5000; ++i) {
      double beta = rng.uniform(1.0, 100.0);
      double w = tanh_project(rng.uniform(-50.0, 50.0), beta);
      c.require(w > -1.0 - 1e-15 && w < 1.0 + 1e-15 && std::abs(w) <= 1.0,
                "tanh image outside [-1, 1]");
      std::vector<double> ut(3);
      for (auto& v : ut) v = rng.uniform(-30.0, 30.0);
      for (double v : softmax_project(ut, 1.0))
        c.require(v > 0.0 && v <= 1.0, "softmax image entry outside (0, 1]");
    }
    out.push_back(c.r);
  }

  return out;
}

std::vector<CheckResult> check_mirror_maps(Rng& rng) {
  std::vector<CheckResult> out;
  const MirrorMap tanh_map = MirrorMap::tanh_entropy();
  const MirrorMap negent = MirrorMap::negative_entropy();
  const MirrorMap quad = MirrorMap::quadratic();
  const MirrorMap num_shifted = MirrorMap::numeric(ProjectionKind::ShiftedTanh);
  const MirrorMap num_tanh = MirrorMap::numeric(ProjectionKind::Tanh);

  {  // grad = P^{-1}: finite differences of the value
    Check c("mirror/grad_matches_fd");
    const double h = 1e-6;
    for (int i = 0; i < 1000; ++i) {
      double beta = rng.uniform() < 0.5 ? 1.0 : 2.5;
      double sgn = rng.uniform() < 0.5 ? -1.0 : 1.0;
      double w = sgn * rng.uniform(0.01, 0.95);
      double fd = (tanh_map.value(w + h, beta) - tanh_map.value(w - h, beta)) / (2 * h);
      c.err_below(rel_err(tanh_map.grad(w, beta), fd), 1e-6, "tanh_entropy");
      double u = rng.uniform() < 0.5 ? rng.uniform(0.05, 0.8) : rng.uniform(1.2, 4.0);
      double fdn = (negent.value(u + h, beta) - negent.value(u - h, beta)) / (2 * h);
      c.err_below(rel_err(negent.grad(u, beta), fdn), 1e-6, "negative_entropy");
      double x = sgn * rng.uniform(0.1, 3.0);
      double fdq = (quad.value(x + h, beta) - quad.value(x - h, beta)) / (2 * h);
      c.err_below(rel_err(quad.grad(x, beta), fdq), 1e-6, "quadratic");
    }
    out.push_back(c.r);
  }

  {  // numeric map (shifted tanh): integral's FD slope agrees with the bisection inverse
    Check c("mirror/numeric_grad_matches_fd");
    const double h = 1e-5;
    for (int i = 0; i < 200; ++i) {
      double sgn = rng.uniform() < 0.5 ? -1.0 : 1.0;
      double w = sgn * rng.uniform(0.05, 0.9);
      double fd = (num_shifted.value(w + h, 1.0) - num_shifted.value(w - h, 1.0)) / (2 * h);
      c.err_below(rel_err(num_shifted.grad(w, 1.0), fd), 1e-5);
    }
    out.push_back(c.r);
  }

  {  // numeric map built from tanh reproduces the analytic tanh-entropy map
    Check c("mirror/numeric_matches_analytic_tanh");
    for (int i = 0; i < 300; ++i) {
      double beta = rng.uniform(1.0, 4.0);
      double w = rng.uniform(-0.995, 0.995);
      c.err_below(std::abs(num_tanh.value(w, beta) - tanh_map.value(w, beta)), 1e-8);
    }
    out.push_back(c.r);
  }

  {  // strict convexity via random chords
    Check c("mirror/strict_convexity");
    auto chord = [&](const MirrorMap& m, double p, double q, const char* tag) {
      if (std::abs(p - q) < 0.01) return;
      double t = rng.uniform(0.05, 0.95);
      double lhs = m.value(t * p + (1 - t) * q, 1.0);
      double rhs = t * m.value(p, 1.0) + (1 - t) * m.value(q, 1.0);
      c.margin_positive(rhs - lhs - 1e-15, tag);
    };
    for (int i = 0; i < 1000; ++i) {
      chord(tanh_map, rng.uniform(-0.99, 0.99), rng.uniform(-0.99, 0.99), "tanh_entropy");
      chord(negent, rng.uniform(0.02, 3.0), rng.uniform(0.02, 3.0), "negative_entropy");
      chord(quad, rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0), "quadratic");
      chord(num_shifted, rng.uniform(-0.95, 0.95), rng.uniform(-0.95, 0.95), "numeric");
    }
    out.push_back(c.r);
  }

  {  // Bregman nonnegativity and D(p, p) = 0
    Check c("mirror/bregman_nonnegative");
    for (int i = 0; i < 10000; ++i) {
      std::vector<double> p(3), q(3);
      for (int l = 0; l < 3; ++l) {
        p[l] = rng.uniform(-0.999, 0.999);
        q[l] = rng.uniform(-0.999, 0.999);
      }
      double beta = rng.uniform(1.0, 10.0);
      c.require(tanh_map.bregman(p, q, beta) >= 0.0, "tanh_entropy D < 0");
      c.require(tanh_map.bregman(p, p, beta) == 0.0, "tanh_entropy D(p,p) != 0");
      for (int l = 0; l < 3; ++l) {
        p[l] = rng.uniform(0.01, 3.0);
        q[l] = rng.uniform(0.01, 3.0);
      }
      c.require(negent.bregman(p, q, beta) >= 0.0, "negative_entropy D < 0");
      c.require(negent.bregman(p, p, beta) == 0.0, "negative_entropy D(p,p) != 0");
      for (int l = 0; l < 3; ++l) {
        p[l] = rng.uniform(-3.0, 3.0);
        q[l] = rng.uniform(-3.0, 3.0);
      }
      c.require(quad.bregman(p, q, beta) >= 0.0, "quadratic D < 0");
      c.require(quad.bregman(p, p, beta) == 0.0, "quadratic D(p,p) != 0");
    }
    out.push_back(c.r);
  }

  {  // negative entropy's divergence is KL on the simplex
    Check c("mirror/negative_entropy_is_kl");
    for (int i = 0; i < 100; ++i) {
      std::vector<double> p = random_simplex(rng, 3);
      std::vector<double> q = random_simplex(rng, 3);
      double kl = 0.0;
      for (int l = 0; l < 3; ++l) kl += p[l] * std::log(p[l] / q[l]);
      c.err_below(std::abs(negent.bregman(p, q, 1.0) - kl), 1e-10);
    }
    out.push_back(c.r);
  }

  {  // gradient norm diverges monotonically toward the boundary
    Check c("mirror/boundary_divergence");
    double prev_t = 0.0, prev_n = 0.0, prev_s = 0.0;
    for (int k = 2; k <= 8; ++k) {
      double d = std::pow(10.0, -k);
      double gt = std::abs(tanh_map.grad(1.0 - d, 1.0));
      double gn = std::abs(negent.grad(d, 1.0));
      double gs = std::abs(num_shifted.grad(1.0 - d, 1.0));
      if (k > 2) {
        c.margin_positive(gt - prev_t, "tanh_entropy");
        c.margin_positive(gn - prev_n, "negative_entropy");
        c.margin_positive(gs - prev_s, "numeric shifted_tanh");
      }
      prev_t = gt;
      prev_n = gn;
      prev_s = gs;
    }
    out.push_back(c.r);
  }

  return out;
}

std::vector<CheckResult> check_optimizers(Rng& rng, bool inject_ste_bug) {
  std::vector<CheckResult> out;
  const double flip = inject_ste_bug ? -1.0 : 1.0;

  {  // core equivalence: closed-form tanh step == project(inverse - eta g)
    Check c("optimizers/closed_stable_equivalence_tanh");
    for (int i = 0; i < 100000; ++i) {
      double w = rng.uniform(-0.999, 0.999);
      double g = rng.uniform(-5.0, 5.0);
      double eta = rng.uniform(1e-4, 1.0);
      double beta = rng.uniform(1.0, 100.0);
      double closed = md_tanh_step(w, g, eta, beta);
      double stable = tanh_project(tanh_inverse(w, beta) - flip * eta * g, beta);
      c.err_below(std::abs(closed - stable), 1e-9);
    }
    out.push_back(c.r);
  }

  {  // core equivalence: EGD == softmax(inverse - eta g), d in {2, 3, 5}
    Check c("optimizers/closed_stable_equivalence_softmax");
    for (std::size_t d : {2u, 3u, 5u}) {
      for (int i = 0; i < 30000; ++i) {
        std::vector<double> u = random_simplex(rng, d);
        std::vector<double> g(d);
        for (auto& v : g) v = rng.uniform(-5.0, 5.0);
        double eta = rng.uniform(1e-4, 1.0);
        double beta = rng.uniform(1.0, 100.0);
        std::vector<double> closed = md_softmax_step(u, g, eta, beta);
        std::vector<double> dual = softmax_inverse(u, beta);
        for (std::size_t l = 0; l < d; ++l) dual[l] -= flip * eta * g[l];
        std::vector<double> stable = softmax_project(dual, beta);
        for (std::size_t l = 0; l < d; ++l) c.err_below(std::abs(closed[l] - stable[l]), 1e-9);
      }
    }
    out.push_back(c.r);
  }

  {  // both closed forms minimize the proximal objective (vs golden-section oracle)
    Check c("optimizers/proximal_optimality");
    const MirrorMap tanh_map = MirrorMap::tanh_entropy();
    const MirrorMap negent = MirrorMap::negative_entropy();
    for (int i = 0; i < 200; ++i) {
      double w = rng.uniform(-0.9, 0.9);
      double g = rng.uniform(-2.0, 2.0);
      double eta = rng.uniform(0.01, 0.5);
      double beta = rng.uniform(1.0, 5.0);
      double oracle = numeric_prox_oracle(tanh_map, w, g, eta, beta);
      c.err_below(std::abs(md_tanh_step(w, g, eta, beta) - oracle), 1e-6, "tanh");

      double p = rng.uniform(0.05, 0.95);
      double ge = rng.uniform(-2.0, 2.0);
      double oracle_u = numeric_prox_oracle(negent, p, ge, eta, beta);
      std::vector<double> next = md_softmax_step({p, 1.0 - p}, {ge, 0.0}, eta, beta);
      c.err_below(std::abs(next[0] - oracle_u), 1e-6, "softmax edge");
    }
    out.push_back(c.r);
  }

  {  // iterates stay strictly feasible; tanh additionally survives huge gradients
    Check c("optimizers/feasibility");
    for (int chain = 0; chain < 100; ++chain) {
      double w = rng.uniform(-0.9, 0.9);
      std::vector<double> u = random_simplex(rng, 3);
      double beta = rng.uniform(1.0, 10.0);
      double beta_w = rng.uniform(1.0, 50.0);
      for (int s = 0; s < 100; ++s) {
        w = md_tanh_step(w, rng.uniform(-20.0, 20.0), 0.5, beta_w);
        c.require(std::abs(w) < 1.0, "tanh iterate left the open interval");
        // keep beta*eta*|g| moderate so entries stay representable over the chain
        std::vector<double> g(3);
        for (auto& v : g) v = rng.uniform(-5.0, 5.0);
        u = md_softmax_step(u, g, 0.1, beta);
        double sum = 0.0;
        for (double v : u) {
          c.require(v > 0.0, "softmax iterate left the simplex interior");
          sum += v;
        }
        c.err_below(std::abs(sum - 1.0), 1e-12, "softmax normalization drift");
      }
    }
    out.push_back(c.r);
  }

  {  // zero gradient is a fixed point of every step operator
    Check c("optimizers/zero_gradient_fixed_point");
    for (int i = 0; i < 1000; ++i) {
      double w = rng.uniform(-0.999, 0.999);
      double beta = rng.uniform(1.0, 100.0);
      c.err_below(std::abs(md_tanh_step(w, 0.0, 0.3, beta) - w), 1e-12, "md_tanh");
      std::vector<double> u = random_simplex(rng, 3);
      std::vector<double> nu = md_softmax_step(u, {0.0, 0.0, 0.0}, 0.3, beta);
      for (int l = 0; l < 3; ++l) c.err_below(std::abs(nu[l] - u[l]), 1e-12, "md_softmax");
      std::vector<double> x{rng.uniform(-1.0, 1.0)};
      std::vector<double> px = pgd_step(x, {0.0}, 0.3, -1.0, 1.0);
      c.err_below(std::abs(px[0] - x[0]), 1e-12, "pgd");

      OptimizerState st;
      st.projection = Projection{ProjectionKind::Tanh, beta, 2};
      st.beta = beta;
      st.dual = {rng.uniform(-3.0, 3.0)};
      st.primal = {0.0};
      st.project();
      double before = st.primal[0];
      stable_md_step(st, {0.0}, 0.3);
      c.err_below(std::abs(st.primal[0] - before), 1e-12, "stable_md");
    }
    out.push_back(c.r);
  }

  {  // annealing schedule: monotone, capped, matches the formula
    Check c("optimizers/beta_schedule");
    BetaSchedule scheds[] = {{1.0, 1.02, 200, 1e4}, {1.0, 1.1, 100, 1e4}, {2.0, 1.2, 37, 500.0}};
    for (const auto& s : scheds) {
      s.validate();
      double prev = 0.0;
      for (long k = 0; k < 100000; k += 7) {
        double b = anneal_beta(s, k);
        double expect = std::min(s.cap, s.beta0 * std::pow(s.scale, static_cast<double>(k / s.interval)));
        c.err_below(rel_err(b, expect), 1e-12, "formula");
        c.require(b <= s.cap, "beta exceeds cap");
        c.require(b >= prev, "beta decreased");
        prev = b;
      }
    }
    out.push_back(c.r);
  }

  {  // scale relation: step under Phi/beta == step with gradient beta*g at beta=1
    Check c("optimizers/beta_scale_relation");
    for (int i = 0; i < 10000; ++i) {
      double w = rng.uniform(-0.99, 0.99);
      double g = rng.uniform(-3.0, 3.0);
      double eta = rng.uniform(1e-4, 0.5);
      double beta = rng.uniform(1.0, 30.0);
      c.err_below(std::abs(md_tanh_step(w, g, eta, beta) - md_tanh_step(w, beta * g, eta, 1.0)),
                  1e-12);
    }
    out.push_back(c.r);
  }

  {  // stable runs keep primal = P_beta(dual) at every step
    Check c("optimizers/dual_primal_coherence");
    OptimizerState st;
    st.projection = Projection{ProjectionKind::Tanh, 1.0, 2};
    st.dual.resize(8);
    for (auto& v : st.dual) v = rng.uniform(-0.5, 0.5);
    st.primal.assign(8, 0.0);
    st.project();
    BetaSchedule bs{1.0, 1.1, 5, 100.0};
    for (long k = 0; k < 200; ++k) {
      st.beta = anneal_beta(bs, k);
      st.projection.beta = st.beta;
      st.project();
      std::vector<double> g(8);
      for (auto& v : g) v = rng.uniform(-2.0, 2.0);
      stable_md_step(st, g, 0.05);
      for (std::size_t j = 0; j < 8; ++j)
        c.err_below(std::abs(st.primal[j] - tanh_project(st.dual[j], st.beta)), 1e-9);
    }
    out.push_back(c.r);
  }

  {  // epsilon-discreteness threshold: |x| >= gamma gives 1 - |P(x)| < eps
    Check c("optimizers/epsilon_gamma");
    for (int i = 0; i < 1000; ++i) {
      double B = rng.uniform(1.0, 1e4);
      double eps = rng.uniform(1e-6, 0.5);
      double gamma = epsilon_gamma(B, eps);
      double x = gamma * (1.0 + rng.uniform(1e-3, 2.0));
      c.margin_positive(eps - (1.0 - std::abs(tanh_project(x, B))) + 1e-18);
      double x_in = gamma * rng.uniform(0.0, 0.999);
      c.margin_positive((1.0 - tanh_project(x_in, B)) - eps * (1.0 - 1e-9),
                        "inside gamma should not saturate");
    }
    out.push_back(c.r);
  }

  return out;
}

std::vector<CheckResult> check_convex_bounds() {
  std::vector<CheckResult> out;

  struct Cell {
    ConvexProblem problem;
    MirrorMap map;
  };
  std::vector<Cell> cells;
  cells.push_back({ConvexProblem::quadratic1d(), MirrorMap::tanh_entropy()});
  cells.push_back({ConvexProblem::linear3simplex(), MirrorMap::negative_entropy()});

  {  // problem sanity: optimum is a minimum; gradient matches finite differences
    Check c("convex/problem_sanity");
    Rng rng(101);
    for (const auto& cell : cells) {
      const auto& p = cell.problem;
      double f_star = p.f(p.x_star);
      for (int i = 0; i < 200; ++i) {
        std::vector<double> x(static_cast<std::size_t>(p.dim));
        if (p.domain == ConvexProblem::Domain::Box) {
          for (auto& v : x) v = rng.uniform(p.lo, p.hi);
        } else {
          x = random_simplex(rng, x.size());
        }
        c.margin_positive(p.f(x) - f_star + 1e-15, p.id + " f(x) < f(x*)");
        std::vector<double> g = p.grad(x);
        const double h = 1e-6;
        for (std::size_t j = 0; j < x.size(); ++j) {
          std::vector<double> xp = x, xm = x;
          xp[j] += h;
          xm[j] -= h;
          c.err_below(rel_err(g[j], (p.f(xp) - p.f(xm)) / (2 * h)), 1e-6, p.id + " grad fd");
        }
      }
    }
    out.push_back(c.r);
  }

  {  // the convergence bound holds on every cell; gap nonincreasing in t
    Check c("convex/bound_holds");
    Check mono("convex/gap_nonincreasing_in_t");
    for (const auto& cell : cells) {
      ConvexConstants k = estimate_constants(cell.problem, cell.map);
      for (double B : {1.0, 100.0}) {
        double prev_gap = 0.0;
        bool first = true;
        for (long t : {10L, 100L, 1000L, 10000L}) {
          ConvergenceParams params = ConvergenceParams::prescribed(k.R, k.L, k.rho, B, t);
          BetaSchedule schedule{1.0, B > 1.0 ? 1.05 : 1.0, 100, B};
          ConvexReport rep = run_md_convex(cell.problem, cell.map, schedule, params);
          char where[128];
          std::snprintf(where, sizeof(where), "%s B=%g t=%ld (gap %.3g bound %.3g)",
                        cell.problem.id.c_str(), B, t, rep.gap, rep.bound);
          c.require(rep.ok, std::string("bound violated at ") + where);
          c.err_below(rep.bound > 0 ? rep.gap / rep.bound : 1e9, 1.0, where);
          if (!first) mono.margin_positive(prev_gap - rep.gap + 1e-15, where);
          prev_gap = rep.gap;
          first = false;
        }
      }
    }
    out.push_back(c.r);
    out.push_back(mono.r);
  }

  {  // with the quadratic mirror map, MD reproduces PGD
    Check c("convex/quadratic_map_is_pgd");
    ConvexProblem p = ConvexProblem::quadratic1d();
    MirrorMap quad = MirrorMap::quadratic();
    ConvexConstants k = estimate_constants(p, quad);
    long t = 500;
    ConvergenceParams params = ConvergenceParams::prescribed(k.R, k.L, k.rho, 1.0, t);
    BetaSchedule schedule{1.0, 1.0, 1, 1.0};
    ConvexReport rep = run_md_convex(p, quad, schedule, params);
    // replay plain projected gradient descent with the same step size
    std::vector<double> x{0.0};
    double gap_sum = 0.0;
    std::vector<double> avg{0.0};
    for (long kstep = 0; kstep < t; ++kstep) {
      gap_sum += p.f(x) - p.f(p.x_star);
      avg[0] += x[0];
      x = pgd_step(x, p.grad(x), params.eta, p.lo, p.hi);
    }
    avg[0] /= static_cast<double>(t);
    double pgd_gap = p.f(avg) - p.f(p.x_star);
    c.err_below(std::abs(rep.gap - pgd_gap), 1e-12);
    // second differences of x^2/2 carry ~1e-8 cancellation noise around the exact 1
    c.require(std::abs(k.rho - 1.0) <= 1e-6, "quadratic map rho should be 1");
    out.push_back(c.r);
  }

  {  // oracle agreement (also exercised from the optimizer suite)
    Check c("convex/prox_oracle_agreement");
    Rng rng(202);
    const MirrorMap tanh_map = MirrorMap::tanh_entropy();
    for (int i = 0; i < 50; ++i) {
      double w = rng.uniform(-0.8, 0.8);
      double g = rng.uniform(-1.0, 1.0);
      double eta = rng.uniform(0.05, 0.3);
      c.err_below(std::abs(md_tanh_step(w, g, eta, 2.0) - numeric_prox_oracle(tanh_map, w, g, eta, 2.0)),
                  1e-6);
    }
    out.push_back(c.r);
  }

  return out;
}

std::vector<CheckResult> check_nn(Rng& rng) {
  std::vector<CheckResult> out;

  {  // analytic gradients vs central finite differences
    Check c("nn/gradient_fd");
    for (const auto& dims : {std::vector<long>{2, 16, 16, 2}, std::vector<long>{2, 8, 2}}) {
      MlpModel model = MlpModel::zeros(dims);
      std::vector<double> w(static_cast<std::size_t>(model.param_count()));
      for (auto& v : w) v = rng.uniform(-0.8, 0.8);
      model.set_params(w);
      Matrix x(16, 2);
      std::vector<int> y(16);
      for (long i = 0; i < 16; ++i) {
        x.at(i, 0) = rng.uniform(-2.0, 2.0);
        x.at(i, 1) = rng.uniform(-2.0, 2.0);
        y[static_cast<std::size_t>(i)] = rng.uniform() < 0.5 ? 0 : 1;
      }
      ForwardCache cache;
      Matrix logits = forward(model, x, &cache);
      auto [loss, dlogits] = cross_entropy(logits, y);
      (void)loss;
      std::vector<double> g = backward(model, cache, dlogits).flatten();
      const double h = 1e-5;
      for (int probe = 0; probe < 10; ++probe) {
        std::size_t j = rng.uniform_index(w.size());
        std::vector<double> wp = w, wm = w;
        wp[j] += h;
        wm[j] -= h;
        model.set_params(wp);
        double lp = cross_entropy(forward(model, x), y).first;
        model.set_params(wm);
        double lm = cross_entropy(forward(model, x), y).first;
        model.set_params(w);
        double fd = (lp - lm) / (2 * h);
        c.err_below(std::abs(g[j] - fd) / std::max({std::abs(fd), std::abs(g[j]), 1e-3}), 1e-5);
      }
    }
    out.push_back(c.r);
  }

  {  // loss properties: nonnegative; ln(classes) at uniform; ~0 at huge margins
    Check c("nn/loss_properties");
    MlpModel model = MlpModel::zeros({2, 4, 2});  // zero weights: logits all zero
    Matrix x(8, 2);
    std::vector<int> y(8, 1);
    double loss = cross_entropy(forward(model, x), y).first;
    c.err_below(std::abs(loss - std::log(2.0)), 1e-12, "uniform predictions");
    Matrix big(1, 2);
    big.at(0, 0) = 50.0;
    big.at(0, 1) = 0.0;
    double tiny = cross_entropy(big, std::vector<int>{0}).first;
    c.require(tiny >= 0.0 && tiny < 1e-20, "saturated-margin loss");
    for (int i = 0; i < 200; ++i) {
      Matrix l(1, 2);
      l.at(0, 0) = rng.uniform(-5.0, 5.0);
      l.at(0, 1) = rng.uniform(-5.0, 5.0);
      auto [lv, dl] = cross_entropy(l, std::vector<int>{0});
      c.require(lv >= 0.0, "negative loss");
      c.err_below(std::abs(dl.at(0, 0) + dl.at(0, 1)), 1e-15, "dlogits row sum");
    }
    out.push_back(c.r);
  }

  {  // dataset invariants: determinism, label range/balance, disjoint split
    Check c("nn/dataset_invariants");
    for (const char* kind : {"xor-blobs", "two-moons-like", "gaussian-blobs"}) {
      Dataset a = generate_dataset(kind, 2000, 0.25, 7);
      Dataset b = generate_dataset(kind, 2000, 0.25, 7);
      c.require(a.x_train.a == b.x_train.a && a.y_train == b.y_train &&
                    a.x_test.a == b.x_test.a && a.y_test == b.y_test,
                std::string(kind) + ": same seed gave different data");
      long ones = 0, total = 0;
      for (int v : a.y_train) {
        c.require(v == 0 || v == 1, "label outside {0,1}");
        ones += v;
        ++total;
      }
      for (int v : a.y_test) {
        c.require(v == 0 || v == 1, "label outside {0,1}");
        ones += v;
        ++total;
      }
      double balance = static_cast<double>(ones) / static_cast<double>(total);
      c.err_below(std::abs(balance - 0.5), 0.05, std::string(kind) + " label balance");
      c.require(a.x_train.rows + a.x_test.rows == 2000, "split sizes");
    }
    out.push_back(c.r);
  }

  return out;
}

std::vector<CheckResult> check_harness() {
  std::vector<CheckResult> out;

  TrainConfig base;
  base.dataset.n = 400;
  base.epochs = 40;  // 5 iters/epoch at batch 64 -> 200 iterations
  base.log_interval = 10;
  base.beta = BetaSchedule{1.0, 2.0, 10, 16.0};
  base.eta = StepSizeSchedule{1e-2, 0.5, 80};

  {  // md_stable tanh run: coherence, metric ranges, discreteness, quantized exactness
    Check c("harness/md_stable_run");
    TrainResult r = train(base);
    const OptimizerState& st = r.end_state;
    for (std::size_t j = 0; j < st.dual.size(); ++j)
      c.err_below(std::abs(st.primal[j] - tanh_project(st.dual[j], st.beta)), 1e-9,
                  "dual/primal coherence");
    for (const auto& rec : r.records) {
      c.require(rec.frac_quantized >= 0.0 && rec.frac_quantized <= 1.0, "frac_quantized range");
      c.require(rec.quantized_test_acc >= 0.0 && rec.quantized_test_acc <= 1.0,
                "quantized_test_acc range");
      c.require(std::isfinite(rec.train_loss) && rec.train_loss >= 0.0, "train_loss range");
    }
    c.require(r.beta_final == 16.0, "beta did not reach the cap");
    double gamma = epsilon_gamma(16.0, 1e-3);
    for (std::size_t j = 0; j < st.dual.size(); ++j) {
      if (std::abs(st.dual[j]) >= gamma * 1.001)
        c.err_below(1.0 - std::abs(st.primal[j]), 1e-3, "epsilon-discreteness");
    }
    for (double w : r.final_params)
      c.require(w == -1.0 || w == 1.0, "finalized weight not an exact level");
    out.push_back(c.r);
  }

  {  // reproducibility: identical config+seed gives identical records and bytes
    Check c("harness/reproducibility");
    TrainResult a = train(base);
    TrainResult b = train(base);
    c.require(a.records.size() == b.records.size(), "record counts differ");
    for (std::size_t i = 0; i < a.records.size() && i < b.records.size(); ++i) {
      const auto& x = a.records[i];
      const auto& y = b.records[i];
      bool same = x.iter == y.iter && x.train_loss == y.train_loss &&
                  x.train_acc == y.train_acc && x.test_acc == y.test_acc && x.beta == y.beta &&
                  x.eta == y.eta && x.frac_quantized == y.frac_quantized &&
                  x.grad_norm == y.grad_norm && x.quantized_test_acc == y.quantized_test_acc;
      c.require(same, "records diverged at index " + std::to_string(i));
    }
    c.require(a.final_params == b.final_params, "final parameters differ");
    out.push_back(c.r);
  }

  {  // u-space run keeps valid simplex rows and argmax-finalizes to exact levels
    Check c("harness/u_space_run");
    TrainConfig cfg = base;
    cfg.space = Space::U;
    cfg.projection = ProjectionKind::Softmax;
    cfg.optimizer = OptimizerKind::MdStable;
    cfg.levels = QuantLevels::ternary();
    TrainResult r = train(cfg);
    const std::size_t d = cfg.levels.size();
    for (std::size_t j = 0; j + d <= r.end_state.primal.size(); j += d) {
      double s = 0.0;
      for (std::size_t l = 0; l < d; ++l) {
        double v = r.end_state.primal[j + l];
        c.require(v > 0.0 && v < 1.0 + 1e-12, "u-row entry outside (0, 1]");
        s += v;
      }
      c.err_below(std::abs(s - 1.0), 1e-12, "u-row normalization");
    }
    for (double w : r.final_params)
      c.require(w == -1.0 || w == 0.0 || w == 1.0, "finalized weight not an exact level");
    out.push_back(c.r);
  }

  {  // config validation rejects inconsistent combinations and unknown keys
    Check c("harness/config_validation");
    auto rejects = [&](const char* tag, auto&& mutate) {
      TrainConfig cfg = base;
      mutate(cfg);
      bool threw = false;
      try {
        cfg.validate();
      } catch (const ConfigError&) {
        threw = true;
      }
      c.require(threw, std::string("accepted invalid config: ") + tag);
    };
    rejects("u-space with tanh", [](TrainConfig& c2) { c2.space = Space::U; });
    rejects("bc_ste with tanh", [](TrainConfig& c2) { c2.optimizer = OptimizerKind::BcSte; });
    rejects("ternary levels under tanh",
            [](TrainConfig& c2) { c2.levels = QuantLevels::ternary(); });
    rejects("zero epochs", [](TrainConfig& c2) { c2.epochs = 0; });
    bool threw = false;
    try {
      TrainConfig::from_json(nlohmann::json{{"epochs", 2}, {"bogus_key", 1}});
    } catch (const ConfigError& e) {
      threw = std::string(e.what()).find("bogus_key") != std::string::npos;
    }
    c.require(threw, "unknown key not rejected with its path");
    out.push_back(c.r);
  }

  return out;
}

std::vector<CheckResult> run_all_checks(std::uint64_t seed, bool inject_ste_bug) {
  std::vector<CheckResult> all;
  auto append = [&](std::vector<CheckResult> v) {
    all.insert(all.end(), v.begin(), v.end());
  };
  Rng r1(seed), r2(seed + 1), r3(seed + 2), r4(seed + 3);
  append(check_projections(r1));
  append(check_mirror_maps(r2));
  append(check_optimizers(r3, inject_ste_bug));
  append(check_convex_bounds());
  append(check_nn(r4));
  append(check_harness());
  return all;
}

}  // namespace mirrorquant
