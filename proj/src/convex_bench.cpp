#include "mirrorquant/convex_bench.hpp"

#include <algorithm>
#include <cmath>

namespace mirrorquant {

namespace {

constexpr double kGridMargin = 1e-3;
constexpr double kOracleMargin = 1e-10;
constexpr double kHessStep = 1e-4;

double golden_section(const std::function<double(double)>& f, double a, double b) {
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - gr * (b - a);
  double d = a + gr * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > 1e-12) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

// Smallest eigenvalue of a symmetric matrix (dim <= 3) by cyclic Jacobi.
double smallest_eigenvalue(std::vector<std::vector<double>> h) {
  std::size_t n = h.size();
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += h[p][q] * h[p][q];
    if (off < 1e-24) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(h[p][q]) < 1e-18) continue;
        double theta = 0.5 * (h[q][q] - h[p][p]) / h[p][q];
        double t = (theta >= 0.0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          double hpk = h[p][k], hqk = h[q][k];
          h[p][k] = c * hpk - s * hqk;
          h[q][k] = s * hpk + c * hqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          double hkp = h[k][p], hkq = h[k][q];
          h[k][p] = c * hkp - s * hkq;
          h[k][q] = s * hkp + c * hkq;
        }
      }
    }
  }
  double mn = h[0][0];
  for (std::size_t i = 1; i < n; ++i) mn = std::min(mn, h[i][i]);
  return mn;
}

// Hessian of Phi at x by central second differences (coordinates of the
// ambient space; all shipped maps are defined on an open ambient region).
double hessian_min_eigenvalue(const MirrorMap& map, const std::vector<double>& x) {
  std::size_t n = x.size();
  const double h = kHessStep;
  std::vector<std::vector<double>> H(n, std::vector<double>(n, 0.0));
  double f0 = map.value(x, 1.0);
  std::vector<double> y = x;
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = x[i] + h;
    double fp = map.value(y, 1.0);
    y[i] = x[i] - h;
    double fm = map.value(y, 1.0);
    y[i] = x[i];
    H[i][i] = (fp - 2.0 * f0 + fm) / (h * h);
    for (std::size_t j = i + 1; j < n; ++j) {
      y[i] = x[i] + h; y[j] = x[j] + h;
      double fpp = map.value(y, 1.0);
      y[j] = x[j] - h;
      double fpm = map.value(y, 1.0);
      y[i] = x[i] - h; y[j] = x[j] + h;
      double fmp = map.value(y, 1.0);
      y[j] = x[j] - h;
      double fmm = map.value(y, 1.0);
      y[i] = x[i]; y[j] = x[j];
      H[i][j] = H[j][i] = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
    }
  }
  return smallest_eigenvalue(std::move(H));
}

std::vector<std::vector<double>> domain_grid(const ConvexProblem& problem, int per_axis,
                                             double margin) {
  std::vector<std::vector<double>> pts;
  if (problem.domain == ConvexProblem::Domain::Box) {
    // tensor grid, dim <= 3
    double lo = problem.lo + margin, hi = problem.hi - margin;
    int n = per_axis;
    std::vector<double> axis(n);
    for (int i = 0; i < n; ++i)
      axis[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    if (problem.dim == 1) {
      for (double a : axis) pts.push_back({a});
    } else if (problem.dim == 2) {
      for (double a : axis)
        for (double b : axis) pts.push_back({a, b});
    } else {
      for (double a : axis)
        for (double b : axis)
          for (double c : axis) pts.push_back({a, b, c});
    }
  } else {
    // simplex interior: entries >= margin summing to 1
    int n = per_axis;
    if (problem.dim == 2) {
      for (int i = 0; i <= n; ++i) {
        double a = margin + (1.0 - 2.0 * margin) * static_cast<double>(i) / n;
        pts.push_back({a, 1.0 - a});
      }
    } else if (problem.dim == 3) {
      for (int i = 0; i <= n; ++i) {
        for (int j = 0; j + i <= n; ++j) {
          double a = margin + (1.0 - 3.0 * margin) * static_cast<double>(i) / n;
          double b = margin + (1.0 - 3.0 * margin) * static_cast<double>(j) / n;
          double c = 1.0 - a - b;
          if (c >= margin) pts.push_back({a, b, c});
        }
      }
    } else {
      throw ConfigError("estimate_constants: simplex grids implemented for dim 2 and 3 only");
    }
  }
  return pts;
}

std::vector<double> map_argmin(const MirrorMap& map, const ConvexProblem& problem) {
  // All shipped maps have a symmetric minimum: the box maps at 0, the
  // negative entropy at the uniform distribution.
  if (map.kind() == MirrorMapKind::NegativeEntropy)
    return std::vector<double>(problem.dim, 1.0 / problem.dim);
  return std::vector<double>(problem.dim, 0.0);
}

}  // namespace

ConvexProblem ConvexProblem::quadratic1d() {
  ConvexProblem p;
  p.id = "quadratic1d";
  p.dim = 1;
  p.domain = Domain::Box;
  p.lo = -1.0;
  p.hi = 1.0;
  p.f = [](const std::vector<double>& x) { return (x[0] - 0.9) * (x[0] - 0.9); };
  p.grad = [](const std::vector<double>& x) {
    return std::vector<double>{2.0 * (x[0] - 0.9)};
  };
  p.x_star = {0.9};
  return p;
}

ConvexProblem ConvexProblem::linear3simplex() {
  ConvexProblem p;
  p.id = "linear3simplex";
  p.dim = 3;
  p.domain = Domain::Simplex;
  const std::vector<double> c = {0.3, 0.1, 0.5};
  p.f = [c](const std::vector<double>& u) {
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += c[i] * u[i];
    return s;
  };
  p.grad = [c](const std::vector<double>&) { return c; };
  p.x_star = {0.0, 1.0, 0.0};
  return p;
}

const std::vector<std::string>& ConvexProblem::ids() {
  static const std::vector<std::string> v = {"quadratic1d", "linear3simplex"};
  return v;
}

ConvexProblem ConvexProblem::by_id(const std::string& id) {
  if (id == "quadratic1d") return quadratic1d();
  if (id == "linear3simplex") return linear3simplex();
  throw ConfigError("unknown convex problem id: " + id);
}

ConvergenceParams ConvergenceParams::prescribed(double R, double L, double rho, double B,
                                                long t) {
  if (!(R > 0.0 && L > 0.0 && rho > 0.0 && B >= 1.0 && t > 0))
    throw ConfigError("ConvergenceParams: R, L, rho, t must be positive and B >= 1");
  ConvergenceParams p;
  p.R = R;
  p.L = L;
  p.rho = rho;
  p.B = B;
  p.t = t;
  p.eta = (R / L) * std::sqrt(2.0 * rho / (B * static_cast<double>(t)));
  return p;
}

double ConvergenceParams::bound() const {
  return R * L * std::sqrt(2.0 * B / (rho * static_cast<double>(t)));
}

ConvexConstants estimate_constants(const ConvexProblem& problem, const MirrorMap& map) {
  if (problem.dim > 3) throw ConfigError("estimate_constants: dim <= 3 required");
  const int per_axis = problem.domain == ConvexProblem::Domain::Box
                           ? (problem.dim == 1 ? 2000 : 60)
                           : 120;
  auto pts = domain_grid(problem, per_axis, kGridMargin);

  double phi_max = -HUGE_VAL;
  double l_max = 0.0;
  for (const auto& x : pts) {
    phi_max = std::max(phi_max, map.value(x, 1.0));
    std::vector<double> g = problem.grad(x);
    double norm = 0.0;
    if (problem.domain == ConvexProblem::Domain::Simplex) {
      for (double v : g) norm = std::max(norm, std::abs(v));  // dual of l1
    } else {
      for (double v : g) norm += v * v;
      norm = std::sqrt(norm);
    }
    l_max = std::max(l_max, norm);
  }
  double phi0 = map.value(map_argmin(map, problem), 1.0);

  // rho on a coarser grid: the Hessian stencil is the expensive part.
  double rho_min = HUGE_VAL;
  std::size_t stride = std::max<std::size_t>(1, pts.size() / 400);
  for (std::size_t i = 0; i < pts.size(); i += stride)
    rho_min = std::min(rho_min, hessian_min_eigenvalue(map, pts[i]));

  ConvexConstants c;
  c.R = std::sqrt(std::max(0.0, phi_max - phi0));
  c.L = l_max;
  c.rho = rho_min;
  c.grid = per_axis;
  c.margin = kGridMargin;
  return c;
}

double numeric_prox_oracle(const MirrorMap& map, double x_prev, double g, double eta,
                           double beta) {
  double lo, hi;
  bool simplex_edge = map.kind() == MirrorMapKind::NegativeEntropy;
  if (simplex_edge) {
    lo = 0.0;
    hi = 1.0;
  } else {
    lo = -1.0;
    hi = 1.0;
  }
  auto objective = [&](double x) {
    double linear = eta * g * x;
    if (simplex_edge)
      return linear + map.bregman({x, 1.0 - x}, {x_prev, 1.0 - x_prev}, beta);
    return linear + map.bregman({x}, {x_prev}, beta);
  };
  return golden_section(objective, lo + kOracleMargin, hi - kOracleMargin);
}

ConvexReport run_md_convex(const ConvexProblem& problem, const MirrorMap& map,
                           const BetaSchedule& schedule, const ConvergenceParams& params) {
  schedule.validate();
  if (schedule.cap > params.B)
    throw ConfigError("run_md_convex: schedule cap " + std::to_string(schedule.cap) +
                      " exceeds B = " + std::to_string(params.B));
  if (params.t <= 0) throw ConfigError("run_md_convex: t must be positive");

  std::vector<double> x = map_argmin(map, problem);
  double f_star = problem.f(problem.x_star);

  ConvexReport report;
  report.problem_id = problem.id;
  report.map_name = map.name();
  report.t = params.t;
  report.eta = params.eta;
  report.R = params.R;
  report.L = params.L;
  report.rho = params.rho;
  report.B = params.B;
  report.gap_trajectory.reserve(static_cast<std::size_t>(params.t));

  std::vector<double> sum_x(x.size(), 0.0);
  double beta = schedule.beta0;
  for (long k = 0; k < params.t; ++k) {
    report.gap_trajectory.push_back(problem.f(x) - f_star);
    for (std::size_t i = 0; i < x.size(); ++i) sum_x[i] += x[i];
    std::vector<double> g = problem.grad(x);
    beta = anneal_beta(schedule, k);
    switch (map.kind()) {
      case MirrorMapKind::TanhEntropy:
        x = md_tanh_step(x, g, params.eta, beta);
        break;
      case MirrorMapKind::NegativeEntropy:
        x = md_softmax_step(x, g, params.eta, beta);
        break;
      case MirrorMapKind::Quadratic:
        x = pgd_step(x, g, beta * params.eta, problem.lo, problem.hi);
        break;
      case MirrorMapKind::Numeric: {
        Projection p{map.projection(), 1.0, 2};
        for (std::size_t i = 0; i < x.size(); ++i) {
          double dual = p.inverse_scalar(clamp_interior(x[i])) - beta * params.eta * g[i];
          x[i] = p.project_scalar(dual);
        }
        break;
      }
    }
  }

  std::vector<double> avg(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) avg[i] = sum_x[i] / static_cast<double>(params.t);
  report.gap = problem.f(avg) - f_star;
  report.bound = params.bound();
  report.beta_final = beta;
  report.ok = report.gap <= report.bound;
  return report;
}

}  // namespace mirrorquant
