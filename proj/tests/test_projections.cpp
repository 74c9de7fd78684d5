#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "mirrorquant/projections.hpp"
#include "oracles.hpp"

using namespace mirrorquant;
namespace fz = oracles::frozen;

TEST_CASE("quant levels: nearest level, ties toward the larger level") {
  QuantLevels binary = QuantLevels::binary();
  QuantLevels ternary = QuantLevels::ternary();

  CHECK(binary.nearest(0.7) == 1.0);
  CHECK(binary.nearest(-0.1) == -1.0);
  CHECK(binary.nearest(0.0) == 1.0);  // tie -> larger level
  CHECK(ternary.nearest(0.4) == 0.0);
  CHECK(ternary.nearest(0.5) == 1.0);  // tie -> larger level
  CHECK(ternary.nearest(-0.5) == 0.0);
  CHECK(ternary.nearest_index(-2.0) == 0);

  CHECK_NOTHROW(binary.validate());
  CHECK_THROWS_AS((QuantLevels{{1.0}}.validate()), ConfigError);
  CHECK_THROWS_AS((QuantLevels{{1.0, -1.0}}.validate()), ConfigError);
  CHECK_THROWS_AS((QuantLevels{{0.0, 0.0}}.validate()), ConfigError);
}

TEST_CASE("tanh projection: frozen values, oddness, saturation") {
  CHECK(tanh_project(1.0, 1.0) == doctest::Approx(fz::kTanh1).epsilon(1e-15));
  CHECK(tanh_project(0.0, 123.0) == 0.0);
  for (double x : {0.1, 0.7, 2.5})
    CHECK(tanh_project(-x, 3.0) == doctest::Approx(-tanh_project(x, 3.0)).epsilon(1e-15));
  // high beta saturates everything away from zero
  CHECK(std::fabs(tanh_project(0.01, 1e4)) > 1.0 - 1e-4);
  CHECK(std::fabs(tanh_project(-0.01, 1e4)) > 1.0 - 1e-4);
}

TEST_CASE("tanh inverse: frozen values, round trip, domain errors") {
  CHECK(tanh_inverse(0.5, 1.0) == doctest::Approx(fz::kAtanhHalf).epsilon(1e-14));
  CHECK(tanh_inverse(0.999999, 1.0) == doctest::Approx(fz::kAtanh1m1em6).epsilon(1e-9));
  CHECK(tanh_inverse(0.5, 2.0) == doctest::Approx(fz::kAtanhHalf / 2.0).epsilon(1e-14));

  for (double beta : {1.0, 3.0, 40.0})
    for (double x = -6.0; x <= 6.0; x += 0.37) {
      double x_scaled = x / beta;
      CHECK(tanh_inverse(tanh_project(x_scaled, beta), beta) ==
            doctest::Approx(x_scaled).epsilon(1e-9));
    }

  CHECK_THROWS_AS(tanh_inverse(1.0, 1.0), OutOfDomainError);
  CHECK_THROWS_AS(tanh_inverse(-1.0, 1.0), OutOfDomainError);
  CHECK_THROWS_AS(tanh_inverse(1.5, 1.0), OutOfDomainError);
}

TEST_CASE("tanh jacobian: frozen values and finite differences") {
  CHECK(tanh_jacobian(0.0, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(tanh_jacobian(0.0, 4.0) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(tanh_jacobian(1.0, 1.0) == doctest::Approx(fz::kSech2At1).epsilon(1e-14));
  CHECK(tanh_jacobian(2.0, 3.0) == doctest::Approx(fz::kJacobian3At2).epsilon(1e-12));

  for (double beta : {1.0, 2.5})
    for (double x = -2.0; x <= 2.0; x += 0.23) {
      double fd = oracles::central_diff([beta](double z) { return tanh_project(z, beta); }, x);
      CHECK(oracles::rel_err(tanh_jacobian(x, beta), fd) < 1e-6);
    }
}

TEST_CASE("shifted staircase: frozen value, oddness, plateau, inverse, jacobian") {
  CHECK(shifted_tanh_project(0.5, 1.0) == doctest::Approx(fz::kShiftedHalfB1).epsilon(1e-14));
  CHECK(shifted_tanh_project(0.0, 7.0) == doctest::Approx(0.0).epsilon(1e-15));
  for (double x : {0.2, 0.5, 1.3})
    CHECK(shifted_tanh_project(-x, 2.0) ==
          doctest::Approx(-shifted_tanh_project(x, 2.0)).epsilon(1e-14));

  // at high beta the three plateaus are -1, 0, +1
  CHECK(std::fabs(shifted_tanh_project(0.25, 1e3)) < 1e-10);
  CHECK(shifted_tanh_project(0.75, 1e3) > 1.0 - 1e-10);
  CHECK(shifted_tanh_project(-0.75, 1e3) < -1.0 + 1e-10);

  CHECK(shifted_tanh_inverse(0.0, 2.0) == 0.0);
  CHECK(shifted_tanh_inverse(fz::kShiftedHalfB1, 1.0) == doctest::Approx(0.5).epsilon(1e-10));
  // dual-space round trip inside the window where the staircase slope has not
  // collapsed (outside it, the inverse is ill-conditioned by construction)
  for (double beta : {1.0, 2.0, 5.0}) {
    double span = std::min(3.0, 8.0 / beta - 0.5);
    for (int i = 0; i <= 40; ++i) {
      double x = -span + 2.0 * span * i / 40.0;
      CHECK(shifted_tanh_inverse(shifted_tanh_project(x, beta), beta) ==
            doctest::Approx(x).epsilon(1e-8).scale(1e-8));
    }
  }
  // primal-space round trip is well conditioned everywhere
  for (double beta : {1.0, 2.0, 5.0})
    for (double w = -0.999; w <= 0.999; w += 0.037)
      CHECK(shifted_tanh_project(shifted_tanh_inverse(w, beta), beta) ==
            doctest::Approx(w).epsilon(1e-10));
  CHECK_THROWS_AS(shifted_tanh_inverse(1.0, 1.0), OutOfDomainError);
  CHECK_THROWS_AS(shifted_tanh_inverse(-1.2, 1.0), OutOfDomainError);

  for (double x = -2.0; x <= 2.0; x += 0.27) {
    double fd = oracles::central_diff([](double z) { return shifted_tanh_project(z, 1.5); }, x);
    CHECK(oracles::rel_err(shifted_tanh_jacobian(x, 1.5), fd) < 1e-6);
  }
}

TEST_CASE("sign projection") {
  CHECK(sign_project(0.3) == 1.0);
  CHECK(sign_project(-1e-300) == -1.0);
  CHECK(sign_project(0.0) == 1.0);
  CHECK(sign_project(-5.0) == -1.0);
}

TEST_CASE("softmax projection: frozen values, shift invariance, normalization") {
  std::vector<double> u = softmax_project({0.0, 0.0}, 7.0);
  CHECK(u[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(u[1] == doctest::Approx(0.5).epsilon(1e-15));

  u = softmax_project({fz::kLn2, 0.0}, 1.0);
  CHECK(u[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(u[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));

  // shifting every logit by a constant leaves the output unchanged
  std::vector<double> a = softmax_project({0.3, -1.2, 0.9}, 2.0);
  std::vector<double> b = softmax_project({0.3 + 3.7, -1.2 + 3.7, 0.9 + 3.7}, 2.0);
  for (int i = 0; i < 3; ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-14));

  // extreme logits stay normalized and inside [0, 1]
  std::vector<double> wide = softmax_project({-700.0, 0.0, 700.0}, 1.0);
  double sum = wide[0] + wide[1] + wide[2];
  CHECK(std::fabs(sum - 1.0) < 1e-12);
  for (double v : wide) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("softmax inverse: canonical values, fixed point, domain errors") {
  std::vector<double> v = softmax_inverse({0.5, 0.5}, 1.0);
  CHECK(v[0] == doctest::Approx(-fz::kLn2).epsilon(1e-15));
  CHECK(v[1] == doctest::Approx(-fz::kLn2).epsilon(1e-15));

  // P(P^-1(u)) = u for simplex points
  for (double beta : {1.0, 3.0}) {
    std::vector<double> u = {0.2, 0.5, 0.3};
    std::vector<double> back = softmax_project(softmax_inverse(u, beta), beta);
    for (int i = 0; i < 3; ++i) CHECK(back[i] == doctest::Approx(u[i]).epsilon(1e-12));
  }

  CHECK_THROWS_AS(softmax_inverse({0.0, 1.0}, 1.0), OutOfDomainError);
  CHECK_THROWS_AS(softmax_inverse({-0.1, 1.1}, 1.0), OutOfDomainError);
}

TEST_CASE("softmax diagonal jacobian matches finite differences") {
  std::vector<double> base = {0.4, -0.3, 1.1};
  for (double beta : {1.0, 2.0}) {
    std::vector<double> jac = softmax_diag_jacobian(base, beta);
    for (int i = 0; i < 3; ++i) {
      double fd = oracles::central_diff(
          [&, i](double z) {
            std::vector<double> x = base;
            x[static_cast<std::size_t>(i)] = z;
            return softmax_project(x, beta)[static_cast<std::size_t>(i)];
          },
          base[static_cast<std::size_t>(i)]);
      CHECK(oracles::rel_err(jac[static_cast<std::size_t>(i)], fd) < 1e-6);
    }
  }
}

TEST_CASE("strict monotonicity of the scalar projections") {
  // stay inside the window where tanh is not saturated to +-1 in doubles
  for (double beta : {1.0, 10.0, 100.0}) {
    double span = 6.0 / beta;
    double prev_t = tanh_project(-span, beta);
    for (int i = 1; i <= 60; ++i) {
      double cur = tanh_project(-span + 2.0 * span * i / 60.0, beta);
      CHECK(cur > prev_t);
      prev_t = cur;
    }
    double width = std::min(1.3, 13.0 / beta);
    double prev_s = shifted_tanh_project(0.5 - width, beta);
    for (int i = 1; i <= 60; ++i) {
      double cur = shifted_tanh_project(0.5 - width + 2.0 * width * i / 60.0, beta);
      CHECK(cur > prev_s);
      prev_s = cur;
    }
  }
}

TEST_CASE("projection struct dispatches to the right family") {
  Projection tanh_p{ProjectionKind::Tanh, 2.0, 2};
  CHECK(tanh_p.project_scalar(0.5) == tanh_project(0.5, 2.0));
  CHECK(tanh_p.inverse_scalar(0.5) == tanh_inverse(0.5, 2.0));
  CHECK(tanh_p.jacobian_scalar(0.5) == tanh_jacobian(0.5, 2.0));

  Projection shifted{ProjectionKind::ShiftedTanh, 3.0, 2};
  CHECK(shifted.project_scalar(0.7) == shifted_tanh_project(0.7, 3.0));
  CHECK(shifted.inverse_scalar(0.3) == shifted_tanh_inverse(0.3, 3.0));

  Projection sign{ProjectionKind::Sign, 1.0, 2};
  CHECK(sign.project_scalar(-0.2) == -1.0);
  CHECK_THROWS_AS(sign.inverse_scalar(0.5), ConfigError);
}

TEST_CASE("projection kind names round trip") {
  for (ProjectionKind k : {ProjectionKind::Tanh, ProjectionKind::ShiftedTanh,
                           ProjectionKind::Softmax, ProjectionKind::Sign})
    CHECK(projection_kind_from_string(to_string(k)) == k);
  CHECK_THROWS_AS(projection_kind_from_string("sigmoid"), ConfigError);
}
