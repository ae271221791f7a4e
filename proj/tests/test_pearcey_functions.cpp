#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "pearcey/pearcey_functions.hpp"

using namespace pearcey;
using std::numbers::pi;

namespace {

const Grid& grid() {
  static const Grid g = discretize(build_contours(1.0, 10.0, 1e-16));
  return g;
}

struct Ref {
  double s, tau;
  double v[4];
};

// independent quadrature (mpmath, 30 digits) of the defining integrals
const Ref kQ[] = {
    {3.0, 1.0, {0.012251267040980274, -0.057902347363487349, 0.07751333641686892, -0.021148546240546528}},
    {-2.0, -1.0, {-0.060368375235410039, 0.25638602569340293, 0.42523487893881195, -0.13564927522258286}},
    {1.3, 0.7, {0.2090515208419692, -0.15681576595470811, -0.032488060848445341, 0.1619959409262643}},
    {8.0, 0.0, {-0.000514783339431811, NAN, NAN, NAN}},
    {10.0, 0.0, {4.12145538040940e-05, NAN, NAN, NAN}},
};
const Ref kP[] = {
    {2.0, -1.0, {0.23127073318025101, -0.53917442193680479, -0.89208701015239418, 0.076632955576302772}},
    {1.3, 0.7, {0.75120606464283202, 0.69249221098610212, 0.12312788228575868, -0.4918233363454102}},
    {3.0, 1.0, {1.5572783377410568, -0.92269108982681317, -3.9347135901644223, -5.5945261030499834}},
};

}  // namespace

TEST(PearceyQ, ClosedFormAnchors) {
  const auto q = pearcey_Q(0.0, 0.0, grid(), 3);
  EXPECT_NEAR(q[0], std::tgamma(0.25) / (pi * std::pow(4.0, 0.75)), 1e-13);
  EXPECT_NEAR(q[0], 0.408024469549131, 1e-14);
  EXPECT_NEAR(q[1], 0.0, 1e-14);
  EXPECT_NEAR(q[2], -std::pow(4.0, 0.75) * std::tgamma(0.75) / (4 * pi), 1e-13);
  EXPECT_NEAR(q[3], 0.0, 1e-14);
}

TEST(PearceyQ, MatchesIndependentQuadrature) {
  for (const auto& r : kQ) {
    const auto q = pearcey_Q(r.s, r.tau, grid(), 3);
    for (int d = 0; d < 4; ++d)
      if (!std::isnan(r.v[d])) {
        EXPECT_NEAR(q[d], r.v[d], 1e-13) << r.s << " " << r.tau << " d=" << d;
      }
  }
}

TEST(PearceyP, MatchesIndependentQuadrature) {
  for (const auto& r : kP) {
    const auto p = pearcey_P(r.s, r.tau, grid(), 3);
    for (int d = 0; d < 4; ++d) EXPECT_NEAR(p[d], r.v[d], 1e-13) << r.s << " " << r.tau << " d=" << d;
  }
}

// With the calibrated contour orientation P is odd in s.
TEST(PearceyP, OddWithUnitSlopeAtOrigin) {
  const auto p = pearcey_P(0.0, 0.0, grid(), 3);
  EXPECT_NEAR(p[0], 0.0, 1e-14);
  EXPECT_NEAR(p[1], 1.0 / std::sqrt(pi), 1e-13);
  EXPECT_NEAR(p[2], 0.0, 1e-14);
  for (double tau : {-1.0, 0.0, 1.0})
    for (double s : {0.4, 1.7, 3.2}) {
      const auto a = pearcey_P(s, tau, grid(), 1), b = pearcey_P(-s, tau, grid(), 1);
      EXPECT_LE(std::abs(a[0] + b[0]), 1e-10 * (1 + std::abs(a[0])));
      EXPECT_LE(std::abs(a[1] - b[1]), 1e-10 * (1 + std::abs(a[1])));
    }
}

TEST(PearceyQ, Even) {
  for (double tau : {-1.0, 0.0, 1.0})
    for (double s : {0.4, 1.7, 3.2, 4.9}) {
      const double a = pearcey_Q(s, tau, grid(), 0)[0], b = pearcey_Q(-s, tau, grid(), 0)[0];
      EXPECT_LE(std::abs(a - b), 1e-10 * (1 + std::abs(a)));
    }
}

TEST(PearceyFunctions, OdeResidualOverGrid) {
  for (double tau : {-1.0, 0.0, 1.0})
    for (int i = 0; i <= 40; ++i) {
      const double s = -5.0 + 0.25 * i;
      EXPECT_LE(ode_residual(pearcey_Q(s, tau, grid(), 3), Branch::Q), 1e-8) << s << " " << tau;
      EXPECT_LE(ode_residual(pearcey_P(s, tau, grid(), 3), Branch::P), 1e-8) << s << " " << tau;
    }
  EXPECT_LE(ode_residual(pearcey_Q(0, 0, grid(), 3), Branch::Q), 1e-10);
}

TEST(PearceyFunctions, OdeResidualDetectsWrongBranch) {
  // Q does not satisfy the P equation
  EXPECT_GT(ode_residual(pearcey_Q(2.0, 1.0, grid(), 3), Branch::P), 1e-3);
  EXPECT_THROW(ode_residual(pearcey_Q(2.0, 1.0, grid(), 2), Branch::Q), Error);
}

TEST(PearceyFunctions, ImaginaryPartsNegligible) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> us(-5, 5), ut(-1, 1);
  for (int i = 0; i < 40; ++i) {
    const double s = us(rng), tau = ut(rng);
    for (const auto& e : {pearcey_Q(s, tau, grid(), 3), pearcey_P(s, tau, grid(), 3)})
      for (int d = 0; d < 4; ++d) EXPECT_LE(std::abs(e.imag[d]), 1e-10 * (1 + std::abs(e.values[d])));
  }
}

TEST(PearceyFunctions, Errors) {
  EXPECT_THROW(pearcey_Q(0, 0, grid(), 4), Error);
  EXPECT_THROW(pearcey_P(0, 0, grid(), -1), Error);
  // truncation far too short for this shift
  const Grid small = discretize(make_contour_spec(2.0));
  try {
    pearcey_P(30.0, 0.0, small, 0);
    ADD_FAILURE() << "expected precision loss";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::precision_loss);
  }
  EXPECT_THROW(pearcey_Q(0.0, 0.0, small, 0), Error);
}

TEST(SaddlePoints, Trivial) {
  const auto z = saddle_points(0.0, 0.0);
  for (const auto& mu : z.mu) EXPECT_EQ(std::abs(mu), 0.0);
}

TEST(SaddlePoints, RealRootFirst) {
  const auto z = saddle_points(2.0, 0.0);
  EXPECT_NEAR(z.mu[0].real(), std::cbrt(2.0), 1e-14);
  EXPECT_NEAR(z.mu[0].imag(), 0.0, 1e-14);
  EXPECT_LE(std::abs(z.mu[0] * z.mu[0] * z.mu[0] - 2.0), 1e-12);
}

TEST(SaddlePoints, ResidualAndVieta) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> us(-20, 20), ut(-6, 6);
  for (int i = 0; i < 200; ++i) {
    const double s = us(rng), tau = ut(rng);
    const auto z = saddle_points(s, tau);
    const double tol = 1e-10 * std::pow(1 + std::abs(s) + std::abs(tau), 1.5);
    for (const auto& mu : z.mu) EXPECT_LE(std::abs(mu * mu * mu - tau * mu - s), tol) << s << " " << tau;
    EXPECT_LE(std::abs(z.mu[0] * z.mu[1] * z.mu[2] - s), 10 * tol);
    EXPECT_LE(std::abs(z.mu[0] + z.mu[1] + z.mu[2]), 10 * tol);
    EXPECT_LE(std::abs(z.mu[0] * z.mu[1] + z.mu[1] * z.mu[2] + z.mu[0] * z.mu[2] + tau), 10 * tol);
  }
}

TEST(SaddlePoints, NearDiscriminantZero) {
  // s^2 = 4 tau^3 / 27 at tau = 3, s = 2: double root at -1
  for (double ds : {0.0, 1e-14, -1e-14, 1e-8, -1e-8}) {
    const double s = 2.0 + ds;
    const auto z = saddle_points(s, 3.0);
    for (const auto& mu : z.mu) EXPECT_LE(std::abs(mu * mu * mu - 3.0 * mu - s), 1e-10 * std::pow(6.0, 1.5));
  }
}

TEST(SaddlePoints, NegativeTau) {
  const auto z = saddle_points(0.5, -2.0);
  for (const auto& mu : z.mu) EXPECT_LE(std::abs(mu * mu * mu + 2.0 * mu - 0.5), 1e-12);
  EXPECT_NEAR(z.mu[0].imag(), 0.0, 1e-14);
}

TEST(Asymptotic, PhaseAndEnvelopeIdentity) {
  EXPECT_NEAR(asymptotic_phase(1.0, 0.0), 0.75 * std::sin(2 * pi / 3) - pi / 6, 1e-15);
  EXPECT_NEAR(asymptotic_phase(1.0, 0.0), 0.125920, 1e-6);
  for (double s : {0.5, 2.0, 7.0})
    for (double tau : {-1.0, 0.0, 1.0}) {
      const double prod = asymptotic(s, tau, Branch::P) * asymptotic(s, tau, Branch::Q);
      const double c = std::cos(asymptotic_phase(s, tau));
      EXPECT_NEAR(prod, 2.0 / (3 * pi) * std::pow(s, -2.0 / 3.0) * c * c, 1e-14);
    }
}

TEST(Asymptotic, DomainError) {
  EXPECT_THROW(asymptotic(0.0, 0.0, Branch::Q), Error);
  EXPECT_THROW(asymptotic(-1.0, 1.0, Branch::P), Error);
}

TEST(Asymptotic, QErrorShrinksFromSixToTen) {
  auto err = [](double s) {
    return std::abs(pearcey_Q(s, 0.0, grid(), 0)[0] - asymptotic(s, 0.0, Branch::Q)) /
           asymptotic_envelope(s, 0.0, Branch::Q);
  };
  EXPECT_LT(err(10.0), err(6.0));
  EXPECT_LT(err(10.0), 5e-3);
}

// The odd P follows the common envelope with the phase constant -pi/3
// rather than the -pi/6 of Q; the shared formula misses it by O(1).
TEST(Asymptotic, PFollowsEnvelopeWithShiftedPhase) {
  for (double tau : {0.0, 1.0})
    for (double s : {6.0, 8.0, 10.0}) {
      const double env = asymptotic_envelope(s, tau, Branch::P);
      const double p = pearcey_P(s, tau, grid(), 0)[0] / env;
      EXPECT_LE(std::abs(p - std::cos(asymptotic_phase(s, tau) - pi / 6)), 0.03) << s << " " << tau;
    }
  double worst = 0.0;
  for (double s : {6.0, 8.0, 10.0})
    worst = std::max(worst, std::abs(pearcey_P(s, 0.0, grid(), 0)[0] - asymptotic(s, 0.0, Branch::P)) /
                                asymptotic_envelope(s, 0.0, Branch::P));
  EXPECT_GT(worst, 0.1);
}
