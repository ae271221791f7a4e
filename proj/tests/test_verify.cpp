#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "pearcey/verify.hpp"

using namespace pearcey;

namespace {

const ModelConfig kStandard{{-1, 1}, {0, 0.5, 0}, 1.0, 0.0};
const ModelConfig kN3{{-2, 0, 1.5}, {0, 0.3, 0.7, 0}, 0.5, 0.2};
const ModelConfig kDegenerate{{-1, 1}, {0, 0, 0}, 1.0, 0.0};

const Grid& grid() {
  static const Grid g = verification_grid(kN3);
  return g;
}

double max_relative(const std::vector<ResidualReport>& rs) {
  double m = 0.0;
  for (const auto& r : rs) m = std::max(m, r.relative);
  return m;
}

}  // namespace

// ---------------------------------------------------------------------------
// Finite differences

TEST(FiniteDifference, FornbergWeights) {
  const auto w1 = fd_weights(1, 5);
  const double e1[] = {1.0 / 12, -2.0 / 3, 0.0, 2.0 / 3, -1.0 / 12};
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(w1[i], e1[i], 1e-15);
  const auto w2 = fd_weights(2, 5);
  const double e2[] = {-1.0 / 12, 4.0 / 3, -2.5, 4.0 / 3, -1.0 / 12};
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(w2[i], e2[i], 1e-14);
  const auto w4 = fd_weights(4, 7);
  const double e4[] = {-1.0 / 6, 2.0, -13.0 / 2, 28.0 / 3, -13.0 / 2, 2.0, -1.0 / 6};
  for (int i = 0; i < 7; ++i) EXPECT_NEAR(w4[i], e4[i], 1e-12);
  // every derivative stencil annihilates constants
  for (int d = 1; d <= 4; ++d) {
    const auto w = fd_weights(d, 7);
    EXPECT_NEAR(std::accumulate(w.begin(), w.end(), 0.0), 0.0, 1e-12);
  }
  EXPECT_EQ(fd_accuracy(1, 5), 4);
  EXPECT_EQ(fd_accuracy(2, 5), 4);
  EXPECT_EQ(fd_accuracy(3, 7), 4);
  EXPECT_EQ(fd_accuracy(3, 5), 2);
}

TEST(FiniteDifference, ElementaryFunctions) {
  const std::function<double(double)> ex = [](double s) { return std::exp(s); };
  EXPECT_NEAR(fd_derivative(ex, 0.0, FDScheme{}), 1.0, 1e-9);
  const std::function<double(double)> q = [](double s) { return s * s * s * s; };
  EXPECT_NEAR(fd_derivative(q, 0.3, FDScheme{}.with_order(4)), 24.0, 1e-6);
  const std::function<double(double)> k = [](double) { return 3.7; };
  for (int d = 1; d <= 4; ++d) EXPECT_NEAR(fd_derivative(k, 1.0, FDScheme{}.with_order(d)), 0.0, 1e-12 / std::pow(1e-2, d) + 1e-12);
  const std::function<double(double)> sn = [](double s) { return std::sin(s); };
  EXPECT_NEAR(fd_derivative(sn, 0.5, FDScheme{}.with_order(3)), -std::cos(0.5), 1e-6);
}

TEST(FiniteDifference, RichardsonImprovesAccuracy) {
  const std::function<double(double)> sn = [](double s) { return std::sin(3 * s); };
  const double exact = 3 * std::cos(1.5);
  FDScheme sc{0.1, 1, 5, 0};
  const double e0 = std::abs(fd_derivative(sn, 0.5, sc) - exact);
  sc.richardson = 1;
  const double e1 = std::abs(fd_derivative(sn, 0.5, sc) - exact);
  EXPECT_LT(e1, e0 / 20);
}

TEST(FiniteDifference, SamplerSharesPointsAcrossLevels) {
  int calls = 0;
  Sampler<double> s([&](double x) { ++calls; return x * x; }, 0.0, sampler_unit(FDScheme{}));
  fd_derivative(s, FDScheme{});
  // level 0 uses +-2, +-4 units and level 1 +-1, +-2
  EXPECT_EQ(s.evaluations(), 6u);
  EXPECT_EQ(calls, 6);
  Sampler<double> wrong([](double x) { return x; }, 0.0, 0.5);
  EXPECT_THROW(fd_derivative(wrong, FDScheme{}), Error);
}

TEST(FiniteDifference, SchemeValidation) {
  EXPECT_THROW(validate(FDScheme{1.0, 1, 5, 1}), Error);
  EXPECT_THROW(validate(FDScheme{1e-5, 1, 5, 1}), Error);
  EXPECT_THROW(validate(FDScheme{1e-2, 0, 5, 1}), Error);
  EXPECT_THROW(validate(FDScheme{1e-2, 1, 3, 1}), Error);
  EXPECT_THROW(validate(FDScheme{1e-2, 1, 5, 3}), Error);
  EXPECT_THROW(validate(FDScheme{1e-2, 5, 7, 0}), Error);
  EXPECT_NO_THROW(validate(FDScheme{1e-2, 4, 5, 0}));
  EXPECT_NO_THROW(validate(FDScheme{1e-2, 4, 7, 0}));
  EXPECT_EQ(FDScheme{}.with_order(3).width, 7);
  EXPECT_EQ(FDScheme{}.with_order(2).width, 5);
}

TEST(Reports, ScaleFloorAndJson) {
  const auto r = make_report("x", kStandard, 0.0, 0.0, 1e-3);
  EXPECT_TRUE(r.pass);
  EXPECT_GT(r.scale, 0.0);
  EXPECT_EQ(r.relative, 0.0);
  const auto bad = make_report("y", kStandard, NAN, 1.0, 1.0);
  EXPECT_FALSE(bad.pass);
  const auto j = to_json(make_report("z", kStandard, 1e-4, 2.0, 1e-3));
  EXPECT_EQ(j["identity"], "z");
  EXPECT_DOUBLE_EQ(j["relative"].get<double>(), 5e-5);
  EXPECT_EQ(j["config_hash"], config_hash(kStandard));
  const std::vector<ResidualReport> rs{r, bad};
  EXPECT_FALSE(all_pass(rs));
}

// ---------------------------------------------------------------------------
// Identities

TEST(Identities, DeltaIsMinusLogDerivative) {
  for (const auto& c : {kStandard, kN3, kStandard.with_s(0.7)}) {
    const auto r = check_logF_delta(c, grid());
    EXPECT_TRUE(r.pass) << r.relative;
    EXPECT_LE(r.relative, 1e-9);
  }
}

TEST(Identities, LogFDeltaTruncationOrder) {
  // without Richardson the width-5 stencil converges as h^4
  const ModelConfig c = kStandard.with_s(0.5);
  VerifyOptions o;
  o.s_scheme = {0.1, 1, 5, 0};
  const double r0 = check_logF_delta(c, grid(), o).residual;
  o.s_scheme.step = 0.05;
  const double r1 = check_logF_delta(c, grid(), o).residual;
  EXPECT_GT(r0, 1e-9);
  EXPECT_NEAR(r1 / r0, 1.0 / 16.0, 0.03);
}

TEST(Identities, TracyWidomAndDeltaS) {
  for (const auto& c : {kStandard, kN3}) {
    EXPECT_LE(check_tw_formula(c, grid()).relative, 1e-7);
    EXPECT_LE(check_delta_s(c, grid()).relative, 1e-9);
  }
}

TEST(Identities, ThirdOrderSystem) {
  for (const auto& c : {kStandard, kN3}) {
    const auto rs = check_ode3(c, grid());
    ASSERT_EQ(rs.size(), 2u);
    EXPECT_EQ(rs[0].identity, "ode3.p");
    EXPECT_TRUE(all_pass(rs)) << max_relative(rs);
    EXPECT_LE(max_relative(rs), 1e-6);
  }
  EXPECT_TRUE(ode3_convergence(kStandard, grid()).pass);
  // above the noise floor halving the step cuts the residual by about 2^4
  const auto coarse = ode3_convergence(kStandard, grid(), 4e-2);
  for (std::size_t i = 0; i < coarse.ratio.size(); ++i) {
    EXPECT_GT(coarse.fine[i].relative, coarse.noise_floor[i] / 100);
    EXPECT_NEAR(coarse.ratio[i], 1.0 / 16.0, 0.03);
  }
}

TEST(Identities, ThirdOrderSystemRejectsWrongSign) {
  // the p-row as printed vanishes; with +tau p' in place of -tau p' it does not
  StateSampler ss(kStandard, grid(), StateSampler::Axis::s, FDScheme{});
  const State x = ss.center();
  const State d1 = ss.derivative(FDScheme{}.with_order(1));
  const State d3 = ss.derivative(FDScheme{}.with_order(3));
  CVector dvec(2);
  dvec << -1.0, 1.0;
  const cplx ptq = detail::dot(x.p, x.q);
  const CVector good = d3.p + 3.0 * detail::dot(d1.p, x.q) * x.p + 3.0 * ptq * d1.p - 1.0 * d1.p + dvec.cwiseProduct(x.p);
  const CVector bad = good + 2.0 * d1.p;
  EXPECT_LT(good.norm(), 1e-6 * d3.p.norm());
  EXPECT_GT(bad.norm(), 1e-2 * d3.p.norm());
}

TEST(Identities, HeatAndTauIdentity) {
  for (const auto& c : {kStandard, kN3, kStandard.with_tau(-0.5)}) {
    const auto h = check_heat(c, grid());
    EXPECT_TRUE(all_pass(h)) << max_relative(h);
    EXPECT_LE(max_relative(h), 1e-7);
    const auto t = check_tau_identity(c, grid());
    EXPECT_LE(t.relative, 1e-7);
  }
}

TEST(Identities, PdeOnSubGrid) {
  const auto rs = check_pde_grid(kStandard, grid());
  ASSERT_EQ(rs.size(), 9u);
  EXPECT_TRUE(all_pass(rs)) << max_relative(rs);
  EXPECT_NEAR(rs[0].s, -0.5, 1e-15);
  EXPECT_NEAR(rs[0].tau, 0.75, 1e-15);
}

TEST(Identities, LaxConsistency) {
  for (const auto& c : {kStandard, kN3}) {
    const auto r = check_lax_consistency(c, grid());
    EXPECT_TRUE(r.pass) << r.relative;
    EXPECT_LE(r.relative, 1e-5);
  }
}

TEST(Identities, DegenerateConfigIsExact) {
  for (const auto& suite : {"delta", "tw", "ode3", "heat", "pde", "tau-id", "asym"}) {
    const auto rs = run_suite(suite, kDegenerate, grid());
    EXPECT_FALSE(rs.empty());
    for (const auto& r : rs) {
      EXPECT_LE(r.residual, 1e-12) << suite << " " << r.identity;
      EXPECT_TRUE(r.pass) << suite << " " << r.identity;
    }
  }
  EXPECT_THROW(run_suite("nope", kStandard, grid()), Error);
  EXPECT_EQ(suite_names().back(), "all");
}

TEST(Identities, BranchFlipLeavesResidualsUnchanged) {
  VerifyOptions flip;
  flip.flip_branch = true;
  EXPECT_NEAR(check_tw_formula(kN3, grid(), flip).residual, check_tw_formula(kN3, grid()).residual, 1e-10);
  const auto a = check_ode3(kN3, grid()), b = check_ode3(kN3, grid(), flip);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i].relative, b[i].relative, 1e-9);
}

// ---------------------------------------------------------------------------
// Asymptotics

TEST(Asymptotics, Mechanics) {
  const double s_list[] = {4.0, 6.0};
  const Grid far = default_grid(kStandard.with_s(6.0));
  const auto a = check_asymptotics(kStandard, far, s_list);
  const auto b = check_asymptotics(kStandard, far, s_list, true);
  ASSERT_EQ(a.size(), 8u);  // 2 s values x 2 components x {q, p}
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_NEAR(a[i].residual, b[i].residual, 1e-10);
    EXPECT_TRUE(std::isfinite(a[i].residual));
  }
  EXPECT_EQ(a[0].identity, "asym.q[1]");
  EXPECT_TRUE(a[0].pass);  // first row of each component
  // components with dk = 0 carry an exact zero
  ModelConfig half{{-1, 1, 2}, {0, 0.5, 0.5, 0}, 1.0, 0.0};
  for (const auto& r : check_asymptotics(half, far, s_list))
    if (r.identity.find("[2]") != std::string::npos) {
      EXPECT_EQ(r.residual, 0.0);
      EXPECT_TRUE(r.pass);
    }
}

TEST(Asymptotics, ArgumentErrors) {
  const Grid far = default_grid(kStandard.with_s(6.0));
  EXPECT_THROW(check_asymptotics(kStandard, far, std::vector<double>{}), Error);
  EXPECT_THROW(check_asymptotics(kStandard, far, std::vector<double>{2.0, 6.0}), Error);
  EXPECT_THROW(check_asymptotics(kStandard, far, std::vector<double>{6.0, 4.0}), Error);
  try {
    check_asymptotics(ModelConfig{{-5, 1}, {0, 0.5, 0}, 1.0, 0.0}, far, std::vector<double>{4.0});
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::domain);
  }
}

TEST(Asymptotics, SpecialFunctionRowsDecreaseAtPositiveTau) {
  const Grid g = discretize(build_contours(1.0, 12.0, 1e-16));
  const auto rs = check_special_asymptotics(1.0, std::vector<double>{5, 6, 8, 10}, g);
  ASSERT_EQ(rs.size(), 4u);
  for (const auto& r : rs) EXPECT_TRUE(r.pass) << r.s << " " << r.relative;
}

// ---------------------------------------------------------------------------
// Occupancy

TEST(Occupancy, ZeroParticlesIsTheGapProbability) {
  const OccupancyTable t(kStandard, grid());
  const int m0[] = {0};
  ModelConfig gap = kStandard;
  gap.k = {0, 1, 0};
  EXPECT_NEAR(t.probability(m0), genfun(gap, grid()), 1e-10);
}

TEST(Occupancy, NormalizedAndNonnegative) {
  const OccupancyTable t(kStandard, grid());
  double sum = 0.0;
  for (int m = 0; m < 16; ++m) {
    const int mm[] = {m};
    const double p = t.probability(mm);
    EXPECT_GE(p, -1e-10) << m;
    EXPECT_LE(p, 1.0) << m;
    sum += p;
  }
  EXPECT_NEAR(sum, 1.0, 1e-8);
  // the generating function at k = 0.5 is the mean of (1 - 0.5)^m
  double gen = 0.0;
  for (int m = 0; m < 16; ++m) {
    const int mm[] = {m};
    gen += t.probability(mm) * std::pow(0.5, m);
  }
  EXPECT_NEAR(gen, genfun(kStandard, grid()), 1e-8);
}

// Summing the joint law over the second interval recovers the one-interval law.
TEST(Occupancy, MarginalOfTwoIntervals) {
  const ModelConfig two{{-1, 0.3, 1.2}, {0, 0.5, 0.5, 0}, 1.0, 0.0};
  const ModelConfig one{{-1, 0.3}, {0, 0.5, 0}, 1.0, 0.0};
  const OccupancyTable joint(two, grid(), 0.5, 16), single(one, grid(), 0.5, 16);
  for (int m1 = 0; m1 < 4; ++m1) {
    double marg = 0.0;
    for (int m2 = 0; m2 < 10; ++m2) {
      const int mm[] = {m1, m2};
      marg += joint.probability(mm);
    }
    const int m[] = {m1};
    EXPECT_NEAR(marg, single.probability(m), 1e-8) << m1;
  }
}

TEST(Occupancy, Errors) {
  const ModelConfig big{{-2, -1, 0, 1, 2}, {0, 0.5, 0.5, 0.5, 0.5, 0}, 1.0, 0.0};
  try {
    OccupancyTable t(big, grid(), 0.5, 2);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::cost_guard);
  }
  EXPECT_THROW(OccupancyTable(kStandard, grid(), 1.5), Error);
  EXPECT_THROW(OccupancyTable(kStandard, grid(), 0.5, 0), Error);
  const OccupancyTable t(kStandard, grid(), 0.5, 8);
  const int alias[] = {8};
  EXPECT_THROW(t.probability(alias), Error);
  const int neg[] = {-1};
  EXPECT_THROW(t.probability(neg), Error);
  const int wrong[] = {0, 0};
  EXPECT_THROW(t.probability(wrong), Error);
  EXPECT_EQ(t.intervals(), 1u);
}

TEST(Diagnostics, ReflectionSymmetry) {
  for (const auto& c : {kStandard.with_s(0.4), kN3}) EXPECT_LE(reflection_diagnostic(c, grid()), 1e-12);
}
