#pragma once

// Finite-difference engine and residual checks of the integrable structure:
// d/ds log F = -delta, d2/ds2 log F = p^T q, the coupled third order system,
// the nonlinear heat equation, the PDE for log F, large-s asymptotics and
// occupancy probabilities by Cauchy integrals in k.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "pearcey/error.hpp"
#include "pearcey/io.hpp"
#include "pearcey/operators.hpp"
#include "pearcey/pearcey_functions.hpp"
#include "pearcey/rhp.hpp"

namespace pearcey {

// ---------------------------------------------------------------------------
// Finite differences

struct FDScheme {
  double step = 1e-2;
  int order = 1;
  /// centered stencil width, 5 or 7
  int width = 5;
  int richardson = 1;

  FDScheme with_order(int d) const {
    FDScheme s = *this;
    s.order = d;
    if (d >= 3) s.width = std::max(s.width, 7);
    return s;
  }
};

inline void validate(const FDScheme& s) {
  if (!(s.step >= 1e-4 && s.step <= 1e-1)) fail(ErrorKind::invalid_argument, "FD step must lie in [1e-4, 1e-1]");
  if (s.order < 1 || s.order > 4) fail(ErrorKind::invalid_argument, "FD order must lie in 1..4");
  if (s.width != 5 && s.width != 7) fail(ErrorKind::invalid_argument, "FD stencil width must be 5 or 7");
  if (s.width < s.order + 1) fail(ErrorKind::invalid_argument, "FD stencil too narrow for the order");
  if (s.richardson < 0 || s.richardson > 2) fail(ErrorKind::invalid_argument, "Richardson levels must lie in 0..2");
}

/// Truncation order of the centered stencil: width - order, rounded up to even.
inline int fd_accuracy(int order, int width) {
  const int p = width - order;
  return p % 2 == 0 ? p : p + 1;
}

/// Fornberg's weights for the derivative of the given order at 0 on the
/// integer nodes -m..m, m = (width-1)/2.
inline std::vector<double> fd_weights(int order, int width) {
  const int n = width;
  const int m = (width - 1) / 2;
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[i] = i - m;
  // c[j][k]: weight of node j for derivative k
  std::vector<std::vector<double>> c(n, std::vector<double>(order + 1, 0.0));
  c[0][0] = 1.0;
  double c1 = 1.0;
  for (int i = 1; i < n; ++i) {
    double c2 = 1.0;
    const int mn = std::min(i, order);
    for (int j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) c[i][k] = c1 * (k * c[i - 1][k - 1] - x[i - 1] * c[i - 1][k]) / c2;
        c[i][0] = -c1 * x[i - 1] * c[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k) c[j][k] = (x[i] * c[j][k] - k * c[j][k - 1]) / c3;
      c[j][0] = x[i] * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = c[i][order];
  return w;
}

/// Memoized samples of f at x0 + k * unit.
template <class T>
class Sampler {
 public:
  Sampler(std::function<T(double)> f, double x0, double unit) : f_(std::move(f)), x0_(x0), unit_(unit) {}

  const T& at(long k) {
    auto it = cache_.find(k);
    if (it == cache_.end()) it = cache_.emplace(k, f_(x0_ + static_cast<double>(k) * unit_)).first;
    return it->second;
  }
  double unit() const { return unit_; }
  double x0() const { return x0_; }
  std::size_t evaluations() const { return cache_.size(); }

 private:
  std::function<T(double)> f_;
  double x0_;
  double unit_;
  std::map<long, T> cache_;
};

/// Unit spacing a sampler needs for this scheme.
inline double sampler_unit(const FDScheme& s) { return s.step / static_cast<double>(1 << s.richardson); }

/// Centered difference at x0 + center * unit, Richardson-extrapolated over
/// steps h, h/2, ..., h/2^richardson. The sampler's unit must be
/// step / 2^richardson so all levels share samples.
template <class T>
T fd_derivative(Sampler<T>& smp, const FDScheme& sc, long center = 0) {
  validate(sc);
  if (std::abs(smp.unit() - sampler_unit(sc)) > 1e-15 * sc.step)
    fail(ErrorKind::invalid_argument, "sampler spacing does not match the FD scheme");
  const auto w = fd_weights(sc.order, sc.width);
  const int m = (sc.width - 1) / 2;
  std::vector<T> level;
  for (int l = 0; l <= sc.richardson; ++l) {
    const long stride = 1L << (sc.richardson - l);
    const double h = sc.step / static_cast<double>(1 << l);
    T acc = w[0] * smp.at(center - m * stride);
    for (int j = 1; j < sc.width; ++j) {
      if (w[j] == 0.0) continue;
      acc += w[j] * smp.at(center + (j - m) * stride);
    }
    level.push_back(T(acc / std::pow(h, sc.order)));
  }
  int p = fd_accuracy(sc.order, sc.width);
  for (int r = 1; r <= sc.richardson; ++r) {
    const double f = std::pow(2.0, p);
    for (std::size_t l = 0; l + r <= static_cast<std::size_t>(sc.richardson); ++l)
      level[l] = T((f * level[l + 1] - level[l]) / (f - 1.0));
    p += 2;
  }
  return level[0];
}

template <class T>
T fd_derivative(std::function<T(double)> f, double x0, const FDScheme& sc) {
  validate(sc);
  Sampler<T> smp(std::move(f), x0, sampler_unit(sc));
  return fd_derivative(smp, sc);
}

/// Rough roundoff floor of fd_derivative for samples of size `scale` carrying
/// relative noise `noise`.
inline double fd_noise_floor(const FDScheme& sc, double scale, double noise) {
  const auto w = fd_weights(sc.order, sc.width);
  double sum = 0.0;
  for (double v : w) sum += std::abs(v);
  const double h = sc.step / static_cast<double>(1 << sc.richardson);
  return noise * scale * sum / std::pow(h, sc.order) * (sc.richardson > 0 ? 2.0 : 1.0);
}

// ---------------------------------------------------------------------------
// Reports

struct ResidualReport {
  std::string identity;
  double s = 0.0;
  double tau = 0.0;
  std::string config_hash;
  double residual = 0.0;
  double scale = 1.0;
  double relative = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

inline ResidualReport make_report(std::string name, const ModelConfig& c, double residual, double scale,
                                  double tolerance) {
  ResidualReport r;
  r.identity = std::move(name);
  r.s = c.s;
  r.tau = c.tau;
  r.config_hash = config_hash(c);
  r.residual = residual;
  r.scale = std::max(scale, std::numeric_limits<double>::min());
  r.relative = residual / r.scale;
  r.tolerance = tolerance;
  r.pass = std::isfinite(r.relative) && r.relative <= tolerance;
  return r;
}

inline bool all_pass(std::span<const ResidualReport> rs) {
  return std::all_of(rs.begin(), rs.end(), [](const ResidualReport& r) { return r.pass; });
}

inline json to_json(const ResidualReport& r) {
  json j = json::object();
  j["config_hash"] = r.config_hash;
  j["identity"] = r.identity;
  j["pass"] = r.pass;
  j["relative"] = r.relative;
  j["residual"] = r.residual;
  j["s"] = r.s;
  j["scale"] = r.scale;
  j["tau"] = r.tau;
  j["tolerance"] = r.tolerance;
  return j;
}

// ---------------------------------------------------------------------------
// Sampled state

/// State at one (s, tau): [log F, delta, p_1..p_N, q_1..q_N].
struct State {
  double logF = 0.0;
  double delta = 0.0;
  CVector p, q;
};

namespace detail {

inline CVector pack_state(const ModelConfig& c, const Grid& grid, bool flip) {
  const auto sol = solve_rhp(c, grid, {.flip_branch = flip});
  const double leak = std::abs(sol.det.imag());
  if (leak > 1e-8 * (1.0 + std::abs(sol.det.real())))
    fail(ErrorKind::precision_loss, "determinant has a non-negligible imaginary part");
  if (!(sol.det.real() > 0.0)) fail(ErrorKind::domain, "det(1-K) <= 0 (under-resolved grid?)");
  const auto n = static_cast<Eigen::Index>(c.N());
  CVector v(2 + 2 * n);
  v(0) = std::log(sol.det.real());
  v(1) = sol.gamma.delta;
  v.segment(2, n) = sol.gamma.p;
  v.segment(2 + n, n) = sol.gamma.q;
  return v;
}

inline State unpack(const CVector& v) {
  const Eigen::Index n = (v.size() - 2) / 2;
  return {v(0).real(), v(1).real(), v.segment(2, n), v.segment(2 + n, n)};
}

inline cplx dot(const CVector& a, const CVector& b) { return (a.transpose() * b)(0, 0); }

}  // namespace detail

/// Memoized state along s (fixed tau) or along tau (fixed s).
class StateSampler {
 public:
  enum class Axis { s, tau };

  StateSampler(const ModelConfig& c, const Grid& grid, Axis axis, const FDScheme& sc, bool flip = false)
      : smp_(
            [c, &grid, axis, flip](double x) {
              return detail::pack_state(axis == Axis::s ? c.with_s(x) : c.with_tau(x), grid, flip);
            },
            axis == Axis::s ? c.s : c.tau, sampler_unit(sc)) {}

  State center() { return detail::unpack(smp_.at(0)); }
  State derivative(const FDScheme& sc, long center = 0) { return detail::unpack(fd_derivative(smp_, sc, center)); }
  Sampler<CVector>& raw() { return smp_; }

 private:
  Sampler<CVector> smp_;
};

struct VerifyOptions {
  FDScheme s_scheme{1e-2, 1, 5, 1};
  FDScheme tau_scheme{2e-2, 1, 5, 1};
  bool flip_branch = false;
};

/// Grid with room for FD stencils and the PDE sub-grid around (s, tau).
inline Grid verification_grid(const ModelConfig& c) { return default_grid(c, 1.0, 0.5); }

// ---------------------------------------------------------------------------
// Identity checks

inline ResidualReport check_logF_delta(const ModelConfig& c, const Grid& grid, const VerifyOptions& o = {},
                                       double tol = 1e-5) {
  StateSampler ss(c, grid, StateSampler::Axis::s, o.s_scheme, o.flip_branch);
  const State x = ss.center();
  const State d1 = ss.derivative(o.s_scheme.with_order(1));
  return make_report("logF-delta", c, std::abs(d1.logF + x.delta), 1.0 + std::abs(x.delta), tol);
}

inline ResidualReport check_tw_formula(const ModelConfig& c, const Grid& grid, const VerifyOptions& o = {},
                                       double tol = 1e-4) {
  StateSampler ss(c, grid, StateSampler::Axis::s, o.s_scheme, o.flip_branch);
  const State x = ss.center();
  const State d2 = ss.derivative(o.s_scheme.with_order(2));
  const cplx ptq = detail::dot(x.p, x.q);
  if (std::abs(ptq.imag()) > 1e-8 * (1.0 + std::abs(ptq)))
    fail(ErrorKind::precision_loss, "p^T q is not real");
  return make_report("tw-formula", c, std::abs(d2.logF - ptq.real()), 1.0 + std::abs(ptq), tol);
}

inline ResidualReport check_delta_s(const ModelConfig& c, const Grid& grid, const VerifyOptions& o = {},
                                    double tol = 1e-5) {
  StateSampler ss(c, grid, StateSampler::Axis::s, o.s_scheme, o.flip_branch);
  const State x = ss.center();
  const State d1 = ss.derivative(o.s_scheme.with_order(1));
  const cplx ptq = detail::dot(x.p, x.q);
  return make_report("delta-s", c, std::abs(d1.delta + ptq.real()), 1.0 + std::abs(ptq), tol);
}

/// p''' + 3(p'^T q) p + 3(p^T q) p' - tau p' + D p = 0 and
/// q''' + 3 q' (p^T q) + 3 q (p^T q') - tau q' - D q = 0.
inline std::vector<ResidualReport> check_ode3(const ModelConfig& c, const Grid& grid, const VerifyOptions& o = {},
                                              double tol = 1e-3) {
  StateSampler ss(c, grid, StateSampler::Axis::s, o.s_scheme, o.flip_branch);
  const State x = ss.center();
  const State d1 = ss.derivative(o.s_scheme.with_order(1));
  const State d3 = ss.derivative(o.s_scheme.with_order(3));
  const auto n = x.p.size();
  CVector dvec(n);
  for (Eigen::Index i = 0; i < n; ++i) dvec(i) = c.a[static_cast<std::size_t>(i)] + c.s;
  const cplx ptq = detail::dot(x.p, x.q);

  const CVector pt[] = {d3.p, 3.0 * detail::dot(d1.p, x.q) * x.p, 3.0 * ptq * d1.p, -c.tau * d1.p,
                        dvec.cwiseProduct(x.p)};
  const CVector qt[] = {d3.q, 3.0 * ptq * d1.q, 3.0 * detail::dot(x.p, d1.q) * x.q, -c.tau * d1.q,
                        -dvec.cwiseProduct(x.q)};
  auto row = [&](const char* name, std::span<const CVector> terms) {
    CVector sum = CVector::Zero(n);
    double scale = 0.0;
    for (const auto& t : terms) {
      sum += t;
      scale = std::max(scale, t.norm());
    }
    return make_report(name, c, sum.norm(), scale, tol);
  };
  return {row("ode3.p", pt), row("ode3.q", qt)};
}

/// Step-halving study for check_ode3: residual(h/2) / residual(h) per row,
/// with Richardson disabled so the truncation order is visible.
struct ConvergenceReport {
  std::vector<ResidualReport> coarse, fine;
  std::vector<double> ratio;
  std::vector<double> noise_floor;
  /// ratio <= max_ratio, or the fine residual already sits at the noise floor
  bool pass = false;
};

inline ConvergenceReport ode3_convergence(const ModelConfig& c, const Grid& grid, double step = 2e-2,
                                          double max_ratio = 0.3) {
  VerifyOptions o;
  o.s_scheme = {step, 1, 5, 0};
  ConvergenceReport r;
  r.coarse = check_ode3(c, grid, o, std::numeric_limits<double>::infinity());
  o.s_scheme.step = step / 2.0;
  r.fine = check_ode3(c, grid, o, std::numeric_limits<double>::infinity());
  r.pass = true;
  for (std::size_t i = 0; i < r.coarse.size(); ++i) {
    r.ratio.push_back(r.fine[i].relative / std::max(r.coarse[i].relative, std::numeric_limits<double>::min()));
    // quadrature noise ~1e-13 relative on p, q; third derivative on the fine step
    r.noise_floor.push_back(fd_noise_floor(o.s_scheme.with_order(3), 1.0, 1e-13));
    if (!(r.ratio[i] <= max_ratio || r.fine[i].relative <= r.noise_floor[i])) r.pass = false;
  }
  return r;
}

/// -1/2 p'' - p_tau = (p^T q) p and -1/2 q'' + q_tau = (p^T q) q.
inline std::vector<ResidualReport> check_heat(const ModelConfig& c, const Grid& grid, const VerifyOptions& o = {},
                                              double tol = 1e-3) {
  StateSampler ss(c, grid, StateSampler::Axis::s, o.s_scheme, o.flip_branch);
  StateSampler st(c, grid, StateSampler::Axis::tau, o.tau_scheme, o.flip_branch);
  const State x = ss.center();
  const State d2 = ss.derivative(o.s_scheme.with_order(2));
  const State dt = st.derivative(o.tau_scheme.with_order(1));
  const cplx ptq = detail::dot(x.p, x.q);
  const CVector pt[] = {-0.5 * d2.p, -dt.p, -ptq * x.p};
  const CVector qt[] = {-0.5 * d2.q, dt.q, -ptq * x.q};
  auto row = [&](const char* name, std::span<const CVector> terms) {
    CVector sum = CVector::Zero(x.p.size());
    double scale = 0.0;
    for (const auto& t : terms) {
      sum += t;
      scale = std::max(scale, t.norm());
    }
    return make_report(name, c, sum.norm(), scale, tol);
  };
  return {row("heat.p", pt), row("heat.q", qt)};
}

/// u_tautau + 1/2 u_ss^2 + u_ssss / 12 - tau/3 u_ss = 0, u = log F.
inline ResidualReport check_pde(const ModelConfig& c, const Grid& grid, const VerifyOptions& o = {},
                                double tol = 1e-3) {
  auto logF = [&grid](const ModelConfig& cc) {
    return det_one_minus_K(assemble_K(cc, grid)).log_value;
  };
  Sampler<double> ss([&](double s) { return logF(c.with_s(s)); }, c.s, sampler_unit(o.s_scheme));
  Sampler<double> st([&](double t) { return logF(c.with_tau(t)); }, c.tau, sampler_unit(o.tau_scheme));
  const double uss = fd_derivative(ss, o.s_scheme.with_order(2));
  const double u4 = fd_derivative(ss, o.s_scheme.with_order(4));
  const double utt = fd_derivative(st, o.tau_scheme.with_order(2));
  const double terms[] = {utt, 0.5 * uss * uss, u4 / 12.0, -c.tau / 3.0 * uss};
  double sum = 0.0, scale = 0.0;
  for (double t : terms) {
    sum += t;
    scale = std::max(scale, std::abs(t));
  }
  return make_report("pde", c, std::abs(sum), scale, tol);
}

/// check_pde on the 3x3 grid (s + {-ds, 0, ds}) x (tau + {-dtau, 0, dtau}).
inline std::vector<ResidualReport> check_pde_grid(const ModelConfig& c, const Grid& grid,
                                                  const VerifyOptions& o = {}, double ds = 0.5,
                                                  double dtau = 0.25, double tol = 1e-3) {
  std::vector<ResidualReport> out;
  for (int i = -1; i <= 1; ++i)
    for (int j = -1; j <= 1; ++j)
      out.push_back(check_pde(c.with_s(c.s + i * ds).with_tau(c.tau + j * dtau), grid, o, tol));
  return out;
}

/// d/dtau (p^T q) = 1/2 d/ds (p^T q' - p'^T q) = 1/2 (p^T q'' - p''^T q).
inline ResidualReport check_tau_identity(const ModelConfig& c, const Grid& grid, const VerifyOptions& o = {},
                                         double tol = 1e-3) {
  StateSampler ss(c, grid, StateSampler::Axis::s, o.s_scheme, o.flip_branch);
  Sampler<cplx> st(
      [&](double t) {
        const State x = detail::unpack(detail::pack_state(c.with_tau(t), grid, o.flip_branch));
        return detail::dot(x.p, x.q);
      },
      c.tau, sampler_unit(o.tau_scheme));
  const State x = ss.center();
  const State d2 = ss.derivative(o.s_scheme.with_order(2));
  const cplx vt = fd_derivative(st, o.tau_scheme.with_order(1));
  const cplx a = 0.5 * detail::dot(x.p, d2.q);
  const cplx b = -0.5 * detail::dot(d2.p, x.q);
  const double scale = std::max({std::abs(vt), std::abs(a), std::abs(b)});
  return make_report("tau-identity", c, std::abs(vt - a - b), scale, tol);
}

/// d/ds B0^{11} = p^T B0^{21} + B0^{12} q with B0 from the closed forms.
/// Jets and the outer derivative share one sampler (no Richardson).
inline ResidualReport check_lax_consistency(const ModelConfig& c, const Grid& grid, double step = 1e-2,
                                            double tol = 1e-3) {
  const FDScheme sc{step, 1, 5, 0};
  StateSampler ss(c, grid, StateSampler::Axis::s, sc);
  auto jet_at = [&](long k) {
    const State x = detail::unpack(ss.raw().at(k));
    const State d1 = ss.derivative(sc.with_order(1), k);
    const State d2 = ss.derivative(sc.with_order(2), k);
    return PQJet{x.p, d1.p, d2.p, x.q, d1.q, d2.q};
  };
  const auto w = fd_weights(1, 5);
  cplx dB011 = 0.0;
  for (int j = 0; j < 5; ++j) {
    if (w[j] == 0.0) continue;
    const long k = j - 2;
    dB011 += w[j] * lax_B_blocks(jet_at(k), c.with_s(c.s + k * step)).B0_11;
  }
  dB011 /= step;
  const LaxB b = lax_B_blocks(jet_at(0), c);
  const State x = detail::unpack(ss.raw().at(0));
  const cplx r1 = detail::dot(x.p, b.B0_21);
  const cplx r2 = detail::dot(b.B0_12, x.q);
  const double scale = std::max({std::abs(dB011), std::abs(r1), std::abs(r2)});
  return make_report("lax-B0-11", c, std::abs(dB011 - r1 - r2), scale, tol);
}

// ---------------------------------------------------------------------------
// Asymptotics

/// For each component i and s in s_list, |q_i(s) - sqrt(dk_i) Q(a_i + s)| and
/// |p_i(s) - sqrt(dk_i) P(a_i + s)| divided by the respective envelope. A row
/// passes when it is below the previous row of the same component (the first
/// row always passes); components with dk_i = 0 only need a zero residual.
inline std::vector<ResidualReport> check_asymptotics(const ModelConfig& c, const Grid& grid,
                                                     std::span<const double> s_list, bool flip_branch = false) {
  if (s_list.empty()) fail(ErrorKind::invalid_argument, "empty s list");
  if (s_list.front() < 4.0) fail(ErrorKind::invalid_argument, "asymptotic checks need s >= 4");
  for (std::size_t i = 1; i < s_list.size(); ++i)
    if (!(s_list[i] > s_list[i - 1])) fail(ErrorKind::invalid_argument, "s list must be increasing");
  const auto sq = sqrt_increments(increments(c), flip_branch);
  const std::size_t N = c.N();
  std::vector<ResidualReport> out;
  std::vector<double> prev_q(N, std::numeric_limits<double>::infinity());
  std::vector<double> prev_p(N, std::numeric_limits<double>::infinity());
  for (double s : s_list) {
    const ModelConfig cs = c.with_s(s);
    const Gamma1 g = gamma1(cs, grid, {.flip_branch = flip_branch});
    for (std::size_t i = 0; i < N; ++i) {
      const double x = c.a[i] + s;
      if (!(x > 0.0)) fail(ErrorKind::domain, "asymptotics need a_i + s > 0");
      const double envq = asymptotic_envelope(x, c.tau, Branch::Q);
      const double envp = asymptotic_envelope(x, c.tau, Branch::P);
      if (!(envq > 0.0) || !std::isfinite(envp)) fail(ErrorKind::domain, "asymptotic envelope under/overflow");
      const auto idx = static_cast<Eigen::Index>(i);
      const double rq = std::abs(g.q(idx) - sq[i] * pearcey_Q(x, c.tau, grid, 0)[0]) / envq;
      const double rp = std::abs(g.p(idx) - sq[i] * pearcey_P(x, c.tau, grid, 0)[0]) / envp;
      const bool zero = sq[i] == cplx(0.0);
      const std::string tag = "[" + std::to_string(i + 1) + "]";
      auto rq_rep = make_report("asym.q" + tag, cs, rq, 1.0, zero ? 0.0 : prev_q[i]);
      auto rp_rep = make_report("asym.p" + tag, cs, rp, 1.0, zero ? 0.0 : prev_p[i]);
      if (!zero) {
        // strict decrease
        rq_rep.pass = rq < prev_q[i];
        rp_rep.pass = rp < prev_p[i];
      }
      prev_q[i] = rq;
      prev_p[i] = rp;
      out.push_back(rq_rep);
      out.push_back(rp_rep);
    }
  }
  return out;
}

/// |Q(s) - Q_asym(s)| / envelope(s) along s_list, each row required to be
/// below the previous one.
inline std::vector<ResidualReport> check_special_asymptotics(double tau, std::span<const double> s_list,
                                                             const Grid& grid) {
  std::vector<ResidualReport> out;
  double prev = std::numeric_limits<double>::infinity();
  for (double s : s_list) {
    const double env = asymptotic_envelope(s, tau, Branch::Q);
    const double r = std::abs(pearcey_Q(s, tau, grid, 0)[0] - asymptotic(s, tau, Branch::Q)) / env;
    ModelConfig point{{}, {}, tau, s};
    ResidualReport rep;
    rep.identity = "asym.Q";
    rep.s = s;
    rep.tau = tau;
    rep.residual = r;
    rep.scale = 1.0;
    rep.relative = r;
    rep.tolerance = prev;
    rep.pass = r < prev;
    out.push_back(rep);
    prev = r;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Occupancy probabilities

/// F sampled on the torus k_j = 1 + rho e^{i phi_l}, j = 1..N-1, from which
/// P(#(a_j + s, a_{j+1} + s) = m_j for all j) is a Cauchy coefficient:
/// (-1)^{|m|} / m! d^m F (k = 1) = (-1)^{|m|} <F, prod (rho e^{i phi})^{-m_j}>.
class OccupancyTable {
 public:
  static constexpr std::size_t kMaxIntervals = 3;

  OccupancyTable(const ModelConfig& c, const Grid& grid, double rho = 0.5, int nodes = 32)
      : rho_(rho), nodes_(nodes), dims_(c.N() - 1) {
    validate(c, ConfigMode::degenerate_allowed);
    if (!(rho > 0.0 && rho < 1.0)) fail(ErrorKind::invalid_argument, "rho must lie in (0, 1)");
    if (nodes < 1) fail(ErrorKind::invalid_argument, "need at least one node per circle");
    if (dims_ > kMaxIntervals)
      fail(ErrorKind::cost_guard, "occupancy over more than 3 intervals needs nodes^(N-1) determinants");
    std::size_t total = 1;
    for (std::size_t d = 0; d < dims_; ++d) total *= static_cast<std::size_t>(nodes);
    samples_.resize(total);
    std::vector<cplx> k(c.N() + 1, 0.0);
    for (std::size_t flat = 0; flat < total; ++flat) {
      std::size_t rest = flat;
      for (std::size_t d = 0; d < dims_; ++d) {
        const auto l = rest % static_cast<std::size_t>(nodes);
        rest /= static_cast<std::size_t>(nodes);
        k[d + 1] = 1.0 + rho * point(l);
      }
      samples_[flat] = genfun_complex(c.a, k, c.tau, c.s, grid);
    }
  }

  std::size_t intervals() const { return dims_; }
  int nodes() const { return nodes_; }

  double probability(std::span<const int> m) const {
    if (m.size() != dims_) fail(ErrorKind::invalid_argument, "occupancy vector must have N-1 entries");
    int total_m = 0;
    for (int mj : m) {
      if (mj < 0) fail(ErrorKind::invalid_argument, "occupancy numbers must be nonnegative");
      if (mj >= nodes_) fail(ErrorKind::invalid_argument, "occupancy number aliases on the circle (raise nodes)");
      total_m += mj;
    }
    cplx acc = 0.0;
    for (std::size_t flat = 0; flat < samples_.size(); ++flat) {
      std::size_t rest = flat;
      cplx factor = 1.0;
      for (std::size_t d = 0; d < dims_; ++d) {
        const auto l = rest % static_cast<std::size_t>(nodes_);
        rest /= static_cast<std::size_t>(nodes_);
        factor *= std::pow(rho_ * point(l), -m[d]);
      }
      acc += samples_[flat] * factor;
    }
    acc /= static_cast<double>(samples_.size());
    const double v = (total_m % 2 == 0 ? 1.0 : -1.0) * acc.real();
    if (!(v >= -1e-4 && v <= 1.0 + 1e-4))
      fail(ErrorKind::precision_loss, "occupancy probability outside [0, 1]: Cauchy integral lost accuracy");
    return v;
  }

 private:
  cplx point(std::size_t l) const {
    return std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(l) / static_cast<double>(nodes_));
  }

  double rho_;
  int nodes_;
  std::size_t dims_;
  std::vector<cplx> samples_;
};

inline double occupancy(const ModelConfig& c, std::span<const int> m, const Grid& grid, double rho = 0.5,
                        int nodes = 32) {
  return OccupancyTable(c, grid, rho, nodes).probability(m);
}

// ---------------------------------------------------------------------------
// Diagnostics

/// |F(a, k, s) - F(-reverse(a), reverse(k), -s)| / F. The Pearcey process is
/// symmetric under x -> -x, so this should vanish; exploratory only.
inline double reflection_diagnostic(const ModelConfig& c, const Grid& grid) {
  ModelConfig r = c;
  r.a.assign(c.a.rbegin(), c.a.rend());
  for (double& v : r.a) v = -v;
  r.k.assign(c.k.rbegin(), c.k.rend());
  r.s = -c.s;
  const double f = genfun(c, grid);
  return std::abs(f - genfun(r, grid)) / f;
}

// ---------------------------------------------------------------------------
// Suites

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"ode3", "heat", "pde", "tw", "delta", "tau-id", "asym", "all"};
  return names;
}

/// Run one named suite (or "all") at the configuration's (s, tau).
inline std::vector<ResidualReport> run_suite(const std::string& suite, const ModelConfig& c, const Grid& grid,
                                             const VerifyOptions& o = {}) {
  if (std::find(suite_names().begin(), suite_names().end(), suite) == suite_names().end())
    fail(ErrorKind::invalid_argument, "unknown suite \"" + suite + "\"");
  const bool all = suite == "all";
  std::vector<ResidualReport> out;
  auto add = [&](std::vector<ResidualReport> rs) { out.insert(out.end(), rs.begin(), rs.end()); };
  if (all || suite == "delta") {
    out.push_back(check_logF_delta(c, grid, o));
    out.push_back(check_delta_s(c, grid, o));
  }
  if (all || suite == "tw") out.push_back(check_tw_formula(c, grid, o));
  if (all || suite == "ode3") add(check_ode3(c, grid, o));
  if (all || suite == "heat") add(check_heat(c, grid, o));
  if (all || suite == "pde") add(check_pde_grid(c, grid, o));
  if (all || suite == "tau-id") out.push_back(check_tau_identity(c, grid, o));
  if (all || suite == "asym") {
    const double s_list[] = {4.0, 6.0, 8.0};
    const Grid far = default_grid(c.with_s(s_list[2]), 0.0, 0.0);
    add(check_asymptotics(c, far, s_list, o.flip_branch));
  }
  return out;
}

}  // namespace pearcey
