#pragma once

// The integrable operator K on Sigma u iR, its Nystrom matrix and Fredholm
// determinant, and the classical Pearcey kernel route on real intervals.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "pearcey/error.hpp"
#include "pearcey/quadrature.hpp"

namespace pearcey {

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

enum class ConfigMode { production, degenerate_allowed };

/// Thresholds a_1 < ... < a_N, weights k_0..k_N with k_0 = k_N = 0,
/// time tau and translation s.
struct ModelConfig {
  std::vector<double> a;
  std::vector<double> k;
  double tau = 0.0;
  double s = 0.0;

  std::size_t N() const { return a.size(); }
  bool operator==(const ModelConfig&) const = default;

  double max_abs_shift() const {
    double m = 0.0;
    for (double ai : a) m = std::max(m, std::abs(ai + s));
    return m;
  }
  ModelConfig with_s(double new_s) const {
    ModelConfig c = *this;
    c.s = new_s;
    return c;
  }
  ModelConfig with_tau(double new_tau) const {
    ModelConfig c = *this;
    c.tau = new_tau;
    return c;
  }
};

inline void validate(const ModelConfig& c, ConfigMode mode = ConfigMode::production) {
  auto bad = [](const std::string& m) { fail(ErrorKind::invalid_argument, m); };
  if (c.a.size() < 2) bad("need N >= 2 thresholds");
  if (c.k.size() != c.a.size() + 1) bad("k must have N+1 entries");
  for (double v : c.a)
    if (!std::isfinite(v)) bad("non-finite threshold");
  for (std::size_t i = 0; i + 1 < c.a.size(); ++i)
    if (!(c.a[i] < c.a[i + 1])) bad("thresholds must be strictly increasing");
  if (!std::isfinite(c.tau) || !std::isfinite(c.s)) bad("non-finite tau or s");
  if (c.k.front() != 0.0 || c.k.back() != 0.0) bad("k_0 and k_N must be 0");
  for (std::size_t j = 1; j + 1 < c.k.size(); ++j)
    if (!(c.k[j] >= 0.0 && c.k[j] <= 1.0)) bad("k_j must lie in [0,1]");
  if (mode == ConfigMode::production)
    for (std::size_t j = 0; j + 1 < c.k.size(); ++j)
      if (c.k[j] == c.k[j + 1]) bad("consecutive k_j must differ");
}

/// Differences k_j - k_{j-1}, j = 1..N, possibly complex (occupancy
/// extraction evaluates the determinant at complex k).
inline std::vector<cplx> increments(std::span<const cplx> k) {
  std::vector<cplx> dk(k.size() - 1);
  for (std::size_t j = 1; j < k.size(); ++j) dk[j - 1] = k[j] - k[j - 1];
  return dk;
}

inline std::vector<cplx> increments(const ModelConfig& c) {
  std::vector<cplx> k(c.k.begin(), c.k.end());
  return increments(k);
}

/// sqrt of each increment. Principal branch (negative reals map to the
/// positive imaginary axis); `flip_branch` negates the roots of negative
/// real increments.
inline std::vector<cplx> sqrt_increments(std::span<const cplx> dk, bool flip_branch = false) {
  std::vector<cplx> out(dk.size());
  for (std::size_t j = 0; j < dk.size(); ++j) {
    out[j] = std::sqrt(dk[j]);
    if (flip_branch && dk[j].imag() == 0.0 && dk[j].real() < 0.0) out[j] = -out[j];
  }
  return out;
}

/// theta_x(mu) = mu^4/4 - tau mu^2/2 - x mu
inline cplx theta(cplx mu, double x, double tau) {
  const cplx mu2 = mu * mu;
  return mu2 * mu2 / 4.0 - tau * mu2 / 2.0 - x * mu;
}

/// Rows are grid nodes, columns the N+1 components (index 0 is the scalar block).
struct DressedVectors {
  CMatrix f;
  CMatrix g;
};

/// Inputs for assembling K with arbitrary (complex) increments.
struct DressingInput {
  std::vector<double> a;
  std::vector<cplx> sqrt_dk;
  double tau = 0.0;
  double s = 0.0;
};

inline DressingInput dressing_input(const ModelConfig& c, bool flip_branch = false) {
  const auto dk = increments(c);
  return {c.a, sqrt_increments(dk, flip_branch), c.tau, c.s};
}

inline DressedVectors dressing_vectors(const DressingInput& in, const Grid& grid) {
  constexpr double kExpLimit = 700.0;
  const cplx inv2pii = 1.0 / cplx(0.0, 2.0 * std::numbers::pi);
  const std::size_t M = grid.size();
  const std::size_t n = in.a.size();
  DressedVectors dv{CMatrix::Zero(M, n + 1), CMatrix::Zero(M, n + 1)};
  auto guarded_exp = [&](cplx z) {
    if (std::abs(z.real()) > kExpLimit)
      fail(ErrorKind::precision_loss, "dressing exponent overflow: truncation too large for the shift");
    return std::exp(z);
  };
  for (std::size_t i = 0; i < M; ++i) {
    const cplx mu = grid.nodes[i];
    const cplx th0 = theta(mu, 0.0, in.tau);
    if (on_sigma(grid.tags[i])) {
      dv.f(i, 0) = inv2pii * guarded_exp(0.5 * th0);
      for (std::size_t j = 0; j < n; ++j)
        dv.g(i, j + 1) = in.sqrt_dk[j] * guarded_exp(0.5 * th0 - (in.a[j] + in.s) * mu);
    } else {
      dv.g(i, 0) = guarded_exp(-0.5 * th0);
      for (std::size_t j = 0; j < n; ++j)
        dv.f(i, j + 1) = inv2pii * in.sqrt_dk[j] * guarded_exp(-0.5 * th0 + (in.a[j] + in.s) * mu);
    }
  }
  return dv;
}

inline DressedVectors dressing_vectors(const ModelConfig& c, const Grid& grid, bool flip_branch = false) {
  return dressing_vectors(dressing_input(c, flip_branch), grid);
}

/// Nystrom matrix K(u_i, u_j) w_j. The imaginary-axis nodes come first and
/// the two diagonal blocks vanish identically.
struct OperatorMatrix {
  CMatrix entries;
  std::size_t n_imag = 0;
  const Grid* grid = nullptr;
};

inline OperatorMatrix assemble_K(const DressedVectors& dv, const Grid& grid) {
  const std::size_t M = grid.size();
  OperatorMatrix m;
  m.grid = &grid;
  m.n_imag = 0;
  while (m.n_imag < M && !on_sigma(grid.tags[m.n_imag])) ++m.n_imag;
  for (std::size_t i = m.n_imag; i < M; ++i)
    if (!on_sigma(grid.tags[i])) fail(ErrorKind::invalid_argument, "grid nodes not ordered imag-axis first");
  m.entries = CMatrix::Zero(M, M);
  const std::size_t ni = m.n_imag;
  auto fill = [&](std::size_t r0, std::size_t r1, std::size_t c0, std::size_t c1) {
    const CMatrix num = dv.f.middleRows(r0, r1 - r0) * dv.g.middleRows(c0, c1 - c0).transpose();
    for (std::size_t j = c0; j < c1; ++j) {
      for (std::size_t i = r0; i < r1; ++i) {
        const cplx d = grid.nodes[i] - grid.nodes[j];
        if (std::abs(d) < 1e-14) fail(ErrorKind::grid_degeneracy, "coincident nodes on different contours");
        m.entries(i, j) = num(i - r0, j - c0) / d * grid.weights[j];
      }
    }
  };
  fill(0, ni, ni, M);
  fill(ni, M, 0, ni);
  return m;
}

inline OperatorMatrix assemble_K(const ModelConfig& c, const Grid& grid, bool flip_branch = false) {
  return assemble_K(dressing_vectors(c, grid, flip_branch), grid);
}

// ---------------------------------------------------------------------------
// Determinants

enum class DetMethod { dense, block };

struct DetResult {
  double value = 1.0;
  double log_value = 0.0;
  double im_leak = 0.0;
  cplx complex_value = 1.0;
};

namespace detail {

inline cplx lu_determinant(const CMatrix& a) {
  if (a.rows() == 0) return 1.0;
  Eigen::PartialPivLU<CMatrix> lu(a);
  return lu.determinant();
}

}  // namespace detail

/// det(I - K W). The block route uses the off-diagonal structure:
/// det [[I, -A], [-B, I]] = det(I - A B) on the imaginary-axis block.
inline cplx det_one_minus_K_complex(const OperatorMatrix& m, DetMethod method = DetMethod::block) {
  if (!m.entries.allFinite()) fail(ErrorKind::precision_loss, "operator matrix has non-finite entries");
  const Eigen::Index M = m.entries.rows();
  if (method == DetMethod::dense) {
    return detail::lu_determinant(CMatrix::Identity(M, M) - m.entries);
  }
  const Eigen::Index ni = static_cast<Eigen::Index>(m.n_imag);
  const Eigen::Index ns = M - ni;
  CMatrix schur = CMatrix::Identity(ni, ni);
  schur.noalias() -= m.entries.block(0, ni, ni, ns) * m.entries.block(ni, 0, ns, ni);
  return detail::lu_determinant(schur);
}

inline DetResult det_one_minus_K(const OperatorMatrix& m, DetMethod method = DetMethod::block) {
  const cplx d = det_one_minus_K_complex(m, method);
  DetResult r;
  r.complex_value = d;
  r.value = d.real();
  r.im_leak = std::abs(d.imag());
  if (r.im_leak > 1e-8 * (1.0 + std::abs(r.value)))
    fail(ErrorKind::precision_loss, "determinant has a non-negligible imaginary part");
  if (!(r.value > 0.0))
    fail(ErrorKind::domain, "det(1-K) <= 0: generating function must be positive (under-resolved grid?)");
  r.log_value = std::log(r.value);
  return r;
}

/// Default grid for a configuration, with room for s and tau excursions.
inline Grid default_grid(const ModelConfig& c, double s_margin = 0.0, double tau_margin = 0.0) {
  return discretize(build_contours(std::abs(c.tau) + tau_margin, c.max_abs_shift() + s_margin, 1e-16));
}

/// F(a + s, tau, k) = det(1 - K) on Sigma u iR.
inline DetResult genfun_record(const ModelConfig& c, const Grid& grid, bool flip_branch = false) {
  return det_one_minus_K(assemble_K(c, grid, flip_branch));
}

inline double genfun(const ModelConfig& c, const Grid& grid) { return genfun_record(c, grid).value; }

/// Generating function at complex weights k (length N+1, k_0 = k_N = 0).
inline cplx genfun_complex(const std::vector<double>& a, std::span<const cplx> k, double tau, double s,
                           const Grid& grid) {
  if (k.size() != a.size() + 1) fail(ErrorKind::invalid_argument, "k must have N+1 entries");
  const auto dk = increments(k);
  DressingInput in{a, sqrt_increments(dk), tau, s};
  return det_one_minus_K_complex(assemble_K(dressing_vectors(in, grid), grid));
}

// ---------------------------------------------------------------------------
// Classical Pearcey kernel on the real line

/// K_P(x,y) = (2 pi i)^{-2} \int_Sigma \int_{iR} e^{theta_x(mu) - theta_y(lambda)} / (lambda - mu).
/// The Cauchy matrix 1/(lambda - mu) is shared between all (x, y).
class PearceyKernel {
 public:
  PearceyKernel(const Grid& grid, double tau) : tau_(tau) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (on_sigma(grid.tags[i])) {
        sigma_nodes_.push_back(grid.nodes[i]);
        sigma_weights_.push_back(grid.weights[i]);
      } else {
        imag_nodes_.push_back(grid.nodes[i]);
        imag_weights_.push_back(grid.weights[i]);
      }
    }
    const auto ns = static_cast<Eigen::Index>(sigma_nodes_.size());
    const auto ni = static_cast<Eigen::Index>(imag_nodes_.size());
    cauchy_.resize(ns, ni);
    for (Eigen::Index l = 0; l < ni; ++l)
      for (Eigen::Index m = 0; m < ns; ++m) {
        const cplx d = imag_nodes_[l] - sigma_nodes_[m];
        if (std::abs(d) < 1e-14) fail(ErrorKind::grid_degeneracy, "Sigma and iR nodes coincide");
        cauchy_(m, l) = 1.0 / d;
      }
  }

  double tau() const { return tau_; }

  /// Complex kernel matrix K_P(x_r, y_c); rows x, columns y.
  CMatrix complex_matrix(std::span<const double> xs, std::span<const double> ys) const {
    const auto ns = static_cast<Eigen::Index>(sigma_nodes_.size());
    const auto ni = static_cast<Eigen::Index>(imag_nodes_.size());
    CMatrix left(static_cast<Eigen::Index>(xs.size()), ns);
    for (Eigen::Index r = 0; r < left.rows(); ++r)
      for (Eigen::Index m = 0; m < ns; ++m)
        left(r, m) = std::exp(theta(sigma_nodes_[m], xs[r], tau_)) * sigma_weights_[m];
    CMatrix right(ni, static_cast<Eigen::Index>(ys.size()));
    for (Eigen::Index c = 0; c < right.cols(); ++c)
      for (Eigen::Index l = 0; l < ni; ++l)
        right(l, c) = std::exp(-theta(imag_nodes_[l], ys[c], tau_)) * imag_weights_[l];
    const cplx pref = 1.0 / (cplx(0.0, 2.0 * std::numbers::pi) * cplx(0.0, 2.0 * std::numbers::pi));
    CMatrix out = (left * cauchy_) * right;
    out *= pref;
    return out;
  }

  /// Real kernel matrix; the imaginary part must vanish to 1e-8 relative.
  Eigen::MatrixXd matrix(std::span<const double> xs, std::span<const double> ys) const {
    const CMatrix k = complex_matrix(xs, ys);
    const double scale = std::max(1.0, k.cwiseAbs().maxCoeff());
    if (k.imag().cwiseAbs().maxCoeff() > 1e-8 * scale)
      fail(ErrorKind::precision_loss, "Pearcey kernel is not real at this resolution");
    return k.real();
  }

  double operator()(double x, double y) const {
    const double xs[] = {x}, ys[] = {y};
    return matrix(xs, ys)(0, 0);
  }

 private:
  double tau_;
  std::vector<cplx> sigma_nodes_, sigma_weights_, imag_nodes_, imag_weights_;
  CMatrix cauchy_;
};

inline double kernel_KP(double x, double y, const ModelConfig& c, const Grid& grid) {
  return PearceyKernel(grid, c.tau)(x, y);
}

/// det(1 - sum_j k_j chi_(a_j+s, a_{j+1}+s) K_P) by Gauss-Legendre Nystrom
/// on each interval with symmetric square-root weights.
inline DetResult genfun_via_KP(const ModelConfig& c, const PearceyKernel& kernel, int nodes_per_interval) {
  if (nodes_per_interval < 1) fail(ErrorKind::invalid_argument, "nodes_per_interval must be positive");
  const GaussRule rule = gauss_legendre(nodes_per_interval);
  std::vector<double> xs, sw;
  for (std::size_t j = 1; j + 1 < c.k.size(); ++j) {
    if (c.k[j] == 0.0) continue;
    const double lo = c.a[j - 1] + c.s, hi = c.a[j] + c.s;
    const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    for (std::size_t q = 0; q < rule.x.size(); ++q) {
      xs.push_back(mid + half * rule.x[q]);
      sw.push_back(std::sqrt(rule.w[q] * half * c.k[j]));
    }
  }
  DetResult r;
  if (xs.empty()) return r;
  const Eigen::MatrixXd k = kernel.matrix(xs, xs);
  const auto n = static_cast<Eigen::Index>(xs.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) -= sw[i] * k(i, j) * sw[j];
  const double d = Eigen::PartialPivLU<Eigen::MatrixXd>(a).determinant();
  r.value = d;
  r.complex_value = d;
  if (!(d > 0.0)) fail(ErrorKind::domain, "det(1 - k K_P) <= 0");
  r.log_value = std::log(d);
  return r;
}

inline DetResult genfun_via_KP(const ModelConfig& c, const Grid& grid, int nodes_per_interval) {
  return genfun_via_KP(c, PearceyKernel(grid, c.tau), nodes_per_interval);
}

}  // namespace pearcey
