#pragma once

// Residue data Gamma_1 = [[-delta, p^T], [q, Delta]] of the Riemann-Hilbert
// problem attached to K, obtained from the discretized resolvent, and the
// closed-form Lax-pair blocks built from it.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <vector>

#include "pearcey/error.hpp"
#include "pearcey/operators.hpp"

namespace pearcey {

struct Gamma1 {
  double delta = 0.0;
  CVector p;
  CVector q;
  CMatrix Delta;
  /// The full (N+1)x(N+1) residue matrix.
  CMatrix full;

  std::size_t N() const { return static_cast<std::size_t>(p.size()); }

  /// p^T q (no conjugation).
  cplx ptq() const { return (p.transpose() * q)(0, 0); }
  double trace_residual() const { return std::abs(full.trace()); }
  double delta_trace_residual() const { return std::abs(delta - Delta.trace()); }
  double norm() const { return full.norm(); }
};

struct RhpOptions {
  bool flip_branch = false;
  /// Throw under-resolution when the trace identities fail by more than
  /// trace_tol * (1 + |Gamma_1|).
  bool enforce_invariants = true;
  double trace_tol = 1e-8;
};

/// Everything extracted from one factorization of I - K W.
struct RhpSolution {
  Gamma1 gamma;
  /// det(I - K W) (complex; real for real k).
  cplx det = 1.0;
  /// F~ = (1 - K)^{-1} f~ at the grid nodes, one column per component.
  CMatrix resolvent;
  DressedVectors dressing;
};

namespace detail {

struct BlockSolve {
  CMatrix x;
  cplx det;
};

// Solves (I - E) X = R for E = [[0, A], [B, 0]] (imaginary-axis rows first)
// through the Schur complement I - A B.
inline BlockSolve solve_one_minus_K(const OperatorMatrix& m, const CMatrix& rhs) {
  const Eigen::Index M = m.entries.rows();
  const Eigen::Index ni = static_cast<Eigen::Index>(m.n_imag);
  const Eigen::Index ns = M - ni;
  const auto A = m.entries.block(0, ni, ni, ns);
  const auto B = m.entries.block(ni, 0, ns, ni);
  CMatrix schur = CMatrix::Identity(ni, ni);
  schur.noalias() -= A * B;
  Eigen::PartialPivLU<CMatrix> lu(schur);
  BlockSolve out;
  out.det = lu.determinant();
  if (!std::isfinite(std::abs(out.det)) || std::abs(out.det) == 0.0)
    fail(ErrorKind::under_resolution, "I - K is numerically singular");
  CMatrix top = rhs.topRows(ni);
  top.noalias() += A * rhs.bottomRows(ns);
  out.x.resize(M, rhs.cols());
  out.x.topRows(ni) = lu.solve(top);
  out.x.bottomRows(ns) = rhs.bottomRows(ns);
  out.x.bottomRows(ns).noalias() += B * out.x.topRows(ni);
  return out;
}

inline Gamma1 split_gamma(const CMatrix& full) {
  const Eigen::Index n = full.rows() - 1;
  Gamma1 g;
  g.full = full;
  g.delta = -full(0, 0).real();
  g.p = full.block(0, 1, 1, n).transpose();
  g.q = full.block(1, 0, n, 1);
  g.Delta = full.block(1, 1, n, n);
  return g;
}

}  // namespace detail

/// Solve (I - K W) X = f~ and integrate Gamma_1 = \int F~ g~^T.
inline RhpSolution solve_rhp(const DressingInput& in, const Grid& grid, const RhpOptions& opt = {}) {
  RhpSolution sol;
  sol.dressing = dressing_vectors(in, grid);
  const OperatorMatrix K = assemble_K(sol.dressing, grid);
  auto bs = detail::solve_one_minus_K(K, sol.dressing.f);
  sol.det = bs.det;
  sol.resolvent = std::move(bs.x);
  CVector w(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t i = 0; i < grid.size(); ++i) w(static_cast<Eigen::Index>(i)) = grid.weights[i];
  const CMatrix full = sol.resolvent.transpose() * w.asDiagonal() * sol.dressing.g;
  sol.gamma = detail::split_gamma(full);
  if (opt.enforce_invariants) {
    const double tol = opt.trace_tol * (1.0 + sol.gamma.norm());
    if (sol.gamma.trace_residual() > tol || sol.gamma.delta_trace_residual() > tol)
      fail(ErrorKind::under_resolution, "trace identity Tr(Gamma_1) = 0 violated");
    if (std::abs(sol.gamma.full(0, 0).imag()) > tol)
      fail(ErrorKind::under_resolution, "delta is not real");
  }
  return sol;
}

inline RhpSolution solve_rhp(const ModelConfig& c, const Grid& grid, const RhpOptions& opt = {}) {
  return solve_rhp(dressing_input(c, opt.flip_branch), grid, opt);
}

/// Columns of (I - K W)^{-1} f~ at the nodes.
inline CMatrix resolvent_columns(const ModelConfig& c, const Grid& grid, bool flip_branch = false) {
  const DressedVectors dv = dressing_vectors(c, grid, flip_branch);
  return detail::solve_one_minus_K(assemble_K(dv, grid), dv.f).x;
}

inline Gamma1 gamma1(const ModelConfig& c, const Grid& grid, const RhpOptions& opt = {}) {
  return solve_rhp(c, grid, opt).gamma;
}

// ---------------------------------------------------------------------------
// Lax pair

/// d/ds Psi = (mu A1 + A0) Psi with A1 = diag(-N, 1, ..., 1)/(N+1) and
/// A0 = [[0, p^T], [-q, 0]].
struct LaxA {
  CMatrix A1;
  CMatrix A0;

  CMatrix at(cplx mu) const { return mu * A1 + A0; }
};

inline CMatrix lax_A1(std::size_t N) {
  const auto n = static_cast<Eigen::Index>(N);
  CMatrix a1 = CMatrix::Zero(n + 1, n + 1);
  a1(0, 0) = -static_cast<double>(N);
  for (Eigen::Index i = 1; i <= n; ++i) a1(i, i) = 1.0;
  return a1 / static_cast<double>(N + 1);
}

inline LaxA lax_A(const Gamma1& g, std::size_t N) {
  if (g.N() != N) fail(ErrorKind::invalid_argument, "lax_A: size mismatch");
  const auto n = static_cast<Eigen::Index>(N);
  LaxA a{lax_A1(N), CMatrix::Zero(n + 1, n + 1)};
  a.A0.block(0, 1, 1, n) = g.p.transpose();
  a.A0.block(1, 0, n, 1) = -g.q;
  return a;
}

/// p, q and their first two s-derivatives at one point.
struct PQJet {
  CVector p, dp, ddp;
  CVector q, dq, ddq;
};

/// Blocks of the Gamma-dependent part of d/dmu Psi Psi^{-1}
/// = mu^3 B3~ + mu^2 B2 + mu (B1~ + B1) + B0~ + B0; superscripts 11/12/21/22
/// are the 1+N block partition (12 is a row, 21 a column).
struct LaxB {
  CVector B2_12, B2_21;  // B2_12 stored as the column p-shape of a row vector
  cplx B1_11;
  CMatrix B1_22;
  CVector B1_12, B1_21;
  cplx B0_11;
  CMatrix B0_22;
  CVector B0_12, B0_21;
  /// diag(a_1 + s, ..., a_N + s)
  CMatrix D;

  /// Assembled B_j (j = 0, 1, 2) as (N+1)x(N+1) matrices.
  CMatrix assemble(int j) const {
    const auto n = B2_12.size();
    CMatrix b = CMatrix::Zero(n + 1, n + 1);
    if (j == 2) {
      b.block(0, 1, 1, n) = B2_12.transpose();
      b.block(1, 0, n, 1) = B2_21;
    } else if (j == 1) {
      b(0, 0) = B1_11;
      b.block(0, 1, 1, n) = B1_12.transpose();
      b.block(1, 0, n, 1) = B1_21;
      b.block(1, 1, n, n) = B1_22;
    } else {
      b(0, 0) = B0_11;
      b.block(0, 1, 1, n) = B0_12.transpose();
      b.block(1, 0, n, 1) = B0_21;
      b.block(1, 1, n, n) = B0_22;
    }
    return b;
  }
};

inline LaxB lax_B_blocks(const PQJet& j, const ModelConfig& c) {
  const auto n = j.p.size();
  if (j.q.size() != n || static_cast<std::size_t>(n) != c.N())
    fail(ErrorKind::invalid_argument, "lax_B_blocks: size mismatch");
  const cplx ptq = (j.p.transpose() * j.q)(0, 0);
  LaxB b;
  b.B2_12 = -j.p;
  b.B2_21 = j.q;
  b.B1_11 = ptq;
  b.B1_22 = -j.q * j.p.transpose();
  b.B1_12 = j.dp;
  b.B1_21 = j.dq;
  b.B0_12 = -j.ddp - 2.0 * ptq * j.p + c.tau * j.p;
  b.B0_21 = j.ddq + 2.0 * ptq * j.q - c.tau * j.q;
  b.B0_11 = (j.p.transpose() * j.dq)(0, 0) - (j.dp.transpose() * j.q)(0, 0);
  b.B0_22 = j.q * j.dp.transpose() - j.dq * j.p.transpose();
  b.D = CMatrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) b.D(i, i) = c.a[static_cast<std::size_t>(i)] + c.s;
  return b;
}

/// Gamma-independent parts of the Lax pair, from the gauge factor:
/// B3~ = -A1, B1~ = tau A1, B0~ = s A1 + diag(-sum a, N a_1 - sum_{j!=1} a_j, ...)/(N+1),
/// C2~ = A1/2.
struct GaugeConstants {
  CMatrix B3, B1, B0, C2;
};

inline GaugeConstants gauge_constants(const ModelConfig& c) {
  const std::size_t N = c.N();
  const CMatrix a1 = lax_A1(N);
  double sum = 0.0;
  for (double v : c.a) sum += v;
  CMatrix d = CMatrix::Zero(static_cast<Eigen::Index>(N + 1), static_cast<Eigen::Index>(N + 1));
  d(0, 0) = -sum;
  for (std::size_t i = 0; i < N; ++i) {
    const auto idx = static_cast<Eigen::Index>(i + 1);
    d(idx, idx) = static_cast<double>(N) * c.a[i] - (sum - c.a[i]);
  }
  return {-a1, c.tau * a1, c.s * a1 + d / static_cast<double>(N + 1), 0.5 * a1};
}

}  // namespace pearcey
