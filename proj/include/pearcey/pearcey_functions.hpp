#pragma once

// Pearcey integrals Q (imaginary axis) and P (Sigma), their s-derivatives as
// moment integrals, the saddle points of the phase and the leading-order
// large-s asymptotics.

#include <array>
#include <cmath>
#include <complex>
#include <numbers>

#include "pearcey/error.hpp"
#include "pearcey/quadrature.hpp"

namespace pearcey {

struct PearceyEval {
  double s = 0.0;
  double tau = 0.0;
  int max_order = 0;
  /// values[d] = d-th s-derivative (real part of the quadrature).
  std::array<double, 4> values{};
  /// Imaginary parts of the quadrature, kept for diagnostics.
  std::array<double, 4> imag{};

  double operator[](int d) const { return values[d]; }
};

enum class Branch { Q, P };

namespace detail {

inline constexpr cplx kTwoPiI{0.0, 2.0 * std::numbers::pi};

// Shared evaluator: integrand e^{sign*(mu^4/4 - tau mu^2/2) + sign2 * s mu}
inline PearceyEval pearcey_moments(double s, double tau, const Grid& grid, int max_order,
                                   Branch which) {
  if (max_order < 0 || max_order > 3)
    fail(ErrorKind::invalid_argument, "max_order must lie in 0..3");
  const bool want_sigma = which == Branch::P;
  std::array<cplx, 4> acc{};
  double tail = 0.0, mass = 0.0;
  double outer = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (on_sigma(grid.tags[i]) != want_sigma) continue;
    const cplx mu = grid.nodes[i];
    const cplx mu2 = mu * mu;
    const cplx theta0 = mu2 * mu2 / 4.0 - tau * mu2 / 2.0;
    // Q: e^{-theta_0 + s mu}, moments mu^d; P: e^{theta_0 - s mu}, moments (-mu)^d
    const cplx e = want_sigma ? std::exp(theta0 - s * mu) : std::exp(-theta0 + s * mu);
    const cplx base = want_sigma ? -mu : mu;
    cplx term = e * grid.weights[i];
    mass += std::abs(term);
    for (int d = 0; d <= max_order; ++d) {
      acc[d] += term;
      term *= base;
    }
    if (std::abs(mu) >= outer) {
      if (std::abs(mu) > outer) tail = 0.0;
      outer = std::abs(mu);
      tail = std::max(tail, std::abs(e) * std::pow(std::max(1.0, outer), max_order));
    }
  }
  if (mass == 0.0)
    fail(ErrorKind::invalid_argument, want_sigma ? "grid has no Sigma nodes" : "grid has no ImagAxis nodes");
  PearceyEval out;
  out.s = s;
  out.tau = tau;
  out.max_order = max_order;
  double scale = 0.0;
  for (int d = 0; d <= max_order; ++d) {
    const cplx v = acc[d] / kTwoPiI;
    out.values[d] = v.real();
    out.imag[d] = v.imag();
    scale = std::max(scale, std::abs(v));
  }
  // the integrand at the truncation radius must be negligible
  if (tail > 1e-12 * std::max(scale, 1e-300) && tail > 1e-300)
    fail(ErrorKind::precision_loss, "contour truncation too small for (s, tau)");
  return out;
}

}  // namespace detail

/// Q^{(d)}(s) = (1/2 pi i) \int_{iR} mu^d exp(-mu^4/4 + tau mu^2/2 + s mu) dmu.
inline PearceyEval pearcey_Q(double s, double tau, const Grid& grid, int max_order = 3) {
  return detail::pearcey_moments(s, tau, grid, max_order, Branch::Q);
}

/// P^{(d)}(s) = (1/2 pi i) \int_Sigma (-mu)^d exp(mu^4/4 - tau mu^2/2 - s mu) dmu.
inline PearceyEval pearcey_P(double s, double tau, const Grid& grid, int max_order = 3) {
  return detail::pearcey_moments(s, tau, grid, max_order, Branch::P);
}

/// Relative residual of v''' - tau v' = +s v (Q) or -s v (P).
inline double ode_residual(const PearceyEval& e, Branch which) {
  if (e.max_order < 3) fail(ErrorKind::invalid_argument, "ode_residual needs orders 0..3");
  const double sv = e.s * e.values[0];
  const double r = which == Branch::Q ? e.values[3] - e.tau * e.values[1] - sv
                                      : e.values[3] - e.tau * e.values[1] + sv;
  return std::abs(r) / (1.0 + std::abs(sv));
}

// ---------------------------------------------------------------------------
// Saddle points of theta_s: roots of mu^3 - tau mu - s

struct SaddleSet {
  std::array<cplx, 3> mu{};
};

namespace detail {

// Real cube root for real arguments, principal complex root otherwise.
inline cplx principal_cbrt(cplx z) {
  if (z.imag() == 0.0) return std::cbrt(z.real());
  return std::pow(z, 1.0 / 3.0);
}

inline cplx cubic_value(cplx mu, double s, double tau) { return mu * mu * mu - tau * mu - s; }

inline cplx newton_polish(cplx mu, double s, double tau) {
  for (int it = 0; it < 4; ++it) {
    const cplx d = 3.0 * mu * mu - tau;
    if (std::abs(d) < 1e-14) break;
    const cplx step = cubic_value(mu, s, tau) / d;
    mu -= step;
    if (std::abs(step) < 1e-16 * (1.0 + std::abs(mu))) break;
  }
  return mu;
}

}  // namespace detail

/// mu_k = j^k c_+ + j^{-k} c_-, j = e^{2 pi i/3}, c_+ c_- = tau/3 (Cardano).
/// c_+ takes the real cube root when its argument is real; c_- is then
/// fixed by the product relation so the three roots are consistent for
/// either sign of tau. Close to the discriminant zero the closed form loses
/// accuracy and the roots are Newton-polished.
inline SaddleSet saddle_points(double s, double tau) {
  const cplx j = std::polar(1.0, 2.0 * std::numbers::pi / 3.0);
  const double disc = s * s - 4.0 * tau * tau * tau / 27.0;
  const cplx root = std::sqrt(cplx(disc, 0.0));
  // the larger of the two Cardano radicands keeps c_+ away from zero
  cplx big = 0.5 * (cplx(s) + root);
  cplx small = 0.5 * (cplx(s) - root);
  if (std::abs(small) > std::abs(big)) std::swap(big, small);
  const cplx cp = detail::principal_cbrt(big);
  const cplx cm = std::abs(cp) > 0.0 ? cplx(tau / 3.0) / cp : detail::principal_cbrt(small);
  SaddleSet out;
  cplx jk = 1.0;
  for (int k = 0; k < 3; ++k) {
    out.mu[k] = jk * cp + std::conj(jk) * cm;
    jk *= j;
  }
  const double scale = std::pow(1.0 + std::abs(s) + std::abs(tau), 1.5);
  const bool near_disc = std::abs(disc) < 1e-12;
  for (auto& mu : out.mu)
    if (near_disc || std::abs(detail::cubic_value(mu, s, tau)) > 1e-10 * scale)
      mu = detail::newton_polish(mu, s, tau);
  return out;
}

// ---------------------------------------------------------------------------
// Leading-order asymptotics as s -> +infinity

inline double asymptotic_phase(double s, double tau) {
  const double sin23 = std::sin(2.0 * std::numbers::pi / 3.0);
  return 0.75 * sin23 * std::pow(s, 4.0 / 3.0) - 0.5 * tau * sin23 * std::pow(s, 2.0 / 3.0) -
         std::numbers::pi / 6.0;
}

/// sqrt(2/(3 pi)) s^{-1/3} exp(-+(3/8 s^{4/3} + tau/4 s^{2/3} - tau^2/6)).
inline double asymptotic_envelope(double s, double tau, Branch which) {
  if (!(s > 0.0)) fail(ErrorKind::domain, "asymptotics need s > 0");
  const double expo = 0.375 * std::pow(s, 4.0 / 3.0) + 0.25 * tau * std::pow(s, 2.0 / 3.0) - tau * tau / 6.0;
  return std::sqrt(2.0 / (3.0 * std::numbers::pi)) * std::pow(s, -1.0 / 3.0) *
         std::exp(which == Branch::Q ? -expo : expo);
}

inline double asymptotic(double s, double tau, Branch which) {
  return asymptotic_envelope(s, tau, which) * std::cos(asymptotic_phase(s, tau));
}

}  // namespace pearcey
