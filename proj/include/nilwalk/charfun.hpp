#pragma once

// Modified characteristic function of the Gaussian walk on the Heisenberg
// group:
//
//   I(alpha, xi; N) = E[ e_{-alpha}(xbar / sqrt N) e_{-xi}(H*(x) / N) ]
//
// over N i.i.d. standard normal steps in R^2, and its limit I(alpha, xi).
// Three independent routes are provided: an O(N) tridiagonal recurrence with
// a rank-two correction, a dense N x N factorization, and Monte Carlo.

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "nilwalk/errors.hpp"
#include "nilwalk/linalg2.hpp"
#include "nilwalk/parallel.hpp"
#include "nilwalk/rng.hpp"

namespace nilwalk {

/// Frequency pair: alpha pairs with the abelian coordinates, xi with the
/// centred central coordinate.
struct freq_point {
  std::array<double, 2> alpha{0.0, 0.0};
  double xi = 0.0;
};

/// xi * coth(pi xi), continuous at 0 where it equals 1/pi.
inline double xi_coth(double xi) {
  constexpr double pi = std::numbers::pi;
  const double t = pi * xi;
  if (std::abs(xi) < 1e-4) {
    const double t2 = t * t;
    return (1.0 + t2 / 3.0 - t2 * t2 / 45.0 + 2.0 * t2 * t2 * t2 / 945.0) / pi;
  }
  return xi / std::tanh(t);
}

/// Limit I(alpha, xi) = exp(-2 pi |alpha|^2 / (xi coth pi xi)) / cosh(pi xi).
inline double i_closed(const freq_point& p) {
  constexpr double pi = std::numbers::pi;
  const double a2 = p.alpha[0] * p.alpha[0] + p.alpha[1] * p.alpha[1];
  return std::exp(-2.0 * pi * a2 / xi_coth(p.xi)) / std::cosh(pi * p.xi);
}

/// One term of the sequences eps_n, pi_n, delta_n driving the tridiagonal
/// elimination. pi_n is carried as a logarithm since it grows like
/// N sinh(2 pi xi) / (2 pi xi).
struct greek_state {
  std::size_t n = 0;
  double epsilon = 0.0;
  double log_pi = 0.0;
  double delta = 0.0;
  double zeta = 0.0;
};

/// xi_0 = pi xi / N.
inline double scaled_xi(double xi, std::size_t N) { return std::numbers::pi * xi / static_cast<double>(N); }

inline double zeta_of(double xi0) {
  const double s = xi0 * xi0;
  return (1.0 - s) / (1.0 + s);
}

inline double one_minus_zeta_sq(double xi0) {
  const double s = xi0 * xi0;
  return 4.0 * s / ((1.0 + s) * (1.0 + s));
}

/// Forward recurrence eps_1 = 2, eps_{n+1} = 2 - zeta^2 / eps_n,
/// delta_1 = 1, delta_{n+1} = 1 + zeta delta_n / eps_n, pi_n = prod eps_j.
/// Returns the states for n = 1..N.
///
/// eps_n tends to 1 and zeta to 1 as N grows, so the recurrence is run on
/// e_n = eps_n - 1 in the form e_{n+1} = (e_n + 1 - zeta^2) / (1 + e_n),
/// with 1 - zeta^2 = 4 xi_0^2 / (1 + xi_0^2)^2 evaluated directly. Written
/// as 2 - zeta^2 / eps the rounding error grows like N^2.
inline std::vector<greek_state> greek_trajectory(double xi, std::size_t N) {
  if (N < 1) throw contract_error("greek_trajectory: N must be at least 1");
  const double x0 = scaled_xi(xi, N);
  const double zeta = zeta_of(x0);
  const double u = one_minus_zeta_sq(x0);
  std::vector<greek_state> out(N);
  double e = 1.0, delta = 1.0, log_pi = std::log(2.0);
  for (std::size_t n = 1; n <= N; ++n) {
    out[n - 1] = {n, 1.0 + e, log_pi, delta, zeta};
    delta = 1.0 + zeta * delta / (1.0 + e);
    e = (e + u) / (1.0 + e);
    log_pi += std::log1p(e);
  }
  return out;
}

inline greek_state greek_recurrence(double xi, std::size_t N) { return greek_trajectory(xi, N).back(); }

/// Closed forms of the same sequences at index n for walk length N. Written
/// with L = log((1 + xi_0) / (1 - xi_0)):
///   eps_n   = 1 + 2 xi_0 / (1 + xi_0^2) coth(n L)
///   delta_n = tanh(n L / 2) / (2 xi_0) + 1/2
///   pi_n    = (1 - xi_0^2)^{n+1} sinh((n+1) L) / (2 xi_0 (1 + xi_0^2)^n)
/// Requires |xi_0| < 1.
inline greek_state greek_closed(double xi, std::size_t N, std::size_t n) {
  if (N < 1 || n < 1) throw contract_error("greek_closed: N and n must be at least 1");
  const double x0 = std::abs(scaled_xi(xi, N));
  const double nn = static_cast<double>(n);
  greek_state g{n, 0.0, 0.0, 0.0, zeta_of(x0)};
  if (x0 == 0.0) {
    g.epsilon = (nn + 1.0) / nn;
    g.log_pi = std::log(nn + 1.0);
    g.delta = (nn + 1.0) / 2.0;
    return g;
  }
  if (x0 >= 1.0) throw numeric_domain_error("greek_closed: requires |pi xi / N| < 1");
  const double L = std::log1p(x0) - std::log1p(-x0);
  const double s = x0 * x0;
  g.epsilon = 1.0 + 2.0 * x0 / (1.0 + s) / std::tanh(nn * L);
  g.delta = std::tanh(0.5 * nn * L) / (2.0 * x0) + 0.5;
  const double m = (nn + 1.0) * L;
  // log sinh(m), stable for large m.
  const double log_sinh = m > 20.0 ? m + std::log1p(-std::exp(-2.0 * m)) - std::numbers::ln2 : std::log(std::sinh(m));
  g.log_pi = (nn + 1.0) * std::log1p(-s) - nn * std::log1p(s) + log_sinh - std::log(2.0 * x0);
  return g;
}

inline greek_state greek_closed(double xi, std::size_t N) { return greek_closed(xi, N, N); }

/// sum_{j=1}^{N-1} delta_j^2 / eps_j.
inline double delta_sq_partial_sum(double xi, std::size_t N) {
  const auto traj = greek_trajectory(xi, N);
  double acc = 0.0;
  for (std::size_t j = 0; j + 1 < N; ++j) acc += traj[j].delta * traj[j].delta / traj[j].epsilon;
  return acc;
}

/// Spectral data of the rank-two block of I + P left after eliminating the
/// tridiagonal part of the quadratic form.
struct rank_two_spectrum {
  double lambda_plus = 1.0;
  double lambda_minus = 1.0;
  double proj_plus = 0.0;   // <v+, e1>^2
  double proj_minus = 1.0;  // <v-, e1>^2
  double p11 = 0.0;         // e1^t P e1
  double off_sq = 0.0;      // sum_{i>1} P_{1i}^2
  /// The four terms of det(I + P) expanded along the top row.
  std::array<double, 4> det_terms{};
  greek_state greek{};
  double partial_sum = 0.0;

  double det() const { return det_terms[0] + det_terms[1] + det_terms[2] + det_terms[3]; }
};

inline rank_two_spectrum rank_two(double xi, std::size_t N) {
  if (N < 1) throw contract_error("rank_two: N must be at least 1");
  const double x0 = scaled_xi(xi, N);
  const double s = x0 * x0;
  const double zeta = zeta_of(x0);
  const double Nd = static_cast<double>(N);

  const double u = one_minus_zeta_sq(x0);
  // same stable form as greek_trajectory
  double e = 1.0, delta = 1.0, log_pi = std::log(2.0), partial = 0.0;
  for (std::size_t n = 1; n < N; ++n) {
    partial += delta * delta / (1.0 + e);
    delta = 1.0 + zeta * delta / (1.0 + e);
    e = (e + u) / (1.0 + e);
    log_pi += std::log1p(e);
  }
  const double eps = 1.0 + e;

  rank_two_spectrum r;
  r.greek = {N, eps, log_pi, delta, zeta};
  r.partial_sum = partial;
  r.det_terms = {1.0 - 1.0 / (eps * (1.0 + s)), (Nd + 1.0) * s / (eps * (1.0 + s)),
                 -4.0 * s / (1.0 + s) * delta / eps, -4.0 * s * s / ((1.0 + s) * (1.0 + s) * eps) * partial};
  r.p11 = ((Nd + 1.0) * s - 1.0) / (eps * (1.0 + s)) - 4.0 * s * delta / ((1.0 + s) * eps);
  r.off_sq = -r.det_terms[3];

  const double d = r.det();
  const double trace = 2.0 + r.p11;
  const double disc = std::sqrt(std::max(0.25 * trace * trace - d, 0.0));
  r.lambda_plus = 0.5 * trace + disc;
  r.lambda_minus = d / r.lambda_plus;
  if (!(r.lambda_minus > 0.0)) throw numeric_domain_error("rank_two: non-positive eigenvalue in the rank-two block");

  // <v+,e1>^2 + <v-,e1>^2 = 1 and lambda+ <v+,e1>^2 + lambda- <v-,e1>^2 = 1 + e1^t P e1.
  const double gap = r.lambda_plus - r.lambda_minus;
  if (gap > 1e-14 * r.lambda_plus) {
    r.proj_plus = (1.0 + r.p11 - r.lambda_minus) / gap;
    r.proj_minus = (r.lambda_plus - 1.0 - r.p11) / gap;
  } else {
    r.proj_plus = 0.0;
    r.proj_minus = 1.0;
  }
  return r;
}

/// I(alpha, xi; N) in O(N) time.
inline double i_finite(const freq_point& p, std::size_t N) {
  constexpr double pi = std::numbers::pi;
  const auto r = rank_two(p.xi, N);
  const double x0 = scaled_xi(p.xi, N);
  const double s = x0 * x0;
  const double Nd = static_cast<double>(N);
  // det((1 - xi_0^2) I + xi_0^2 H) = (1 + xi_0^2)^N pi_N det(I + P)
  const double log_det = Nd * std::log1p(s) + r.greek.log_pi + std::log(r.det());
  const double a2 = p.alpha[0] * p.alpha[0] + p.alpha[1] * p.alpha[1];
  const double ratio = r.proj_plus / r.lambda_plus + r.proj_minus / r.lambda_minus;
  const double damping = -2.0 * pi * pi * a2 / (Nd * r.greek.epsilon * (1.0 + s)) * ratio;
  return std::exp(-0.5 * log_det + damping);
}

/// Largest N accepted by the dense route.
inline constexpr std::size_t k_dense_max_n = 4096;

/// I(alpha, xi; N) from the explicit N x N form (1 - xi_0^2) I + xi_0^2 H,
/// H_ij = N - 2|i - j|, via an LDL^t factorization and one linear solve.
inline double i_finite_dense(const freq_point& p, std::size_t N) {
  constexpr double pi = std::numbers::pi;
  if (N < 1) throw contract_error("i_finite_dense: N must be at least 1");
  if (N > k_dense_max_n) throw resource_error("i_finite_dense: N exceeds the dense budget of 4096");
  const double x0 = scaled_xi(p.xi, N);
  const double s = x0 * x0;
  const auto n = static_cast<Eigen::Index>(N);
  Eigen::MatrixXd A(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      A(i, j) = (i == j ? 1.0 - s : 0.0) + s * (static_cast<double>(n) - 2.0 * static_cast<double>(std::abs(i - j)));
  Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw numeric_domain_error("i_finite_dense: quadratic form is not positive definite");
  const auto d = ldlt.vectorD();
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(d(i) > 0.0)) throw numeric_domain_error("i_finite_dense: non-positive pivot");
    log_det += std::log(d(i));
  }
  const double a2 = p.alpha[0] * p.alpha[0] + p.alpha[1] * p.alpha[1];
  double quad = 0.0;
  if (a2 > 0.0) {
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
    quad = ones.dot(ldlt.solve(ones));
  }
  return std::exp(-0.5 * log_det - 2.0 * pi * pi * a2 / static_cast<double>(N) * quad);
}

struct mc_estimate {
  std::complex<double> value;
  double se_re = 0.0;
  double se_im = 0.0;
  std::uint64_t samples = 0;
};

/// Monte Carlo estimate of I(alpha, xi; N). Steps are x = sigma y with y
/// standard normal (sigma defaults to the identity). Samples are split into
/// fixed shards with their own seeded streams, and shard sums are combined in
/// shard order, so the result does not depend on the thread count.
inline mc_estimate i_monte_carlo(const freq_point& p, std::size_t N, std::uint64_t samples, std::uint64_t seed,
                                 std::optional<mat2> sigma = std::nullopt, unsigned threads = 0) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  if (samples < 1000) throw contract_error("i_monte_carlo: at least 1000 samples required");
  if (N < 1) throw contract_error("i_monte_carlo: N must be at least 1");
  const mat2 sg = sigma.value_or(identity2());
  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(N));
  const double inv_n = 1.0 / static_cast<double>(N);

  struct shard_sum {
    double c = 0, s = 0, cc = 0, ss = 0;
  };
  const std::uint64_t shards = (samples + k_shard_samples - 1) / k_shard_samples;
  std::vector<shard_sum> sums(shards);
  parallel_for(
      shards,
      [&](std::size_t shard) {
        auto rng = make_stream(seed, shard);
        std::normal_distribution<double> normal;
        const std::uint64_t begin = shard * k_shard_samples;
        const std::uint64_t end = std::min(samples, begin + k_shard_samples);
        shard_sum acc;
        for (std::uint64_t k = begin; k < end; ++k) {
          double px = 0, py = 0, twice_h = 0;
          for (std::size_t i = 0; i < N; ++i) {
            const double u = normal(rng), v = normal(rng);
            const double a = sg[0][0] * u + sg[0][1] * v;
            const double b = sg[1][0] * u + sg[1][1] * v;
            twice_h += px * b - py * a;
            px += a;
            py += b;
          }
          const double phase = -two_pi * ((p.alpha[0] * px + p.alpha[1] * py) * inv_sqrt_n + p.xi * 0.5 * twice_h * inv_n);
          const double c = std::cos(phase), s = std::sin(phase);
          acc.c += c;
          acc.s += s;
          acc.cc += c * c;
          acc.ss += s * s;
        }
        sums[shard] = acc;
      },
      threads);

  shard_sum total;
  for (const auto& s : sums) {
    total.c += s.c;
    total.s += s.s;
    total.cc += s.cc;
    total.ss += s.ss;
  }
  const double n = static_cast<double>(samples);
  const double mc = total.c / n, ms = total.s / n;
  const double var_c = std::max(0.0, (total.cc - n * mc * mc) / (n - 1.0));
  const double var_s = std::max(0.0, (total.ss - n * ms * ms) / (n - 1.0));
  return {{mc, ms}, std::sqrt(var_c / n), std::sqrt(var_s / n), samples};
}

/// I(sigma alpha, det(sigma) xi; N): the characteristic function for steps
/// with covariance sigma^2, sigma symmetric positive definite.
inline double i_rescaled(const freq_point& p, std::size_t N, const mat2& sigma) {
  if (!is_symmetric_positive_definite(sigma))
    throw numeric_domain_error("i_rescaled: sigma must be symmetric positive definite");
  return i_finite({mat_vec(sigma, p.alpha), det(sigma) * p.xi}, N);
}

/// Cut-off for the xi integral; the integrand decays like xi exp(-pi xi).
inline constexpr double k_density_xi_cutoff = 40.0;

/// Limiting density rho(u, z~): inverse Fourier transform of I(alpha, xi)
/// in all three variables. The alpha integral is Gaussian and done in closed
/// form, leaving
///   rho = int (g / (2 cosh pi xi)) exp(-pi g |u|^2 / 2) cos(2 pi xi z~) dxi,
/// g = xi coth(pi xi).
inline double gaussian_density(const std::array<double, 2>& u, double zt) {
  constexpr double pi = std::numbers::pi;
  const double u2 = u[0] * u[0] + u[1] * u[1];
  auto integrand = [&](double xi) {
    const double g = xi_coth(xi);
    return g / (2.0 * std::cosh(pi * xi)) * std::exp(-0.5 * pi * g * u2) * std::cos(2.0 * pi * xi * zt);
  };
  double err = 0.0;
  const double half = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      integrand, 0.0, k_density_xi_cutoff, 20, 1e-13, &err);
  const double value = 2.0 * half;
  if (!(2.0 * err <= 1e-9) || !std::isfinite(value))
    throw quadrature_error("gaussian_density: xi quadrature did not converge", value, 2.0 * err);
  return value;
}

}  // namespace nilwalk
