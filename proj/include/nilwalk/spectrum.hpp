#pragma once

// Characteristic functions of finitely supported measures on R^2, their
// large spectrum {alpha : |mu^(alpha)| > 1 - theta}, and its local maxima.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <vector>

#include "nilwalk/csv.hpp"
#include "nilwalk/errors.hpp"
#include "nilwalk/linalg2.hpp"
#include "nilwalk/parallel.hpp"

namespace nilwalk {

using point2 = std::array<double, 2>;

struct plane_atom {
  point2 x{};
  double p = 0.0;
};

class plane_measure {
 public:
  plane_measure() = default;

  explicit plane_measure(std::vector<plane_atom> atoms) : atoms_(std::move(atoms)) {
    if (atoms_.empty()) throw contract_error("plane_measure: no atoms");
    double total = 0.0;
    for (const auto& a : atoms_) {
      if (!(a.p > 0.0) || !std::isfinite(a.x[0]) || !std::isfinite(a.x[1]))
        throw contract_error("plane_measure: bad atom");
      total += a.p;
      mean_[0] += a.p * a.x[0];
      mean_[1] += a.p * a.x[1];
    }
    if (std::abs(total - 1.0) > 1e-12) throw contract_error("plane_measure: total mass is not 1");
    for (const auto& a : atoms_) {
      const double dx = a.x[0] - mean_[0], dy = a.x[1] - mean_[1];
      cov_[0][0] += a.p * dx * dx;
      cov_[0][1] += a.p * dx * dy;
      cov_[1][1] += a.p * dy * dy;
    }
    cov_[1][0] = cov_[0][1];
  }

  const std::vector<plane_atom>& atoms() const { return atoms_; }
  point2 mean() const { return mean_; }
  mat2 covariance() const { return cov_; }
  bool mean_zero(double tol = 1e-12) const { return std::abs(mean_[0]) <= tol && std::abs(mean_[1]) <= tol; }

 private:
  std::vector<plane_atom> atoms_;
  point2 mean_{0.0, 0.0};
  mat2 cov_{};
};

/// mu^(alpha) = sum_x p_x e(-alpha . x).
inline std::complex<double> mu_hat(const plane_measure& m, const point2& alpha) {
  std::complex<double> acc = 0.0;
  for (const auto& a : m.atoms()) {
    const double ang = -2.0 * std::numbers::pi * (alpha[0] * a.x[0] + alpha[1] * a.x[1]);
    acc += a.p * std::complex<double>(std::cos(ang), std::sin(ang));
  }
  return acc;
}

/// mu_2 = mu * mu-check, the law of X - X' for independent X, X' ~ mu.
/// Coinciding differences are merged.
inline plane_measure symmetrize(const plane_measure& m) {
  std::map<point2, double> merged;
  for (const auto& a : m.atoms())
    for (const auto& b : m.atoms()) merged[{a.x[0] - b.x[0], a.x[1] - b.x[1]}] += a.p * b.p;
  std::vector<plane_atom> atoms;
  double total = 0.0;
  for (const auto& [x, p] : merged) atoms.push_back({x, p}), total += p;
  for (auto& a : atoms) a.p /= total;
  return plane_measure(std::move(atoms));
}

inline bool in_large_spectrum(const plane_measure& m, const point2& alpha, double theta) {
  return std::abs(mu_hat(m, alpha)) > 1.0 - theta;
}

struct search_box {
  point2 lo{-1.0, -1.0};
  point2 hi{1.0, 1.0};

  bool contains(const point2& a) const { return a[0] >= lo[0] && a[0] <= hi[0] && a[1] >= lo[1] && a[1] <= hi[1]; }
};

struct spectral_max {
  point2 location{};
  double value = 0.0;  // |mu^|
};

struct spectrum_report {
  double theta = 0.0;
  search_box window;
  std::vector<spectral_max> maxima;
};

/// |mu^|^2 with its gradient and Hessian in alpha.
struct sq_modulus {
  double f = 0.0;
  point2 grad{};
  mat2 hess{};
};

inline sq_modulus sq_modulus_at(const plane_measure& m, const point2& alpha) {
  constexpr double tp = 2.0 * std::numbers::pi;
  double re = 0, im = 0;
  point2 gre{}, gim{};
  mat2 hre{}, him{};
  for (const auto& a : m.atoms()) {
    const double phi = tp * (alpha[0] * a.x[0] + alpha[1] * a.x[1]);
    const double c = std::cos(phi), s = std::sin(phi);
    // mu^ = sum p (cos phi - i sin phi)
    re += a.p * c;
    im -= a.p * s;
    for (int i = 0; i < 2; ++i) {
      gre[i] -= a.p * tp * a.x[i] * s;
      gim[i] -= a.p * tp * a.x[i] * c;
      for (int j = 0; j < 2; ++j) {
        hre[i][j] -= a.p * tp * tp * a.x[i] * a.x[j] * c;
        him[i][j] += a.p * tp * tp * a.x[i] * a.x[j] * s;
      }
    }
  }
  sq_modulus out;
  out.f = re * re + im * im;
  for (int i = 0; i < 2; ++i) {
    out.grad[i] = 2.0 * (re * gre[i] + im * gim[i]);
    for (int j = 0; j < 2; ++j)
      out.hess[i][j] = 2.0 * (gre[i] * gre[j] + re * hre[i][j] + gim[i] * gim[j] + im * him[i][j]);
  }
  return out;
}

/// Ascent on |mu^|^2 from a start point: Newton steps where the Hessian is
/// negative definite, gradient steps otherwise, always with backtracking.
/// Returns false if the gradient tolerance was not reached.
inline bool refine_maximum(const plane_measure& m, point2& alpha, double grad_tol = 1e-10, int max_iter = 200) {
  for (int it = 0; it < max_iter; ++it) {
    const auto q = sq_modulus_at(m, alpha);
    if (std::hypot(q.grad[0], q.grad[1]) <= grad_tol) return true;
    point2 dir;
    const mat2 neg{{{-q.hess[0][0], -q.hess[0][1]}, {-q.hess[1][0], -q.hess[1][1]}}};
    if (is_symmetric_positive_definite(neg, 1e-9)) {
      dir = mat_vec(inverse(neg), q.grad);
    } else {
      dir = q.grad;
    }
    double step = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls, step *= 0.5) {
      const point2 cand{alpha[0] + step * dir[0], alpha[1] + step * dir[1]};
      if (sq_modulus_at(m, cand).f >= q.f) {
        alpha = cand;
        moved = true;
        break;
      }
    }
    if (!moved) return std::hypot(q.grad[0], q.grad[1]) <= grad_tol * 10;
  }
  const auto q = sq_modulus_at(m, alpha);
  return std::hypot(q.grad[0], q.grad[1]) <= grad_tol;
}

/// Largest admissible grid step: the scan can only miss a peak if |mu^|
/// changes by more than theta / 10 between neighbours, and |grad mu^| is
/// at most 2 pi sum p |x|.
inline double max_grid_step(const plane_measure& m, double theta) {
  double lip = 0.0;
  for (const auto& a : m.atoms()) lip += a.p * std::hypot(a.x[0], a.x[1]);
  lip *= 2.0 * std::numbers::pi;
  return lip > 0.0 ? theta / (10.0 * lip) : std::numeric_limits<double>::infinity();
}

/// Local maxima of |mu^| in the window with value above 1 - theta: a grid
/// scan for candidates, then ascent to gradient norm <= 1e-10, then
/// de-duplication within radius 1e-6.
inline spectrum_report find_local_maxima(const plane_measure& m, const search_box& window, double theta,
                                         double grid_step, unsigned threads = 0) {
  if (!(theta > 0.0 && theta < 1.0)) throw contract_error("find_local_maxima: theta must lie in (0, 1)");
  if (!(grid_step > 0.0)) throw contract_error("find_local_maxima: grid step must be positive");
  if (grid_step >= max_grid_step(m, theta)) throw contract_error("find_local_maxima: grid step too coarse for theta");
  const auto nx = static_cast<std::size_t>(std::floor((window.hi[0] - window.lo[0]) / grid_step)) + 1;
  const auto ny = static_cast<std::size_t>(std::floor((window.hi[1] - window.lo[1]) / grid_step)) + 1;
  if (nx * ny > (1ull << 26)) throw resource_error("find_local_maxima: grid too large");
  auto pt = [&](std::size_t i, std::size_t j) {
    return point2{window.lo[0] + static_cast<double>(i) * grid_step, window.lo[1] + static_cast<double>(j) * grid_step};
  };
  std::vector<double> f(nx * ny);
  parallel_for(
      nx, [&](std::size_t i) { for (std::size_t j = 0; j < ny; ++j) f[i * ny + j] = std::norm(mu_hat(m, pt(i, j))); },
      threads);

  // Candidates: grid points no smaller than any neighbour, with modulus
  // within theta / 10 of the threshold (the scan's own error margin).
  const double floor_val = std::pow(std::max(0.0, 1.0 - theta - theta / 10.0), 2);
  std::vector<std::vector<point2>> cand(nx);
  parallel_for(
      nx,
      [&](std::size_t i) {
        for (std::size_t j = 0; j < ny; ++j) {
          const double v = f[i * ny + j];
          if (v <= floor_val) continue;
          bool peak = true;
          for (int di = -1; di <= 1 && peak; ++di)
            for (int dj = -1; dj <= 1; ++dj) {
              if (!di && !dj) continue;
              const auto ii = static_cast<std::ptrdiff_t>(i) + di, jj = static_cast<std::ptrdiff_t>(j) + dj;
              if (ii < 0 || jj < 0 || ii >= static_cast<std::ptrdiff_t>(nx) || jj >= static_cast<std::ptrdiff_t>(ny))
                continue;
              if (f[static_cast<std::size_t>(ii) * ny + static_cast<std::size_t>(jj)] > v) {
                peak = false;
                break;
              }
            }
          if (!peak) continue;
          point2 a = pt(i, j);
          if (refine_maximum(m, a)) cand[i].push_back(a);
        }
      },
      threads);

  spectrum_report rep{theta, window, {}};
  for (const auto& row : cand)
    for (const auto& a : row) {
      if (!window.contains(a)) continue;
      const auto q = sq_modulus_at(m, a);
      const double value = std::sqrt(q.f);
      if (!(value > 1.0 - theta)) continue;
      // strict maximum: both Hessian eigenvalues clearly negative, which
      // rules out the ridges of measures supported on a line
      const double tr = q.hess[0][0] + q.hess[1][1];
      if (!(tr < 0.0 && det(q.hess) > 1e-8 * tr * tr)) continue;
      bool dup = false;
      for (const auto& r : rep.maxima)
        if (std::hypot(r.location[0] - a[0], r.location[1] - a[1]) <= 1e-6) dup = true;
      if (!dup) rep.maxima.push_back({a, value});
    }
  std::sort(rep.maxima.begin(), rep.maxima.end(), [](const auto& x, const auto& y) { return x.location < y.location; });
  return rep;
}

/// |mu^(alpha0 + alpha) - mu^(alpha0) exp(-2 pi^2 alpha^t Sigma alpha)|,
/// Sigma the covariance of mu.
inline double taylor_residual(const plane_measure& m, const point2& alpha0, const point2& alpha) {
  const mat2 s = m.covariance();
  const auto sa = mat_vec(s, alpha);
  const double quad = alpha[0] * sa[0] + alpha[1] * sa[1];
  const auto shifted = mu_hat(m, {alpha0[0] + alpha[0], alpha0[1] + alpha[1]});
  return std::abs(shifted - mu_hat(m, alpha0) * std::exp(-2.0 * std::numbers::pi * std::numbers::pi * quad));
}

/// CSV (alpha1, alpha2, abs_mu_hat, is_max): the scan grid followed by the
/// refined maxima.
inline void write_spectrum_csv(std::ostream& os, const plane_measure& m, const spectrum_report& rep,
                               double csv_step) {
  csv_writer w(os);
  w.row("alpha1", "alpha2", "abs_mu_hat", "is_max");
  const auto nx = static_cast<std::size_t>(std::floor((rep.window.hi[0] - rep.window.lo[0]) / csv_step)) + 1;
  const auto ny = static_cast<std::size_t>(std::floor((rep.window.hi[1] - rep.window.lo[1]) / csv_step)) + 1;
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j) {
      const point2 a{rep.window.lo[0] + static_cast<double>(i) * csv_step,
                     rep.window.lo[1] + static_cast<double>(j) * csv_step};
      w.row(a[0], a[1], std::abs(mu_hat(m, a)), 0);
    }
  for (const auto& r : rep.maxima) w.row(r.location[0], r.location[1], r.value, 1);
}

}  // namespace nilwalk
