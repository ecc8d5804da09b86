#pragma once

// Exact laws of lattice walks on H(Z) by dense convolution, Monte Carlo
// walkers, and the local limit prediction.
//
// States are stored in the centred coordinate t = 2 z~ = 2z - xy, which is
// an integer for lattice points. Each (x, y) row keeps only the t-interval
// it actually occupies, so storage tracks the true support of mu^{*N}
// instead of the quadratic worst-case box.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "nilwalk/charfun.hpp"
#include "nilwalk/errors.hpp"
#include "nilwalk/heisenberg.hpp"
#include "nilwalk/linalg2.hpp"
#include "nilwalk/parallel.hpp"
#include "nilwalk/rng.hpp"

namespace nilwalk {

struct atom {
  lattice_elem g;
  double p = 0.0;
};

/// Finitely supported probability measure on H(Z).
class finite_measure {
 public:
  finite_measure() = default;

  explicit finite_measure(std::vector<atom> atoms) : atoms_(std::move(atoms)) {
    if (atoms_.empty()) throw contract_error("finite_measure: no atoms");
    double total = 0.0;
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      if (!(atoms_[i].p > 0.0)) throw contract_error("finite_measure: probabilities must be positive");
      total += atoms_[i].p;
      for (std::size_t j = 0; j < i; ++j)
        if (atoms_[j].g == atoms_[i].g) throw contract_error("finite_measure: repeated atom");
      const auto bound = static_cast<i128>(1) << 40;
      const auto& g = atoms_[i].g;
      if (g.x > bound || g.x < -bound || g.y > bound || g.y < -bound || g.z > bound || g.z < -bound)
        throw contract_error("finite_measure: atom coordinates out of range");
    }
    if (std::abs(total - 1.0) > 1e-12) throw contract_error("finite_measure: total mass is not 1");
  }

  const std::vector<atom>& atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }

 private:
  std::vector<atom> atoms_;
};

/// Uniform measure on {id, A, A^-1, B, B^-1}.
inline finite_measure mu0() {
  const double p = 1.0 / 5.0;
  return finite_measure({{identity<i128>(), p},
                         {gen_a<i128>(), p},
                         {inverse(gen_a<i128>()), p},
                         {gen_b<i128>(), p},
                         {inverse(gen_b<i128>()), p}});
}

struct mu_params {
  std::array<double, 2> mean{0.0, 0.0};
  mat2 sigma2{};
  double delta = 0.0;       // det sigma = sqrt(det sigma^2)
  double zbar_tilde = 0.0;  // E[z - xy/2] per step
};

inline mu_params params_of(const finite_measure& mu) {
  mu_params out;
  for (const auto& a : mu.atoms()) {
    const double x = static_cast<double>(a.g.x), y = static_cast<double>(a.g.y);
    out.mean[0] += a.p * x;
    out.mean[1] += a.p * y;
    out.zbar_tilde += a.p * 0.5 * static_cast<double>(twice_tilde_z(a.g));
  }
  for (const auto& a : mu.atoms()) {
    const double x = static_cast<double>(a.g.x) - out.mean[0];
    const double y = static_cast<double>(a.g.y) - out.mean[1];
    out.sigma2[0][0] += a.p * x * x;
    out.sigma2[0][1] += a.p * x * y;
    out.sigma2[1][1] += a.p * y * y;
  }
  out.sigma2[1][0] = out.sigma2[0][1];
  out.delta = std::sqrt(std::max(0.0, det(out.sigma2)));
  return out;
}

/// Bounding box of a distribution, all bounds inclusive. t is 2 z~.
struct lattice_box {
  std::int64_t x_lo = 0, x_hi = -1, y_lo = 0, y_hi = -1, t_lo = 0, t_hi = -1;

  std::uint64_t cells() const {
    if (x_hi < x_lo || y_hi < y_lo || t_hi < t_lo) return 0;
    return static_cast<std::uint64_t>(x_hi - x_lo + 1) * static_cast<std::uint64_t>(y_hi - y_lo + 1) *
           static_cast<std::uint64_t>(t_hi - t_lo + 1);
  }
};

/// Default cap on the doubles held by the convolution (two generations).
inline constexpr std::uint64_t k_default_memory_budget = 4ull << 30;

/// Probability table over a finite set of lattice points.
class lattice_distribution {
 public:
  struct row {
    std::int64_t t_lo = 0;
    std::int64_t len = 0;  // zero for an empty row
    std::uint64_t offset = 0;
  };

  lattice_distribution() = default;

  /// Point mass at the identity.
  static lattice_distribution delta_at_identity() {
    lattice_distribution d;
    d.x_lo_ = d.x_hi_ = d.y_lo_ = d.y_hi_ = 0;
    d.rows_ = {row{0, 1, 0}};
    d.values_ = {1.0};
    return d;
  }

  std::int64_t x_lo() const { return x_lo_; }
  std::int64_t x_hi() const { return x_hi_; }
  std::int64_t y_lo() const { return y_lo_; }
  std::int64_t y_hi() const { return y_hi_; }
  std::size_t steps() const { return steps_; }
  std::size_t stored_values() const { return values_.size(); }
  /// Largest |1 - total mass| seen after any convolution step.
  double max_mass_defect() const { return max_mass_defect_; }

  lattice_box box() const {
    lattice_box b{x_lo_, x_hi_, y_lo_, y_hi_, std::numeric_limits<std::int64_t>::max(),
                  std::numeric_limits<std::int64_t>::min()};
    for (const auto& r : rows_) {
      if (r.len == 0) continue;
      b.t_lo = std::min(b.t_lo, r.t_lo);
      b.t_hi = std::max(b.t_hi, r.t_lo + r.len - 1);
    }
    if (b.t_lo > b.t_hi) b.t_lo = 0, b.t_hi = -1;
    return b;
  }

  /// Probability of the point with abelian coordinates (x, y) and 2 z~ = t.
  double at(std::int64_t x, std::int64_t y, std::int64_t t) const {
    if (x < x_lo_ || x > x_hi_ || y < y_lo_ || y > y_hi_) return 0.0;
    const row& r = rows_[row_index(x, y)];
    if (t < r.t_lo || t >= r.t_lo + r.len) return 0.0;
    return values_[r.offset + static_cast<std::uint64_t>(t - r.t_lo)];
  }

  double at(const lattice_elem& g) const {
    const i128 t = twice_tilde_z(g);
    constexpr i128 lim = std::numeric_limits<std::int64_t>::max();
    if (g.x > lim || g.x < -lim || g.y > lim || g.y < -lim || t > lim || t < -lim) return 0.0;
    return at(static_cast<std::int64_t>(g.x), static_cast<std::int64_t>(g.y), static_cast<std::int64_t>(t));
  }

  double total_mass() const {
    double s = 0.0;
    for (double v : values_) s += v;
    return s;
  }

  /// Calls f(x, y, t, p) for every stored cell in x-major order.
  template <class F>
  void for_each(F&& f) const {
    for (std::int64_t x = x_lo_; x <= x_hi_; ++x)
      for (std::int64_t y = y_lo_; y <= y_hi_; ++y) {
        const row& r = rows_[row_index(x, y)];
        for (std::int64_t k = 0; k < r.len; ++k) f(x, y, r.t_lo + k, values_[r.offset + static_cast<std::uint64_t>(k)]);
      }
  }

  /// Law of (x, y): a dense (x, y)-array in x-major order over the row box.
  std::vector<double> abelian_marginal() const {
    std::vector<double> out(rows_.size(), 0.0);
    for (std::size_t i = 0; i < rows_.size(); ++i)
      for (std::int64_t k = 0; k < rows_[i].len; ++k) out[i] += values_[rows_[i].offset + static_cast<std::uint64_t>(k)];
    return out;
  }

  /// Flat binary snapshot: six little-endian int64 box bounds
  /// (x_lo, x_hi, y_lo, y_hi, t_lo, t_hi), then the dense box of doubles in
  /// x-major order (t fastest).
  void write_binary(std::ostream& os, std::uint64_t max_cells = 1ull << 28) const {
    const lattice_box b = box();
    if (b.cells() > max_cells) throw resource_error("write_binary: box exceeds the export budget");
    const std::array<std::int64_t, 6> hdr{b.x_lo, b.x_hi, b.y_lo, b.y_hi, b.t_lo, b.t_hi};
    for (auto v : hdr) put_le(os, static_cast<std::uint64_t>(v));
    for (std::int64_t x = b.x_lo; x <= b.x_hi; ++x)
      for (std::int64_t y = b.y_lo; y <= b.y_hi; ++y)
        for (std::int64_t t = b.t_lo; t <= b.t_hi; ++t) {
          const double v = at(x, y, t);
          std::uint64_t bits;
          std::memcpy(&bits, &v, sizeof bits);
          put_le(os, bits);
        }
    if (!os) throw resource_error("write_binary: stream failure");
  }

  static lattice_distribution read_binary(std::istream& is, std::uint64_t max_cells = 1ull << 28) {
    std::array<std::int64_t, 6> hdr{};
    for (auto& v : hdr) v = static_cast<std::int64_t>(get_le(is));
    if (!is) throw contract_error("read_binary: truncated header");
    const lattice_box b{hdr[0], hdr[1], hdr[2], hdr[3], hdr[4], hdr[5]};
    if (b.x_hi < b.x_lo || b.y_hi < b.y_lo) throw contract_error("read_binary: empty box");
    if (b.cells() > max_cells) throw resource_error("read_binary: box exceeds the import budget");
    lattice_distribution d;
    d.x_lo_ = b.x_lo, d.x_hi_ = b.x_hi, d.y_lo_ = b.y_lo, d.y_hi_ = b.y_hi;
    const std::int64_t nt = b.t_hi >= b.t_lo ? b.t_hi - b.t_lo + 1 : 0;
    d.rows_.resize(static_cast<std::size_t>((b.x_hi - b.x_lo + 1) * (b.y_hi - b.y_lo + 1)));
    d.values_.resize(b.cells());
    for (std::size_t i = 0; i < d.rows_.size(); ++i) d.rows_[i] = {b.t_lo, nt, static_cast<std::uint64_t>(i) * static_cast<std::uint64_t>(nt)};
    for (auto& v : d.values_) {
      const std::uint64_t bits = get_le(is);
      std::memcpy(&v, &bits, sizeof v);
    }
    if (!is) throw contract_error("read_binary: truncated body");
    return d;
  }

  /// CSV with columns x, y, z, twice_zt, prob; zero cells are skipped.
  void write_csv(std::ostream& os, std::uint64_t max_rows = 1ull << 22) const {
    std::uint64_t n = 0;
    for (double v : values_) n += v != 0.0;
    if (n > max_rows) throw resource_error("write_csv: too many cells for CSV export");
    os << "x,y,z,twice_zt,prob\n";
    char buf[64];
    for_each([&](std::int64_t x, std::int64_t y, std::int64_t t, double p) {
      if (p == 0.0) return;
      std::snprintf(buf, sizeof buf, "%.17g", p);
      os << x << ',' << y << ',' << (t + x * y) / 2 << ',' << t << ',' << buf << '\n';
    });
  }

 private:
  friend lattice_distribution convolve_step(const lattice_distribution&, const finite_measure&, std::uint64_t,
                                            unsigned);

  std::size_t row_index(std::int64_t x, std::int64_t y) const {
    return static_cast<std::size_t>((x - x_lo_) * (y_hi_ - y_lo_ + 1) + (y - y_lo_));
  }

  static void put_le(std::ostream& os, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    os.write(b, 8);
  }

  static std::uint64_t get_le(std::istream& is) {
    unsigned char b[8] = {};
    is.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
  }

  std::int64_t x_lo_ = 0, x_hi_ = -1, y_lo_ = 0, y_hi_ = -1;
  std::vector<row> rows_;
  std::vector<double> values_;
  std::size_t steps_ = 0;
  double max_mass_defect_ = 0.0;
};

/// One right convolution: law of g s with g ~ in, s ~ mu.
/// Under g -> g s with s = [a, b, c], t moves to t + (2c - ab) + (xb - ya)
/// where (x, y) is the position before the step, so every source row is
/// carried rigidly to a single target row with a constant shift in t.
inline lattice_distribution convolve_step(const lattice_distribution& in, const finite_measure& mu,
                                          std::uint64_t memory_budget = k_default_memory_budget,
                                          unsigned threads = 0) {
  struct step {
    std::int64_t a, b, ts;
    double p;
  };
  std::vector<step> steps;
  std::int64_t a_lo = 0, a_hi = 0, b_lo = 0, b_hi = 0;
  bool first = true;
  for (const auto& at : mu.atoms()) {
    const auto a = static_cast<std::int64_t>(at.g.x), b = static_cast<std::int64_t>(at.g.y);
    steps.push_back({a, b, static_cast<std::int64_t>(twice_tilde_z(at.g)), at.p});
    a_lo = first ? a : std::min(a_lo, a), a_hi = first ? a : std::max(a_hi, a);
    b_lo = first ? b : std::min(b_lo, b), b_hi = first ? b : std::max(b_hi, b);
    first = false;
  }

  lattice_distribution out;
  out.x_lo_ = in.x_lo_ + a_lo, out.x_hi_ = in.x_hi_ + a_hi;
  out.y_lo_ = in.y_lo_ + b_lo, out.y_hi_ = in.y_hi_ + b_hi;
  const std::int64_t ny = out.y_hi_ - out.y_lo_ + 1;
  const std::size_t nrows = static_cast<std::size_t>((out.x_hi_ - out.x_lo_ + 1) * ny);
  if ((nrows * sizeof(lattice_distribution::row) + in.values_.size() * sizeof(double)) > memory_budget)
    throw resource_error("convolve_step: memory budget exceeded");
  out.rows_.assign(nrows, {});

  // Target t-range of each row: union of the shifted source ranges.
  std::vector<std::int64_t> hi(nrows, std::numeric_limits<std::int64_t>::min());
  std::vector<std::int64_t> lo(nrows, std::numeric_limits<std::int64_t>::max());
  for (std::int64_t x = in.x_lo_; x <= in.x_hi_; ++x)
    for (std::int64_t y = in.y_lo_; y <= in.y_hi_; ++y) {
      const auto& r = in.rows_[in.row_index(x, y)];
      if (r.len == 0) continue;
      for (const auto& s : steps) {
        const std::size_t k = out.row_index(x + s.a, y + s.b);
        const std::int64_t shift = s.ts + x * s.b - y * s.a;
        lo[k] = std::min(lo[k], r.t_lo + shift);
        hi[k] = std::max(hi[k], r.t_lo + r.len - 1 + shift);
      }
    }
  std::uint64_t total = 0;
  for (std::size_t k = 0; k < nrows; ++k) {
    if (hi[k] < lo[k]) {
      out.rows_[k] = {0, 0, total};
      continue;
    }
    out.rows_[k] = {lo[k], hi[k] - lo[k] + 1, total};
    total += static_cast<std::uint64_t>(hi[k] - lo[k] + 1);
  }
  if ((total + in.values_.size()) * sizeof(double) + nrows * sizeof(lattice_distribution::row) > memory_budget)
    throw resource_error("convolve_step: memory budget exceeded");
  out.values_.assign(total, 0.0);

  // Pull: each target plane sums its sources in atom order, so the result
  // does not depend on how planes are distributed over workers.
  const auto planes = static_cast<std::size_t>(out.x_hi_ - out.x_lo_ + 1);
  parallel_for(
      planes,
      [&](std::size_t i) {
        const std::int64_t x = out.x_lo_ + static_cast<std::int64_t>(i);
        for (std::int64_t y = out.y_lo_; y <= out.y_hi_; ++y) {
          const auto& tr = out.rows_[out.row_index(x, y)];
          if (tr.len == 0) continue;
          double* dst = out.values_.data() + tr.offset;
          for (const auto& s : steps) {
            const std::int64_t sx = x - s.a, sy = y - s.b;
            if (sx < in.x_lo_ || sx > in.x_hi_ || sy < in.y_lo_ || sy > in.y_hi_) continue;
            const auto& sr = in.rows_[in.row_index(sx, sy)];
            if (sr.len == 0) continue;
            const std::int64_t shift = s.ts + sx * s.b - sy * s.a;
            const double* src = in.values_.data() + sr.offset;
            double* d = dst + (sr.t_lo + shift - tr.t_lo);
            for (std::int64_t k = 0; k < sr.len; ++k) d[k] += s.p * src[k];
          }
        }
      },
      threads);

  out.steps_ = in.steps_ + 1;
  out.max_mass_defect_ = std::max(in.max_mass_defect_, std::abs(1.0 - out.total_mass()));
  return out;
}

/// mu^{*N} by N right convolutions of the point mass at the identity.
inline lattice_distribution exact_distribution(const finite_measure& mu, std::size_t N,
                                               std::uint64_t memory_budget = k_default_memory_budget,
                                               unsigned threads = 0) {
  auto d = lattice_distribution::delta_at_identity();
  for (std::size_t i = 0; i < N; ++i) d = convolve_step(d, mu, memory_budget, threads);
  return d;
}

inline double return_probability(const finite_measure& mu, std::size_t N,
                                 std::uint64_t memory_budget = k_default_memory_budget, unsigned threads = 0) {
  return exact_distribution(mu, N, memory_budget, threads).at(0, 0, 0);
}

/// Local limit prediction for P_N([n1, n2, n3]):
///   rho(sigma^-1 (n1, n2) / sqrt N, (n3 - n1 n2 / 2 - N zbar~) / (delta N)) / (delta^2 N^2).
/// Assumes the abelian mean is zero.
inline double llt_prediction(const mu_params& params, const std::array<std::int64_t, 3>& n, std::size_t N) {
  if (!(params.delta > 0.0)) throw numeric_domain_error("llt_prediction: singular covariance");
  if (N < 1) throw contract_error("llt_prediction: N must be at least 1");
  const mat2 sigma_inv = inverse(sqrt_spd(params.sigma2));
  const double Nd = static_cast<double>(N);
  const double n1 = static_cast<double>(n[0]), n2 = static_cast<double>(n[1]), n3 = static_cast<double>(n[2]);
  auto u = mat_vec(sigma_inv, {n1, n2});
  u[0] /= std::sqrt(Nd);
  u[1] /= std::sqrt(Nd);
  const double zt = (n3 - 0.5 * n1 * n2 - Nd * params.zbar_tilde) / (params.delta * Nd);
  return gaussian_density(u, zt) / (params.delta * params.delta * Nd * Nd);
}

/// Draws letters of mu; reusable across many walks.
class walk_sampler {
 public:
  explicit walk_sampler(const finite_measure& mu) : mu_(&mu) {
    std::vector<double> w;
    for (const auto& a : mu.atoms()) w.push_back(a.p);
    pick_ = std::discrete_distribution<std::size_t>(w.begin(), w.end());
  }

  lattice_elem walk(std::size_t N, engine& rng) {
    lattice_elem g{};
    for (std::size_t i = 0; i < N; ++i) g = mul(g, mu_->atoms()[pick_(rng)].g);
    return g;
  }

 private:
  const finite_measure* mu_;
  std::discrete_distribution<std::size_t> pick_;
};

/// One draw from mu^{*N}, deterministic per seed.
inline lattice_elem sample_walk(const finite_measure& mu, std::size_t N, std::uint64_t seed) {
  auto rng = make_stream(seed, 0);
  return walk_sampler(mu).walk(N, rng);
}

struct gaussian_law {};
using step_law = std::variant<gaussian_law, finite_measure>;

struct moment_estimate {
  double mean = 0.0;
  double se = 0.0;
  std::uint64_t samples = 0;
};

/// Monte Carlo estimate of E[H*(w)^{2k}] for N-letter words with i.i.d.
/// letters drawn from the law (standard normal in R^2, or the abelian part
/// of a lattice measure). Sharded like i_monte_carlo.
inline moment_estimate moment_hstar(std::size_t N, unsigned k, const step_law& law, std::uint64_t samples,
                                    std::uint64_t seed, unsigned threads = 0) {
  if (k < 1) throw contract_error("moment_hstar: k must be at least 1");
  if (samples < 2) throw contract_error("moment_hstar: need at least two samples");
  const std::uint64_t shards = (samples + k_shard_samples - 1) / k_shard_samples;
  struct acc_t {
    double s = 0, ss = 0;
  };
  std::vector<acc_t> acc(shards);
  parallel_for(
      shards,
      [&](std::size_t shard) {
        auto rng = make_stream(seed, shard);
        const std::uint64_t begin = shard * k_shard_samples;
        const std::uint64_t end = std::min(samples, begin + k_shard_samples);
        std::normal_distribution<double> normal;
        std::optional<std::discrete_distribution<std::size_t>> pick;
        const finite_measure* mu = std::get_if<finite_measure>(&law);
        if (mu) {
          std::vector<double> w;
          for (const auto& a : mu->atoms()) w.push_back(a.p);
          pick.emplace(w.begin(), w.end());
        }
        acc_t a;
        for (std::uint64_t i = begin; i < end; ++i) {
          double px = 0, py = 0, twice = 0;
          for (std::size_t j = 0; j < N; ++j) {
            double u, v;
            if (mu) {
              const auto& g = mu->atoms()[(*pick)(rng)].g;
              u = static_cast<double>(g.x), v = static_cast<double>(g.y);
            } else {
              u = normal(rng), v = normal(rng);
            }
            twice += px * v - py * u;
            px += u;
            py += v;
          }
          const double h = std::pow(0.5 * twice, 2.0 * k);
          a.s += h;
          a.ss += h * h;
        }
        acc[shard] = a;
      },
      threads);
  acc_t t;
  for (const auto& a : acc) t.s += a.s, t.ss += a.ss;
  const double n = static_cast<double>(samples);
  const double m = t.s / n;
  const double var = std::max(0.0, (t.ss - n * m * m) / (n - 1.0));
  return {m, std::sqrt(var / n), samples};
}

}  // namespace nilwalk
