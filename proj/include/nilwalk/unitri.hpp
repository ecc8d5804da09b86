#pragma once

// Walks on N_n(Z/pZ) driven by measures on Z^{n-1} pushed through the
// superdiagonal embedding M, and the law of the upper right corner Z.
//
// Group elements are stored as mixed-radix indices over the above-diagonal
// entries in row-major order, first entry most significant. Walks use right
// multiplication, g <- g M(v).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "nilwalk/checked.hpp"
#include "nilwalk/csv.hpp"
#include "nilwalk/errors.hpp"
#include "nilwalk/parallel.hpp"
#include "nilwalk/rng.hpp"

namespace nilwalk {

using zvec = std::vector<std::int64_t>;

inline std::size_t entry_count(unsigned n) { return static_cast<std::size_t>(n) * (n - 1) / 2; }

/// Position of entry (i, j), i < j, in row-major order.
inline std::size_t entry_index(unsigned n, unsigned i, unsigned j) {
  return static_cast<std::size_t>(i) * n - static_cast<std::size_t>(i) * (i + 1) / 2 + (j - i - 1);
}

inline std::uint64_t checked_pow(std::uint64_t base, std::size_t e) {
  std::uint64_t r = 1;
  for (std::size_t i = 0; i < e; ++i)
    if (__builtin_mul_overflow(r, base, &r)) throw resource_error("state space size overflows 64 bits");
  return r;
}

/// Element of N_n(Z/pZ).
struct unitri_state {
  unsigned n = 2;
  std::uint32_t p = 2;
  std::vector<std::uint32_t> entries;  // above-diagonal, row-major

  std::uint32_t at(unsigned i, unsigned j) const {
    if (i == j) return 1;
    if (i > j) return 0;
    return entries[entry_index(n, i, j)];
  }
  std::uint32_t corner() const { return at(0, n - 1); }

  friend bool operator==(const unitri_state&, const unitri_state&) = default;
};

inline unitri_state unitri_identity(unsigned n, std::uint32_t p) {
  if (n < 2 || p < 2) throw contract_error("unitri_identity: need n >= 2 and p >= 2");
  return {n, p, std::vector<std::uint32_t>(entry_count(n), 0)};
}

inline std::uint32_t reduce(std::int64_t v, std::uint32_t p) {
  const std::int64_t r = v % static_cast<std::int64_t>(p);
  return static_cast<std::uint32_t>(r < 0 ? r + p : r);
}

/// M(v) mod p: v on the superdiagonal, zero elsewhere above it.
inline unitri_state embed(const zvec& v, std::uint32_t p) {
  const auto n = static_cast<unsigned>(v.size() + 1);
  auto s = unitri_identity(n, p);
  for (unsigned i = 0; i + 1 < n; ++i) s.entries[entry_index(n, i, i + 1)] = reduce(v[i], p);
  return s;
}

inline unitri_state unitri_mul(const unitri_state& a, const unitri_state& b) {
  if (a.n != b.n || a.p != b.p) throw contract_error("unitri_mul: dimension or modulus mismatch");
  auto c = unitri_identity(a.n, a.p);
  const std::uint64_t p = a.p;
  for (unsigned i = 0; i < a.n; ++i)
    for (unsigned j = i + 1; j < a.n; ++j) {
      std::uint64_t acc = (static_cast<std::uint64_t>(a.at(i, j)) + b.at(i, j)) % p;
      for (unsigned l = i + 1; l < j; ++l) acc = (acc + static_cast<std::uint64_t>(a.at(i, l)) * b.at(l, j)) % p;
      c.entries[entry_index(a.n, i, j)] = static_cast<std::uint32_t>(acc);
    }
  return c;
}

inline std::uint64_t encode(const unitri_state& s) {
  std::uint64_t idx = 0;
  for (auto e : s.entries) idx = idx * s.p + e;
  return idx;
}

inline unitri_state decode(std::uint64_t idx, unsigned n, std::uint32_t p) {
  auto s = unitri_identity(n, p);
  if (idx >= checked_pow(p, s.entries.size())) throw contract_error("decode: index out of range");
  for (std::size_t k = s.entries.size(); k-- > 0;) {
    s.entries[k] = static_cast<std::uint32_t>(idx % p);
    idx /= p;
  }
  return s;
}

/// Z(prod M(v_i)) = sum over i_1 < ... < i_{n-1} of v_{i_1}^(1) ... v_{i_{n-1}}^(n-1),
/// by a single sweep that keeps the partial sums for every prefix length of
/// the index chain.
template <class R>
i128 corner_from_word(const R& word) {
  if (word.size() == 0) return 0;
  const std::size_t m = word[0].size();
  std::vector<i128> c(m + 1, 0);
  c[0] = 1;
  for (std::size_t t = 0; t < word.size(); ++t) {
    const auto& v = word[t];
    if (v.size() != m) throw contract_error("corner_from_word: ragged word");
    for (std::size_t j = m; j >= 1; --j) c[j] = checked_add(c[j], checked_mul(c[j - 1], static_cast<i128>(v[j - 1])));
  }
  return c[m];
}

struct zn_atom {
  zvec v;
  double p = 0.0;
};

/// Step measure on Z^{n-1}. Construction checks: positive mass at 0, mean
/// zero, and that the support generates Z^{n-1} as a group. Identity
/// covariance is checked only on request.
class step_measure_zn {
 public:
  step_measure_zn() = default;

  explicit step_measure_zn(std::vector<zn_atom> atoms, bool require_identity_covariance = false)
      : atoms_(std::move(atoms)) {
    if (atoms_.empty()) throw contract_error("step_measure_zn: no atoms");
    dim_ = atoms_[0].v.size();
    if (dim_ < 1) throw contract_error("step_measure_zn: dimension must be at least 1");
    double total = 0.0, zero_mass = 0.0;
    mean_.assign(dim_, 0.0);
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      const auto& a = atoms_[i];
      if (a.v.size() != dim_) throw contract_error("step_measure_zn: atoms of different dimension");
      if (!(a.p > 0.0)) throw contract_error("step_measure_zn: probabilities must be positive");
      for (std::size_t j = 0; j < i; ++j)
        if (atoms_[j].v == a.v) throw contract_error("step_measure_zn: repeated atom");
      for (auto x : a.v)
        if (x > (1 << 20) || x < -(1 << 20)) throw contract_error("step_measure_zn: atom out of range");
      total += a.p;
      if (std::all_of(a.v.begin(), a.v.end(), [](auto x) { return x == 0; })) zero_mass += a.p;
      for (std::size_t d = 0; d < dim_; ++d) mean_[d] += a.p * static_cast<double>(a.v[d]);
    }
    if (std::abs(total - 1.0) > 1e-12) throw contract_error("step_measure_zn: total mass is not 1");
    if (!(zero_mass > 0.0)) throw contract_error("step_measure_zn: no mass at 0");
    for (double m : mean_)
      if (std::abs(m) > 1e-12) throw contract_error("step_measure_zn: mean is not zero");
    if (!generates_lattice()) throw contract_error("step_measure_zn: support does not generate Z^{n-1}");
    covariance_.assign(dim_ * dim_, 0.0);
    for (const auto& a : atoms_)
      for (std::size_t r = 0; r < dim_; ++r)
        for (std::size_t c = 0; c < dim_; ++c)
          covariance_[r * dim_ + c] += a.p * static_cast<double>(a.v[r]) * static_cast<double>(a.v[c]);
    if (require_identity_covariance)
      for (std::size_t r = 0; r < dim_; ++r)
        for (std::size_t c = 0; c < dim_; ++c)
          if (std::abs(covariance_[r * dim_ + c] - (r == c ? 1.0 : 0.0)) > 1e-12)
            throw contract_error("step_measure_zn: covariance is not the identity");
  }

  const std::vector<zn_atom>& atoms() const { return atoms_; }
  std::size_t dim() const { return dim_; }
  /// Row-major dim x dim covariance.
  const std::vector<double>& covariance() const { return covariance_; }

 private:
  // Integer row reduction of the support; the generated lattice is Z^d
  // exactly when the echelon form has d pivots, all equal to +-1.
  bool generates_lattice() const {
    std::vector<std::vector<i128>> rows;
    for (const auto& a : atoms_) rows.emplace_back(a.v.begin(), a.v.end());
    std::size_t r0 = 0;
    for (std::size_t col = 0; col < dim_; ++col) {
      while (true) {
        std::size_t best = rows.size();
        for (std::size_t r = r0; r < rows.size(); ++r)
          if (rows[r][col] != 0 && (best == rows.size() || abs128(rows[r][col]) < abs128(rows[best][col]))) best = r;
        if (best == rows.size()) return false;
        std::swap(rows[r0], rows[best]);
        bool done = true;
        for (std::size_t r = r0 + 1; r < rows.size(); ++r) {
          if (rows[r][col] == 0) continue;
          const i128 q = rows[r][col] / rows[r0][col];
          for (std::size_t c = col; c < dim_; ++c) rows[r][c] -= q * rows[r0][c];
          if (rows[r][col] != 0) done = false;
        }
        if (done) break;
      }
      if (abs128(rows[r0][col]) != 1) return false;
      ++r0;
    }
    return true;
  }

  static i128 abs128(i128 v) { return v < 0 ? -v : v; }

  std::vector<zn_atom> atoms_;
  std::size_t dim_ = 0;
  std::vector<double> mean_;
  std::vector<double> covariance_;
};

/// Lazy symmetric measure: mass 1/2 at 0 and 1/(4(n-1)) at each +-e_i.
/// Its covariance is I / (2(n-1)).
inline step_measure_zn default_step_measure(unsigned n) {
  if (n < 2) throw contract_error("default_step_measure: n must be at least 2");
  const std::size_t d = n - 1;
  std::vector<zn_atom> atoms{{zvec(d, 0), 0.5}};
  const double q = 1.0 / (4.0 * static_cast<double>(d));
  for (std::size_t i = 0; i < d; ++i)
    for (int s : {1, -1}) {
      zvec v(d, 0);
      v[i] = s;
      atoms.push_back({v, q});
    }
  return step_measure_zn(std::move(atoms));
}

/// Hard cap on transition-table entries for exact walks.
inline constexpr std::uint64_t k_default_table_budget = 1ull << 26;

/// Exact Markov chain on a finite state space where each atom acts by a
/// bijection. Stored as pull tables: next[h] = sum_s p_s cur[src_s[h]].
class exact_chain {
 public:
  exact_chain() = default;

  exact_chain(std::vector<std::vector<std::uint32_t>> sources, std::vector<double> probs, std::uint32_t p,
              std::size_t corner_digit, std::size_t digits)
      : src_(std::move(sources)), probs_(std::move(probs)), p_(p), corner_digit_(corner_digit), digits_(digits) {
    values_.assign(src_.front().size(), 0.0);
    values_[0] = 1.0;
    corner_stride_ = checked_pow(p_, digits_ - 1 - corner_digit_);
  }

  void step(unsigned threads = 0) {
    std::vector<double> next(values_.size(), 0.0);
    constexpr std::size_t chunk = 1 << 14;
    const std::size_t chunks = (values_.size() + chunk - 1) / chunk;
    parallel_for(
        chunks,
        [&](std::size_t c) {
          const std::size_t end = std::min(values_.size(), (c + 1) * chunk);
          for (std::size_t s = 0; s < src_.size(); ++s) {
            const auto& tab = src_[s];
            const double q = probs_[s];
            for (std::size_t h = c * chunk; h < end; ++h) next[h] += q * values_[tab[h]];
          }
        },
        threads);
    values_.swap(next);
    ++steps_;
  }

  const std::vector<double>& values() const { return values_; }
  std::size_t steps() const { return steps_; }
  std::uint32_t p() const { return p_; }

  double total_mass() const {
    double s = 0.0;
    for (double v : values_) s += v;
    return s;
  }

  /// Law of the corner entry mod p.
  std::vector<double> corner_marginal() const {
    std::vector<double> out(p_, 0.0);
    for (std::size_t h = 0; h < values_.size(); ++h) out[(h / corner_stride_) % p_] += values_[h];
    return out;
  }

 private:
  std::vector<std::vector<std::uint32_t>> src_;
  std::vector<double> probs_;
  std::uint32_t p_ = 2;
  std::size_t corner_digit_ = 0, digits_ = 1;
  std::uint64_t corner_stride_ = 1;
  std::vector<double> values_;
  std::size_t steps_ = 0;
};

inline void check_chain_budget(std::uint64_t states, std::size_t atoms, std::uint64_t budget) {
  if (states > (1ull << 32)) throw resource_error("exact walk: state space exceeds 32-bit indexing");
  std::uint64_t cells;
  if (__builtin_mul_overflow(states, static_cast<std::uint64_t>(atoms), &cells) || cells > budget)
    throw resource_error("exact walk: transition tables exceed the budget");
}

/// Chain on the full group N_n(Z/pZ).
inline exact_chain group_chain(const step_measure_zn& mu, std::uint32_t p,
                               std::uint64_t budget = k_default_table_budget) {
  const auto n = static_cast<unsigned>(mu.dim() + 1);
  if (n < 2 || p < 2) throw contract_error("group_chain: need n >= 2 and p >= 2");
  const std::size_t m = entry_count(n);
  const std::uint64_t states = checked_pow(p, m);
  check_chain_budget(states, mu.atoms().size(), budget);

  // Digit weight of each entry and the per-atom update
  // (g M(v))[i][j] = g[i][j] + g[i][j-1] v^(j-1), with g[i][i] = 1.
  std::vector<std::uint64_t> weight(m);
  for (std::size_t k = 0; k < m; ++k) weight[k] = checked_pow(p, m - 1 - k);
  std::vector<std::vector<std::uint32_t>> src;
  std::vector<double> probs;
  for (const auto& a : mu.atoms()) {
    std::vector<std::uint32_t> v(n - 1);
    for (unsigned i = 0; i + 1 < n; ++i) v[i] = reduce(a.v[i], p);
    std::vector<std::uint32_t> tab(states);
    std::vector<std::uint32_t> g(m);
    for (std::uint64_t idx = 0; idx < states; ++idx) {
      std::uint64_t r = idx;
      for (std::size_t k = m; k-- > 0;) g[k] = static_cast<std::uint32_t>(r % p), r /= p;
      std::uint64_t out = 0;
      for (unsigned i = 0; i < n; ++i)
        for (unsigned j = i + 1; j < n; ++j) {
          const std::uint64_t left = j - 1 == i ? 1 : g[entry_index(n, i, j - 1)];
          const std::uint64_t val = (g[entry_index(n, i, j)] + left * v[j - 1]) % p;
          out += val * weight[entry_index(n, i, j)];
        }
      tab[out] = static_cast<std::uint32_t>(idx);
    }
    src.push_back(std::move(tab));
    probs.push_back(a.p);
  }
  return exact_chain(std::move(src), std::move(probs), p, n - 2, m);
}

/// Chain on the first row (g[0][1], ..., g[0][n-1]) alone. Under right
/// multiplication by M(v) the first row evolves by itself, so this gives
/// the exact corner law with p^{n-1} states instead of p^{n(n-1)/2}.
inline exact_chain first_row_chain(const step_measure_zn& mu, std::uint32_t p,
                                   std::uint64_t budget = k_default_table_budget) {
  const std::size_t m = mu.dim();
  if (p < 2) throw contract_error("first_row_chain: need p >= 2");
  const std::uint64_t states = checked_pow(p, m);
  check_chain_budget(states, mu.atoms().size(), budget);
  std::vector<std::vector<std::uint32_t>> src;
  std::vector<double> probs;
  std::vector<std::uint32_t> g(m), h(m);
  for (const auto& a : mu.atoms()) {
    std::vector<std::uint32_t> tab(states);
    for (std::uint64_t idx = 0; idx < states; ++idx) {
      std::uint64_t r = idx;
      for (std::size_t k = m; k-- > 0;) g[k] = static_cast<std::uint32_t>(r % p), r /= p;
      std::uint64_t out = 0;
      for (std::size_t j = 0; j < m; ++j) {
        const std::uint64_t left = j == 0 ? 1 : g[j - 1];
        h[j] = static_cast<std::uint32_t>((g[j] + left * reduce(a.v[j], p)) % p);
        out = out * p + h[j];
      }
      tab[out] = static_cast<std::uint32_t>(idx);
    }
    src.push_back(std::move(tab));
    probs.push_back(a.p);
  }
  return exact_chain(std::move(src), std::move(probs), p, m - 1, m);
}

/// Dense law of mu~^{*N} on N_n(Z/pZ), indexed by encode().
struct group_distribution {
  unsigned n = 2;
  std::uint32_t p = 2;
  std::vector<double> values;
  std::vector<double> corner;  // law of Z mod p
};

inline group_distribution exact_group_walk(const step_measure_zn& mu, std::uint32_t p, std::size_t N,
                                           unsigned threads = 0, std::uint64_t budget = k_default_table_budget) {
  auto chain = group_chain(mu, p, budget);
  for (std::size_t i = 0; i < N; ++i) chain.step(threads);
  return {static_cast<unsigned>(mu.dim() + 1), p, chain.values(), chain.corner_marginal()};
}

/// sum_x |nu(x) - 1/p| for a law on Z/pZ.
inline double tvd_corner(const std::vector<double>& marginal) {
  const double u = 1.0 / static_cast<double>(marginal.size());
  double s = 0.0;
  for (double v : marginal) s += std::abs(v - u);
  return s;
}

inline double tvd_corner(const group_distribution& d) { return tvd_corner(d.corner); }

/// nu^(k/p) = sum_x nu(x) e(-k x / p).
inline std::complex<double> corner_charfun(const std::vector<double>& marginal, std::uint64_t k) {
  const std::uint64_t p = marginal.size();
  std::complex<double> acc = 0.0;
  for (std::uint64_t x = 0; x < p; ++x) {
    const double ang = -2.0 * std::numbers::pi * static_cast<double>((k % p) * x % p) / static_cast<double>(p);
    acc += marginal[x] * std::complex<double>(std::cos(ang), std::sin(ang));
  }
  return acc;
}

struct plancherel_pair {
  double lhs = 0.0;
  double rhs = 0.0;
};

/// TVD from uniform and the bound (sum_{k != 0} |nu^(k/p)|^2)^{1/2}.
inline plancherel_pair plancherel_check(const std::vector<double>& marginal) {
  double s = 0.0;
  for (std::uint64_t k = 1; k < marginal.size(); ++k) s += std::norm(corner_charfun(marginal, k));
  return {tvd_corner(marginal), std::sqrt(s)};
}

inline plancherel_pair plancherel_check(const group_distribution& d) { return plancherel_check(d.corner); }

struct mixing_point {
  std::size_t N = 0;
  double tvd = 0.0;
  double plancherel_rhs = 0.0;
};

enum class chain_kind { full_group, first_row };

inline exact_chain make_chain(const step_measure_zn& mu, std::uint32_t p, chain_kind kind,
                              std::uint64_t budget = k_default_table_budget) {
  return kind == chain_kind::full_group ? group_chain(mu, p, budget) : first_row_chain(mu, p, budget);
}

/// TVD curve of the corner for N = 0..N_max.
inline std::vector<mixing_point> mixing_curve(const step_measure_zn& mu, std::uint32_t p, std::size_t N_max,
                                              chain_kind kind = chain_kind::full_group, unsigned threads = 0) {
  auto chain = make_chain(mu, p, kind);
  std::vector<mixing_point> out;
  for (std::size_t N = 0;; ++N) {
    const auto pc = plancherel_check(chain.corner_marginal());
    out.push_back({N, pc.lhs, pc.rhs});
    if (N == N_max) break;
    chain.step(threads);
  }
  return out;
}

/// Least N with tvd_corner <= threshold, scanning N upward on one
/// incrementally advanced chain.
inline std::size_t mixing_time(const step_measure_zn& mu, std::uint32_t p, double threshold,
                               chain_kind kind = chain_kind::full_group, std::size_t N_cap = 1u << 20,
                               unsigned threads = 0) {
  if (!(threshold > 0.0 && threshold < 2.0)) throw contract_error("mixing_time: threshold must lie in (0, 2)");
  if (threshold >= 2.0 * (1.0 - 1.0 / static_cast<double>(p))) return 0;
  auto chain = make_chain(mu, p, kind);
  for (std::size_t N = 0; N <= N_cap; ++N) {
    if (tvd_corner(chain.corner_marginal()) <= threshold) return N;
    chain.step(threads);
  }
  throw resource_error("mixing_time: step cap reached before the threshold");
}

struct complex_estimate {
  std::complex<double> value;
  double se_re = 0.0;
  double se_im = 0.0;
};

/// Monte Carlo E[e(-xi Z)] over N-letter words, sharded by sample index.
inline complex_estimate charfun_corner_mc(const step_measure_zn& mu, std::size_t N, double xi,
                                          std::uint64_t samples, std::uint64_t seed, unsigned threads = 0) {
  if (samples < 2) throw contract_error("charfun_corner_mc: need at least two samples");
  const std::uint64_t shards = (samples + k_shard_samples - 1) / k_shard_samples;
  struct acc_t {
    double c = 0, s = 0, cc = 0, ss = 0;
  };
  std::vector<acc_t> acc(shards);
  std::vector<double> w;
  for (const auto& a : mu.atoms()) w.push_back(a.p);
  parallel_for(
      shards,
      [&](std::size_t shard) {
        auto rng = make_stream(seed, shard);
        std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
        const std::size_t m = mu.dim();
        std::vector<i128> c(m + 1);
        acc_t a;
        const std::uint64_t end = std::min(samples, (shard + 1) * k_shard_samples);
        for (std::uint64_t i = shard * k_shard_samples; i < end; ++i) {
          std::fill(c.begin(), c.end(), 0);
          c[0] = 1;
          for (std::size_t t = 0; t < N; ++t) {
            const auto& v = mu.atoms()[pick(rng)].v;
            for (std::size_t j = m; j >= 1; --j) c[j] = checked_add(c[j], checked_mul(c[j - 1], static_cast<i128>(v[j - 1])));
          }
          const double ang = -2.0 * std::numbers::pi * xi * static_cast<double>(c[m]);
          const double cs = std::cos(ang), sn = std::sin(ang);
          a.c += cs, a.s += sn, a.cc += cs * cs, a.ss += sn * sn;
        }
        acc[shard] = a;
      },
      threads);
  acc_t t;
  for (const auto& a : acc) t.c += a.c, t.s += a.s, t.cc += a.cc, t.ss += a.ss;
  const double n = static_cast<double>(samples);
  const double mc = t.c / n, ms = t.s / n;
  return {{mc, ms},
          std::sqrt(std::max(0.0, (t.cc - n * mc * mc) / (n - 1.0)) / n),
          std::sqrt(std::max(0.0, (t.ss - n * ms * ms) / (n - 1.0)) / n)};
}

/// CSV (n, p, N, tvd, plancherel_rhs).
inline void write_mixing_csv(std::ostream& os, unsigned n, std::uint32_t p, const std::vector<mixing_point>& curve,
                             bool header = true) {
  csv_writer w(os);
  if (header) w.row("n", "p", "N", "tvd", "plancherel_rhs");
  for (const auto& pt : curve) w.row(n, p, pt.N, pt.tvd, pt.plancherel_rhs);
}

/// CSV (n, N, xi, re, im, abs).
inline void write_charfun_csv(std::ostream& os, unsigned n, std::size_t N,
                              const std::vector<std::pair<double, std::complex<double>>>& points, bool header = true) {
  csv_writer w(os);
  if (header) w.row("n", "N", "xi", "re", "im", "abs");
  for (const auto& [xi, z] : points) w.row(n, N, xi, z.real(), z.imag(), std::abs(z));
}

}  // namespace nilwalk
