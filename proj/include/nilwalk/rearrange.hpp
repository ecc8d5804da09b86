#pragma once

// Block-swap actions on words and the averaged phases built from them.
//
// A hypercube element tau in C_2^d acts on 2^d items: arrange_0 = (x_1),
// and arrange_j puts the natural block x_{2^{j-1}+1} .. x_{2^j} after
// arrange_{j-1} when bit j is clear, before it when bit j is set. Bits are
// stored least significant first, so bit 0 swaps the first two items.
//
// For d >= 2 this is not a group action (tau . (tau . x) != x for
// tau = (1,1)), but every pair of positions has its relative order decided
// by a single bit, which is all the phase identities below use.

#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "nilwalk/errors.hpp"
#include "nilwalk/heisenberg.hpp"
#include "nilwalk/parallel.hpp"
#include "nilwalk/rng.hpp"
#include "nilwalk/unitri.hpp"

namespace nilwalk {

struct hypercube_element {
  unsigned d = 0;
  std::uint32_t bits = 0;

  friend hypercube_element operator+(hypercube_element a, hypercube_element b) {
    if (a.d != b.d) throw contract_error("hypercube_element: dimension mismatch");
    return {a.d, a.bits ^ b.bits};
  }
};

/// perm[pos] = index of the item that lands at pos.
inline std::vector<std::uint32_t> permutation(const hypercube_element& tau) {
  if (tau.d > 24) throw resource_error("hypercube_element: dimension too large");
  std::vector<std::uint32_t> cur{0};
  for (unsigned j = 1; j <= tau.d; ++j) {
    const std::uint32_t half = 1u << (j - 1);
    std::vector<std::uint32_t> next;
    next.reserve(2 * half);
    if (tau.bits >> (j - 1) & 1u) {
      for (std::uint32_t i = 0; i < half; ++i) next.push_back(half + i);
      next.insert(next.end(), cur.begin(), cur.end());
    } else {
      next = cur;
      for (std::uint32_t i = 0; i < half; ++i) next.push_back(half + i);
    }
    cur.swap(next);
  }
  return cur;
}

/// Read-only view of base through an index map; no letters are copied.
template <class R>
class permuted_view {
 public:
  permuted_view(const R& base, std::vector<std::uint32_t> perm) : base_(&base), perm_(std::move(perm)) {}
  std::size_t size() const { return base_->size(); }
  decltype(auto) operator[](std::size_t i) const { return (*base_)[i < perm_.size() ? perm_[i] : i]; }
  const std::vector<std::uint32_t>& indices() const { return perm_; }

 private:
  const R* base_;
  std::vector<std::uint32_t> perm_;
};

template <class T>
std::vector<T> hypercube_act(const hypercube_element& tau, const std::vector<T>& seq) {
  if (seq.size() != (std::size_t{1} << tau.d)) throw contract_error("hypercube_act: length must be 2^d");
  const auto perm = permutation(tau);
  std::vector<T> out;
  out.reserve(seq.size());
  for (auto i : perm) out.push_back(seq[i]);
  return out;
}

/// Element of G_k = (C_2^d)^{N'}: factor j permutes the 2^d sub-blocks of
/// length k inside the j-th window of length k 2^d.
struct block_action {
  std::size_t k = 1;
  unsigned d = 1;
  std::vector<std::uint32_t> factors;

  std::size_t span() const { return factors.size() * k * (std::size_t{1} << d); }

  friend block_action operator+(const block_action& a, const block_action& b) {
    if (a.k != b.k || a.d != b.d || a.factors.size() != b.factors.size())
      throw contract_error("block_action: shape mismatch");
    block_action c = a;
    for (std::size_t j = 0; j < c.factors.size(); ++j) c.factors[j] ^= b.factors[j];
    return c;
  }
};

/// Unpacks a G_k element stored with factor j in bits [j d, (j+1) d).
inline block_action unpack_action(std::uint64_t code, std::size_t k, unsigned d, std::size_t n_factors) {
  block_action a{k, d, std::vector<std::uint32_t>(n_factors)};
  const std::uint64_t mask = (std::uint64_t{1} << d) - 1;
  for (std::size_t j = 0; j < n_factors; ++j) a.factors[j] = static_cast<std::uint32_t>((code >> (j * d)) & mask);
  return a;
}

inline std::vector<std::uint32_t> block_permutation(const block_action& a, std::size_t length) {
  if (length < a.span()) throw contract_error("block_act: word shorter than the action span");
  std::vector<std::uint32_t> perm(length);
  for (std::size_t i = 0; i < length; ++i) perm[i] = static_cast<std::uint32_t>(i);
  const std::size_t window = a.k << a.d;
  for (std::size_t j = 0; j < a.factors.size(); ++j) {
    const auto sub = permutation({a.d, a.factors[j]});
    for (std::size_t b = 0; b < sub.size(); ++b)
      for (std::size_t i = 0; i < a.k; ++i)
        perm[j * window + b * a.k + i] = static_cast<std::uint32_t>(j * window + sub[b] * a.k + i);
  }
  return perm;
}

template <class R>
permuted_view<R> block_act(const block_action& a, const R& word) {
  return permuted_view<R>(word, block_permutation(a, word.size()));
}

inline constexpr unsigned k_enumeration_bits = 20;

/// e(x) = exp(2 pi i x) for x = xi * v, with v an exact integer.
inline std::complex<double> unit_phase(double xi, i128 v) {
  const double ang = 2.0 * std::numbers::pi * xi * static_cast<double>(v);
  return {std::cos(ang), std::sin(ang)};
}

using abelian_word = std::vector<vec2<std::int64_t>>;

/// Sums of consecutive blocks of length k: entry j is w_{jk+1} + ... + w_{(j+1)k}.
template <class R>
R block_sums(const R& word, std::size_t k, std::size_t count) {
  R out(count);
  for (std::size_t j = 0; j < count; ++j) {
    out[j] = word[j * k];
    for (std::size_t i = 1; i < k; ++i)
      for (std::size_t c = 0; c < out[j].size(); ++c) out[j][c] += word[j * k + i][c];
  }
  return out;
}

/// 2 H*(w) split as 2 H_k^1 + 2 H_k^2, where H_k^2 collects H* of the
/// swapped block pairs and H_k^1 is the rest.
struct h_split {
  i128 twice_h1 = 0;
  i128 twice_h2 = 0;
};

inline h_split h_decomposition(const abelian_word& word, std::size_t k) {
  if (k < 1) throw contract_error("h_decomposition: k must be at least 1");
  const std::size_t pairs = word.size() / (2 * k);
  const auto hat = block_sums(word, k, 2 * pairs);
  h_split s;
  for (std::size_t j = 0; j < pairs; ++j)
    s.twice_h2 += twice_h_star(vec2<i128>{hat[2 * j][0], hat[2 * j][1]}, vec2<i128>{hat[2 * j + 1][0], hat[2 * j + 1][1]});
  s.twice_h1 = twice_h_star(word) - s.twice_h2;
  return s;
}

struct identity_pair {
  double lhs = 0.0;
  double rhs = 0.0;
};

/// lhs = |E_{tau in G_k} e(xi H*(tau . w))|^2 by enumeration of G_k = C_2^{N'},
/// N' = floor(N / 2k), each factor swapping one pair of adjacent length-k
/// blocks; rhs = prod_j cos^2(2 pi xi H*(w^_{2j-1}, w^_{2j})).
inline identity_pair pair_swap_identity(double xi, const abelian_word& word, std::size_t k) {
  if (k < 1 || word.size() < 2 * k) throw contract_error("pair_swap_identity: word shorter than 2k");
  const std::size_t n_factors = word.size() / (2 * k);
  if (n_factors > k_enumeration_bits) throw resource_error("pair_swap_identity: enumeration budget exceeded");
  const std::uint64_t count = std::uint64_t{1} << n_factors;
  std::complex<double> acc = 0.0;
  for (std::uint64_t code = 0; code < count; ++code) {
    const auto view = block_act(unpack_action(code, k, 1, n_factors), word);
    acc += unit_phase(0.5 * xi, twice_h_star(view));
  }
  acc /= static_cast<double>(count);

  const auto hat = block_sums(word, k, 2 * n_factors);
  double rhs = 1.0;
  for (std::size_t j = 0; j < n_factors; ++j) {
    const i128 t = twice_h_star(vec2<i128>{hat[2 * j][0], hat[2 * j][1]}, vec2<i128>{hat[2 * j + 1][0], hat[2 * j + 1][1]});
    const double c = std::cos(std::numbers::pi * xi * static_cast<double>(t));
    rhs *= c * c;
  }
  return {std::norm(acc), rhs};
}

/// Number of G_k factors for a word of length N.
inline std::size_t factor_count(std::size_t N, unsigned n, std::size_t k) {
  if (n < 3) throw contract_error("G_k actions need n >= 3");
  if (k < 1) throw contract_error("k must be at least 1");
  return N / (k << (n - 2));
}

/// Z of tau . w for every tau in G_k, indexed by the packed code.
inline std::vector<i128> corner_table(const std::vector<zvec>& word, unsigned n, std::size_t k,
                                      unsigned threads = 0) {
  const unsigned d = n - 2;
  const std::size_t nf = factor_count(word.size(), n, k);
  if (nf < 1) throw contract_error("word shorter than one block");
  if (d * nf > k_enumeration_bits) throw resource_error("G_k enumeration budget exceeded");
  std::vector<i128> z(std::size_t{1} << (d * nf));
  parallel_for(
      z.size(), [&](std::size_t code) { z[code] = corner_from_word(block_act(unpack_action(code, k, d, nf), word)); },
      threads);
  return z;
}

/// chi_k(xi, w) = E_{tau in G_k} e(-xi Z(tau . w)), by enumeration.
inline std::complex<double> chi_k(double xi, const std::vector<zvec>& word, unsigned n, std::size_t k,
                                  unsigned threads = 0) {
  const auto z = corner_table(word, n, k, threads);
  std::complex<double> acc = 0.0;
  for (const auto& v : z) acc += unit_phase(-xi, v);
  return acc / static_cast<double>(z.size());
}

/// chi_k with tau drawn uniformly, for G_k beyond the enumeration budget.
inline std::complex<double> chi_k_sampled(double xi, const std::vector<zvec>& word, unsigned n, std::size_t k,
                                          std::uint64_t samples, std::uint64_t seed) {
  const unsigned d = n - 2;
  const std::size_t nf = factor_count(word.size(), n, k);
  if (nf < 1) throw contract_error("word shorter than one block");
  auto rng = make_stream(seed, 0);
  std::uniform_int_distribution<std::uint32_t> bits(0, (1u << d) - 1);
  std::complex<double> acc = 0.0;
  block_action a{k, d, std::vector<std::uint32_t>(nf)};
  for (std::uint64_t s = 0; s < samples; ++s) {
    for (auto& f : a.factors) f = bits(rng);
    acc += unit_phase(-xi, corner_from_word(block_act(a, word)));
  }
  return acc / static_cast<double>(samples);
}

enum class fk_mode { enumerate, factored };

/// F_k(xi, w): enumerate mode averages, over pairs (tau, tau') in G_k,
///   e(-xi sum_S (-1)^{d - |S|} Z(tau_S . w)),
/// with tau_S taking the coordinates of tau in S and of tau' outside it.
/// Factored mode evaluates prod_j (1 - 2^-d + F_{k,j} / 2^d) from the
/// block sums of each window.
inline std::complex<double> f_k_complex(double xi, const std::vector<zvec>& word, unsigned n, std::size_t k,
                                        fk_mode mode, unsigned threads = 0) {
  const unsigned d = n - 2;
  const std::size_t nf = factor_count(word.size(), n, k);
  if (nf < 1) throw contract_error("word shorter than one block");
  const std::uint32_t cube = 1u << d;

  if (mode == fk_mode::enumerate) {
    if (2 * d * nf > 2 * k_enumeration_bits) throw resource_error("F_k enumeration budget exceeded");
    const auto z = corner_table(word, n, k, threads);
    const std::uint64_t size = z.size();
    // Mask of the S-coordinates in every factor.
    std::vector<std::uint64_t> mask(cube, 0);
    std::vector<int> sign(cube);
    for (std::uint32_t s = 0; s < cube; ++s) {
      for (std::size_t j = 0; j < nf; ++j) mask[s] |= static_cast<std::uint64_t>(s) << (j * d);
      sign[s] = ((d - static_cast<unsigned>(__builtin_popcount(s))) & 1u) ? -1 : 1;
    }
    std::vector<std::complex<double>> partial(size);
    parallel_for(
        size,
        [&](std::size_t tau) {
          std::complex<double> acc = 0.0;
          for (std::uint64_t tau2 = 0; tau2 < size; ++tau2) {
            i128 sum = 0;
            for (std::uint32_t s = 0; s < cube; ++s) {
              const std::uint64_t code = (tau & mask[s]) | (tau2 & ~mask[s] & (size - 1));
              sum += sign[s] * z[code];
            }
            acc += unit_phase(-xi, sum);
          }
          partial[tau] = acc;
        },
        threads);
    std::complex<double> total = 0.0;
    for (const auto& v : partial) total += v;
    return total / (static_cast<double>(size) * static_cast<double>(size));
  }

  // Per-window sub-block sums omega_1..omega_{2^d}; the hypercube acts on
  // them as single letters.
  std::complex<double> product = 1.0;
  const std::size_t window = k << d;
  for (std::size_t j = 0; j < nf; ++j) {
    std::vector<zvec> omega(cube, zvec(word[0].size(), 0));
    for (std::uint32_t b = 0; b < cube; ++b)
      for (std::size_t i = 0; i < k; ++i)
        for (std::size_t c = 0; c < omega[b].size(); ++c) omega[b][c] += word[j * window + b * k + i][c];
    std::vector<i128> zc(cube);
    for (std::uint32_t t = 0; t < cube; ++t) zc[t] = corner_from_word(hypercube_act({d, t}, omega));
    std::complex<double> fkj = 0.0;
    for (std::uint32_t t = 0; t < cube; ++t) {
      i128 sum = 0;
      for (std::uint32_t s = 0; s < cube; ++s) sum += ((__builtin_popcount(s) & 1) ? -1 : 1) * zc[t ^ s];
      fkj += unit_phase(-xi, sum);
    }
    fkj /= static_cast<double>(cube);
    product *= 1.0 - 1.0 / cube + fkj / static_cast<double>(cube);
  }
  return product;
}

inline double f_k(double xi, const std::vector<zvec>& word, unsigned n, std::size_t k, fk_mode mode,
                  unsigned threads = 0) {
  return f_k_complex(xi, word, n, k, mode, threads).real();
}

}  // namespace nilwalk
