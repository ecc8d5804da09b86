#pragma once

#include <array>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <utility>
#include <vector>

#include "nilwalk/checked.hpp"
#include "nilwalk/errors.hpp"

namespace nilwalk {

/// Element [x, y, z] of the Heisenberg group, i.e. the unipotent matrix
/// with x and y on the superdiagonal and z in the corner.
template <class T>
struct heis_elem {
  T x{}, y{}, z{};
  friend bool operator==(const heis_elem&, const heis_elem&) = default;
};

using lattice_elem = heis_elem<i128>;
using real_elem = heis_elem<double>;

template <class T>
using vec2 = std::array<T, 2>;

/// Anything with size() and operator[]: vectors, spans, permuted views.
template <class R>
concept indexable = requires(const R& r, std::size_t i) {
  { r.size() } -> std::convertible_to<std::size_t>;
  r[i];
};

template <class T>
constexpr heis_elem<T> identity() {
  return {};
}

template <class T>
constexpr heis_elem<T> gen_a() {
  return {T{1}, T{0}, T{0}};
}

template <class T>
constexpr heis_elem<T> gen_b() {
  return {T{0}, T{1}, T{0}};
}

template <class T>
constexpr heis_elem<T> gen_c() {
  return {T{0}, T{0}, T{1}};
}

template <class T>
heis_elem<T> mul(const heis_elem<T>& a, const heis_elem<T>& b) {
  return {checked_add(a.x, b.x), checked_add(a.y, b.y),
          checked_add(checked_add(a.z, b.z), checked_mul(a.x, b.y))};
}

template <class T>
heis_elem<T> inverse(const heis_elem<T>& a) {
  return {checked_neg(a.x), checked_neg(a.y), checked_sub(checked_mul(a.x, a.y), a.z)};
}

template <class T>
heis_elem<T> commutator(const heis_elem<T>& a, const heis_elem<T>& b) {
  return mul(mul(mul(a, b), inverse(a)), inverse(b));
}

/// Left-to-right product of the letters of a word; identity when empty.
template <indexable R>
auto word_product(const R& word) {
  using E = std::decay_t<decltype(word[0])>;
  E acc{};
  for (std::size_t i = 0; i < word.size(); ++i) acc = mul(acc, word[i]);
  return acc;
}

template <indexable R>
auto abelianize(const R& word) {
  using E = std::decay_t<decltype(word[0])>;
  using T = decltype(E{}.x);
  std::vector<vec2<T>> out(word.size());
  for (std::size_t i = 0; i < word.size(); ++i) out[i] = {word[i].x, word[i].y};
  return out;
}

/// sum_{i<j} w_i^(1) w_j^(2), evaluated with a running prefix sum.
template <indexable R>
auto h_functional(const R& word) {
  using T = std::decay_t<decltype(word[0][0])>;
  T prefix_x{}, acc{};
  for (std::size_t j = 0; j < word.size(); ++j) {
    acc = checked_add(acc, checked_mul(prefix_x, word[j][1]));
    prefix_x = checked_add(prefix_x, word[j][0]);
  }
  return acc;
}

/// 2 H*(w) = sum_{i<j} (w_i^(1) w_j^(2) - w_i^(2) w_j^(1)). Integer words
/// keep the doubled value so that half-integers stay exact.
template <indexable R>
auto twice_h_star(const R& word) {
  using T = std::decay_t<decltype(word[0][0])>;
  T px{}, py{}, acc{};
  for (std::size_t j = 0; j < word.size(); ++j) {
    const auto& w = word[j];
    acc = checked_add(acc, checked_sub(checked_mul(px, w[1]), checked_mul(py, w[0])));
    px = checked_add(px, w[0]);
    py = checked_add(py, w[1]);
  }
  return acc;
}

/// H* for real-valued words.
template <indexable R>
  requires std::floating_point<std::decay_t<decltype(std::declval<const R&>()[0][0])>>
double h_star(const R& word) {
  return 0.5 * twice_h_star(word);
}

/// H* of a pair of abelian vectors, doubled: a^(1) b^(2) - a^(2) b^(1).
template <class T>
T twice_h_star(const vec2<T>& a, const vec2<T>& b) {
  return checked_sub(checked_mul(a[0], b[1]), checked_mul(a[1], b[0]));
}

/// 2 z~ = 2z - xy for a group element.
template <class T>
T twice_tilde_z(const heis_elem<T>& g) {
  return checked_sub(checked_mul(T{2}, g.z), checked_mul(g.x, g.y));
}

/// Word product through the abelian sums and H*:
///   prod w_i = sum w~_i + [0, 0, (1/2) xbar ybar + H*(w)].
/// Integer words are evaluated in doubled units and halved exactly at the end.
template <indexable R>
auto product_formula(const R& word) {
  using E = std::decay_t<decltype(word[0])>;
  using T = decltype(E{}.x);
  T sx{}, sy{}, s2tz{};
  std::vector<vec2<T>> ab(word.size());
  for (std::size_t i = 0; i < word.size(); ++i) {
    const auto& w = word[i];
    sx = checked_add(sx, w.x);
    sy = checked_add(sy, w.y);
    s2tz = checked_add(s2tz, twice_tilde_z(w));
    ab[i] = {w.x, w.y};
  }
  const T twice_z = checked_add(checked_add(s2tz, checked_mul(sx, sy)), twice_h_star(ab));
  if constexpr (exact_integer<T>) {
    // The doubled corner of an integer product is always even.
    if (twice_z % 2 != 0) throw arithmetic_overflow("odd doubled corner in integer word product");
    return E{sx, sy, twice_z / 2};
  } else {
    return E{sx, sy, twice_z / 2};
  }
}

/// Dilation d_t([x,y,z]) = [tx, ty, t^2 z], t > 0.
struct dilation {
  double t = 1.0;

  explicit dilation(double scale) : t(scale) {
    if (!(scale > 0.0) || !std::isfinite(scale)) throw numeric_domain_error("dilation scale must be positive");
  }

  friend dilation compose(const dilation& a, const dilation& b) { return dilation(a.t * b.t); }
};

inline real_elem dilate(const dilation& d, const real_elem& g) {
  return {d.t * g.x, d.t * g.y, d.t * d.t * g.z};
}

/// Exact dilation by an integer factor.
template <class T>
  requires exact_integer<T>
heis_elem<T> dilate(T t, const heis_elem<T>& g) {
  if (t <= 0) throw numeric_domain_error("dilation scale must be positive");
  return {checked_mul(t, g.x), checked_mul(t, g.y), checked_mul(checked_mul(t, t), g.z)};
}

}  // namespace nilwalk
