#pragma once

#include <concepts>
#include <cstdint>
#include <string>
#include <type_traits>

#include "nilwalk/errors.hpp"

namespace nilwalk {

using i128 = __int128;

template <class T>
concept exact_integer = std::is_same_v<T, i128> || std::is_integral_v<T>;

template <class T>
T checked_add(T a, T b) {
  if constexpr (exact_integer<T>) {
    T r;
    if (__builtin_add_overflow(a, b, &r)) throw arithmetic_overflow("integer addition overflow");
    return r;
  } else {
    return a + b;
  }
}

template <class T>
T checked_sub(T a, T b) {
  if constexpr (exact_integer<T>) {
    T r;
    if (__builtin_sub_overflow(a, b, &r)) throw arithmetic_overflow("integer subtraction overflow");
    return r;
  } else {
    return a - b;
  }
}

template <class T>
T checked_mul(T a, T b) {
  if constexpr (exact_integer<T>) {
    T r;
    if (__builtin_mul_overflow(a, b, &r)) throw arithmetic_overflow("integer multiplication overflow");
    return r;
  } else {
    return a * b;
  }
}

template <class T>
T checked_neg(T a) {
  return checked_sub(T{0}, a);
}

/// Decimal rendering of a 128-bit integer (iostreams have no overload).
inline std::string to_string(i128 v) {
  if (v == 0) return "0";
  const bool neg = v < 0;
  // Work with negative values so that the minimum is representable.
  std::string digits;
  i128 t = neg ? v : -v;
  while (t != 0) {
    digits.push_back(static_cast<char>('0' - static_cast<int>(t % 10)));
    t /= 10;
  }
  if (neg) digits.push_back('-');
  return {digits.rbegin(), digits.rend()};
}

}  // namespace nilwalk
