#pragma once

#include <charconv>
#include <concepts>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>

namespace nilwalk {

/// Doubles as 17 significant digits, which round-trips exactly.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  if (res.ec != std::errc{}) return "nan";
  return std::string(buf, res.ptr);
}

class csv_writer {
 public:
  explicit csv_writer(std::ostream& os) : os_(os) {}

  template <class... Ts>
  void row(const Ts&... fields) {
    bool first = true;
    ((put(fields, first)), ...);
    os_ << '\n';
  }

 private:
  template <class T>
  void put(const T& v, bool& first) {
    if (!first) os_ << ',';
    first = false;
    if constexpr (std::floating_point<T>)
      os_ << format_double(static_cast<double>(v));
    else if constexpr (std::is_same_v<T, bool>)
      os_ << (v ? 1 : 0);
    else
      os_ << v;
  }

  std::ostream& os_;
};

}  // namespace nilwalk
