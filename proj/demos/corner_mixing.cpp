// Mixing of the upper right corner of a lazy walk on N_n(Z/pZ), printed as
// TVD against N / p^{2/(n-1)}.

#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "nilwalk/unitri.hpp"

int main(int argc, char** argv) {
  using namespace nilwalk;
  const unsigned n = argc > 1 ? static_cast<unsigned>(std::atoi(argv[1])) : 3;
  const auto mu = default_step_measure(n);
  for (std::uint32_t p : {5u, 7u, 11u, 13u}) {
    const double scale = std::pow(static_cast<double>(p), 2.0 / (n - 1));
    const auto curve = mixing_curve(mu, p, static_cast<std::size_t>(6 * scale), chain_kind::first_row);
    std::printf("p = %u\n", p);
    for (const auto& pt : curve)
      if (pt.N % 5 == 0) std::printf("  N/scale %6.3f  tvd %.6f  bound %.6f\n", pt.N / scale, pt.tvd, pt.plancherel_rhs);
  }
}
