// Exact return probabilities of the lazy simple walk on H(Z) against the
// local limit constant 25/16.

#include <cstdio>
#include <cstdlib>

#include "nilwalk/lattice.hpp"

int main(int argc, char** argv) {
  using namespace nilwalk;
  const std::size_t n_max = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 40;
  const auto mu = mu0();
  const auto params = params_of(mu);
  auto d = lattice_distribution::delta_at_identity();
  std::printf("%6s %14s %10s %12s\n", "N", "P_N(id)", "N^2 P_N", "predicted");
  for (std::size_t N = 1; N <= n_max; ++N) {
    d = convolve_step(d, mu);
    if (N % 5 != 0) continue;
    const double p = d.at(0, 0, 0);
    const double nn = static_cast<double>(N * N);
    std::printf("%6zu %14.6e %10.6f %12.6f\n", N, p, nn * p, nn * llt_prediction(params, {0, 0, 0}, N));
  }
}
