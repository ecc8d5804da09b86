// Runs every acceptance criterion at its stated tolerance and prints one
// PASS/FAIL line each. Exit status is the number of failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "nilwalk/charfun.hpp"
#include "nilwalk/heisenberg.hpp"
#include "nilwalk/lattice.hpp"
#include "nilwalk/rearrange.hpp"
#include "nilwalk/unitri.hpp"

using namespace nilwalk;
namespace fs = std::filesystem;

namespace {

struct verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

verdict c1_return_probability() {
  std::vector<double> scaled;
  double defect = 0;
  for (std::size_t N : {10u, 20u, 40u, 80u}) {
    const auto d = exact_distribution(mu0(), N);
    defect = std::max(defect, d.max_mass_defect());
    scaled.push_back(static_cast<double>(N * N) * d.at(0, 0, 0));
  }
  bool ok = defect <= 1e-9;
  std::string det = fmt("N^2 P_N = %.10f %.10f %.10f %.10f;", scaled[0], scaled[1], scaled[2], scaled[3]);
  for (std::size_t i = 1; i < scaled.size(); ++i) {
    const double g0 = std::abs(scaled[i - 1] - 1.5625), g1 = std::abs(scaled[i] - 1.5625);
    ok = ok && g1 <= 0.75 * g0;
    det += fmt(" gap ratio %.3f", g1 / g0);
  }
  ok = ok && std::abs(scaled.back() - 1.5625) <= 0.2;
  det += fmt("; mass defect %.1e", defect);
  return {ok, det};
}

verdict c2_route_equivalence() {
  double worst = 0;
  for (double a : {0.0, 0.5, 1.0, 2.0})
    for (double xi : {0.0, 0.1, 1.0, 3.0})
      for (std::size_t N : {2u, 16u, 128u, 512u}) {
        const freq_point p{{a, 0.0}, xi};
        const double d = i_finite_dense(p, N);
        worst = std::max(worst, std::abs(i_finite(p, N) - d) / d);
      }
  return {worst <= 1e-8, fmt("max relative difference %.2e over 64 points", worst)};
}

verdict c3_finite_rate() {
  const freq_point p{{1.0, 0.0}, 1.0};
  std::vector<double> err;
  for (std::size_t N : {250u, 500u, 1000u, 2000u}) err.push_back(std::abs(i_finite(p, N) / i_closed(p) - 1.0));
  bool ok = true;
  std::string det = "ratios";
  for (std::size_t i = 1; i < err.size(); ++i) {
    const double r = err[i - 1] / err[i];
    ok = ok && r >= 1.7 && r <= 2.3;
    det += fmt(" %.4f", r);
  }
  return {ok, det};
}

verdict c4_greek_closed_forms() {
  double worst = 0;
  for (double xi : {0.1, 1.0, 5.0})
    for (std::size_t N : {16u, 100u, 1000u, 10000u}) {
      const auto traj = greek_trajectory(xi, N);
      for (const auto& r : traj) {
        const auto c = greek_closed(xi, N, r.n);
        worst = std::max({worst, std::abs(c.epsilon - r.epsilon) / r.epsilon, std::abs(c.delta - r.delta) / r.delta,
                          std::abs(c.log_pi - r.log_pi) / std::abs(r.log_pi)});
      }
    }
  return {worst <= 1e-10, fmt("max relative difference %.2e for n <= 10^4", worst)};
}

verdict c5_monte_carlo() {
  const std::size_t N = 64;
  std::size_t bad = 0, i = 0;
  double worst = 0;
  for (double a : {0.0, 0.3, 0.6, 1.0, 1.5})
    for (double xi : {0.5, 1.5}) {
      const freq_point p{{a * 0.6, a * 0.8}, xi};
      const auto e = i_monte_carlo(p, N, 1'000'000, 1000 + i++);
      const double zr = std::abs(e.value.real() - i_finite(p, N)) / e.se_re;
      const double zi = std::abs(e.value.imag()) / e.se_im;
      worst = std::max({worst, zr, zi});
      bad += (zr > 3) + (zi > 3);
    }
  return {bad == 0, fmt("10 points, 10^6 samples each; largest deviation %.2f standard errors", worst)};
}

verdict c6_density_constant() {
  const double v = gaussian_density({0, 0}, 0);
  return {std::abs(v - 0.25) <= 1e-6, fmt("rho(0,0) = %.12f", v)};
}

std::vector<zvec> random_word(std::size_t len, std::size_t dim, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> c(-3, 3);
  std::vector<zvec> w(len, zvec(dim));
  for (auto& v : w)
    for (auto& x : v) x = c(rng);
  return w;
}

verdict c7_factorization() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> freq(-0.5, 0.5);
  double worst = 0, worst_gcs = -1;
  for (int i = 0; i < 1000; ++i) {
    const unsigned n = 3 + i % 3;
    const std::size_t k = 1 + (i / 3) % 2, nf = 1 + (i / 6) % 2;
    const auto w = random_word(nf * (k << (n - 2)) + (i / 12) % 3, n - 1, rng);
    const double xi = freq(rng);
    const auto e = f_k_complex(xi, w, n, k, fk_mode::enumerate, 1);
    const auto f = f_k_complex(xi, w, n, k, fk_mode::factored);
    worst = std::max({worst, std::abs(e.real() - f.real()), std::abs(e.imag()), std::abs(f.imag())});
    worst_gcs = std::max(worst_gcs, std::pow(std::abs(chi_k(xi, w, n, k, 1)), 1u << (n - 2)) - e.real());
  }
  return {worst <= 1e-12 && worst_gcs <= 1e-12,
          fmt("max |enumerate - factored| %.2e; max |chi|^(2^(n-2)) - F_k %.2e", worst, worst_gcs)};
}

verdict c8_pair_swap() {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> c(-4, 4);
  std::uniform_real_distribution<double> freq(-1, 1);
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t k = 1 + i % 3, nf = 1 + (i / 3) % 10;
    abelian_word w(2 * k * nf + (i / 30) % 2);
    for (auto& v : w) v = {c(rng), c(rng)};
    const auto r = pair_swap_identity(freq(rng), w, k);
    worst = std::max(worst, std::abs(r.lhs - r.rhs));
  }
  return {worst <= 1e-12, fmt("max |lhs - rhs| %.2e with per-pair factor cos^2(pi xi 2H*)", worst)};
}

verdict c9_corner_rule() {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<std::size_t> len(0, 100);
  std::size_t mismatches = 0;
  for (int i = 0; i < 10000; ++i) {
    const unsigned n = 2 + i % 4;
    const auto w = random_word(len(rng), n - 1, rng);
    std::vector<std::vector<i128>> m(n, std::vector<i128>(n, 0));
    for (unsigned r = 0; r < n; ++r) m[r][r] = 1;
    for (const auto& v : w) {
      std::vector<std::vector<i128>> next(n, std::vector<i128>(n, 0));
      for (unsigned r = 0; r < n; ++r)
        for (unsigned c = 0; c < n; ++c) next[r][c] = m[r][c] + (c > 0 ? m[r][c - 1] * v[c - 1] : 0);
      m = std::move(next);
    }
    mismatches += corner_from_word(w) != m[0][n - 1];
  }
  return {mismatches == 0, fmt("%zu mismatches in 10^4 words, n in 2..5", mismatches)};
}

struct mixing_data {
  std::vector<double> ratio3, ratio4;
  std::vector<std::size_t> n3, n4;
  std::size_t distributions = 0;
  double worst_plancherel = -1;
};

mixing_data run_mixing() {
  mixing_data d;
  auto sweep = [&](unsigned n, std::uint32_t p, std::vector<double>& ratio, std::vector<std::size_t>& nm) {
    const auto mu = default_step_measure(n);
    auto chain = group_chain(mu, p);
    std::size_t N = 0;
    for (;; ++N) {
      const auto pc = plancherel_check(chain.corner_marginal());
      d.worst_plancherel = std::max(d.worst_plancherel, pc.lhs - pc.rhs);
      ++d.distributions;
      if (pc.lhs <= 0.25) break;
      chain.step();
    }
    nm.push_back(N);
    ratio.push_back(static_cast<double>(N) / std::pow(static_cast<double>(p), 2.0 / (n - 1)));
  };
  for (std::uint32_t p : {5u, 7u, 11u, 13u, 17u}) sweep(3, p, d.ratio3, d.n3);
  for (std::uint32_t p : {3u, 5u, 7u}) sweep(4, p, d.ratio4, d.n4);
  return d;
}

verdict c10_mixing(const mixing_data& d) {
  auto spread = [](const std::vector<double>& r) {
    const double m = median(r);
    double w = 0;
    for (double x : r) w = std::max(w, std::abs(x / m - 1));
    return w;
  };
  const double s3 = spread(d.ratio3), s4 = spread(d.ratio4);
  std::string det = "n=3 N_mix";
  for (auto v : d.n3) det += fmt(" %zu", v);
  det += fmt(" (max deviation from median ratio %.1f%%); n=4 N_mix", 100 * s3);
  for (auto v : d.n4) det += fmt(" %zu", v);
  det += fmt(" (%.1f%%)", 100 * s4);
  return {s3 <= 0.25 && s4 <= 0.35, det};
}

verdict c11_plancherel(const mixing_data& d) {
  return {d.worst_plancherel <= 1e-12,
          fmt("%zu distributions; max lhs - rhs %.3f", d.distributions, d.worst_plancherel)};
}

// Least-squares slope of log(-log|Z|/N) against log xi at xi = j/64.
double decay_exponent(unsigned n, std::uint32_t modulus, std::size_t N) {
  const auto mu = default_step_measure(n);
  auto chain = first_row_chain(mu, modulus);
  for (std::size_t i = 0; i < N; ++i) chain.step();
  const auto marg = chain.corner_marginal();
  std::vector<double> xs, ys;
  for (std::uint32_t j = 1; j <= 8; ++j) {
    const std::uint64_t k = j * (modulus / 64);
    const double z = std::abs(corner_charfun(marg, k));
    if (z < 1e-10) continue;
    xs.push_back(std::log(static_cast<double>(k) / modulus));
    ys.push_back(std::log(-std::log(z) / static_cast<double>(N)));
  }
  if (xs.size() < 3) throw numeric_domain_error("decay fit: fewer than three usable frequencies");
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / ys.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) sxy += (xs[i] - mx) * (ys[i] - my), sxx += (xs[i] - mx) * (xs[i] - mx);
  return sxy / sxx;
}

verdict c12_decay() {
  const double e3 = decay_exponent(3, 1024, 200);
  const double e4 = decay_exponent(4, 128, 200);
  return {std::abs(e3 - 1.0) <= 0.3 && std::abs(e4 - 2.0 / 3.0) <= 0.3,
          fmt("n=3 exponent %.3f (target 1), n=4 exponent %.3f (target 0.667)", e3, e4)};
}

verdict c13_moments() {
  bool ok = true;
  std::string det;
  for (std::size_t N : {10u, 100u}) {
    const auto m = moment_hstar(N, 1, gaussian_law{}, 400000, 13 + N);
    const double exact = N * (N - 1.0) / 4.0;
    const double z = std::abs(m.mean - exact) / m.se;
    ok = ok && z <= 3 && m.mean <= N * N / 4.0;
    det += fmt("N=%zu: %.3f vs %.2f (%.2f se, bound %.0f); ", N, m.mean, exact, z, N * N / 4.0);
  }
  return {ok, det};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

verdict c14_determinism() {
  const std::vector<std::string> commands{
      "return-prob --N 10,20,30",
      "llt-compare --N 20,30 --points 0:0:0,1:1:0,2:-1:3",
      "charfun --N 16,128 --alpha 0,1 --xi 0.1,1",
      "greek --n 10,100 --xi 0.1,1,5",
      "mixing --n 3 --p 5,7,11",
      "mixing --n 4 --p 3 --chain first-row",
      "charfun-decay --n 3 --N 60 --modulus 256",
      "rearrange-check --cases 40",
      "spectrum --measure perturbed --theta 0.3 --window -1,1 --csv-step 0.1",
  };
  const fs::path root = fs::temp_directory_path() / "nilwalk_acceptance_determinism";
  fs::remove_all(root);
  std::size_t files = 0, diffs = 0, failures = 0;
  for (std::size_t c = 0; c < commands.size(); ++c) {
    std::vector<fs::path> dirs;
    for (unsigned t : {1u, 4u, 16u}) {
      const fs::path out = root / (std::to_string(c) + "_" + std::to_string(t));
      const std::string cmd = std::string(NILWALK_CLI) + " --seed 20240601 --threads " + std::to_string(t) +
                              " --out " + out.string() + " " + commands[c] + " >/dev/null 2>&1";
      if (std::system(cmd.c_str()) != 0) ++failures;
      dirs.push_back(out);
    }
    for (const auto& e : fs::directory_iterator(dirs[0])) {
      const auto name = e.path().filename();
      if (name == "run_info.json") continue;
      ++files;
      const auto ref = slurp(e.path());
      for (std::size_t i = 1; i < dirs.size(); ++i) diffs += slurp(dirs[i] / name) != ref;
    }
  }
  fs::remove_all(root);
  return {failures == 0 && diffs == 0 && files > 0,
          fmt("%zu commands x threads {1,4,16}: %zu artifacts compared, %zu differ, %zu runs failed", commands.size(),
              files, diffs, failures)};
}

}  // namespace

int main() {
  int failed = 0;
  auto report = [&](int id, const char* name, const std::function<verdict()>& f) {
    const auto t0 = std::chrono::steady_clock::now();
    verdict v;
    try {
      v = f();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !v.pass;
    std::cout << (v.pass ? "PASS" : "FAIL") << " C" << id << " " << name << ": " << v.detail
              << fmt(" [%.1fs]", secs) << std::endl;
  };
  report(1, "return probability constant", c1_return_probability);
  report(2, "recurrence vs dense route", c2_route_equivalence);
  report(3, "finite-N convergence rate", c3_finite_rate);
  report(4, "closed forms of the sequences", c4_greek_closed_forms);
  report(5, "Monte Carlo consistency", c5_monte_carlo);
  report(6, "density constant", c6_density_constant);
  report(7, "factorization and Gowers-Cauchy-Schwarz", c7_factorization);
  report(8, "pair-swap identity", c8_pair_swap);
  report(9, "corner product rule", c9_corner_rule);
  mixing_data md;
  try {
    md = run_mixing();
  } catch (const std::exception& e) {
    std::cout << "mixing sweep failed: " << e.what() << std::endl;
  }
  report(10, "mixing time scaling", [&] { return c10_mixing(md); });
  report(11, "Plancherel bound", [&] { return c11_plancherel(md); });
  report(12, "characteristic function decay exponent", c12_decay);
  report(13, "moments of H*", c13_moments);
  report(14, "determinism across thread counts", c14_determinism);
  std::cout << (failed ? "FAILED " : "ALL PASSED ") << 14 - failed << "/14" << std::endl;
  return failed;
}
