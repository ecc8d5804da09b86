// nilwalk: reproducible sweeps over the walk library, one CSV per command
// plus manifest.json (config, versions, checksums) and run_info.json
// (threads, wall time). manifest.json and the CSV files depend only on the
// config and seed.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <Eigen/Core>
#include <boost/version.hpp>

#include "nilwalk/charfun.hpp"
#include "nilwalk/csv.hpp"
#include "nilwalk/lattice.hpp"
#include "nilwalk/rearrange.hpp"
#include "nilwalk/spectrum.hpp"
#include "nilwalk/unitri.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace nilwalk;

namespace {

constexpr int k_exit_usage = 2;
constexpr int k_exit_resource = 3;

struct usage_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr);
  std::string hex;
  char buf[3];
  for (unsigned i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

// CLI11 reads an empty list item as 0.
const CLI::Validator k_no_blank_items(
    [](std::string& s) {
      return s.find_first_not_of(" \t") == std::string::npos ? std::string("empty list item") : std::string();
    },
    "NONEMPTY");

template <class T>
void require_nonempty(const std::vector<T>& v, const std::string& flag) {
  if (v.empty()) throw usage_error(flag + " must not be empty");
}

struct globals {
  std::uint64_t seed = 1;
  unsigned threads = 0;
  std::string out = ".";
};

struct return_prob_opts {
  std::vector<std::size_t> N{10, 20, 40, 80};
  std::uint64_t memory_mb = 4096;
};

struct llt_opts {
  std::vector<std::size_t> N{30, 60};
  std::vector<std::string> points{"0:0:0", "1:1:0", "2:0:0", "1:1:3", "3:-2:-4"};
  std::uint64_t memory_mb = 4096;
};

struct charfun_opts {
  std::vector<std::size_t> N{250, 500, 1000, 2000};
  std::vector<double> alpha{0.0, 0.5, 1.0};
  std::vector<double> xi{0.0, 0.1, 1.0};
};

struct greek_opts {
  std::vector<std::size_t> n{1, 10, 100, 1000, 10000};
  std::vector<double> xi{0.1, 1.0, 5.0};
};

struct mixing_opts {
  unsigned n = 3;
  std::vector<std::uint32_t> p{5, 7, 11, 13};
  double threshold = 0.25;
  std::string chain = "full";
};

struct decay_opts {
  unsigned n = 3;
  std::size_t N = 200;
  std::uint32_t modulus = 1024;
  std::vector<std::uint32_t> k{};
};

struct rearrange_opts {
  std::size_t cases = 100;
};

struct spectrum_opts {
  std::string measure = "mu0";
  double theta = 0.3;
  std::vector<double> window{-1.5, 1.5};
  double grid_step = 0.0;
  double csv_step = 0.05;
};

// Each runner writes CSV text and echoes its own config.
struct result {
  std::string csv;
  json config;
};

result run_return_prob(const return_prob_opts& o, const globals& g) {
  require_nonempty(o.N, "--N");
  std::ostringstream os;
  csv_writer w(os);
  w.row("N", "p_return", "n2p");
  const auto mu = mu0();
  for (auto N : o.N) {
    const double p = return_probability(mu, N, o.memory_mb << 20, g.threads);
    w.row(N, p, static_cast<double>(N) * static_cast<double>(N) * p);
  }
  return {os.str(), {{"N", o.N}, {"memory_mb", o.memory_mb}}};
}

std::array<std::int64_t, 3> parse_point(const std::string& s) {
  std::array<std::int64_t, 3> v{};
  std::istringstream is(s);
  char c1 = 0, c2 = 0;
  if (!(is >> v[0] >> c1 >> v[1] >> c2 >> v[2]) || c1 != ':' || c2 != ':' || !is.eof())
    throw usage_error("--points expects n1:n2:n3, got '" + s + "'");
  return v;
}

result run_llt(const llt_opts& o, const globals& g) {
  require_nonempty(o.N, "--N");
  require_nonempty(o.points, "--points");
  std::vector<std::array<std::int64_t, 3>> pts;
  for (const auto& s : o.points) pts.push_back(parse_point(s));
  std::ostringstream os;
  csv_writer w(os);
  w.row("N", "n1", "n2", "n3", "exact", "predicted", "scaled_err");
  const auto mu = mu0();
  const auto params = params_of(mu);
  for (auto N : o.N) {
    const auto d = exact_distribution(mu, N, o.memory_mb << 20, g.threads);
    for (const auto& n : pts) {
      const double exact = d.at(lattice_elem{n[0], n[1], n[2]});
      const double pred = llt_prediction(params, n, N);
      w.row(N, n[0], n[1], n[2], exact, pred, std::abs(exact - pred) * std::pow(static_cast<double>(N), 2.5));
    }
  }
  return {os.str(), {{"N", o.N}, {"points", o.points}, {"memory_mb", o.memory_mb}}};
}

result run_charfun(const charfun_opts& o, const globals&) {
  require_nonempty(o.N, "--N");
  require_nonempty(o.alpha, "--alpha");
  require_nonempty(o.xi, "--xi");
  std::ostringstream os;
  csv_writer w(os);
  w.row("N", "alpha_norm", "xi", "I_finite", "I_closed", "rel_err");
  for (auto N : o.N)
    for (double a : o.alpha)
      for (double xi : o.xi) {
        if (N < 1) throw usage_error("--N entries must be positive");
        const freq_point fp{{a, 0.0}, xi};
        const double fin = i_finite(fp, N), cl = i_closed(fp);
        w.row(N, a, xi, fin, cl, std::abs(fin / cl - 1.0));
      }
  return {os.str(), {{"N", o.N}, {"alpha", o.alpha}, {"xi", o.xi}}};
}

result run_greek(const greek_opts& o, const globals&) {
  require_nonempty(o.n, "--n");
  require_nonempty(o.xi, "--xi");
  std::ostringstream os;
  csv_writer w(os);
  w.row("n", "xi", "eps_rec", "eps_closed", "pi_log_rec", "pi_log_closed", "delta_rec", "delta_closed");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (auto n : o.n)
    for (double xi : o.xi) {
      if (n < 1) throw usage_error("--n entries must be positive");
      const auto r = greek_recurrence(xi, n);
      greek_state c{n, nan, nan, nan, nan};
      try {
        c = greek_closed(xi, n);
      } catch (const numeric_domain_error&) {
      }
      w.row(n, xi, r.epsilon, c.epsilon, r.log_pi, c.log_pi, r.delta, c.delta);
    }
  return {os.str(), {{"n", o.n}, {"xi", o.xi}}};
}

struct mixing_result {
  result main;
  std::string summary_csv;
};

mixing_result run_mixing(const mixing_opts& o, const globals& g) {
  require_nonempty(o.p, "--p");
  if (o.n < 2) throw usage_error("--n must be at least 2");
  if (!(o.threshold > 0.0 && o.threshold < 2.0)) throw usage_error("--threshold must lie in (0, 2)");
  if (o.chain != "full" && o.chain != "first-row") throw usage_error("--chain must be full or first-row");
  const auto kind = o.chain == "full" ? chain_kind::full_group : chain_kind::first_row;
  const auto mu = default_step_measure(o.n);
  std::vector<std::vector<mixing_point>> curves(o.p.size());
  std::vector<std::size_t> nmix(o.p.size());
  // Sweep points run as independent tasks; output order follows the p list.
  parallel_for(
      o.p.size(),
      [&](std::size_t i) {
        nmix[i] = mixing_time(mu, o.p[i], o.threshold, kind, 1u << 20, 1);
        curves[i] = mixing_curve(mu, o.p[i], nmix[i], kind, 1);
      },
      g.threads);
  std::ostringstream os, ss;
  csv_writer w(os), s(ss);
  w.row("n", "p", "N", "tvd", "plancherel_rhs");
  s.row("n", "p", "N_mix", "N_mix_scaled");
  for (std::size_t i = 0; i < o.p.size(); ++i) {
    write_mixing_csv(os, o.n, o.p[i], curves[i], false);
    s.row(o.n, o.p[i], nmix[i],
          static_cast<double>(nmix[i]) / std::pow(static_cast<double>(o.p[i]), 2.0 / (o.n - 1)));
  }
  return {{os.str(), {{"n", o.n}, {"p", o.p}, {"threshold", o.threshold}, {"chain", o.chain}}}, ss.str()};
}

result run_decay(const decay_opts& o, const globals& g) {
  if (o.n < 3) throw usage_error("--n must be at least 3");
  if (o.modulus < 2) throw usage_error("--modulus must be at least 2");
  std::vector<std::uint32_t> ks = o.k;
  if (ks.empty())
    for (std::uint32_t j = 1; j <= 32 && o.modulus % 64 == 0; ++j) ks.push_back(j * (o.modulus / 64));
  require_nonempty(ks, "--k");
  const auto mu = default_step_measure(o.n);
  auto chain = first_row_chain(mu, o.modulus);
  for (std::size_t i = 0; i < o.N; ++i) chain.step(g.threads);
  const auto marg = chain.corner_marginal();
  std::ostringstream os;
  csv_writer w(os);
  w.row("n", "N", "xi", "abs_zhat");
  for (auto k : ks) w.row(o.n, o.N, static_cast<double>(k) / o.modulus, std::abs(corner_charfun(marg, k)));
  return {os.str(), {{"n", o.n}, {"N", o.N}, {"modulus", o.modulus}, {"k", ks}}};
}

result run_rearrange(const rearrange_opts& o, const globals& g) {
  if (o.cases < 1) throw usage_error("--cases must be positive");
  std::ostringstream os;
  csv_writer w(os);
  w.row("case_id", "lhs", "rhs", "diff");
  // Instance i is generated from its own stream, so rows are independent
  // of evaluation order.
  for (std::size_t i = 0; i < o.cases; ++i) {
    auto rng = make_stream(g.seed, i);
    std::uniform_int_distribution<int> coord(-3, 3);
    std::uniform_real_distribution<double> freq(-0.5, 0.5);
    const std::size_t k = 1 + i % 2, nf = 1 + (i / 2) % 4;
    abelian_word word(2 * k * nf + (i / 8) % 3);
    for (auto& v : word) v = {coord(rng), coord(rng)};
    const auto ps = pair_swap_identity(freq(rng), word, k);
    w.row("pair-swap-" + std::to_string(i), ps.lhs, ps.rhs, std::abs(ps.lhs - ps.rhs));

    const unsigned n = 3 + static_cast<unsigned>(i % 3);
    const std::size_t k2 = 1 + (i / 3) % 2, nf2 = 1 + (i / 6) % 2;
    std::vector<zvec> zw(nf2 * (k2 << (n - 2)) + i % 2, zvec(n - 1));
    for (auto& v : zw)
      for (auto& x : v) x = coord(rng);
    const double xi = freq(rng);
    const double e = f_k(xi, zw, n, k2, fk_mode::enumerate, g.threads);
    const double f = f_k(xi, zw, n, k2, fk_mode::factored, g.threads);
    w.row("factorization-" + std::to_string(i), e, f, std::abs(e - f));
  }
  return {os.str(), {{"cases", o.cases}, {"seed", g.seed}}};
}

plane_measure parse_measure(const std::string& s) {
  if (s == "mu0") return plane_measure({{{0, 0}, .2}, {{1, 0}, .2}, {{-1, 0}, .2}, {{0, 1}, .2}, {{0, -1}, .2}});
  if (s == "perturbed") return plane_measure({{{1, 0}, .3}, {{-1, 0}, .2}, {{0, 1}, .3}, {{0, -1}, .2}});
  // x,y,p;x,y,p;...
  std::vector<plane_atom> atoms;
  std::istringstream is(s);
  std::string item;
  while (std::getline(is, item, ';')) {
    plane_atom a;
    char c1 = 0, c2 = 0;
    std::istringstream it(item);
    if (!(it >> a.x[0] >> c1 >> a.x[1] >> c2 >> a.p) || c1 != ',' || c2 != ',')
      throw usage_error("--measure expects mu0, perturbed, or x,y,p;x,y,p;...");
    atoms.push_back(a);
  }
  try {
    return plane_measure(std::move(atoms));
  } catch (const contract_error& e) {
    throw usage_error(std::string("--measure: ") + e.what());
  }
}

result run_spectrum(const spectrum_opts& o, const globals& g) {
  if (o.window.size() != 2 && o.window.size() != 4) throw usage_error("--window takes 2 or 4 numbers");
  if (!(o.theta > 0.0 && o.theta < 1.0)) throw usage_error("--theta must lie in (0, 1)");
  if (!(o.csv_step > 0.0)) throw usage_error("--csv-step must be positive");
  const auto m = parse_measure(o.measure);
  search_box box;
  if (o.window.size() == 2)
    box = {{o.window[0], o.window[0]}, {o.window[1], o.window[1]}};
  else
    box = {{o.window[0], o.window[2]}, {o.window[1], o.window[3]}};
  const double step = o.grid_step > 0.0 ? o.grid_step : 0.9 * max_grid_step(m, o.theta);
  if (step >= max_grid_step(m, o.theta)) throw usage_error("--grid-step too coarse for theta");
  const auto rep = find_local_maxima(m, box, o.theta, step, g.threads);
  std::ostringstream os;
  write_spectrum_csv(os, m, rep, o.csv_step);
  return {os.str(),
          {{"measure", o.measure}, {"theta", o.theta}, {"window", o.window}, {"grid_step", step}, {"csv_step", o.csv_step}}};
}

json versions() {
  return {{"nilwalk", NILWALK_VERSION},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"boost", BOOST_LIB_VERSION},
          {"compiler", __VERSION__}};
}

void write_file(const fs::path& p, const std::string& data) {
  std::ofstream f(p, std::ios::binary);
  f << data;
  if (!f) throw std::runtime_error("cannot write " + p.string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact and Monte Carlo computations for random walks on nilpotent groups"};
  app.require_subcommand(1, 1);
  app.set_config("--config", "", "TOML file with option values; command-line flags take precedence");
  globals g;
  app.add_option("--seed", g.seed, "Master seed")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads (0 = hardware concurrency)")->capture_default_str();
  app.add_option("--out", g.out, "Output directory")->capture_default_str();

  return_prob_opts rp;
  auto* c_rp = app.add_subcommand("return-prob", "Exact return probability of the five-atom walk");
  c_rp->add_option("--N", rp.N, "Walk lengths")->delimiter(',')->check(k_no_blank_items)->capture_default_str();
  c_rp->add_option("--memory-mb", rp.memory_mb, "Memory budget of the convolution")->capture_default_str();

  llt_opts ll;
  auto* c_ll = app.add_subcommand("llt-compare", "Exact law against the local limit prediction");
  c_ll->add_option("--N", ll.N, "Walk lengths")->delimiter(',')->check(k_no_blank_items)->capture_default_str();
  c_ll->add_option("--points", ll.points, "Points n1:n2:n3")->delimiter(',')->check(k_no_blank_items)->capture_default_str();
  c_ll->add_option("--memory-mb", ll.memory_mb, "Memory budget of the convolution")->capture_default_str();

  charfun_opts cf;
  auto* c_cf = app.add_subcommand("charfun", "Finite-N Gaussian characteristic function against its limit");
  c_cf->add_option("--N", cf.N, "Walk lengths")->delimiter(',')->check(k_no_blank_items)->capture_default_str();
  c_cf->add_option("--alpha", cf.alpha, "Norms of alpha (along the first axis)")->delimiter(',')->check(k_no_blank_items)->capture_default_str();
  c_cf->add_option("--xi", cf.xi, "Central frequencies")->delimiter(',')->check(k_no_blank_items)->capture_default_str();

  greek_opts gr;
  auto* c_gr = app.add_subcommand("greek", "Recurrence against closed forms of eps, pi, delta");
  c_gr->add_option("--n", gr.n, "Indices (walk length equals index)")->delimiter(',')->check(k_no_blank_items)->capture_default_str();
  c_gr->add_option("--xi", gr.xi, "Central frequencies")->delimiter(',')->check(k_no_blank_items)->capture_default_str();

  mixing_opts mx;
  auto* c_mx = app.add_subcommand("mixing", "Exact TVD curves of the corner entry mod p");
  c_mx->add_option("--n", mx.n, "Matrix dimension")->capture_default_str();
  c_mx->add_option("--p", mx.p, "Moduli")->delimiter(',')->check(k_no_blank_items)->capture_default_str();
  c_mx->add_option("--threshold", mx.threshold, "TVD threshold")->capture_default_str();
  c_mx->add_option("--chain", mx.chain, "full or first-row")->capture_default_str();

  decay_opts dc;
  auto* c_dc = app.add_subcommand("charfun-decay", "Exact characteristic function of the corner at xi = k/modulus");
  c_dc->add_option("--n", dc.n, "Matrix dimension")->capture_default_str();
  c_dc->add_option("--N", dc.N, "Walk length")->capture_default_str();
  c_dc->add_option("--modulus", dc.modulus, "Modulus of the exact chain")->capture_default_str();
  c_dc->add_option("--k", dc.k, "Frequencies k (default: multiples of modulus/64 up to 1/2)")->delimiter(',')->check(k_no_blank_items);

  rearrange_opts ra;
  auto* c_ra = app.add_subcommand("rearrange-check", "Pair-swap and factorization identities on random words");
  c_ra->add_option("--cases", ra.cases, "Random instances per identity")->capture_default_str();

  spectrum_opts sp;
  auto* c_sp = app.add_subcommand("spectrum", "Large spectrum and local maxima of a plane measure");
  c_sp->add_option("--measure", sp.measure, "mu0, perturbed, or x,y,p;...")->capture_default_str();
  c_sp->add_option("--theta", sp.theta, "Threshold theta")->capture_default_str();
  c_sp->add_option("--window", sp.window, "lo,hi or xlo,xhi,ylo,yhi")->delimiter(',')->check(k_no_blank_items)->capture_default_str();
  c_sp->add_option("--grid-step", sp.grid_step, "Scan step (0 = automatic)")->capture_default_str();
  c_sp->add_option("--csv-step", sp.csv_step, "Step of the exported grid")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return k_exit_usage;
  }

  const auto start = std::chrono::steady_clock::now();
  set_default_threads(g.threads);
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    std::vector<std::pair<std::string, std::string>> files;
    json config;
    if (command == "return-prob") {
      auto r = run_return_prob(rp, g);
      files.emplace_back(command + ".csv", r.csv), config = r.config;
    } else if (command == "llt-compare") {
      auto r = run_llt(ll, g);
      files.emplace_back(command + ".csv", r.csv), config = r.config;
    } else if (command == "charfun") {
      auto r = run_charfun(cf, g);
      files.emplace_back(command + ".csv", r.csv), config = r.config;
    } else if (command == "greek") {
      auto r = run_greek(gr, g);
      files.emplace_back(command + ".csv", r.csv), config = r.config;
    } else if (command == "mixing") {
      auto r = run_mixing(mx, g);
      files.emplace_back(command + ".csv", r.main.csv);
      files.emplace_back("mixing_summary.csv", r.summary_csv);
      config = r.main.config;
    } else if (command == "charfun-decay") {
      auto r = run_decay(dc, g);
      files.emplace_back(command + ".csv", r.csv), config = r.config;
    } else if (command == "rearrange-check") {
      auto r = run_rearrange(ra, g);
      files.emplace_back(command + ".csv", r.csv), config = r.config;
    } else if (command == "spectrum") {
      auto r = run_spectrum(sp, g);
      files.emplace_back(command + ".csv", r.csv), config = r.config;
    }

    const fs::path out(g.out);
    fs::create_directories(out);
    json manifest;
    manifest["command"] = command;
    manifest["seed"] = g.seed;
    manifest["config"] = config;
    manifest["versions"] = versions();
    json sums = json::object();
    for (const auto& [name, data] : files) {
      write_file(out / name, data);
      sums[name] = sha256_hex(data);
    }
    manifest["sha256"] = sums;
    write_file(out / "manifest.json", manifest.dump(2) + "\n");
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    json info{{"threads", default_threads()}, {"wall_seconds", wall}};
    write_file(out / "run_info.json", info.dump(2) + "\n");
    return 0;
  } catch (const usage_error& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return k_exit_usage;
  } catch (const contract_error& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return k_exit_usage;
  } catch (const resource_error& e) {
    std::cerr << "resource limit: " << e.what() << "\n";
    return k_exit_resource;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
