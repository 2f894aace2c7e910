#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hsmrc/hsmrc.hpp"
#include "hsmrc/mc_sim.hpp"

// Command-line front end.  Subcommands: mi (single point), sweep (SNR grid),
// convergence (truncation studies), coeffs (weight-table dump), mc (simulator).
// Output is CSV (header row, 12 significant digits) or JSON lines carrying a
// schema_version field; SNR is taken in dB and converted to linear internally.
// Exit codes: 0 success, 2 validation/usage error, 3 numerical-guard error
// (singular recursion factor with fallback disabled, or an ill-conditioned
// expansion).

namespace hsmrc::cli {

namespace detail {

inline std::string fmt(double v) {
  char b[40];
  std::snprintf(b, sizeof b, "%.12g", v);
  return b;
}

inline const char* engine_name(Engine e) {
  switch (e) {
    case Engine::recursive: return "recursive-general";
    case Engine::closed_form: return "closed-form";
    case Engine::quadrature: return "quadrature";
    case Engine::monte_carlo: return "monte-carlo";
  }
  return "?";
}

inline Engine parse_engine(const std::string& s) {
  if (s == "closed-form") return Engine::closed_form;
  if (s == "recursive-general" || s == "recursive") return Engine::recursive;
  if (s == "quadrature") return Engine::quadrature;
  if (s == "monte-carlo" || s == "mc") return Engine::monte_carlo;
  throw CLI::ValidationError("--engine",
                             "unknown engine '" + s +
                                 "' (choose closed-form, recursive-general, quadrature, monte-carlo)");
}

inline awgn::Modulation parse_mod(const std::string& s) {
  if (s == "bpsk") return awgn::Modulation::bpsk;
  if (s == "qpsk") return awgn::Modulation::qpsk;
  throw CLI::ValidationError("--mod", "unknown modulation '" + s + "' (choose bpsk, qpsk)");
}

// Truncation default: explicit --k wins, then HSMRC_DEFAULT_K, then 10.
inline int resolve_k(int k_flag) {
  if (k_flag > 0) return k_flag;
  if (const char* env = std::getenv("HSMRC_DEFAULT_K")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1)
      throw std::invalid_argument("HSMRC_DEFAULT_K must be an integer >= 1, got '" +
                                  std::string(env) + "'");
    return static_cast<int>(v);
  }
  return 10;
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

struct OutputOptions {
  std::string format = "csv";   // csv | json
  std::string units = "bits";   // bits | nats
  double unit_scale() const { return units == "bits" ? 1.0 / awgn::ln2 : 1.0; }
};

inline void check_output_options(const OutputOptions& o) {
  if (o.format != "csv" && o.format != "json")
    throw CLI::ValidationError("--format", "choose csv or json");
  if (o.units != "bits" && o.units != "nats")
    throw CLI::ValidationError("--units", "choose bits or nats");
}

// Resolve the auto engine exactly as the library dispatcher would, so the
// printed engine name states what actually ran.
inline Engine effective_engine(const pfd::SystemConfig& cfg, const std::string& engine_flag) {
  return engine_flag.empty() ? default_engine(cfg) : parse_engine(engine_flag);
}

struct MiCommand {
  int nr = 1, l = 1;
  double snr_db = 0.0;
  std::string mod = "bpsk";
  std::string engine;
  int k = -1;
  long long trials = 1000000;
  std::uint64_t seed = 12345;
  bool no_fallback = false;
  OutputOptions out;
};

inline void run_mi(const MiCommand& c) {
  check_output_options(c.out);
  pfd::SystemConfig cfg{c.nr, c.l, db_to_linear(c.snr_db), parse_mod(c.mod)};
  cfg.validate();
  const Engine eng = effective_engine(cfg, c.engine);
  const double scale = c.out.unit_scale();

  MiEstimate est{};
  mc::McResult mc_res{};
  if (eng == Engine::monte_carlo) {
    if (c.trials < 2) throw std::invalid_argument("--trials must be >= 2");
    mc_res = mc::mc_ergodic_mi(cfg, c.trials, c.seed);
    est = {mc_res.mean_mi, Engine::monte_carlo, 0, mc_res.std_err};
  } else {
    est = ergodic_mi(cfg, eng, resolve_k(c.k), !c.no_fallback);
  }

  if (c.out.format == "csv") {
    std::cout << "n_r,l,snr_db,mod,engine,mi,units,k_terms,std_err,diagnostic\n"
              << c.nr << ',' << c.l << ',' << fmt(c.snr_db) << ',' << c.mod << ','
              << engine_name(est.engine) << ',' << fmt(est.nats * scale) << ',' << c.out.units
              << ',' << est.k_terms << ','
              << fmt(eng == Engine::monte_carlo ? mc_res.std_err * scale : 0.0) << ','
              << fmt(est.diagnostic * scale) << '\n';
  } else {
    nlohmann::ordered_json j;
    j["schema_version"] = "1";
    j["record"] = "mi";
    j["n_r"] = c.nr;
    j["l"] = c.l;
    j["snr_db"] = c.snr_db;
    j["mod"] = c.mod;
    j["engine"] = engine_name(est.engine);
    j["mi"] = est.nats * scale;
    j["units"] = c.out.units;
    if (eng == Engine::monte_carlo) {
      j["std_err"] = mc_res.std_err * scale;
      j["trials"] = mc_res.trials;
      j["seed"] = mc_res.seed;
    } else {
      j["k_terms"] = est.k_terms;
    }
    j["diagnostic"] = est.diagnostic * scale;
    std::cout << j.dump() << '\n';
  }
}

struct SweepCommand {
  double snr_start = -10.0, snr_stop = 20.0;
  int points = 31;
  std::vector<std::string> configs;
  std::vector<std::string> engines;
  std::string mod = "bpsk";
  int k = -1;
  long long trials = 1000000;
  std::uint64_t seed = 12345;
  bool no_fallback = false;
  std::string format = "csv";
};

inline std::pair<int, int> parse_config_pair(const std::string& s) {
  const auto comma = s.find(',');
  if (comma == std::string::npos)
    throw CLI::ValidationError("--config", "expected 'NR,L', got '" + s + "'");
  try {
    std::size_t u1 = 0, u2 = 0;
    const int nr = std::stoi(s.substr(0, comma), &u1);
    const int l = std::stoi(s.substr(comma + 1), &u2);
    if (u1 != comma || u2 != s.size() - comma - 1) throw std::invalid_argument(s);
    return {nr, l};
  } catch (const std::exception&) {
    throw CLI::ValidationError("--config", "expected 'NR,L', got '" + s + "'");
  }
}

inline void run_sweep(const SweepCommand& c) {
  if (c.format != "csv" && c.format != "json")
    throw CLI::ValidationError("--format", "choose csv or json");
  if (c.points < 1) throw CLI::ValidationError("--points", "must be >= 1");
  if (c.snr_start > c.snr_stop)
    throw CLI::ValidationError("--snr-start", "must not exceed --snr-stop");
  if (c.configs.empty()) throw CLI::ValidationError("--config", "at least one NR,L required");
  const awgn::Modulation mod = parse_mod(c.mod);
  const int k = resolve_k(c.k);
  const double bits = 1.0 / awgn::ln2;

  if (c.format == "csv") std::cout << "snr_db,n_r,l,engine,mi_bits,diagnostic\n";
  for (const auto& cs : c.configs) {
    const auto [nr, l] = parse_config_pair(cs);
    pfd::SystemConfig cfg{nr, l, 1.0, mod};
    cfg.validate();
    std::vector<std::string> engines = c.engines;
    if (engines.empty()) engines.push_back("");
    for (const auto& es : engines) {
      const Engine eng = effective_engine(cfg, es);
      for (int i = 0; i < c.points; ++i) {
        const double db = c.points == 1
                              ? c.snr_start
                              : c.snr_start + i * (c.snr_stop - c.snr_start) / (c.points - 1);
        cfg.gamma_bar = db_to_linear(db);
        MiEstimate est{};
        if (eng == Engine::monte_carlo) {
          if (c.trials < 2) throw std::invalid_argument("--trials must be >= 2");
          const auto r = mc::mc_ergodic_mi(cfg, c.trials, c.seed);
          est = {r.mean_mi, Engine::monte_carlo, 0, r.std_err};
        } else {
          est = ergodic_mi(cfg, eng, k, !c.no_fallback);
        }
        if (c.format == "csv") {
          std::cout << fmt(db) << ',' << nr << ',' << l << ',' << engine_name(est.engine) << ','
                    << fmt(est.nats * bits) << ',' << fmt(est.diagnostic * bits) << '\n';
        } else {
          nlohmann::ordered_json j;
          j["schema_version"] = "1";
          j["record"] = "sweep";
          j["snr_db"] = db;
          j["n_r"] = nr;
          j["l"] = l;
          j["engine"] = engine_name(est.engine);
          j["mi_bits"] = est.nats * bits;
          j["diagnostic"] = est.diagnostic * bits;
          std::cout << j.dump() << '\n';
        }
      }
    }
  }
}

struct ConvergenceCommand {
  std::string mode = "beta";
  double x = 1.0;
  int k_max = 20;
  int nr = 4, l = 2;
  double snr_db = 0.0;
  std::string mod = "bpsk";
  std::string engine;
  bool no_fallback = false;
  std::string format = "csv";
};

inline void run_convergence(const ConvergenceCommand& c) {
  if (c.format != "csv" && c.format != "json")
    throw CLI::ValidationError("--format", "choose csv or json");
  if (c.k_max < 1) throw CLI::ValidationError("--k-max", "must be >= 1");
  if (c.mode == "beta") {
    if (!(c.x > 0.0)) throw CLI::ValidationError("--x", "must be positive");
    if (c.format == "csv") std::cout << "k,definition,expansion\n";
    for (int k = 1; k <= c.k_max; ++k) {
      const double d = special::beta_definition(c.x, k).value;
      const double e = special::beta_expansion(c.x, k).value;
      if (c.format == "csv") {
        std::cout << k << ',' << fmt(d) << ',' << fmt(e) << '\n';
      } else {
        nlohmann::ordered_json j;
        j["schema_version"] = "1";
        j["record"] = "convergence-beta";
        j["k"] = k;
        j["definition"] = d;
        j["expansion"] = e;
        std::cout << j.dump() << '\n';
      }
    }
    return;
  }
  if (c.mode != "mi") throw CLI::ValidationError("--mode", "choose beta or mi");
  pfd::SystemConfig cfg{c.nr, c.l, db_to_linear(c.snr_db), parse_mod(c.mod)};
  cfg.validate();
  const Engine eng = effective_engine(cfg, c.engine);
  if (eng == Engine::monte_carlo || eng == Engine::quadrature)
    throw CLI::ValidationError("--engine", "convergence mode mi studies the series engines");
  const double bits = 1.0 / awgn::ln2;
  if (c.format == "csv") std::cout << "k,mi_bits\n";
  for (int k = 1; k <= c.k_max; ++k) {
    const MiEstimate est = ergodic_mi(cfg, eng, k, !c.no_fallback);
    if (c.format == "csv") {
      std::cout << k << ',' << fmt(est.nats * bits) << '\n';
    } else {
      nlohmann::ordered_json j;
      j["schema_version"] = "1";
      j["record"] = "convergence-mi";
      j["k"] = k;
      j["mi_bits"] = est.nats * bits;
      std::cout << j.dump() << '\n';
    }
  }
}

struct CoeffsCommand {
  int nr = 1, l = 1;
  double gamma_bar = 1.0;
  std::string format = "csv";
};

inline void run_coeffs(const CoeffsCommand& c) {
  if (c.format != "csv" && c.format != "json")
    throw CLI::ValidationError("--format", "choose csv or json");
  pfd::SystemConfig cfg{c.nr, c.l, c.gamma_bar, awgn::Modulation::bpsk};
  cfg.validate();
  const auto ex = pfd::pfd_coefficients(cfg);
  StableSum<__float128> sum;
  for (const auto& row : ex.weights_q)
    for (__float128 a : row) sum.add(a);
  const double sum_a = static_cast<double>(sum.value());

  if (c.format == "csv") {
    std::cout << "n,k,c,mu,a\n";
    for (std::size_t n = 0; n < ex.poles.size(); ++n)
      for (int k = 1; k <= ex.poles[n].mu; ++k)
        std::cout << n + 1 << ',' << k << ',' << fmt(ex.poles[n].c) << ',' << ex.poles[n].mu
                  << ',' << fmt(ex.weights[n][k - 1]) << '\n';
    std::cout << "\nsum_a,reconstruction_residual\n"
              << fmt(sum_a) << ',' << fmt(ex.reconstruction_residual) << '\n';
  } else {
    for (std::size_t n = 0; n < ex.poles.size(); ++n)
      for (int k = 1; k <= ex.poles[n].mu; ++k) {
        nlohmann::ordered_json j;
        j["schema_version"] = "1";
        j["record"] = "coeff";
        j["n"] = n + 1;
        j["k"] = k;
        j["c"] = ex.poles[n].c;
        j["mu"] = ex.poles[n].mu;
        j["a"] = ex.weights[n][k - 1];
        std::cout << j.dump() << '\n';
      }
    nlohmann::ordered_json j;
    j["schema_version"] = "1";
    j["record"] = "coeff-summary";
    j["sum_a"] = sum_a;
    j["reconstruction_residual"] = ex.reconstruction_residual;
    std::cout << j.dump() << '\n';
  }
}

struct McCommand {
  int nr = 1, l = 1;
  double snr_db = 0.0;
  std::string mod = "bpsk";
  long long trials = 1000000;
  std::uint64_t seed = 12345;
  OutputOptions out;
};

inline void run_mc(const McCommand& c) {
  check_output_options(c.out);
  if (c.trials < 2) throw CLI::ValidationError("--trials", "must be >= 2 (std_err needs it)");
  pfd::SystemConfig cfg{c.nr, c.l, db_to_linear(c.snr_db), parse_mod(c.mod)};
  cfg.validate();
  const auto r = mc::mc_ergodic_mi(cfg, c.trials, c.seed);
  const double scale = c.out.unit_scale();
  if (c.out.format == "csv") {
    std::cout << "n_r,l,snr_db,mod,engine,mi,units,std_err,trials,seed,empirical_mean_snr,"
                 "empirical_var_snr\n"
              << c.nr << ',' << c.l << ',' << fmt(c.snr_db) << ',' << c.mod << ",monte-carlo,"
              << fmt(r.mean_mi * scale) << ',' << c.out.units << ',' << fmt(r.std_err * scale)
              << ',' << r.trials << ',' << r.seed << ',' << fmt(r.empirical_mean_snr) << ','
              << fmt(r.empirical_var_snr) << '\n';
  } else {
    nlohmann::ordered_json j;
    j["schema_version"] = "1";
    j["record"] = "mc";
    j["n_r"] = c.nr;
    j["l"] = c.l;
    j["snr_db"] = c.snr_db;
    j["mod"] = c.mod;
    j["engine"] = "monte-carlo";
    j["mi"] = r.mean_mi * scale;
    j["units"] = c.out.units;
    j["std_err"] = r.std_err * scale;
    j["trials"] = r.trials;
    j["seed"] = r.seed;
    j["empirical_mean_snr"] = r.empirical_mean_snr;
    j["empirical_var_snr"] = r.empirical_var_snr;
    std::cout << j.dump() << '\n';
  }
}

}  // namespace detail

inline int run(int argc, char** argv) {
  CLI::App app{"Ergodic mutual information of an H-S/MRC diversity receiver"};
  app.require_subcommand(1);

  detail::MiCommand mi;
  auto* mi_cmd = app.add_subcommand("mi", "Single operating point");
  mi_cmd->add_option("--nr", mi.nr, "Total branches")->required();
  mi_cmd->add_option("--l", mi.l, "Selected branches")->required();
  mi_cmd->add_option("--snr-db", mi.snr_db, "Average per-branch SNR in dB")->required();
  mi_cmd->add_option("--mod", mi.mod, "Modulation: bpsk or qpsk");
  mi_cmd->add_option("--engine", mi.engine,
                     "closed-form | recursive-general | quadrature | monte-carlo");
  mi_cmd->add_option("--k", mi.k, "Series truncation");
  mi_cmd->add_option("--trials", mi.trials, "Monte-Carlo trials");
  mi_cmd->add_option("--seed", mi.seed, "Monte-Carlo seed");
  mi_cmd->add_flag("--no-fallback", mi.no_fallback, "Fail instead of quadrature fallback");
  mi_cmd->add_option("--units", mi.out.units, "bits or nats");
  mi_cmd->add_option("--format", mi.out.format, "csv or json");
  mi_cmd->callback([&mi] { detail::run_mi(mi); });

  detail::SweepCommand sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "SNR grid over one or more configurations");
  sweep_cmd->add_option("--snr-start", sweep.snr_start, "Grid start, dB");
  sweep_cmd->add_option("--snr-stop", sweep.snr_stop, "Grid stop, dB");
  sweep_cmd->add_option("--points", sweep.points, "Grid size");
  sweep_cmd->add_option("--config", sweep.configs, "Configuration as 'NR,L' (repeatable)")
      ->required();
  sweep_cmd->add_option("--engine", sweep.engines, "Engine (repeatable)");
  sweep_cmd->add_option("--mod", sweep.mod, "Modulation: bpsk or qpsk");
  sweep_cmd->add_option("--k", sweep.k, "Series truncation");
  sweep_cmd->add_option("--trials", sweep.trials, "Monte-Carlo trials");
  sweep_cmd->add_option("--seed", sweep.seed, "Monte-Carlo seed");
  sweep_cmd->add_flag("--no-fallback", sweep.no_fallback, "Fail instead of quadrature fallback");
  sweep_cmd->add_option("--format", sweep.format, "csv or json");
  sweep_cmd->callback([&sweep] { detail::run_sweep(sweep); });

  detail::ConvergenceCommand conv;
  auto* conv_cmd = app.add_subcommand("convergence", "Series truncation studies");
  conv_cmd->add_option("--mode", conv.mode, "beta or mi");
  conv_cmd->add_option("--x", conv.x, "Series argument (beta mode)");
  conv_cmd->add_option("--k-max", conv.k_max, "Largest truncation")->required();
  conv_cmd->add_option("--nr", conv.nr, "Total branches (mi mode)");
  conv_cmd->add_option("--l", conv.l, "Selected branches (mi mode)");
  conv_cmd->add_option("--snr-db", conv.snr_db, "SNR in dB (mi mode)");
  conv_cmd->add_option("--mod", conv.mod, "Modulation (mi mode)");
  conv_cmd->add_option("--engine", conv.engine, "closed-form or recursive-general (mi mode)");
  conv_cmd->add_flag("--no-fallback", conv.no_fallback, "Fail instead of quadrature fallback");
  conv_cmd->add_option("--format", conv.format, "csv or json");
  conv_cmd->callback([&conv] { detail::run_convergence(conv); });

  detail::CoeffsCommand coeffs;
  auto* coeffs_cmd = app.add_subcommand("coeffs", "Partial-fraction weight table");
  coeffs_cmd->add_option("--nr", coeffs.nr, "Total branches")->required();
  coeffs_cmd->add_option("--l", coeffs.l, "Selected branches")->required();
  coeffs_cmd->add_option("--gamma-bar", coeffs.gamma_bar, "Average branch SNR, linear");
  coeffs_cmd->add_option("--format", coeffs.format, "csv or json");
  coeffs_cmd->callback([&coeffs] { detail::run_coeffs(coeffs); });

  detail::McCommand mc_c;
  auto* mc_cmd = app.add_subcommand("mc", "Monte-Carlo estimate");
  mc_cmd->add_option("--nr", mc_c.nr, "Total branches")->required();
  mc_cmd->add_option("--l", mc_c.l, "Selected branches")->required();
  mc_cmd->add_option("--snr-db", mc_c.snr_db, "Average per-branch SNR in dB")->required();
  mc_cmd->add_option("--mod", mc_c.mod, "Modulation: bpsk or qpsk");
  mc_cmd->add_option("--trials", mc_c.trials, "Trial count");
  mc_cmd->add_option("--seed", mc_c.seed, "RNG seed");
  mc_cmd->add_option("--units", mc_c.out.units, "bits or nats");
  mc_cmd->add_option("--format", mc_c.out.format, "csv or json");
  mc_cmd->callback([&mc_c] { detail::run_mc(mc_c); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const SingularFactor& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const IllConditionedExpansion& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace hsmrc::cli
