#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "hsmrc/awgn_mi.hpp"
#include "hsmrc/compensated.hpp"
#include "hsmrc/pfd.hpp"
#include "hsmrc/quadrature.hpp"

// Seeded Monte-Carlo simulator of the H-S/MRC chain: draw N_r exponential
// branch SNRs, MRC-combine the strongest L, push the combined SNR through the
// constellation MI kernel, average.
//
// Randomness is counter-based: draw number i of the run (trial t uses draws
// t*N_r .. t*N_r+N_r-1) is the splitmix64 output at counter position i, offset
// by the seed.  A trial's values therefore depend only on (seed, trial), never
// on how trials are batched across workers, and any trial can be regenerated
// in isolation.

namespace hsmrc::mc {

struct McResult {
  double mean_mi = 0.0;   // nats
  double std_err = 0.0;   // nats
  long long trials = 0;
  double empirical_mean_snr = 0.0;
  double empirical_var_snr = 0.0;
  std::uint64_t seed = 0;
};

struct RngState {
  std::uint64_t state = 0;
};

namespace detail {

inline constexpr std::uint64_t golden = 0x9e3779b97f4a7c15ull;

inline std::uint64_t next_u64(RngState& s) {
  std::uint64_t z = (s.state += golden);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Uniform on (0,1]: top 53 bits, shifted to exclude 0 so the log below is
// always finite.
inline double unit_uniform(RngState& s) {
  return static_cast<double>((next_u64(s) >> 11) + 1) * 0x1.0p-53;
}

// Stream positioned at the first draw of the given trial.
inline RngState trial_state(std::uint64_t seed, std::uint64_t trial, int n_r) {
  return {seed + trial * static_cast<std::uint64_t>(n_r) * golden};
}

inline void sample_into(double* out, int n_r, double gamma_bar, RngState& rng) {
  for (int i = 0; i < n_r; ++i) out[i] = -gamma_bar * std::log(unit_uniform(rng));
}

// Sum of the l largest of v[0..n), ties broken toward the lower index.  The
// tie rule cannot change the sum; it exists so the selected index set is
// deterministic.
inline double combine_top_l(const double* v, int n, int l) {
  if (l == n) {
    StableSum<> s;
    for (int i = 0; i < n; ++i) s.add(v[i]);
    return s.value();
  }
  if (l == 1) {
    double best = v[0];
    for (int i = 1; i < n; ++i)
      if (v[i] > best) best = v[i];
    return best;
  }
  std::array<int, 64> idx;
  for (int i = 0; i < n; ++i) idx[i] = i;
  std::partial_sort(idx.begin(), idx.begin() + l, idx.begin() + n,
                    [v](int a, int b) { return v[a] != v[b] ? v[a] > v[b] : a < b; });
  StableSum<> s;
  for (int i = 0; i < l; ++i) s.add(v[idx[i]]);
  return s.value();
}

// Trimmed BPSK MI kernel for the hot loop: order-32 Gauss-Hermite, paired
// symmetric nodes so one exp serves both signs (e^{-(at+b)} = uv and
// e^{-(b-at)} = v/u with u = e^{-at}, v = e^{-b}), and skip thresholds that
// drop sub-3e-20 contributions.  Absolute accuracy vs the order-64 kernel is
// ~2.3e-5, far inside the Monte-Carlo noise it feeds.
struct KernelTable {
  std::array<double, 16> t;   // positive half of the node set, ascending
  std::array<double, 16> w;
  double t_max;
};

inline const KernelTable& kernel_table() {
  static const KernelTable kt = [] {
    const auto rule = quadrature::gauss_hermite(32);
    KernelTable k{};
    for (int i = 0; i < 16; ++i) {
      k.t[i] = rule.nodes[16 + i];
      k.w[i] = rule.weights[16 + i];
    }
    k.t_max = k.t[15];
    return k;
  }();
  return kt;
}

inline double fast_bpsk_mi(double g) {
  if (g <= 0.0) return 0.0;
  const KernelTable& kt = kernel_table();
  const double a = 2.0 * std::sqrt(2.0 * g);
  const double b = 2.0 * g;
  if (b - a * kt.t_max > 745.0) return awgn::ln2;  // every term underflows
  const double v = std::exp(-b);
  double acc = 0.0;
  for (int i = 0; i < 16; ++i) {
    const double at = a * kt.t[i];
    const double sp = b + at;  // argument on the +t side, always >= 0
    const double sm = b - at;  // argument on the -t side
    double c = 0.0;
    if (sp < 45.0) {
      const double e = v * std::exp(-at);
      c += sp > 36.0 ? e : std::log1p(e);
    }
    if (sm < -36.0) {
      c += -sm + std::exp(sm);
    } else if (sm < 45.0) {
      const double e = v * std::exp(at);
      c += sm > 36.0 ? e : std::log1p(e);
    }
    acc += kt.w[i] * c;
  }
  constexpr double inv_sqrt_pi = 0.56418958354775628695;
  return std::clamp(awgn::ln2 - acc * inv_sqrt_pi, 0.0, awgn::ln2);
}

inline double constellation_kernel(double g, awgn::Modulation mod) {
  return mod == awgn::Modulation::bpsk ? fast_bpsk_mi(g) : 2.0 * fast_bpsk_mi(0.5 * g);
}

inline constexpr long long block_size = 65536;

}  // namespace detail

inline std::vector<double> sample_branch_snrs(int n_r, double gamma_bar, RngState& rng) {
  if (n_r < 1) throw std::domain_error("sample_branch_snrs: n_r must be >= 1");
  if (!(gamma_bar > 0.0)) throw std::domain_error("sample_branch_snrs: gamma_bar must be positive");
  std::vector<double> out(n_r);
  detail::sample_into(out.data(), n_r, gamma_bar, rng);
  return out;
}

inline double hsmrc_combine(const std::vector<double>& branch_snrs, int l) {
  const int n = static_cast<int>(branch_snrs.size());
  if (l < 1 || l > n) throw std::domain_error("hsmrc_combine: need 1 <= l <= branch count");
  return detail::combine_top_l(branch_snrs.data(), n, l);
}

namespace detail {

// One pass over all trials; mi accumulation optional so the moment probe can
// skip the kernel.  Fixed 65536-trial blocks keep the reduction bit-stable
// for a given trial count while each block's inner sum stays compensated.
struct Accumulated {
  double mi_sum = 0.0, mi_sq_sum = 0.0, snr_sum = 0.0, snr_sq_sum = 0.0;
};

inline Accumulated run_trials(const pfd::SystemConfig& cfg, long long trials,
                              std::uint64_t seed, bool with_mi) {
  StableSum<> mi_tot, mi_sq_tot, snr_tot, snr_sq_tot;
  std::array<double, 64> buf;
  for (long long start = 0; start < trials; start += block_size) {
    const long long stop = std::min(trials, start + block_size);
    StableSum<> mi_b, mi_sq_b, snr_b, snr_sq_b;
    for (long long t = start; t < stop; ++t) {
      RngState rs = trial_state(seed, static_cast<std::uint64_t>(t), cfg.n_r);
      sample_into(buf.data(), cfg.n_r, cfg.gamma_bar, rs);
      const double g = combine_top_l(buf.data(), cfg.n_r, cfg.l);
      snr_b.add(g);
      snr_sq_b.add(g * g);
      if (with_mi) {
        const double x = constellation_kernel(g, cfg.modulation);
        mi_b.add(x);
        mi_sq_b.add(x * x);
      }
    }
    mi_tot.add(mi_b.value());
    mi_sq_tot.add(mi_sq_b.value());
    snr_tot.add(snr_b.value());
    snr_sq_tot.add(snr_sq_b.value());
  }
  return {mi_tot.value(), mi_sq_tot.value(), snr_tot.value(), snr_sq_tot.value()};
}

}  // namespace detail

inline McResult mc_ergodic_mi(const pfd::SystemConfig& cfg, long long trials,
                              std::uint64_t seed) {
  cfg.validate();
  if (trials < 2) throw std::domain_error("mc_ergodic_mi: trials must be >= 2");
  const auto a = detail::run_trials(cfg, trials, seed, true);
  const double n = static_cast<double>(trials);
  McResult r;
  r.trials = trials;
  r.seed = seed;
  r.mean_mi = a.mi_sum / n;
  const double mi_var = std::max(0.0, (a.mi_sq_sum - n * r.mean_mi * r.mean_mi) / (n - 1.0));
  r.std_err = std::sqrt(mi_var / n);
  r.empirical_mean_snr = a.snr_sum / n;
  r.empirical_var_snr =
      std::max(0.0, (a.snr_sq_sum - n * r.empirical_mean_snr * r.empirical_mean_snr) / (n - 1.0));
  return r;
}

inline std::pair<double, double> mc_snr_moments(const pfd::SystemConfig& cfg, long long trials,
                                                std::uint64_t seed) {
  cfg.validate();
  if (trials < 2) throw std::domain_error("mc_snr_moments: trials must be >= 2");
  const auto a = detail::run_trials(cfg, trials, seed, false);
  const double n = static_cast<double>(trials);
  const double mean = a.snr_sum / n;
  const double var = std::max(0.0, (a.snr_sq_sum - n * mean * mean) / (n - 1.0));
  return {mean, var};
}

}  // namespace hsmrc::mc
