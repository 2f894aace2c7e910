#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "hsmrc/hsmrc.hpp"
#include "hsmrc/mc_sim.hpp"
#include "testing_util.hpp"

// End-to-end checks of the installed binary: every field the CLI prints is
// recomputed here through the library with the same double arithmetic, so the
// comparisons are string-exact, not approximate.

namespace awgn = hsmrc::awgn;
using testutil::run_cli;
using testutil::split_csv;
using testutil::split_lines;

namespace {

std::string fmt12(double v) {
  char b[40];
  std::snprintf(b, sizeof b, "%.12g", v);
  return b;
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

}  // namespace

TEST(CliMi, CsvRowMatchesLibraryExactly) {
  const auto r = run_cli("mi --nr 5 --l 2 --snr-db 3 --units nats");
  ASSERT_EQ(r.exit_code, 0);
  const auto lines = split_lines(r.out);
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(lines[0], "n_r,l,snr_db,mod,engine,mi,units,k_terms,std_err,diagnostic");

  hsmrc::pfd::SystemConfig cfg{5, 2, db_to_linear(3.0), awgn::Modulation::bpsk};
  const auto est = hsmrc::ergodic_mi(cfg, hsmrc::Engine::closed_form, 10);
  const auto f = split_csv(lines[1]);
  ASSERT_EQ(f.size(), 10u);
  EXPECT_EQ(f[0], "5");
  EXPECT_EQ(f[1], "2");
  EXPECT_EQ(f[2], "3");
  EXPECT_EQ(f[3], "bpsk");
  EXPECT_EQ(f[4], "closed-form");
  EXPECT_EQ(f[5], fmt12(est.nats));
  EXPECT_EQ(f[6], "nats");
  EXPECT_EQ(f[7], "10");
  EXPECT_EQ(f[8], "0");
  EXPECT_EQ(f[9], fmt12(est.diagnostic));
}

TEST(CliMi, DefaultUnitsAreBits) {
  const auto r = run_cli("mi --nr 6 --l 3 --snr-db 0");
  ASSERT_EQ(r.exit_code, 0);
  const auto f = split_csv(split_lines(r.out)[1]);
  hsmrc::pfd::SystemConfig cfg{6, 3, db_to_linear(0.0), awgn::Modulation::bpsk};
  const auto est = hsmrc::ergodic_mi(cfg, hsmrc::Engine::recursive, 10);
  const double scale = 1.0 / awgn::ln2;
  EXPECT_EQ(f[4], "recursive-general");  // auto engine for l = 3
  EXPECT_EQ(f[5], fmt12(est.nats * scale));
  EXPECT_EQ(f[6], "bits");
}

TEST(CliMi, JsonIsCompactSingleLineWithSchema) {
  const auto r = run_cli("mi --nr 4 --l 2 --snr-db 5 --format json");
  ASSERT_EQ(r.exit_code, 0);
  const auto lines = split_lines(r.out);
  ASSERT_EQ(lines.size(), 1u);
  EXPECT_EQ(lines[0].rfind("{\"schema_version\":\"1\",\"record\":\"mi\",\"n_r\":4,\"l\":2,", 0), 0u);
  EXPECT_NE(lines[0].find("\"engine\":\"closed-form\""), std::string::npos);
  EXPECT_NE(lines[0].find("\"k_terms\":10"), std::string::npos);
  EXPECT_EQ(lines[0].find(" "), std::string::npos);

  const auto rmc = run_cli("mi --nr 4 --l 2 --snr-db 5 --format json --engine mc --trials 2000");
  ASSERT_EQ(rmc.exit_code, 0);
  const std::string jm = split_lines(rmc.out)[0];
  EXPECT_NE(jm.find("\"engine\":\"monte-carlo\""), std::string::npos);
  EXPECT_NE(jm.find("\"trials\":2000"), std::string::npos);
  EXPECT_NE(jm.find("\"seed\":12345"), std::string::npos);
  EXPECT_EQ(jm.find("k_terms"), std::string::npos);
}

TEST(CliMi, MonteCarloEngineReportsSpread) {
  const auto r = run_cli("mi --nr 4 --l 2 --snr-db 0 --engine monte-carlo --trials 4000 "
                         "--seed 5 --units nats");
  ASSERT_EQ(r.exit_code, 0);
  const auto f = split_csv(split_lines(r.out)[1]);
  hsmrc::pfd::SystemConfig cfg{4, 2, db_to_linear(0.0), awgn::Modulation::bpsk};
  const auto sim = hsmrc::mc::mc_ergodic_mi(cfg, 4000, 5);
  EXPECT_EQ(f[4], "monte-carlo");
  EXPECT_EQ(f[5], fmt12(sim.mean_mi));
  EXPECT_EQ(f[7], "0");  // series truncation does not apply
  EXPECT_EQ(f[8], fmt12(sim.std_err));
}

TEST(CliMi, RepeatedInvocationsAreByteIdentical) {
  const std::string cmds[] = {
      "mi --nr 5 --l 2 --snr-db 7.3",
      "mi --nr 6 --l 4 --snr-db -2 --engine monte-carlo --trials 3000 --seed 88",
      "sweep --config 4,2 --config 3,3 --points 5 --engine quadrature",
      "coeffs --nr 6 --l 3 --format json",
  };
  for (const auto& c : cmds) {
    const auto a = run_cli(c);
    const auto b = run_cli(c);
    ASSERT_EQ(a.exit_code, 0) << c;
    EXPECT_EQ(a.exit_code, b.exit_code) << c;
    EXPECT_EQ(a.out, b.out) << c;
  }
}

TEST(CliCoeffs, TableAndSummaryForThreeBranchHybrid) {
  const auto r = run_cli("coeffs --nr 3 --l 2");
  ASSERT_EQ(r.exit_code, 0);
  const auto lines = split_lines(r.out);
  ASSERT_EQ(lines.size(), 7u);
  EXPECT_EQ(lines[0], "n,k,c,mu,a");
  EXPECT_EQ(lines[1], "1,1,-1,2,-6");
  EXPECT_EQ(lines[2], "1,2,-1,2,3");
  EXPECT_EQ(lines[3], "2,1,-1.5,1,4");
  EXPECT_EQ(lines[4], "");
  EXPECT_EQ(lines[5], "sum_a,reconstruction_residual");
  const auto s = split_csv(lines[6]);
  EXPECT_EQ(s[0], "1");
  EXPECT_LT(std::stod(s[1]), 1e-8);
}

TEST(CliConvergence, BetaModeContrastsTheTwoSeries) {
  const auto r = run_cli("convergence --mode beta --x 1 --k-max 8");
  ASSERT_EQ(r.exit_code, 0);
  const auto lines = split_lines(r.out);
  ASSERT_EQ(lines.size(), 9u);
  EXPECT_EQ(lines[0], "k,definition,expansion");
  for (int k = 1; k <= 8; ++k) {
    const auto f = split_csv(lines[k]);
    ASSERT_EQ(f.size(), 3u);
    EXPECT_EQ(f[0], std::to_string(k));
  }
  const auto last = split_csv(lines[8]);
  const double d = std::stod(last[1]), e = std::stod(last[2]);
  EXPECT_LT(std::fabs(e - awgn::ln2), 1e-3);
  EXPECT_GT(std::fabs(d - awgn::ln2), std::fabs(e - awgn::ln2) * 10.0);
}

TEST(CliConvergence, MiModeTracksTruncation) {
  const auto r = run_cli("convergence --mode mi --k-max 12 --nr 6 --l 2 --snr-db 0");
  ASSERT_EQ(r.exit_code, 0);
  const auto lines = split_lines(r.out);
  ASSERT_EQ(lines.size(), 13u);
  EXPECT_EQ(lines[0], "k,mi_bits");
  hsmrc::pfd::SystemConfig cfg{6, 2, db_to_linear(0.0), awgn::Modulation::bpsk};
  const double bits = 1.0 / awgn::ln2;
  const auto last = split_csv(lines[12]);
  EXPECT_EQ(last[1], fmt12(hsmrc::ergodic_mi(cfg, hsmrc::Engine::closed_form, 12).nats * bits));
  const double v11 = std::stod(split_csv(lines[11])[1]);
  const double v12 = std::stod(last[1]);
  EXPECT_NEAR(v12, v11, 1e-8);

  EXPECT_EQ(run_cli("convergence --mode mi --k-max 5 --engine quadrature").exit_code, 2);
}

TEST(CliSweep, GridShapeAndEngineAgreement) {
  const auto r = run_cli("sweep --config 4,2 --snr-start -5 --snr-stop 5 --points 6 "
                         "--engine closed-form --engine quadrature");
  ASSERT_EQ(r.exit_code, 0);
  const auto lines = split_lines(r.out);
  ASSERT_EQ(lines.size(), 13u);  // header + 2 engines x 6 points
  EXPECT_EQ(lines[0], "snr_db,n_r,l,engine,mi_bits,diagnostic");
  for (int i = 0; i < 6; ++i) {
    const auto a = split_csv(lines[1 + i]);
    const auto b = split_csv(lines[7 + i]);
    EXPECT_EQ(a[0], fmt12(-5.0 + 2.0 * i));
    EXPECT_EQ(a[0], b[0]);
    EXPECT_EQ(a[3], "closed-form");
    EXPECT_EQ(b[3], "quadrature");
    const double va = std::stod(a[4]), vb = std::stod(b[4]);
    EXPECT_NEAR(va, vb, 2e-6);
    EXPECT_GE(va, 0.0);
    EXPECT_LE(va, 1.0 + 1e-9);
    if (i > 0) EXPECT_GT(va, std::stod(split_csv(lines[i])[4]));
  }

  const auto single = run_cli("sweep --config 5,3 --points 1 --snr-start 2.5");
  const auto srows = split_lines(single.out);
  ASSERT_EQ(srows.size(), 2u);
  EXPECT_EQ(split_csv(srows[1])[0], "2.5");
  EXPECT_EQ(split_csv(srows[1])[3], "recursive-general");  // auto engine, l = 3

  EXPECT_EQ(run_cli("sweep --config 4,9").exit_code, 2);
  EXPECT_EQ(run_cli("sweep --config oops").exit_code, 2);
}

TEST(CliDefaults, TruncationEnvironmentOverride) {
  const std::string args = "mi --nr 4 --l 1 --snr-db 0";
  EXPECT_EQ(split_csv(split_lines(run_cli(args).out)[1])[7], "10");
  EXPECT_EQ(split_csv(split_lines(run_cli(args, false, "HSMRC_DEFAULT_K=25 ").out)[1])[7], "25");
  EXPECT_EQ(
      split_csv(split_lines(run_cli(args + " --k 7", false, "HSMRC_DEFAULT_K=25 ").out)[1])[7],
      "7");
  const auto bad = run_cli(args, true, "HSMRC_DEFAULT_K=abc ");
  EXPECT_EQ(bad.exit_code, 2);
  EXPECT_NE(bad.out.find("HSMRC_DEFAULT_K"), std::string::npos);
}

TEST(CliGuards, SingularRecursionSurfacesAsExitThree) {
  // This SNR round-trips through the dB conversion onto the exact divisor zero
  // of the L = 3 recursion (linear gbar 0.25).
  const std::string p = "mi --nr 4 --l 3 --snr-db -6.020599913279624 --engine recursive-general";
  const auto strict = run_cli(p + " --no-fallback", true);
  EXPECT_EQ(strict.exit_code, 3);
  EXPECT_NE(strict.out.find("error:"), std::string::npos);

  const auto fb = run_cli(p);
  ASSERT_EQ(fb.exit_code, 0);
  EXPECT_EQ(split_csv(split_lines(fb.out)[1])[4], "quadrature");
}

TEST(CliUsage, ErrorsAndHelp) {
  EXPECT_EQ(run_cli("--help").exit_code, 0);
  EXPECT_NE(run_cli("--help").out.find("Subcommand"), std::string::npos);
  EXPECT_EQ(run_cli("").exit_code, 2);                                     // no subcommand
  EXPECT_EQ(run_cli("mi --nr 4 --l 2").exit_code, 2);                      // missing --snr-db
  EXPECT_EQ(run_cli("mi --nr 4 --l 2 --snr-db 0 --engine warp").exit_code, 2);
  EXPECT_EQ(run_cli("mi --nr 2 --l 3 --snr-db 0").exit_code, 2);           // L > N_r
  EXPECT_EQ(run_cli("mi --nr 4 --l 2 --snr-db 0 --units furlongs").exit_code, 2);
  EXPECT_EQ(run_cli("mc --nr 4 --l 2 --snr-db 0 --trials 1").exit_code, 2);
}

TEST(CliMc, TwelveColumnReportMatchesSimulator) {
  const auto r = run_cli("mc --nr 4 --l 2 --snr-db 0 --trials 5000 --seed 9 --units nats");
  ASSERT_EQ(r.exit_code, 0);
  const auto lines = split_lines(r.out);
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(lines[0],
            "n_r,l,snr_db,mod,engine,mi,units,std_err,trials,seed,empirical_mean_snr,"
            "empirical_var_snr");
  const auto f = split_csv(lines[1]);
  ASSERT_EQ(f.size(), 12u);
  hsmrc::pfd::SystemConfig cfg{4, 2, db_to_linear(0.0), awgn::Modulation::bpsk};
  const auto sim = hsmrc::mc::mc_ergodic_mi(cfg, 5000, 9);
  EXPECT_EQ(f[4], "monte-carlo");
  EXPECT_EQ(f[5], fmt12(sim.mean_mi));
  EXPECT_EQ(f[7], fmt12(sim.std_err));
  EXPECT_EQ(f[8], "5000");
  EXPECT_EQ(f[9], "9");
  EXPECT_EQ(f[10], fmt12(sim.empirical_mean_snr));
  EXPECT_EQ(f[11], fmt12(sim.empirical_var_snr));
}
