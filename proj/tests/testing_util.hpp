#pragma once

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

// Shared helpers for the test suite: log-spaced grids and a tiny subprocess
// harness for the CLI binary (path injected through the CLI_BIN environment
// variable by CMake).

namespace testutil {

inline std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i)
    g[i] = lo * std::pow(hi / lo, n == 1 ? 0.0 : static_cast<double>(i) / (n - 1));
  return g;
}

struct ProcResult {
  int exit_code = -1;
  std::string out;
};

inline std::string cli_bin() {
  const char* p = std::getenv("CLI_BIN");
  if (!p) throw std::runtime_error("CLI_BIN not set (run through ctest)");
  return p;
}

// Run `cli_bin() + " " + args` through the shell, capturing stdout (stderr is
// folded in only when merge_stderr is set).  env_prefix lets a test prepend
// VAR=value assignments.
inline ProcResult run_cli(const std::string& args, bool merge_stderr = false,
                          const std::string& env_prefix = "") {
  std::string cmd = env_prefix + cli_bin() + " " + args +
                    (merge_stderr ? " 2>&1" : " 2>/dev/null");
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) throw std::runtime_error("popen failed for: " + cmd);
  ProcResult r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.exit_code = (status >= 0 && WIFEXITED(status)) ? WEXITSTATUS(status) : -1;
  return r;
}

inline std::vector<std::string> split_lines(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start < s.size()) {
    std::size_t e = s.find('\n', start);
    if (e == std::string::npos) e = s.size();
    out.push_back(s.substr(start, e - start));
    start = e + 1;
  }
  return out;
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t e = line.find(',', start);
    if (e == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, e - start));
    start = e + 1;
  }
}

}  // namespace testutil
