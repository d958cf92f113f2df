#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "coalcount/incidence.hpp"
#include "coalcount/phylogeny.hpp"

namespace testsupport {

// 6 individuals over 4 compatible sites; dedup gives groups {a}, {b},
// {c,d,e,f}, and both constraint trees are a root with three leaf children.
inline std::string example6_csv() {
  return ",s1,s2,s3,s4\n"
         "a,0,1,0,0\n"
         "b,1,0,1,0\n"
         "c,0,0,0,1\n"
         "d,0,0,0,1\n"
         "e,0,0,0,1\n"
         "f,0,0,0,1\n";
}

// 8 individuals in carrier groups of sizes 2, 2, 4 (one site each).
inline std::string example8_csv() {
  return ",sA,sB,sC\n"
         "a,1,0,0\n"
         "b,1,0,0\n"
         "c,0,1,0\n"
         "d,0,1,0\n"
         "e,0,0,1\n"
         "f,0,0,1\n"
         "g,0,0,1\n"
         "h,0,0,1\n";
}

inline coalcount::HaplotypeData haplotypes_of(const std::string& csv) {
  return coalcount::deduplicate(coalcount::parse_matrix(csv, coalcount::MatrixFormat::csv));
}

inline coalcount::KingmanPhylogeny kingman_of(const std::string& csv) {
  const auto data = haplotypes_of(csv);
  return coalcount::to_kingman(coalcount::build_perfect_phylogeny(data), data);
}

inline coalcount::TajimaPhylogeny tajima_of(const std::string& csv) {
  const auto data = haplotypes_of(csv);
  return coalcount::to_tajima(coalcount::build_perfect_phylogeny(data), data);
}

// Upper tail of the chi-square distribution via the regularized incomplete
// gamma function (series for x < a+1, Lentz continued fraction otherwise).
inline double chi_square_pvalue(double statistic, int dof) {
  const double a = 0.5 * dof;
  const double x = 0.5 * statistic;
  if (x <= 0) return 1.0;

  if (x < a + 1.0) {
    double term = 1.0 / a;
    double sum = term;
    for (int n = 1; n < 500; ++n) {
      term *= x / (a + n);
      sum += term;
      if (term < sum * 1e-15) break;
    }
    return 1.0 - sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }

  double b = x + 1.0 - a;
  double c = 1e300;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::fabs(c) < 1e-300) c = 1e-300;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-15) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

struct CommandResult {
  int exit_code = -1;
  std::string output;
};

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

/// Runs the CLI with the given arguments, capturing stdout. stderr passes
/// through so failures stay visible in test logs. `env_prefix` goes in front
/// of the binary ("VAR=value "); `stdin_path` is fed to standard input.
inline CommandResult run_cli(const std::string& args, const std::string& env_prefix = "",
                             const std::string& stdin_path = "") {
  static int counter = 0;
  const std::string out_path = "cli_out_" + std::to_string(counter++) + ".tmp";
  std::string command = env_prefix + std::string(COALCOUNT_CLI_PATH) + " " + args;
  if (!stdin_path.empty()) command += " < " + stdin_path;
  command += " > " + out_path;
  const int status = std::system(command.c_str());
  CommandResult result;
  result.exit_code = (status >= 0 && WIFEXITED(status)) ? WEXITSTATUS(status) : -1;
  result.output = slurp(out_path);
  std::remove(out_path.c_str());
  return result;
}

}  // namespace testsupport
