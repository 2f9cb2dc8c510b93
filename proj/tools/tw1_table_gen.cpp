// Regenerates data/tw1_table.csv:
//   tw1_table_gen > data/tw1_table.csv

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <CLI11.hpp>

#include "sepcov/stats_tests.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Tabulate the beta = 1 Tracy-Widom distribution"};
  double lo = -10.0, hi = 6.0, step = 0.01;
  int nodes = 200;
  app.add_option("--lo", lo, "first abscissa");
  app.add_option("--hi", hi, "last abscissa");
  app.add_option("--step", step, "grid step");
  app.add_option("--nodes", nodes, "Gauss-Legendre nodes");
  CLI11_PARSE(app, argc, argv);

  std::printf("# Tracy-Widom beta=1 distribution F1(s) on [%g, %g], step %g.\n", lo, hi, step);
  std::printf("# F1(s) = det(I - K) on L^2(s, inf), K(x, y) = Ai((x + y)/2) / 2.\n");
  std::printf("# Nystrom discretization with %d Gauss-Legendre nodes on\n", nodes);
  std::printf("# [s, max(s + 20, 24 - s)]; generator: tools/tw1_table_gen.cpp.\n");
  std::printf("s,F1\n");
  const long count = std::lround((hi - lo) / step);
  for (long i = 0; i <= count; ++i) {
    const double s = lo + static_cast<double>(i) * step;
    // Roundoff can leave |F1| ~ 1e-17 of either sign in the far left tail.
    const double f = std::min(1.0, std::max(0.0, sepcov::tw1_fredholm(s, nodes)));
    std::printf("%.2f,%.15e\n", s, f);
  }
  return 0;
}
