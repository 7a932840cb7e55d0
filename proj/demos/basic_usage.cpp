// Solve the 2D example on the unit ball with a few weighting exponents and
// print the residual ratio and a sampled gap for each.

#include <cstdio>

#include "mirrorvi/metrics.hpp"
#include "mirrorvi/problems.hpp"
#include "mirrorvi/solvers.hpp"

int main() {
  using namespace mirrorvi;
  const VIInstance inst = example1_2d();
  const ProxGeometry geom = ProxGeometry::euclidean(inst.set());

  SolverConfig cfg;
  cfg.N = 1000;
  cfg.R = default_radius(geom);
  cfg.x1 = benchmark_start(inst.dimension());

  std::printf("%6s %14s %14s\n", "m", "residual", "gap");
  for (double m : {-1.0, 0.0, 1.0, 5.0, 50.0}) {
    cfg.m = m;
    const RunResult r = algorithm1_run(inst, geom, cfg);
    const double res = residual_metric(r.weighted_output, inst, cfg.x1);
    const double gap = gap_sampled(r.weighted_output, inst, 1000, 7).value;
    std::printf("%6g %14.6e %14.6e\n", m, res, gap);
  }
}
