// Serial reference vs OpenMP assembly of Q. Usage: feec_bench [domain] [level] [repeats]
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "feec/parallel.hpp"
#include "feec/projection.hpp"

using namespace feec;

namespace {

template <class F>
double best_of(int repeats, F&& f) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string domain = argc > 1 ? argv[1] : "unit_square";
  const int level = argc > 2 ? std::atoi(argv[2]) : 3;
  const int repeats = argc > 3 ? std::atoi(argv[3]) : 3;

  const LevelSetup S(domain, level, parse_complex("P1-minus", generate_domain_mesh(domain, 0).dim()), 0.25, 7);
  const auto L = build_ledger(S.measured, 2.0);
  const auto cfg = MollifierConfig::make(L.eps.eps_max, *S.field, 8);
  const ExtendedPartition part(S.mesh, S.geom);

  std::printf("domain %s level %d cells %d threads %d\n", domain.c_str(), level, S.mesh.num_cells(), worker_count());
  std::printf("k,dim,serial_s,parallel_s,speedup,identical\n");
  bool all_same = true;
  for (std::size_t k = 0; k < S.spaces.size(); ++k) {
    const auto& V = S.spaces[k];
    Eigen::MatrixXd Qs = assemble_Q(V, V, part, S.geom, cfg, false), Qp;  // warm caches
    const double ts = best_of(repeats, [&] { Qs = assemble_Q(V, V, part, S.geom, cfg, false); });
    const double tp = best_of(repeats, [&] { Qp = assemble_Q(V, V, part, S.geom, cfg, true); });
    const bool same = Qs == Qp;
    all_same = all_same && same;
    std::printf("%zu,%d,%.4f,%.4f,%.2f,%s\n", k, V.dim(), ts, tp, ts / tp, same ? "yes" : "no");
  }
  return all_same ? 0 : 1;
}
