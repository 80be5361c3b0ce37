// Generates two-block data, fits a treelet, and prints how the energy
// concentrates as the tree grows.

#include <cstdio>

#include "treelet/treelet_all.hpp"

int main() {
  using namespace treelet;

  BlockCovSpec spec;
  spec.p = 10;
  spec.block_sizes = {5, 5};
  spec.within_corr = 0.9;
  const DataMatrix x = mvn_sample(gen_block_cov(spec), 300, 7);

  const TreeletModel model = fit_complete(x);
  std::printf("merge sequence:\n");
  for (const Rotation& r : model.rotations())
    std::printf("  level %2zu: (%zu, %zu)  theta = %+.4f  sum -> %zu\n",
                r.level, r.idx_a, r.idx_b, r.theta.theta, r.sum_idx);

  std::printf("\nbest-2 normalized energy by level:\n");
  for (std::size_t l = 0; l <= model.max_level(); ++l) {
    const double e = energy_score(x, best_k_basis(model, x, l, 2)).normalized;
    std::printf("  L = %2zu: %.4f\n", l, e);
  }
  return 0;
}
