/// Bounds in action on a skewed preimage configuration: exact expected
/// waiting times sandwiched between closed-form lower and upper bounds, the
/// replacement-cost gap, and the chance that a repeat is a true collision.

#include <cstdio>

#include "collision_lab/collision_lab.hpp"

namespace cl = collision_lab;

int main() {
    // A function on 36 points whose preimage sizes are decidedly uneven.
    const cl::configuration cfg({9, 7, 6, 5, 4, 2, 1, 1, 1});
    const int r = 2;

    std::printf("configuration:");
    for (long x : cfg.sizes) std::printf(" %ld", x);
    std::printf("   (n = %ld)\n\n", cfg.n);

    const auto st = cl::config_statistics_of(cfg, r);
    const double ek1 = cl::expectation_exact(cfg, r, cl::process_mode::K1).value;
    const double ek2 = cl::expectation_exact(cfg, r, cl::process_mode::K2).value;
    const double er = cl::expectation_exact(cfg, r, cl::process_mode::R).value;
    const auto lo = cl::bounds_lower(st);
    const auto mat = cl::bounds_upper_matched(st, cfg.max_size());
    const auto maj = cl::bounds_upper_majorization(st);

    std::printf("-- expected waiting times, bracketed --\n");
    std::printf("  first collision, no replacement : %.6f <= %.6f <= %.6f\n", lo.K1, ek1,
                mat.K12_common);
    std::printf("  first collision, replacement    : %.6f <= %.6f <= %.6f\n", lo.K2, ek2,
                mat.K12_common);
    std::printf("  first repeat                    : %.6f <= %.6f <= %.6f\n", lo.R, er,
                mat.R);
    std::printf("  balanced-surrogate upper bounds : K1 <= %.6f, K2 <= %.6f, R <= %.6f\n",
                maj.K1, maj.K2, maj.R);

    const auto gb = cl::gap_bound(st);
    std::printf("\n-- the cost of replacement --\n");
    std::printf("  E K2 - E K1 = %.6f, bounded by C_r n / s_r^(2/r) = %.6f (C_r = %.6f)\n",
                ek2 - ek1, gb.bound, gb.C_r);

    const auto split = cl::true_collision_split_bounds(cfg);
    const auto sandwich = cl::true_collision_sandwich(cfg, r);
    std::printf("\n-- is the first repeat a true collision? --\n");
    std::printf("  P(repeat strictly first) in [%.6f, %.6f]\n", cl::to_double(split.lower),
                cl::to_double(split.upper));
    std::printf("  conditional true-collision probability within [%.6f, %.6f]\n",
                cl::to_double(sandwich.lower), cl::to_double(sandwich.upper));

    const auto bal = cl::balance_measures(cfg, r);
    std::printf("\n-- how uneven is this function? --\n");
    std::printf("  chi-square statistic T = %.6f, effective cells = %.4f (of %zu)\n",
                cl::to_double(bal.T_chi2), bal.m_eff.value_or(0.0), cfg.sizes.size());
    return 0;
}
