/// Classical birthday computations, end to end: exact probabilities and
/// expectations for shared birthdays among 365 equally likely days, the
/// asymptotic series that approximates them, and the regime the configuration
/// falls into.

#include <cmath>
#include <cstdio>

#include "collision_lab/collision_lab.hpp"

namespace cl = collision_lab;

int main() {
    const cl::configuration year = cl::configuration::classical(365);

    std::printf("-- pair collisions (two people share a birthday) --\n");
    for (long people : {10L, 23L, 50L, 70L}) {
        const double p_shared = 1.0 - cl::survival_R(year, 2, people).value;
        std::printf("  %2ld people: P(shared birthday) = %.6f\n", people, p_shared);
    }

    const auto er2 = cl::expectation_exact(year, 2, cl::process_mode::R);
    std::printf("  expected people until the first shared birthday: %.10f\n", er2.value);
    const double window_low = std::sqrt(std::acos(-1.0) * 365.0 / 2.0) + 2.0 / 3.0;
    std::printf("  sqrt(pi*365/2) + 2/3 = %.10f  (leading asymptotics)\n", window_low);

    std::printf("\n-- triple collisions (three people share a birthday) --\n");
    const auto er3 = cl::expectation_exact(year, 3, cl::process_mode::R);
    std::printf("  exact expected wait for a triple:  %.10f\n", er3.value);
    for (int terms : {1, 3, 6}) {
        const auto series = cl::classical_ER_series(365, 3, terms);
        std::printf("  %d-term series approximation:      %.10f  (error %+.3e)\n", terms,
                    series.value, series.value - er3.value);
    }

    std::printf("\n-- where this configuration sits --\n");
    const auto st = cl::config_statistics_of(year, 2);
    const auto regime = cl::classify_regime(st);
    const auto scales = cl::time_scales(st);
    std::printf("  regime: %s\n  reason: %s\n", regime.regime.c_str(), regime.reason.c_str());
    std::printf("  collision time scale: %.4f draws, repetition time scale: %.4f draws\n",
                scales.collision, scales.repetition);
    return 0;
}
