#pragma once

/// Umbrella header: waiting times for r-fold collisions and repetitions over
/// a fixed preimage-size configuration — exact distributions, expectations,
/// bounds, limit laws, simulation oracles, and balance measures.

#include "collision_lab/asymptotics.hpp"
#include "collision_lab/combinatorics.hpp"
#include "collision_lab/config.hpp"
#include "collision_lab/errors.hpp"
#include "collision_lab/exact_dist.hpp"
#include "collision_lab/expectations.hpp"
#include "collision_lab/kernels.hpp"
#include "collision_lab/measures.hpp"
#include "collision_lab/montecarlo.hpp"
#include "collision_lab/polynomial.hpp"
#include "collision_lab/quadrature.hpp"
#include "collision_lab/rational.hpp"
#include "collision_lab/series.hpp"

namespace collision_lab {

inline constexpr const char* version = "1.0.0";

} // namespace collision_lab
