#pragma once

#include <cmath>
#include <string>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "collision_lab/errors.hpp"

namespace collision_lab {

/// Adaptive integral over (a, b) with endpoint-singularity-tolerant nodes.
/// Throws numeric_error when the requested relative tolerance was not met.
template <typename F>
[[nodiscard]] double integrate_interval(F&& f, double a, double b, double tol = 1e-12) {
    boost::math::quadrature::tanh_sinh<double> integrator;
    double error = 0, l1 = 0;
    const double v = integrator.integrate(std::forward<F>(f), a, b,
                                          std::sqrt(tol), &error, &l1);
    const double achieved = l1 > 0 ? error / l1 : error;
    if (achieved > 10 * std::sqrt(tol))
        throw numeric_error("quadrature on [" + std::to_string(a) + ", " + std::to_string(b) +
                                "] did not converge (achieved relative error " +
                                std::to_string(achieved) + ")",
                            achieved);
    return v;
}

/// Adaptive integral over (0, inf) for integrands with exponential decay.
template <typename F>
[[nodiscard]] double integrate_half_line(F&& f, double tol = 1e-12) {
    boost::math::quadrature::exp_sinh<double> integrator;
    double error = 0, l1 = 0;
    const double v = integrator.integrate(std::forward<F>(f), std::sqrt(tol), &error, &l1);
    const double achieved = l1 > 0 ? error / l1 : error;
    if (achieved > 10 * std::sqrt(tol))
        throw numeric_error("half-line quadrature did not converge (achieved relative error " +
                                std::to_string(achieved) + ")",
                            achieved);
    return v;
}

} // namespace collision_lab
