#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "collision_lab/combinatorics.hpp"
#include "collision_lab/errors.hpp"
#include "collision_lab/polynomial.hpp"
#include "collision_lab/rational.hpp"

namespace collision_lab {

/// Truncated binomial expansion p_r(x, t) = sum_{i=0}^{r-1} C(x, i) t^i.
/// This is the per-cell generating factor for the without-replacement
/// process: cell x contributes t^i C(x, i) for i < r drawn elements. For
/// x <= r-1 it equals (1+t)^x exactly.
[[nodiscard]] inline polynomial<Int> p_r_poly(long x, int r) {
    if (r < 2) throw domain_error("p_r_poly: r must be at least 2");
    if (x < 0) throw domain_error("p_r_poly: x must be nonnegative");
    const long dmax = std::min<long>(x, r - 1);
    std::vector<Int> c(static_cast<std::size_t>(dmax) + 1);
    for (long i = 0; i <= dmax; ++i)
        c[static_cast<std::size_t>(i)] = binomial_int(static_cast<unsigned long>(x), i);
    return polynomial<Int>(std::move(c));
}

/// Truncated exponential q_r(a) = sum_{i=0}^{r-1} a^i / i!, the Poissonized
/// per-cell factor for the with-replacement repetition process.
[[nodiscard]] inline double q_r_eval(double a, int r) {
    if (r < 2) throw domain_error("q_r_eval: r must be at least 2");
    double term = 1.0, acc = 1.0;
    for (int i = 1; i < r; ++i) {
        term *= a / static_cast<double>(i);
        acc += term;
    }
    return acc;
}

/// Exact rational q_r at a rational argument.
[[nodiscard]] inline Rat q_r_eval_exact(const Rat& a, int r) {
    if (r < 2) throw domain_error("q_r_eval: r must be at least 2");
    Rat term(1), acc(1);
    for (int i = 1; i < r; ++i) {
        term *= a / Rat(i);
        acc += term;
    }
    acc.canonicalize();
    return acc;
}

/// q_r(x t) as a polynomial in t with the integer coefficient convention
/// (r-1)! q_r(x t) = sum_{i<r} (r-1)!/i! x^i t^i. Returning the scaled integer
/// polynomial lets m-fold products run entirely over big integers, with the
/// denominator (r-1)!^{#factors} tracked separately by the caller.
[[nodiscard]] inline polynomial<Int> q_r_scaled_poly(const Int& x, int r) {
    if (r < 2) throw domain_error("q_r_scaled_poly: r must be at least 2");
    std::vector<Int> c(static_cast<std::size_t>(r));
    Int prefix = factorial_int(static_cast<unsigned long>(r - 1)); // (r-1)!/i! at i=0
    Int xp(1);
    for (int i = 0; i < r; ++i) {
        c[static_cast<std::size_t>(i)] = prefix * xp;
        if (i + 1 < r) {
            prefix /= Int(i + 1);
            xp *= x;
        }
    }
    return polynomial<Int>(std::move(c));
}

/// Natural log of G_r(x, t) = P(Binomial(x, t) <= r-1), computed stably for
/// large x via log-sum-exp over the r lower-tail terms.
[[nodiscard]] inline double log_G_r_eval(long x, int r, double t) {
    if (r < 2) throw domain_error("G_r_eval: r must be at least 2");
    if (x < 0) throw domain_error("G_r_eval: x must be nonnegative");
    if (!(t >= 0.0 && t <= 1.0))
        throw domain_error("G_r_eval: t must lie in [0, 1]");
    if (x < r) return 0.0; // the whole binomial mass is below r
    if (t == 0.0) return 0.0;
    if (t == 1.0) return -std::numeric_limits<double>::infinity(); // x >= r here
    const double lt = std::log(t), l1t = std::log1p(-t);
    double best = -std::numeric_limits<double>::infinity();
    std::vector<double> terms(static_cast<std::size_t>(r));
    double lbinom = 0.0; // log C(x, i), built incrementally
    for (int i = 0; i < r; ++i) {
        if (i > 0)
            lbinom += std::log(static_cast<double>(x - i + 1)) - std::log(static_cast<double>(i));
        const double v = lbinom + i * lt + static_cast<double>(x - i) * l1t;
        terms[static_cast<std::size_t>(i)] = v;
        best = std::max(best, v);
    }
    double acc = 0.0;
    for (double v : terms) acc += std::exp(v - best);
    return best + std::log(acc);
}

/// Lower binomial tail G_r(x, t) = P(Binomial(x, t) <= r-1); equals 1 for
/// x < r. Nonincreasing in t, nondecreasing in r. Evaluated in the log
/// domain throughout, which keeps x in the hundreds of thousands safe.
[[nodiscard]] inline double G_r_eval(long x, int r, double t) {
    return std::exp(log_G_r_eval(x, r, t));
}

} // namespace collision_lab
