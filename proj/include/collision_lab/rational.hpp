#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include <gmpxx.h>

#include "collision_lab/errors.hpp"

namespace collision_lab {

/// Arbitrary-precision integer and rational scalars. All exact-path
/// computations in the library run on these; doubles only appear on the
/// explicitly flagged floating-point paths.
using Int = mpz_class;
using Rat = mpq_class;

/// Exact n! as a big integer.
[[nodiscard]] inline Int factorial_int(unsigned long n) {
    Int r;
    mpz_fac_ui(r.get_mpz_t(), n);
    return r;
}

/// Exact binomial coefficient C(n, k); zero when k > n or k < 0.
[[nodiscard]] inline Int binomial_int(unsigned long n, long k) {
    if (k < 0 || static_cast<unsigned long>(k) > n) return Int(0);
    Int r;
    mpz_bin_uiui(r.get_mpz_t(), n, static_cast<unsigned long>(k));
    return r;
}

/// Exact falling factorial (n)_k = n (n-1) ... (n-k+1); equals 0 when k > n.
[[nodiscard]] inline Int falling_factorial_int(unsigned long n, unsigned long k) {
    if (k > n) return Int(0);
    Int r(1);
    for (unsigned long i = 0; i < k; ++i) r *= Int(n - i);
    return r;
}

/// Exact base^e for a big-integer base and machine exponent.
[[nodiscard]] inline Int pow_int(const Int& base, unsigned long e) {
    Int r;
    mpz_pow_ui(r.get_mpz_t(), base.get_mpz_t(), e);
    return r;
}

/// Natural logarithm of a positive big integer, computed without overflow by
/// splitting off the binary exponent (mantissa in [0.5, 1)).
[[nodiscard]] inline double log_int(const Int& v) {
    if (v <= 0) throw domain_error("log_int: argument must be positive");
    long exp2 = 0;
    double mant = mpz_get_d_2exp(&exp2, v.get_mpz_t());
    return std::log(mant) + static_cast<double>(exp2) * std::log(2.0);
}

/// Rational -> double without overflowing on huge numerators/denominators:
/// falls back to exp(log num - log den) when the direct conversion misbehaves.
[[nodiscard]] inline double to_double(const Rat& q) {
    double d = q.get_d();
    if (std::isfinite(d)) return d;
    if (q == 0) return 0.0;
    Rat a = q;
    a.canonicalize();
    const double s = sgn(a) < 0 ? -1.0 : 1.0;
    Int num = abs(a.get_num());
    Int den = a.get_den();
    return s * std::exp(log_int(num) - log_int(den));
}

/// Serialize a rational as "num/den" (just "num" for integers), the exact
/// interchange format used by reports and accepted back by the CLI.
[[nodiscard]] inline std::string rat_to_string(const Rat& q) {
    Rat c = q;
    c.canonicalize();
    if (c.get_den() == 1) return c.get_num().get_str();
    return c.get_num().get_str() + "/" + c.get_den().get_str();
}

/// Parse "num/den" or "num" into an exact rational.
[[nodiscard]] inline Rat rat_from_string(const std::string& s) {
    Rat q;
    if (q.set_str(s, 10) != 0)
        throw domain_error("rat_from_string: cannot parse '" + s + "' as a rational");
    if (q.get_den() == 0) throw domain_error("rat_from_string: zero denominator in '" + s + "'");
    q.canonicalize();
    return q;
}

} // namespace collision_lab
