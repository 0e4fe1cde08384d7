#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "collision_lab/errors.hpp"

namespace collision_lab {

/// Dense univariate polynomial with coefficients of type T (ascending order:
/// coeffs[i] multiplies t^i). Supports optional truncation so products over
/// many factors can be kept at the degree actually queried.
template <typename T>
struct polynomial {
    std::vector<T> coeffs;

    polynomial() : coeffs{T(0)} {}
    explicit polynomial(std::vector<T> c) : coeffs(std::move(c)) {
        if (coeffs.empty()) coeffs.push_back(T(0));
    }

    [[nodiscard]] std::size_t degree() const { return coeffs.size() - 1; }

    [[nodiscard]] const T& coeff(std::size_t i) const {
        static const T zero(0);
        return i < coeffs.size() ? coeffs[i] : zero;
    }

    /// Drop trailing zero coefficients (keeping at least the constant term).
    void normalize() {
        while (coeffs.size() > 1 && coeffs.back() == T(0)) coeffs.pop_back();
    }

    [[nodiscard]] T eval(const T& x) const {
        T acc(0);
        for (std::size_t i = coeffs.size(); i-- > 0;) acc = acc * x + coeffs[i];
        return acc;
    }
};

/// Product truncated at degree <= trunc (no truncation if trunc is npos).
template <typename T>
[[nodiscard]] polynomial<T> mul(const polynomial<T>& a, const polynomial<T>& b,
                                std::size_t trunc = static_cast<std::size_t>(-1)) {
    const std::size_t full = a.degree() + b.degree();
    const std::size_t dmax = std::min(full, trunc);
    std::vector<T> out(dmax + 1, T(0));
    for (std::size_t i = 0; i <= a.degree(); ++i) {
        if (a.coeffs[i] == T(0) || i > dmax) continue;
        const std::size_t jmax = std::min(b.degree(), dmax - i);
        for (std::size_t j = 0; j <= jmax; ++j) {
            out[i + j] += a.coeffs[i] * b.coeffs[j];
        }
    }
    return polynomial<T>(std::move(out));
}

/// Power by repeated squaring, truncated at degree <= trunc.
template <typename T>
[[nodiscard]] polynomial<T> pow_trunc(polynomial<T> base, unsigned long e, std::size_t trunc) {
    polynomial<T> result(std::vector<T>{T(1)});
    while (e > 0) {
        if (e & 1UL) result = mul(result, base, trunc);
        e >>= 1UL;
        if (e > 0) base = mul(base, base, trunc);
    }
    return result;
}

/// Nonnegative-coefficient polynomial held as scaled doubles: coefficient i
/// equals coeffs[i] * 2^exp2. Products of many such factors stay inside the
/// double range by renormalizing the common binary exponent after each
/// multiply. With all terms nonnegative there is no cancellation, so the
/// relative error stays at a small multiple of machine epsilon per factor.
struct scaled_poly {
    std::vector<double> coeffs{1.0};
    long exp2 = 0;

    void renormalize() {
        double mx = 0.0;
        for (double c : coeffs) mx = std::max(mx, c);
        if (mx == 0.0) {
            exp2 = 0;
            return;
        }
        int e = 0;
        std::frexp(mx, &e);
        if (e > 512 || e < -512) {
            const double s = std::ldexp(1.0, -e);
            for (double& c : coeffs) c *= s;
            exp2 += e;
        }
    }

    /// Natural log of coefficient i, or -inf when the coefficient is zero.
    [[nodiscard]] double log_coeff(std::size_t i) const {
        if (i >= coeffs.size() || coeffs[i] <= 0.0)
            return -std::numeric_limits<double>::infinity();
        return std::log(coeffs[i]) + static_cast<double>(exp2) * std::log(2.0);
    }
};

[[nodiscard]] inline scaled_poly mul(const scaled_poly& a, const scaled_poly& b,
                                     std::size_t trunc) {
    scaled_poly out;
    const std::size_t full = (a.coeffs.size() - 1) + (b.coeffs.size() - 1);
    const std::size_t dmax = std::min(full, trunc);
    out.coeffs.assign(dmax + 1, 0.0);
    out.exp2 = a.exp2 + b.exp2;
    for (std::size_t i = 0; i < a.coeffs.size() && i <= dmax; ++i) {
        if (a.coeffs[i] == 0.0) continue;
        const std::size_t jmax = std::min(b.coeffs.size() - 1, dmax - i);
        for (std::size_t j = 0; j <= jmax; ++j) {
            out.coeffs[i + j] += a.coeffs[i] * b.coeffs[j];
        }
    }
    out.renormalize();
    return out;
}

[[nodiscard]] inline scaled_poly pow_trunc(scaled_poly base, unsigned long e,
                                           std::size_t trunc) {
    scaled_poly result;
    while (e > 0) {
        if (e & 1UL) result = mul(result, base, trunc);
        e >>= 1UL;
        if (e > 0) base = mul(base, base, trunc);
    }
    return result;
}

} // namespace collision_lab
