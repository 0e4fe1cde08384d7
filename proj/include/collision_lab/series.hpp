#pragma once

#include <cstddef>
#include <vector>

#include "collision_lab/errors.hpp"
#include "collision_lab/rational.hpp"

namespace collision_lab {

/// Truncated power series with exact rational coefficients, ascending order.
/// All operations take an explicit truncation length (number of coefficients
/// kept, i.e. results are correct modulo t^len).
using rat_series = std::vector<Rat>;

namespace series {

[[nodiscard]] inline Rat coeff(const rat_series& s, std::size_t i) {
    return i < s.size() ? s[i] : Rat(0);
}

[[nodiscard]] inline rat_series mul_trunc(const rat_series& a, const rat_series& b,
                                          std::size_t len) {
    rat_series out(len, Rat(0));
    for (std::size_t i = 0; i < a.size() && i < len; ++i) {
        if (a[i] == 0) continue;
        for (std::size_t j = 0; j < b.size() && i + j < len; ++j) {
            if (b[j] == 0) continue;
            out[i + j] += a[i] * b[j];
        }
    }
    return out;
}

/// log of a series with constant term 1, via the derivative recurrence
/// Q L' = Q'  =>  k q_0 l_k = k q_k - sum_{j=1}^{k-1} j l_j q_{k-j}.
[[nodiscard]] inline rat_series log_trunc(const rat_series& q, std::size_t len) {
    if (q.empty() || q[0] != 1)
        throw domain_error("series log: constant term must be 1");
    rat_series l(len, Rat(0));
    for (std::size_t k = 1; k < len; ++k) {
        Rat acc = Rat(Int(static_cast<long>(k))) * coeff(q, k);
        for (std::size_t j = 1; j < k; ++j)
            acc -= Rat(Int(static_cast<long>(j))) * l[j] * coeff(q, k - j);
        l[k] = acc / Rat(Int(static_cast<long>(k)));
    }
    return l;
}

/// exp of a series with constant term 0, via E' = A' E  =>
/// k e_k = sum_{j=1}^{k} j a_j e_{k-j}.
[[nodiscard]] inline rat_series exp_trunc(const rat_series& a, std::size_t len) {
    if (!a.empty() && a[0] != 0)
        throw domain_error("series exp: constant term must be 0");
    rat_series e(len, Rat(0));
    if (len == 0) return e;
    e[0] = 1;
    for (std::size_t k = 1; k < len; ++k) {
        Rat acc(0);
        for (std::size_t j = 1; j <= k; ++j)
            acc += Rat(Int(static_cast<long>(j))) * coeff(a, j) * e[k - j];
        e[k] = acc / Rat(Int(static_cast<long>(k)));
    }
    return e;
}

/// Q^alpha for a series with constant term 1 and rational alpha, via
/// Q P' = alpha Q' P  =>  k q_0 p_k = sum_{v=1}^{k} (alpha v - (k-v)) q_v p_{k-v}.
[[nodiscard]] inline rat_series pow_trunc(const rat_series& q, const Rat& alpha,
                                          std::size_t len) {
    if (q.empty() || q[0] != 1)
        throw domain_error("series pow: constant term must be 1");
    rat_series p(len, Rat(0));
    if (len == 0) return p;
    p[0] = 1;
    for (std::size_t k = 1; k < len; ++k) {
        Rat acc(0);
        for (std::size_t v = 1; v <= k; ++v) {
            const Rat qv = coeff(q, v);
            if (qv == 0) continue;
            acc += (alpha * Rat(Int(static_cast<long>(v))) -
                    Rat(Int(static_cast<long>(k - v)))) *
                   qv * p[k - v];
        }
        p[k] = acc / Rat(Int(static_cast<long>(k)));
    }
    return p;
}

/// Composition outer(inner(t)) for inner with constant term 0 (Horner form).
[[nodiscard]] inline rat_series compose(const rat_series& outer, const rat_series& inner,
                                        std::size_t len) {
    if (!inner.empty() && inner[0] != 0)
        throw domain_error("series compose: inner constant term must be 0");
    rat_series out(len, Rat(0));
    if (len == 0) return out;
    for (std::size_t i = outer.size(); i-- > 0;) {
        out = mul_trunc(out, inner, len);
        out[0] += outer[i];
    }
    return out;
}

/// Multiply by t^k (shift coefficients up).
[[nodiscard]] inline rat_series shift_up(const rat_series& a, std::size_t k, std::size_t len) {
    rat_series out(len, Rat(0));
    for (std::size_t i = 0; i + k < len && i < a.size(); ++i) out[i + k] = a[i];
    return out;
}

/// Divide by t^k; the dropped coefficients must vanish.
[[nodiscard]] inline rat_series shift_down(const rat_series& a, std::size_t k) {
    for (std::size_t i = 0; i < k && i < a.size(); ++i)
        if (a[i] != 0) throw domain_error("series shift_down: nonzero low-order coefficient");
    rat_series out;
    for (std::size_t i = k; i < a.size(); ++i) out.push_back(a[i]);
    return out;
}

} // namespace series

} // namespace collision_lab
