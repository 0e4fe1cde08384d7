#pragma once

#include <cstddef>
#include <mutex>
#include <vector>

#include "collision_lab/errors.hpp"
#include "collision_lab/rational.hpp"

namespace collision_lab {

/// Process-wide ceiling for the memoized Stirling/surjection table. Queries
/// with k beyond the cap raise resource_error instead of allocating an
/// unbounded quadratic table.
inline std::size_t& surjection_table_cap() {
    static std::size_t cap = 2000;
    return cap;
}

namespace detail {

/// Memoized Stirling numbers of the second kind, grown row by row under a
/// mutex so concurrent readers are safe. Row k holds S(k, 0..k).
class stirling2_table {
public:
    static stirling2_table& instance() {
        static stirling2_table t;
        return t;
    }

    Int get(std::size_t k, std::size_t d) {
        if (d > k) return Int(0);
        std::lock_guard<std::mutex> lock(mutex_);
        if (k >= surjection_table_cap() + 1)
            throw resource_error(
                "surjection_count: k = " + std::to_string(k) +
                " exceeds the memoized table cap (" + std::to_string(surjection_table_cap()) +
                "); raise surjection_table_cap() if this size is intended");
        while (rows_.size() <= k) {
            const std::size_t r = rows_.size();
            std::vector<Int> row(r + 1);
            // S(r, d) = d S(r-1, d) + S(r-1, d-1), S(0, 0) = 1.
            row[0] = (r == 0) ? Int(1) : Int(0);
            for (std::size_t d2 = 1; d2 <= r; ++d2) {
                row[d2] = Int(static_cast<unsigned long>(d2)) * at(r - 1, d2) + at(r - 1, d2 - 1);
            }
            rows_.push_back(std::move(row));
        }
        return rows_[k][d];
    }

private:
    [[nodiscard]] const Int& at(std::size_t k, std::size_t d) const {
        static const Int zero(0);
        if (d > k) return zero;
        return rows_[k][d];
    }

    std::mutex mutex_;
    std::vector<std::vector<Int>> rows_;
};

} // namespace detail

/// Number of surjections from a k-set onto a d-set: d! * S(k, d).
/// Zero when d > k. Memoized up to the configured cap.
[[nodiscard]] inline Int surjection_count(std::size_t k, std::size_t d) {
    if (d > k) return Int(0);
    Int s = detail::stirling2_table::instance().get(k, d);
    return s * factorial_int(static_cast<unsigned long>(d));
}

/// Elementary symmetric polynomials e_0..e_{k_max} of the given values,
/// via the one-pass recurrence e_j <- e_j + v * e_{j-1}.
template <typename T>
[[nodiscard]] std::vector<T> elementary_symmetric(const std::vector<T>& values,
                                                  std::size_t k_max) {
    std::vector<T> e(k_max + 1, T(0));
    e[0] = T(1);
    std::size_t filled = 0;
    for (const T& v : values) {
        filled = std::min(filled + 1, k_max);
        for (std::size_t j = filled; j >= 1; --j) {
            e[j] += v * e[j - 1];
        }
    }
    return e;
}

/// Probability mass function of the image cardinality of a uniform random
/// function from a k-set to an n-set:
///     P(|image| = d) = C(n, d) * surj(k, d) / n^k,  d = 0..min(k, n).
/// The masses sum to 1 because sum_d C(n,d) surj(k,d) counts all n^k functions
/// by their image.
[[nodiscard]] inline std::vector<Rat> image_cardinality_pmf(std::size_t k, unsigned long n) {
    if (n == 0) throw domain_error("image_cardinality_pmf: codomain must be nonempty");
    const std::size_t dmax = std::min<std::size_t>(k, n);
    std::vector<Rat> pmf(dmax + 1, Rat(0));
    const Int denom = pow_int(Int(n), static_cast<unsigned long>(k));
    for (std::size_t d = 0; d <= dmax; ++d) {
        Rat p(binomial_int(n, static_cast<long>(d)) * surjection_count(k, d), denom);
        p.canonicalize();
        pmf[d] = p;
    }
    return pmf;
}

/// All partitions of n into at most max_parts positive parts, each part at
/// most max_part, listed in nonincreasing order. Used by test batteries.
inline void partitions_of(int n, int max_parts, int max_part,
                          std::vector<int>& current,
                          std::vector<std::vector<int>>& out) {
    if (n == 0) {
        out.push_back(current);
        return;
    }
    if (max_parts == 0) return;
    for (int p = std::min(n, max_part); p >= 1; --p) {
        current.push_back(p);
        partitions_of(n - p, max_parts - 1, p, current, out);
        current.pop_back();
    }
}

[[nodiscard]] inline std::vector<std::vector<int>> partitions_of(int n, int max_parts) {
    std::vector<std::vector<int>> out;
    std::vector<int> current;
    partitions_of(n, max_parts, n, current, out);
    return out;
}

/// Multinomial coefficient n! / prod x_i! for nonnegative parts summing to n.
[[nodiscard]] inline Int multinomial_int(const std::vector<long>& parts) {
    unsigned long n = 0;
    for (long x : parts) {
        if (x < 0) throw domain_error("multinomial_int: negative part");
        n += static_cast<unsigned long>(x);
    }
    Int r = factorial_int(n);
    for (long x : parts) r /= factorial_int(static_cast<unsigned long>(x));
    return r;
}

} // namespace collision_lab
