#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "collision_lab/combinatorics.hpp"
#include "collision_lab/config.hpp"
#include "collision_lab/errors.hpp"
#include "collision_lab/kernels.hpp"
#include "collision_lab/polynomial.hpp"
#include "collision_lab/quadrature.hpp"
#include "collision_lab/rational.hpp"

namespace collision_lab {

/// The three waiting-time processes over a fixed configuration:
///   K1: draws without replacement, wait for r distinct elements of one cell;
///   K2: draws with replacement, wait for r distinct elements of one cell;
///   R:  draws with replacement, wait for r draws landing in one cell
///       (repeats of the same element count).
enum class process_mode { K1, K2, R };

[[nodiscard]] inline const char* to_string(process_mode m) {
    switch (m) {
        case process_mode::K1: return "K1";
        case process_mode::K2: return "K2";
        case process_mode::R: return "R";
    }
    return "?";
}

[[nodiscard]] inline process_mode mode_from_string(const std::string& s) {
    if (s == "K1") return process_mode::K1;
    if (s == "K2") return process_mode::K2;
    if (s == "R") return process_mode::R;
    throw domain_error("unknown mode '" + s + "' (expected K1, K2 or R)");
}

/// A probability that is exact when the rational path ran, and a double
/// rendering in all cases.
struct prob_value {
    bool exact = true;
    Rat rational;      ///< valid only when exact
    double value = 0;  ///< always valid

    [[nodiscard]] static prob_value from_rat(Rat q) {
        prob_value p;
        p.exact = true;
        p.value = to_double(q);
        p.rational = std::move(q);
        return p;
    }
    [[nodiscard]] static prob_value from_double(double v) {
        prob_value p;
        p.exact = false;
        p.value = v;
        return p;
    }
};

/// Ceiling on the domain size n for exact big-integer survival computations;
/// larger instances transparently switch to the logarithmic floating path.
inline long& exact_path_limit() {
    static long limit = 10000;
    return limit;
}

namespace detail {

/// Split of the without-replacement generating product
///     prod_i p_r(x_i, t) = (1+t)^A * H(t),
/// where A sums the cells of size < r (for which p_r(x,t) = (1+t)^x exactly)
/// and H collects the cells of size >= r. H has degree |M_r| (r-1), which is
/// small for every tractable instance, so single coefficients of the full
/// product reduce to a short convolution against binomial coefficients.
struct k1_product_split {
    unsigned long small_sum = 0; ///< A = sum of sizes < r
    polynomial<Int> heavy;       ///< H(t), exact integer coefficients
    std::size_t heavy_degree = 0;
};

[[nodiscard]] inline k1_product_split split_k1_product(const configuration& cfg, int r,
                                                       std::size_t trunc) {
    k1_product_split sp;
    sp.heavy = polynomial<Int>(std::vector<Int>{Int(1)});
    for (const auto& [size, count] : cfg.grouped_sizes()) {
        if (size < r) {
            sp.small_sum += static_cast<unsigned long>(size * count);
        } else {
            sp.heavy = mul(sp.heavy,
                           pow_trunc(p_r_poly(size, r), static_cast<unsigned long>(count), trunc),
                           trunc);
        }
    }
    sp.heavy.normalize();
    sp.heavy_degree = sp.heavy.degree();
    return sp;
}

/// Exact coefficient [t^k] prod_i p_r(x_i, t) from the split representation.
[[nodiscard]] inline Int k1_coefficient(const k1_product_split& sp, std::size_t k) {
    Int c(0);
    const std::size_t jmax = std::min(sp.heavy_degree, k);
    for (std::size_t j = 0; j <= jmax; ++j) {
        if (sp.heavy.coeffs[j] == 0) continue;
        c += sp.heavy.coeffs[j] *
             binomial_int(sp.small_sum, static_cast<long>(k - j));
    }
    return c;
}

/// All coefficients c_0..c_D of prod_i p_r(x_i, t), D = full degree.
[[nodiscard]] inline std::vector<Int> k1_all_coefficients(const configuration& cfg, int r) {
    const k1_product_split sp = split_k1_product(cfg, r, static_cast<std::size_t>(-1));
    const std::size_t D = sp.heavy_degree + sp.small_sum;
    std::vector<Int> c(D + 1);
    for (std::size_t k = 0; k <= D; ++k) c[k] = k1_coefficient(sp, k);
    return c;
}

/// log C(a, b) via lgamma; -inf outside the triangle.
[[nodiscard]] inline double log_binomial_d(double a, double b) {
    if (b < 0 || b > a) return -std::numeric_limits<double>::infinity();
    return std::lgamma(a + 1.0) - std::lgamma(b + 1.0) - std::lgamma(a - b + 1.0);
}

/// Floating-point (log-domain) coefficient of the K1 product: the heavy part
/// is convolved in scaled doubles, the (1+t)^A part enters through lgamma.
[[nodiscard]] inline double log_k1_coefficient(const configuration& cfg, int r, long k) {
    scaled_poly heavy;
    const auto trunc = static_cast<std::size_t>(k);
    for (const auto& [size, count] : cfg.grouped_sizes()) {
        if (size < r) continue;
        const polynomial<Int> base = p_r_poly(size, r);
        scaled_poly basef;
        basef.coeffs.resize(base.coeffs.size());
        for (std::size_t i = 0; i < base.coeffs.size(); ++i)
            basef.coeffs[i] = to_double(Rat(base.coeffs[i]));
        basef.renormalize();
        heavy = mul(heavy, pow_trunc(basef, static_cast<unsigned long>(count), trunc), trunc);
    }
    double small_sum = 0;
    for (const auto& [size, count] : cfg.grouped_sizes())
        if (size < r) small_sum += static_cast<double>(size) * static_cast<double>(count);
    // log-sum-exp over j of heavy_j * C(A, k - j)
    double best = -std::numeric_limits<double>::infinity();
    std::vector<double> terms;
    terms.reserve(heavy.coeffs.size());
    for (std::size_t j = 0; j < heavy.coeffs.size(); ++j) {
        const double lj = heavy.log_coeff(j);
        if (lj == -std::numeric_limits<double>::infinity()) continue;
        const double v = lj + log_binomial_d(small_sum, static_cast<double>(k) - static_cast<double>(j));
        if (std::isfinite(v)) {
            terms.push_back(v);
            best = std::max(best, v);
        }
    }
    if (terms.empty()) return -std::numeric_limits<double>::infinity();
    double acc = 0;
    for (double v : terms) acc += std::exp(v - best);
    return best + std::log(acc);
}

/// Scaled-integer product prod_i (r-1)! q_r(x_i t) truncated at degree trunc;
/// the true coefficients carry the extra denominator (r-1)!^b.
[[nodiscard]] inline polynomial<Int> r_scaled_product(const configuration& cfg, int r,
                                                      std::size_t trunc) {
    polynomial<Int> prod(std::vector<Int>{Int(1)});
    for (const auto& [size, count] : cfg.grouped_sizes()) {
        prod = mul(prod,
                   pow_trunc(q_r_scaled_poly(Int(size), r), static_cast<unsigned long>(count),
                             trunc),
                   trunc);
    }
    prod.normalize();
    return prod;
}

/// Floating-point log coefficient [t^k] prod_i q_r(x_i t).
[[nodiscard]] inline double log_r_coefficient(const configuration& cfg, int r, long k) {
    const auto trunc = static_cast<std::size_t>(k);
    scaled_poly prod;
    long b = 0;
    for (const auto& [size, count] : cfg.grouped_sizes()) {
        b += count;
        scaled_poly base;
        base.coeffs.resize(static_cast<std::size_t>(r));
        double lx = std::log(static_cast<double>(size));
        for (int i = 0; i < r; ++i)
            base.coeffs[static_cast<std::size_t>(i)] =
                std::exp(static_cast<double>(i) * lx - std::lgamma(i + 1.0));
        base.renormalize();
        prod = mul(prod, pow_trunc(base, static_cast<unsigned long>(count), trunc), trunc);
    }
    return prod.log_coeff(static_cast<std::size_t>(k));
}

/// Image-size Markov chain for k uniform draws over n elements: the image
/// grows by one with probability (n - d)/n. Returns P(|image after k| = d)
/// for d = 0..min(k, n) in doubles; exact recurrence, nonnegative terms.
[[nodiscard]] inline std::vector<double> image_pmf_double(long k, long n) {
    const auto dmax = static_cast<std::size_t>(std::min(k, n));
    std::vector<double> p(dmax + 1, 0.0), next(dmax + 1, 0.0);
    p[0] = 1.0;
    const double nd = static_cast<double>(n);
    for (long step = 0; step < k; ++step) {
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t d = 0; d < p.size(); ++d) {
            if (p[d] == 0.0) continue;
            const double stay = static_cast<double>(d) / nd;
            next[d] += p[d] * stay;
            if (d + 1 <= dmax) next[d + 1] += p[d] * (1.0 - stay);
        }
        p.swap(next);
    }
    return p;
}

} // namespace detail

/// Require at least one cell capable of an r-fold collision.
inline void require_collision_possible(const configuration& cfg, int r) {
    if (cfg.max_size() < r)
        throw invalid_query_error(
            "no cell has " + std::to_string(r) +
            " or more elements, so an r-fold collision can never occur");
}

/// P(K1 > k): survival of the without-replacement collision time.
///     P(K1 > k) = k! (n-k)! / n! * [t^k] prod_i p_r(x_i, t),  0 <= k <= n,
/// and 0 for k > n (the process exhausts the domain).
[[nodiscard]] inline prob_value survival_K1(const configuration& cfg, int r, long k) {
    if (r < 2) throw domain_error("survival_K1: r must be at least 2");
    if (k < 0) throw out_of_range_error("survival_K1: k must be nonnegative");
    require_collision_possible(cfg, r);
    if (k >= cfg.n) return prob_value::from_rat(Rat(0));
    if (cfg.n <= exact_path_limit()) {
        const auto sp = detail::split_k1_product(cfg, r, static_cast<std::size_t>(k));
        const Int c = detail::k1_coefficient(sp, static_cast<std::size_t>(k));
        Rat p(c * factorial_int(static_cast<unsigned long>(k)) *
                  factorial_int(static_cast<unsigned long>(cfg.n - k)),
              factorial_int(static_cast<unsigned long>(cfg.n)));
        p.canonicalize();
        return prob_value::from_rat(std::move(p));
    }
    const double lc = detail::log_k1_coefficient(cfg, r, k);
    if (lc == -std::numeric_limits<double>::infinity()) return prob_value::from_double(0.0);
    const double nd = static_cast<double>(cfg.n), kd = static_cast<double>(k);
    const double lp = lc + std::lgamma(kd + 1.0) + std::lgamma(nd - kd + 1.0) -
                      std::lgamma(nd + 1.0);
    return prob_value::from_double(std::exp(lp));
}

/// P(R > k): survival of the with-replacement repetition time.
///     P(R > k) = k! / n^k * [t^k] prod_i q_r(x_i t).
/// The product has degree b(r-1) (b = nonempty cells), so the survival hits
/// exactly zero for k > b(r-1) and is strictly positive at k = b(r-1).
[[nodiscard]] inline prob_value survival_R(const configuration& cfg, int r, long k) {
    if (r < 2) throw domain_error("survival_R: r must be at least 2");
    if (k < 0) throw out_of_range_error("survival_R: k must be nonnegative");
    if (cfg.n <= 0) throw invalid_query_error("survival_R: empty configuration");
    long b = 0;
    for (long x : cfg.sizes)
        if (x > 0) ++b;
    if (k > b * static_cast<long>(r - 1)) return prob_value::from_rat(Rat(0));
    if (cfg.n <= exact_path_limit()) {
        const auto prod = detail::r_scaled_product(cfg, r, static_cast<std::size_t>(k));
        const Int num = prod.coeff(static_cast<std::size_t>(k)) *
                        factorial_int(static_cast<unsigned long>(k));
        Int den = pow_int(factorial_int(static_cast<unsigned long>(r - 1)),
                          static_cast<unsigned long>(b)) *
                  pow_int(Int(cfg.n), static_cast<unsigned long>(k));
        Rat p(num, den);
        p.canonicalize();
        return prob_value::from_rat(std::move(p));
    }
    const double lc = detail::log_r_coefficient(cfg, r, k);
    if (lc == -std::numeric_limits<double>::infinity()) return prob_value::from_double(0.0);
    const double lp = lc + std::lgamma(static_cast<double>(k) + 1.0) -
                      static_cast<double>(k) * std::log(static_cast<double>(cfg.n));
    return prob_value::from_double(std::exp(lp));
}

/// P(K2 > k): survival of the with-replacement collision time (repeated
/// draws of the same element do not advance any cell). Mixture over the
/// image cardinality of the k draws:
///     P(K2 > k) = sum_d P(K1 > d) P(|image| = d)
/// with P(|image| = d) = C(n, d) surj(k, d) / n^k. Equivalently
///     P(K2 > k) = n^{-k} sum_d c_d surj(k, d),   c_d = [t^d] prod_i p_r(x_i, t).
[[nodiscard]] inline prob_value survival_K2(const configuration& cfg, int r, long k) {
    if (r < 2) throw domain_error("survival_K2: r must be at least 2");
    if (k < 0) throw out_of_range_error("survival_K2: k must be nonnegative");
    require_collision_possible(cfg, r);
    const bool exact_ok = cfg.n <= exact_path_limit() &&
                          static_cast<std::size_t>(k) <= surjection_table_cap();
    if (exact_ok) {
        const std::vector<Int> c = detail::k1_all_coefficients(cfg, r);
        const auto dmax = static_cast<std::size_t>(
            std::min<long>({k, cfg.n, static_cast<long>(c.size()) - 1}));
        Int num(0);
        for (std::size_t d = 0; d <= dmax; ++d) {
            if (c[d] == 0) continue;
            num += c[d] * surjection_count(static_cast<std::size_t>(k), d);
        }
        Rat p(num, pow_int(Int(cfg.n), static_cast<unsigned long>(k)));
        p.canonicalize();
        return prob_value::from_rat(std::move(p));
    }
    // Floating path: survival of K1 at every image size, weighted by the
    // image-size chain after k draws.
    const std::vector<double> img = detail::image_pmf_double(k, cfg.n);
    double acc = 0.0;
    for (std::size_t d = 0; d < img.size(); ++d) {
        if (img[d] <= 0.0) continue;
        const double s = survival_K1(cfg, r, static_cast<long>(d)).value;
        if (s <= 0.0) break; // survival_K1 is nonincreasing in d
        acc += img[d] * s;
    }
    return prob_value::from_double(acc);
}

/// P(K1 > k) under the i.i.d. cell-probability model:
///     P(K1 > k) = k! [t^k] prod_i q_r(p_i t),  valid for k <= n only.
[[nodiscard]] inline prob_value survival_K1_multinomial(const multinomial_model& model, int r,
                                                        long k) {
    if (r < 2) throw domain_error("survival_K1_multinomial: r must be at least 2");
    if (k < 0) throw out_of_range_error("survival_K1_multinomial: k must be nonnegative");
    if (k > model.n)
        throw out_of_range_error(
            "survival_K1_multinomial: k exceeds the without-replacement horizon n = " +
            std::to_string(model.n));
    // Common denominator L: p_i = a_i / L, so
    //   [t^k] prod q_r(p_i t) = L^{-k} [u^k] prod q_r(a_i u).
    Int L(1);
    for (const Rat& p : model.probs) {
        Int den = p.get_den();
        L = lcm(L, den);
    }
    polynomial<Int> prod(std::vector<Int>{Int(1)});
    const auto trunc = static_cast<std::size_t>(k);
    long cells = 0;
    for (const Rat& p : model.probs) {
        if (p == 0) continue;
        ++cells;
        Int a = p.get_num() * (L / p.get_den());
        prod = mul(prod, q_r_scaled_poly(a, r), trunc);
    }
    prod.normalize();
    const Int num = prod.coeff(trunc) * factorial_int(static_cast<unsigned long>(k));
    Int den = pow_int(factorial_int(static_cast<unsigned long>(r - 1)),
                      static_cast<unsigned long>(cells)) *
              pow_int(L, static_cast<unsigned long>(k));
    Rat out(num, den);
    out.canonicalize();
    return prob_value::from_rat(std::move(out));
}

/// Expected collision counts after k draws.
struct expected_counts {
    Rat ES1;      ///< E S_r^{(1)}(k): distinct-element r-subsets, no replacement
    Rat EC;       ///< E C_r(k): r-subsets of draws landing in one cell
    Rat ES2;      ///< E S_r^{(2)}(k): distinct-element r-subsets, with replacement
    Rat ES2multi; ///< multinomial analog of ES1 at k draws
};

/// Closed moment formulas:
///   ES1 = (k)_r / (n)_r * s_r                      (saturates at s_r for k >= n)
///   EC  = (k)_r / (r! n^r) * sum_i x_i^r
///   ES2 = s_r * sum_{i=0}^r C(r,i) (-1)^i (1 - i/n)^k   (r-th finite difference)
///   ES2multi = (k)_r / n^r * s_r
[[nodiscard]] inline expected_counts expected_collision_counts(const configuration& cfg, int r,
                                                               long k) {
    if (r < 2) throw domain_error("expected_collision_counts: r must be at least 2");
    if (k < 0) throw out_of_range_error("expected_collision_counts: k must be nonnegative");
    const config_statistics st = config_statistics_of(cfg, r);
    expected_counts out;
    const Int kr = falling_factorial_int(static_cast<unsigned long>(k),
                                         static_cast<unsigned long>(r));
    const Int nr = falling_factorial_int(static_cast<unsigned long>(cfg.n),
                                         static_cast<unsigned long>(r));
    if (k >= cfg.n) {
        out.ES1 = st.s_r; // every element drawn: the count is frozen at s_r
    } else {
        out.ES1 = nr > 0 ? Rat(kr, nr) * st.s_r : Rat(0);
        out.ES1.canonicalize();
    }
    const Int n_pow_r = pow_int(Int(cfg.n), static_cast<unsigned long>(r));
    out.EC = Rat(kr, factorial_int(static_cast<unsigned long>(r)) * n_pow_r) * st.v_r;
    out.EC.canonicalize();
    Rat es2(0);
    for (int i = 0; i <= r; ++i) {
        // (1 - i/n)^k = (n-i)^k / n^k
        Rat bp(pow_int(Int(cfg.n - i), static_cast<unsigned long>(k)),
               pow_int(Int(cfg.n), static_cast<unsigned long>(k)));
        bp.canonicalize();
        const Rat term = Rat(binomial_int(static_cast<unsigned long>(r), i)) * bp;
        if (i % 2 == 0)
            es2 += term;
        else
            es2 -= term;
    }
    out.ES2 = es2 * st.s_r;
    out.ES2.canonicalize();
    out.ES2multi = Rat(kr, n_pow_r) * st.s_r;
    out.ES2multi.canonicalize();
    return out;
}

/// Probability that the first r-fold repetition is a true collision (all r
/// draws hit distinct elements), split per cell and overall:
///   conditional[i] = (x_i)_r / x_i^r
///   p_overall = sum_i r C(x_i, r) int_0^inf t^{r-1} e^{-n t}
///                     prod_{j != i} q_r(x_j t) dt
struct true_collision_probability {
    double p_overall = 0;
    std::vector<Rat> conditional;
};

[[nodiscard]] inline true_collision_probability
prob_true_collision_first(const configuration& cfg, int r, double tol = 1e-10) {
    if (r < 2) throw domain_error("prob_true_collision_first: r must be at least 2");
    if (cfg.n <= 0) throw invalid_query_error("prob_true_collision_first: empty configuration");
    true_collision_probability out;
    out.conditional.reserve(cfg.sizes.size());
    for (long x : cfg.sizes) {
        if (x <= 0) {
            out.conditional.emplace_back(0);
            continue;
        }
        Rat c(falling_factorial_int(static_cast<unsigned long>(x),
                                    static_cast<unsigned long>(r)),
              pow_int(Int(x), static_cast<unsigned long>(r)));
        c.canonicalize();
        out.conditional.push_back(std::move(c));
    }
    // One integral for the whole sum: factor prod_j q_r(x_j t) out and sum
    // the per-cell hazard ratios r C(x_i, r) t^{r-1} / q_r(x_i t) inside.
    const auto groups = cfg.grouped_sizes();
    const double n_d = static_cast<double>(cfg.n);
    const double log_r_d = std::log(static_cast<double>(r));
    auto log_q = [r](double a) {
        // log q_r(a) by log-sum-exp; a >= 0.
        if (a <= 0) return 0.0;
        const double la = std::log(a);
        double best = 0.0;
        for (int i = 1; i < r; ++i) best = std::max(best, i * la - std::lgamma(i + 1.0));
        double acc = 0.0;
        for (int i = 0; i < r; ++i) acc += std::exp(i * la - std::lgamma(i + 1.0) - best);
        return best + std::log(acc);
    };
    auto integrand = [&](double t) {
        if (t <= 0) return 0.0;
        const double lt = std::log(t);
        double log_prod = -n_d * t;
        for (const auto& [size, count] : groups)
            log_prod += static_cast<double>(count) * log_q(static_cast<double>(size) * t);
        double best = -std::numeric_limits<double>::infinity();
        std::vector<double> terms;
        for (const auto& [size, count] : groups) {
            if (size < r) continue;
            const double lc = log_int(binomial_int(static_cast<unsigned long>(size), r)) +
                              std::log(static_cast<double>(count));
            const double v = log_r_d + lc + (r - 1) * lt - log_q(static_cast<double>(size) * t);
            terms.push_back(v);
            best = std::max(best, v);
        }
        if (terms.empty()) return 0.0;
        double acc = 0.0;
        for (double v : terms) acc += std::exp(v - best);
        const double log_val = log_prod + best + std::log(acc);
        return std::exp(log_val);
    };
    out.p_overall = integrate_half_line(integrand, tol);
    return out;
}

/// Tabulated survival values for one mode.
struct survival_table {
    process_mode mode = process_mode::K1;
    int r = 2;
    bool exact = true;
    std::vector<prob_value> entries; ///< entries[k] = P(T > k), k = 0..k_max
};

[[nodiscard]] inline survival_table build_survival_table(const configuration& cfg, int r,
                                                         process_mode mode, long k_max) {
    survival_table t;
    t.mode = mode;
    t.r = r;
    t.entries.reserve(static_cast<std::size_t>(k_max) + 1);
    for (long k = 0; k <= k_max; ++k) {
        prob_value p;
        switch (mode) {
            case process_mode::K1: p = survival_K1(cfg, r, k); break;
            case process_mode::K2: p = survival_K2(cfg, r, k); break;
            case process_mode::R: p = survival_R(cfg, r, k); break;
        }
        t.exact = t.exact && p.exact;
        t.entries.push_back(std::move(p));
    }
    return t;
}

} // namespace collision_lab
