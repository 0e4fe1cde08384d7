#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "collision_lab/config.hpp"
#include "collision_lab/errors.hpp"
#include "collision_lab/exact_dist.hpp"
#include "collision_lab/kernels.hpp"
#include "collision_lab/quadrature.hpp"
#include "collision_lab/rational.hpp"

namespace collision_lab {

/// An expectation that is an exact rational when the big-integer path ran.
struct expectation_result {
    bool exact = true;
    Rat exact_value;   ///< valid only when exact
    double value = 0;  ///< always valid
};

namespace detail {

/// E T = sum_{k >= 0} P(T > k) for K1: survival vanishes beyond the degree D
/// of prod_i p_r(x_i, t), so the sum is finite:
///     E K1 = sum_{k=0}^{D} c_k k! (n-k)! / n!.
[[nodiscard]] inline Rat expectation_K1_exact(const configuration& cfg, int r) {
    const std::vector<Int> c = k1_all_coefficients(cfg, r);
    const auto n = static_cast<unsigned long>(cfg.n);
    Int num(0);
    Int kfact(1);
    Int nk_fact = factorial_int(n); // rolls down to (n-k)!
    for (std::size_t k = 0; k < c.size(); ++k) {
        if (k > 0) {
            kfact *= static_cast<unsigned long>(k);
            mpz_divexact_ui(nk_fact.get_mpz_t(), nk_fact.get_mpz_t(),
                            n - static_cast<unsigned long>(k) + 1);
        }
        if (c[k] != 0) num += c[k] * kfact * nk_fact;
    }
    Rat e(num, factorial_int(n));
    e.canonicalize();
    return e;
}

/// E R = sum_{k=0}^{b(r-1)} P(R > k) with P(R > k) = k!/n^k [t^k] prod q_r(x_i t).
/// Summed over the common denominator n^D by a Horner fold, which keeps the
/// whole computation in big integers:
///     E R * n^D = sum_k a_k k! n^{D-k}   (a_k the scaled coefficients).
[[nodiscard]] inline Rat expectation_R_exact(const configuration& cfg, int r) {
    long b = 0;
    for (long x : cfg.sizes)
        if (x > 0) ++b;
    const auto D = static_cast<std::size_t>(b * (r - 1));
    const polynomial<Int> prod = r_scaled_product(cfg, r, D);
    Int num(0);
    Int kfact(1);
    const Int n_int(cfg.n);
    for (std::size_t k = 0; k <= D; ++k) {
        if (k > 0) kfact *= static_cast<unsigned long>(k);
        num = num * n_int + prod.coeff(k) * kfact; // Horner in n
    }
    // num currently equals sum_k a_k k! n^{D-k}; divide by the tracked scale.
    Int den = pow_int(factorial_int(static_cast<unsigned long>(r - 1)),
                      static_cast<unsigned long>(b)) *
              pow_int(n_int, static_cast<unsigned long>(D));
    Rat e(num, den);
    e.canonicalize();
    return e;
}

/// E K2 via the image-size chain: the k-draw image pmf mixes the K1 survival,
///     P(K2 > k) = sum_d P(K1 > d) P(|image_k| = d),
/// and summing over k first turns the inner weight into the chain's expected
/// sojourn time at image size d, which is n/(n-d) for d < n. Hence the exact
/// finite form
///     E K2 = sum_{d=0}^{n-1} P(K1 > d) * n / (n - d).
[[nodiscard]] inline Rat expectation_K2_exact(const configuration& cfg, int r) {
    const std::vector<Int> c = k1_all_coefficients(cfg, r);
    const auto n = static_cast<unsigned long>(cfg.n);
    Rat acc(0);
    Int kfact(1);
    const Int nfact = factorial_int(n);
    Int nk_fact = nfact; // rolls down to (n-d)!
    for (std::size_t d = 0; d < c.size() && d < n; ++d) {
        if (d > 0) {
            kfact *= static_cast<unsigned long>(d);
            mpz_divexact_ui(nk_fact.get_mpz_t(), nk_fact.get_mpz_t(),
                            n - static_cast<unsigned long>(d) + 1);
        }
        if (c[d] == 0) continue;
        // P(K1 > d) = c_d d! (n-d)!/n!, weighted by the sojourn n/(n-d).
        Rat term(c[d] * kfact * nk_fact * Int(n),
                 nfact * Int(n - static_cast<unsigned long>(d)));
        term.canonicalize();
        acc += term;
    }
    return acc;
}

/// Log-domain evaluation of prod over grouped sizes of q_r(x t), as used by
/// the repetition-time integrands.
template <typename Groups>
[[nodiscard]] double log_q_product(const Groups& groups, int r, double t) {
    double acc = 0;
    for (const auto& [size, count] : groups) {
        const double a = static_cast<double>(size) * t;
        if (a <= 0) continue;
        const double la = std::log(a);
        double best = 0.0;
        for (int i = 1; i < r; ++i) best = std::max(best, i * la - std::lgamma(i + 1.0));
        double s = 0.0;
        for (int i = 0; i < r; ++i) s += std::exp(i * la - std::lgamma(i + 1.0) - best);
        acc += static_cast<double>(count) * (best + std::log(s));
    }
    return acc;
}

} // namespace detail

/// Exact expectation of the chosen waiting time; falls back to quadrature
/// (exact = false) when n exceeds the exact-path ceiling. The tol parameter
/// only affects that fallback.
[[nodiscard]] expectation_result expectation_quadrature(const configuration& cfg, int r,
                                                        process_mode mode, double tol);

[[nodiscard]] inline expectation_result expectation_exact(const configuration& cfg, int r,
                                                          process_mode mode,
                                                          double tol = 1e-12) {
    if (r < 2) throw domain_error("expectation_exact: r must be at least 2");
    if (mode != process_mode::R) require_collision_possible(cfg, r);
    if (cfg.n > exact_path_limit()) return expectation_quadrature(cfg, r, mode, tol);
    expectation_result out;
    switch (mode) {
        case process_mode::K1: out.exact_value = detail::expectation_K1_exact(cfg, r); break;
        case process_mode::K2: out.exact_value = detail::expectation_K2_exact(cfg, r); break;
        case process_mode::R: out.exact_value = detail::expectation_R_exact(cfg, r); break;
    }
    out.exact = true;
    out.value = to_double(out.exact_value);
    return out;
}

/// Expectation by numerical integration of the survival integrals:
///     E K1 = (n+1) int_0^1 prod_{M_r} G_r(x_i, t) dt
///     E K2 = n int_0^inf prod_{M_r} G_r(x_i, 1-e^{-t}) dt
///     E R  = n int_0^inf e^{-n t} prod_i q_r(x_i t) dt
[[nodiscard]] inline expectation_result expectation_quadrature(const configuration& cfg, int r,
                                                               process_mode mode,
                                                               double tol = 1e-12) {
    if (r < 2) throw domain_error("expectation_quadrature: r must be at least 2");
    if (mode != process_mode::R) require_collision_possible(cfg, r);
    const auto groups = cfg.grouped_sizes();
    expectation_result out;
    out.exact = false;
    switch (mode) {
        case process_mode::K1: {
            auto f = [&](double t) {
                double lg = 0;
                for (const auto& [size, count] : groups)
                    if (size >= r) lg += static_cast<double>(count) * log_G_r_eval(size, r, t);
                return std::exp(lg);
            };
            out.value = static_cast<double>(cfg.n + 1) * integrate_interval(f, 0.0, 1.0, tol);
            break;
        }
        case process_mode::K2: {
            auto f = [&](double t) {
                const double u = -std::expm1(-t); // 1 - e^{-t}, accurate near 0
                double lg = 0;
                for (const auto& [size, count] : groups)
                    if (size >= r) lg += static_cast<double>(count) * log_G_r_eval(size, r, u);
                return std::exp(lg);
            };
            out.value = static_cast<double>(cfg.n) * integrate_half_line(f, tol);
            break;
        }
        case process_mode::R: {
            auto f = [&](double t) {
                const double lg = -static_cast<double>(cfg.n) * t +
                                  detail::log_q_product(groups, r, t);
                return std::exp(lg);
            };
            out.value = static_cast<double>(cfg.n) * integrate_half_line(f, tol);
            break;
        }
    }
    return out;
}

/// Closed-form expectations for the two special shapes.
struct closed_form_result {
    std::string shape; ///< "all_cells_at_most_r" or "single_cell_at_least_r"
    Rat K1;
    Rat K2;
};

/// Shape A (all x_i <= r, a cells of size exactly r >= 1):
///     E K1 = (n+1) a! r^a / prod_{i=1}^{a} (1 + i r)
///     E K2 = (n/r) sum_{i=1}^{r} B(i/r, a),
///            B(i/r, a) = (a-1)! r^a / prod_{j=0}^{a-1} (i + j r)
/// Shape B (exactly one cell of size x >= r):
///     E K1 = r (n+1) / (x+1),   E K2 = n sum_{i=0}^{r-1} 1/(x-i)
[[nodiscard]] inline std::optional<closed_form_result> closed_forms(const configuration& cfg,
                                                                    int r) {
    if (r < 2) throw domain_error("closed_forms: r must be at least 2");
    long a = 0, above = 0, x_above = 0;
    for (long x : cfg.sizes) {
        if (x == r) ++a;
        if (x >= r) {
            ++above;
            x_above = x;
        }
    }
    if (above == 0) return std::nullopt;
    closed_form_result out;
    const Int n1(cfg.n + 1);
    if (a == above && cfg.max_size() <= r) {
        out.shape = "all_cells_at_most_r";
        Int denom(1);
        for (long i = 1; i <= a; ++i) denom *= Int(1 + i * r);
        Rat k1(n1 * factorial_int(static_cast<unsigned long>(a)) *
                   pow_int(Int(r), static_cast<unsigned long>(a)),
               denom);
        k1.canonicalize();
        out.K1 = k1;
        Rat sum(0);
        const Int beta_num = factorial_int(static_cast<unsigned long>(a - 1)) *
                             pow_int(Int(r), static_cast<unsigned long>(a));
        for (int i = 1; i <= r; ++i) {
            Int beta_den(1);
            for (long j = 0; j < a; ++j) beta_den *= Int(i + j * r);
            Rat beta(beta_num, beta_den);
            beta.canonicalize();
            sum += beta;
        }
        out.K2 = Rat(Int(cfg.n), Int(r)) * sum;
        out.K2.canonicalize();
        return out;
    }
    if (above == 1) {
        out.shape = "single_cell_at_least_r";
        Rat k1(Int(r) * n1, Int(x_above + 1));
        k1.canonicalize();
        out.K1 = k1;
        Rat sum(0);
        for (int i = 0; i < r; ++i) {
            Rat term(Int(1), Int(x_above - i));
            term.canonicalize();
            sum += term;
        }
        out.K2 = Rat(Int(cfg.n)) * sum;
        out.K2.canonicalize();
        return out;
    }
    return std::nullopt;
}

/// Lower bounds on the expectations.
struct lower_bounds {
    double K1 = 0;        ///< (n+1)/r * B(1/r, 1+s_r)  (Beta form, the tighter one)
    double K1_gamma = 0;  ///< Gamma(1+1/r) (n+1)/(s_r+1)^{1/r}
    double K2 = 0;        ///< Gamma(1+1/r) n / s_r^{1/r}
    double R = 0;         ///< Gamma(1+1/r) n / s_tilde_r^{1/r}
    bool K1_exact_valid = false;
    Rat K1_exact;         ///< exact rational Beta form when s_r is small enough
};

[[nodiscard]] inline lower_bounds bounds_lower(const config_statistics& st) {
    if (st.s_r < 1)
        throw invalid_query_error("bounds_lower: s_r must be at least 1 (no collision cell)");
    lower_bounds out;
    const int r = st.r;
    const double n = static_cast<double>(st.n);
    const double s = to_double(st.s_r);
    const double st_r = to_double(st.s_tilde_r);
    const double inv_r = 1.0 / r;
    // log B(1/r, 1+s) = lgamma(1/r) + lgamma(1+s) - lgamma(1+s+1/r)
    const double logB = std::lgamma(inv_r) + std::lgamma(1.0 + s) - std::lgamma(1.0 + s + inv_r);
    out.K1 = (n + 1.0) / r * std::exp(logB);
    const double g = std::tgamma(1.0 + inv_r);
    out.K1_gamma = g * (n + 1.0) / std::pow(s + 1.0, inv_r);
    out.K2 = g * n / std::pow(s, inv_r);
    out.R = g * n / std::pow(st_r, inv_r);
    // Exact Beta form: (n+1)/r * B(1/r, 1+s) = (n+1) s! r^s / prod_{j=1}^{s}(1+jr).
    if (st.s_r.get_den() == 1 && st.s_r <= 100000) {
        const auto s_i = static_cast<long>(st.s_r.get_num().get_si());
        Int denom(1);
        for (long j = 1; j <= s_i; ++j) denom *= Int(1 + j * r);
        Rat e(Int(st.n + 1) * factorial_int(static_cast<unsigned long>(s_i)) *
                  pow_int(Int(r), static_cast<unsigned long>(s_i)),
              denom);
        e.canonicalize();
        out.K1_exact = e;
        out.K1_exact_valid = true;
    }
    return out;
}

/// Upper bounds from majorization: replacing the collision-capable cells by
/// their balanced (floor/ceil) rearrangement can only increase the survival
/// product, so integrating the balanced surrogate bounds the expectation.
/// The repetition bound treats every draw as hitting one of w = min(n, m)
/// unit-rate cells:  E R <= w int_0^inf e^{-w s} q_r(s)^w ds.
struct upper_bounds_majorization {
    double K1 = 0;
    double K2 = 0;
    double R = 0;
};

[[nodiscard]] inline upper_bounds_majorization
bounds_upper_majorization(const config_statistics& st, double tol = 1e-10) {
    if (st.M_r.empty())
        throw invalid_query_error("bounds_upper_majorization: no cell of size >= r");
    const int r = st.r;
    // Balanced surrogate of the M_r cells: their total mass split as evenly
    // as integers allow. Every surrogate cell stays >= r because the mean is.
    const auto count = static_cast<long>(st.M_r.size());
    const Rat total_r = st.u_r * Rat(Int(count));
    const Int total_int = total_r.get_num() / total_r.get_den(); // exact: sum of sizes
    const long total = total_int.get_si();
    const long base = total / count;
    const long rem = total % count;
    // rem cells of size base+1, count-rem cells of size base
    auto log_surrogate = [&](double t) {
        double lg = 0;
        if (count - rem > 0) lg += static_cast<double>(count - rem) * log_G_r_eval(base, r, t);
        if (rem > 0) lg += static_cast<double>(rem) * log_G_r_eval(base + 1, r, t);
        return lg;
    };
    upper_bounds_majorization out;
    out.K1 = static_cast<double>(st.n + 1) *
             integrate_interval([&](double t) { return std::exp(log_surrogate(t)); }, 0.0, 1.0,
                                tol);
    out.K2 = static_cast<double>(st.n) *
             integrate_half_line(
                 [&](double t) { return std::exp(log_surrogate(-std::expm1(-t))); }, tol);
    const double w = static_cast<double>(st.w);
    out.R = w * integrate_half_line(
                    [&](double s) {
                        double lq;
                        {
                            const double la = std::log(s);
                            double best = 0.0;
                            for (int i = 1; i < r; ++i)
                                best = std::max(best, i * la - std::lgamma(i + 1.0));
                            double acc = 0.0;
                            for (int i = 0; i < r; ++i)
                                acc += std::exp(i * la - std::lgamma(i + 1.0) - best);
                            lq = best + std::log(acc);
                        }
                        return std::exp(w * (lq - s));
                    },
                    tol);
    return out;
}

/// Upper bounds that match the lower bounds to leading order:
///     E K1 <= E K2 < n/s_r^{1/r} sum_{i=0}^{r-1} C(x_max, i) (1/r)
///                    Gamma((i+1)/r) s_r^{-i/r}
/// and the same shape with s_tilde_r for E R.
struct upper_bounds_matched {
    double K12_common = 0;
    double R = 0;
};

[[nodiscard]] inline upper_bounds_matched bounds_upper_matched(const config_statistics& st,
                                                               long x_max) {
    if (st.s_r < 1)
        throw invalid_query_error("bounds_upper_matched: s_r must be at least 1");
    const int r = st.r;
    const double n = static_cast<double>(st.n);
    auto matched = [&](double s) {
        double sum = 0;
        for (int i = 0; i < r; ++i) {
            const double c = to_double(Rat(binomial_int(static_cast<unsigned long>(x_max), i)));
            sum += c / r * std::tgamma((i + 1.0) / r) * std::pow(s, -static_cast<double>(i) / r);
        }
        return n / std::pow(s, 1.0 / r) * sum;
    };
    upper_bounds_matched out;
    out.K12_common = matched(to_double(st.s_r));
    out.R = matched(to_double(st.s_tilde_r));
    return out;
}

/// Bound on the cost of replacement:
///     E K2 - E K1 < C_r n / s_r^{2/r},
///     C_r = (1/r)^{2/r} int_0^inf t (e^{-t} q_r(t))^{1/r^{r-1}} dt.
struct gap_bound_result {
    double C_r = 0;
    double bound = 0;
};

[[nodiscard]] inline gap_bound_result gap_bound(const config_statistics& st,
                                                double tol = 1e-10) {
    static std::mutex mtx;
    static std::map<int, double> cache;
    const int r = st.r;
    double c_r = 0;
    {
        std::lock_guard<std::mutex> lock(mtx);
        auto it = cache.find(r);
        if (it != cache.end()) c_r = it->second;
    }
    if (c_r == 0) {
        const double expo = std::pow(static_cast<double>(r), -(static_cast<double>(r) - 1.0));
        const double integral = integrate_half_line(
            [&](double t) {
                const double lf = std::log(q_r_eval(t, r)) - t;
                return t * std::exp(expo * lf);
            },
            tol);
        c_r = std::pow(1.0 / r, 2.0 / r) * integral;
        std::lock_guard<std::mutex> lock(mtx);
        cache[r] = c_r;
    }
    gap_bound_result out;
    out.C_r = c_r;
    out.bound = c_r * static_cast<double>(st.n) / std::pow(to_double(st.s_r), 2.0 / r);
    return out;
}

/// For r = 2: bounds on the probability that the first 2-hit is a repeat of
/// the very same element rather than a true collision:
///     n / sum x_i^2  <=  P(R_2 < K_2)  <=  b / n,
/// with equality on both sides iff all positive cells are equal.
struct split_bounds {
    Rat lower;
    Rat upper;
};

[[nodiscard]] inline split_bounds true_collision_split_bounds(const configuration& cfg) {
    if (cfg.n <= 0) throw invalid_query_error("true_collision_split_bounds: empty configuration");
    Int v2(0);
    long b = 0;
    for (long x : cfg.sizes) {
        v2 += Int(x) * Int(x);
        if (x > 0) ++b;
    }
    split_bounds out;
    out.lower = Rat(Int(cfg.n), v2);
    out.lower.canonicalize();
    out.upper = Rat(Int(b), Int(cfg.n));
    out.upper.canonicalize();
    return out;
}

/// Mixture bounds on P(K_r = R_r): the conditional probability given that
/// cell i hits first is (x_i)_r / x_i^r, which is increasing in x_i, so the
/// overall value lies between the smallest and largest conditional over the
/// cells that can hit. Cells with 0 < x_i < r make the lower bound plain 0.
[[nodiscard]] inline split_bounds true_collision_sandwich(const configuration& cfg, int r) {
    require_collision_possible(cfg, r);
    long min_pos = 0, max_pos = 0;
    for (long x : cfg.sizes) {
        if (x <= 0) continue;
        min_pos = min_pos == 0 ? x : std::min(min_pos, x);
        max_pos = std::max(max_pos, x);
    }
    auto cond = [&](long x) {
        Rat c(falling_factorial_int(static_cast<unsigned long>(x),
                                    static_cast<unsigned long>(r)),
              pow_int(Int(x), static_cast<unsigned long>(r)));
        c.canonicalize();
        return c;
    };
    split_bounds out;
    out.lower = min_pos >= r ? cond(min_pos) : Rat(0);
    out.upper = cond(max_pos);
    return out;
}

} // namespace collision_lab
