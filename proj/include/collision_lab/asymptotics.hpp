#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "collision_lab/config.hpp"
#include "collision_lab/errors.hpp"
#include "collision_lab/exact_dist.hpp"
#include "collision_lab/kernels.hpp"
#include "collision_lab/rational.hpp"
#include "collision_lab/series.hpp"

namespace collision_lab {

/// Exact rational coefficients a_i(r) of the expansion
///     E R_r ~ (n/r) sum_i a_i(r) Gamma((i+1)/r) (r!/n)^{(i+1)/r}
/// for the classical configuration (every cell a singleton).
///
/// Construction: with phi(y) = y - log q_r(y) (which starts at y^r/r!) and
/// psi(y) = r! phi(y)/y^r, the substitution t = y psi(y)^{1/r} linearizes the
/// Laplace integral n int e^{-n phi(y)} dy. Reverting t(y) by the fixed point
/// y = t psi(y)^{-1/r} and forming
///     g_r(t) = (t/y(t))^{r-1} q_r(y(t))
/// gives g_r(t) = sum_i a_i(r) t^i.
[[nodiscard]] inline rat_series asymptotic_series_coefficients(int r, std::size_t num_terms) {
    if (r < 2) throw domain_error("asymptotic_series_coefficients: r must be at least 2");
    if (num_terms == 0) return {};
    if (num_terms > 64)
        throw out_of_range_error("asymptotic_series_coefficients: at most 64 terms supported");

    static std::mutex mtx;
    static std::map<int, rat_series> cache;
    {
        std::lock_guard<std::mutex> lock(mtx);
        auto it = cache.find(r);
        if (it != cache.end() && it->second.size() >= num_terms)
            return rat_series(it->second.begin(), it->second.begin() + num_terms);
    }

    const std::size_t L = num_terms;       // length of g_r in t
    const std::size_t Ly = L + static_cast<std::size_t>(r); // working length in y

    // q_r(y) = sum_{i<r} y^i/i! as an exact series.
    rat_series q(Ly, Rat(0));
    for (int i = 0; i < r && static_cast<std::size_t>(i) < Ly; ++i) {
        Rat c(Int(1), factorial_int(static_cast<unsigned long>(i)));
        c.canonicalize();
        q[static_cast<std::size_t>(i)] = c;
    }

    rat_series phi = series::log_trunc(q, Ly);
    for (Rat& c : phi) c = -c;
    if (Ly > 1) phi[1] += 1; // phi = y - log q_r(y)

    rat_series psi = series::shift_down(phi, static_cast<std::size_t>(r));
    psi.resize(L, Rat(0));
    const Rat rfact(factorial_int(static_cast<unsigned long>(r)));
    for (Rat& c : psi) c *= rfact; // psi(0) = 1

    Rat minus_inv_r(-1, r);
    minus_inv_r.canonicalize();
    const rat_series chi = series::pow_trunc(psi, minus_inv_r, L); // psi^{-1/r}

    // Fixed-point reversion: y(t) = t chi(y(t)), one extra order per pass.
    const std::size_t Lt = L + 1;
    rat_series y(Lt, Rat(0));
    if (Lt > 1) y[1] = 1;
    for (std::size_t pass = 0; pass + 1 < L; ++pass) {
        rat_series c = series::compose(chi, y, Lt);
        y = series::shift_up(c, 1, Lt);
    }

    const rat_series u = series::shift_down(y, 1); // y(t)/t, constant term 1
    Rat minus_rm1(-(r - 1));
    const rat_series front = series::pow_trunc(u, minus_rm1, L); // (t/y)^{r-1}
    const rat_series q_of_y = series::compose(q, y, L);
    rat_series g = series::mul_trunc(front, q_of_y, L);

    {
        std::lock_guard<std::mutex> lock(mtx);
        auto it = cache.find(r);
        if (it == cache.end() || it->second.size() < g.size()) cache[r] = g;
    }
    return g;
}

/// Asymptotic approximation of E R_r for the classical configuration with n
/// equally likely values, using the first `terms` series terms.
struct classical_series_result {
    double value = 0;
    std::vector<double> contributions; ///< per-term, value = sum
    rat_series coefficients;
};

[[nodiscard]] inline classical_series_result classical_ER_series(long n, int r,
                                                                 std::size_t terms = 0) {
    if (n < 1) throw domain_error("classical_ER_series: n must be positive");
    if (r < 2) throw domain_error("classical_ER_series: r must be at least 2");
    if (terms == 0) terms = static_cast<std::size_t>(2 * r);
    classical_series_result out;
    out.coefficients = asymptotic_series_coefficients(r, terms);
    const double log_ratio = std::lgamma(r + 1.0) - std::log(static_cast<double>(n));
    for (std::size_t i = 0; i < terms; ++i) {
        const double e = (static_cast<double>(i) + 1.0) / r;
        const double term = static_cast<double>(n) / r * to_double(out.coefficients[i]) *
                            std::tgamma(e) * std::exp(e * log_ratio);
        out.contributions.push_back(term);
        out.value += term;
    }
    return out;
}

/// The five limiting survival functions.
enum class limit_kind { type1_K1, type1_K2, type2_collision, type2_repetition, type3_discrete };

[[nodiscard]] inline std::string to_string(limit_kind k) {
    switch (k) {
        case limit_kind::type1_K1: return "type1_K1";
        case limit_kind::type1_K2: return "type1_K2";
        case limit_kind::type2_collision: return "type2_collision";
        case limit_kind::type2_repetition: return "type2_repetition";
        case limit_kind::type3_discrete: return "type3_discrete";
    }
    throw domain_error("unknown limit kind");
}

[[nodiscard]] inline limit_kind limit_kind_from_string(const std::string& s) {
    if (s == "type1_K1") return limit_kind::type1_K1;
    if (s == "type1_K2") return limit_kind::type1_K2;
    if (s == "type2_collision") return limit_kind::type2_collision;
    if (s == "type2_repetition") return limit_kind::type2_repetition;
    if (s == "type3_discrete") return limit_kind::type3_discrete;
    throw invalid_query_error("unknown limit kind: " + s);
}

/// Type 1 (finitely many collision-capable cells survive): the limit of
/// P(K1/(n+1) > t) is prod_i G_r(x_i, t) on [0,1), and 0 beyond.
[[nodiscard]] inline double limit_type1_K1(const configuration& cfg, int r, double t) {
    if (r < 2) throw domain_error("limit_type1_K1: r must be at least 2");
    if (t < 0) return 1.0;
    if (t >= 1) return 0.0;
    double lg = 0;
    for (const auto& [size, count] : cfg.grouped_sizes())
        if (size >= r) lg += static_cast<double>(count) * log_G_r_eval(size, r, t);
    return std::exp(lg);
}

/// Type 1 with replacement: the limit of P(K2/n > t) is
/// prod_i G_r(x_i, 1 - e^{-t}).
[[nodiscard]] inline double limit_type1_K2(const configuration& cfg, int r, double t) {
    if (r < 2) throw domain_error("limit_type1_K2: r must be at least 2");
    if (t < 0) return 1.0;
    double lg = 0;
    const double u = -std::expm1(-t);
    for (const auto& [size, count] : cfg.grouped_sizes())
        if (size >= r) lg += static_cast<double>(count) * log_G_r_eval(size, r, u);
    return std::exp(lg);
}

/// Type 2 (Weibull-like): atoms a_1, a_2, ... with sum a_i^r <= 1 describe
/// the surviving relative cell weights; the rest is dust. The limit survival
/// at scaled time t is
///     exp(-(1 - sum a_i^r) t^r / r!) prod_i e^{-a_i t} q_r(a_i t).
/// Collision processes use atoms rho_i = (C(x_i,r)/s_r)^{1/r} at scale
/// m_r^{1/r}; repetition uses theta_i = x_i/v_r^{1/r} at scale
/// m_tilde_r^{1/r} = n/v_r^{1/r}.
[[nodiscard]] inline double limit_type2_survival(const std::vector<double>& atoms, int r,
                                                 double t) {
    if (r < 2) throw domain_error("limit_type2_survival: r must be at least 2");
    if (t < 0) return 1.0;
    double sum_pow = 0;
    for (double a : atoms) {
        if (a < 0) throw domain_error("limit_type2_survival: atoms must be nonnegative");
        sum_pow += std::pow(a, r);
    }
    if (sum_pow > 1 + 1e-9)
        throw domain_error("limit_type2_survival: sum of atoms^r exceeds 1");
    double lg = -(1.0 - std::min(sum_pow, 1.0)) * std::pow(t, r) /
                std::exp(std::lgamma(r + 1.0));
    for (double a : atoms) {
        if (a == 0) continue;
        lg += -a * t + std::log(q_r_eval(a * t, r));
    }
    return std::exp(lg);
}

/// Type 3 (discrete limit): cell weights converge to a fixed probability
/// vector p, and the waiting-time law converges to the multinomial one:
///     P(K > k) = k! [t^k] prod_i q_r(p_i t).
[[nodiscard]] inline double limit_type3_survival(const multinomial_model& model, int r,
                                                 long k) {
    return survival_K1_multinomial(model, r, k).value;
}

/// The natural time scales on which the Type 2 limits live.
struct time_scales_result {
    double collision = 0;  ///< m_r^{1/r} = n/(r! s_r)^{1/r}
    double repetition = 0; ///< m_tilde_r^{1/r} = n/v_r^{1/r}
};

[[nodiscard]] inline time_scales_result time_scales(const config_statistics& st) {
    time_scales_result out;
    const double n = static_cast<double>(st.n);
    const double inv_r = 1.0 / st.r;
    const double s = to_double(st.s_r);
    out.collision = s > 0 ? n / std::pow(std::exp(std::lgamma(st.r + 1.0)) * s, inv_r) : 0.0;
    out.repetition = n / std::pow(to_double(st.v_r), inv_r);
    return out;
}

/// Heuristic classification of which limit regime a configuration is in.
struct regime_result {
    std::string regime;
    std::string reason;
};

[[nodiscard]] inline regime_result classify_regime(const config_statistics& st) {
    regime_result out;
    if (st.s_r == 0) {
        out.regime = "no_collisions";
        out.reason = "no cell reaches size r, so collision times are infinite";
        return out;
    }
    if (st.s_r <= 8 && st.m_r > 1000) {
        out.regime = "type1_fixed_atoms";
        out.reason = "few collision opportunities (s_r small) against a large domain";
        return out;
    }
    Rat frac(Int(st.x_max), Int(st.n));
    frac.canonicalize();
    if (st.m_r <= 1000 && frac > Rat(1, 20)) {
        out.regime = "type3_discrete";
        out.reason = "a single cell keeps a fixed share of the domain";
        return out;
    }
    out.regime = "type2_weibull";
    out.reason = "many comparably small cells: scaled times have a Weibull-type limit";
    return out;
}

} // namespace collision_lab
