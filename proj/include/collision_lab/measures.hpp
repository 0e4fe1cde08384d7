#pragma once

#include <cmath>
#include <optional>

#include "collision_lab/combinatorics.hpp"
#include "collision_lab/config.hpp"
#include "collision_lab/errors.hpp"
#include "collision_lab/rational.hpp"

namespace collision_lab {

/// Chi-square test statistic of the configuration against the uniform law:
///     T = (m/n) sum_i (x_i - n/m)^2 = (m/n) sum_i x_i^2 - n.
[[nodiscard]] inline Rat chi2_statistic(const configuration& cfg) {
    if (cfg.n < 1) throw invalid_query_error("chi2_statistic: empty configuration");
    Int sum_sq(0);
    for (long x : cfg.sizes) sum_sq += Int(x) * Int(x);
    Rat t(Int(cfg.m) * sum_sq, Int(cfg.n));
    t.canonicalize();
    return t - Rat(Int(cfg.n));
}

/// Logarithmic balance measures of a configuration.
struct balance_report {
    Rat T_chi2;
    double mu2 = 0;                    ///< -log_m(sum x_i^2 / n^2)
    std::optional<double> lambda_r;    ///< -(1/(r-1)) log_m(r! s_r / n^r); absent if s_r = 0
    std::optional<double> m_eff;       ///< m_r = n^r/(r! s_r); absent if s_r = 0
    Rat s_r;
    Rat s_tilde_r;
};

[[nodiscard]] inline balance_report balance_measures(const configuration& cfg, int r) {
    if (r < 2) throw domain_error("balance_measures: r must be at least 2");
    if (cfg.m < 2) throw domain_error("balance_measures: m must be at least 2 for base-m logs");
    if (cfg.n < 1) throw invalid_query_error("balance_measures: empty configuration");
    balance_report rep;
    rep.T_chi2 = chi2_statistic(cfg);
    const config_statistics st = config_statistics_of(cfg, r);
    rep.s_r = st.s_r;
    rep.s_tilde_r = st.s_tilde_r;
    const double log_m = std::log(static_cast<double>(cfg.m));
    const double log_n = std::log(static_cast<double>(cfg.n));
    Int sum_sq(0);
    for (long x : cfg.sizes) sum_sq += Int(x) * Int(x);
    rep.mu2 = -(log_int(sum_sq) - 2 * log_n) / log_m;
    if (st.s_r > 0) {
        // log(r! s_r): s_r is an integer-valued rational here.
        const Int rs = factorial_int(static_cast<unsigned long>(r)) * st.s_r.get_num();
        const double log_rs = log_int(rs); // s_r has denominator 1
        rep.lambda_r = -(log_rs - r * log_n) / ((r - 1) * log_m);
        rep.m_eff = to_double(st.m_r);
    }
    return rep;
}

/// Moments of the number of r-collisions S_r of a uniform random
/// (n,m)-mapping (every cell equally likely, independently per ball):
///     E S_r = C(n,r) / m^{r-1}
///     Var S_r = E S_r * ( sum_{i=0}^{r-2} C(r,i) C(n-r,i) / m^i
///               + [ r C(n-r,r-1) + C(n-r,r) - C(n,r) ] / m^{r-1} ).
struct mapping_moments {
    Rat mean;
    Rat variance;
};

[[nodiscard]] inline mapping_moments random_mapping_moments(long n, long m, int r) {
    if (r < 2) throw domain_error("random_mapping_moments: r must be at least 2");
    if (n < 1 || m < 1) throw domain_error("random_mapping_moments: n and m must be positive");
    mapping_moments out;
    out.mean = Rat(0);
    out.variance = Rat(0);
    if (n < r) return out;
    const Int m_pow_rm1 = pow_int(Int(m), static_cast<unsigned long>(r - 1));
    out.mean = Rat(binomial_int(static_cast<unsigned long>(n), r), m_pow_rm1);
    out.mean.canonicalize();
    Rat bracket(0);
    Int m_pow(1);
    for (int i = 0; i <= r - 2; ++i) {
        Rat term(binomial_int(static_cast<unsigned long>(r), i) *
                     binomial_int(static_cast<unsigned long>(n - r), i),
                 m_pow);
        term.canonicalize();
        bracket += term;
        m_pow *= Int(m);
    }
    const Int tail = Int(r) * binomial_int(static_cast<unsigned long>(n - r), r - 1) +
                     binomial_int(static_cast<unsigned long>(n - r), r) -
                     binomial_int(static_cast<unsigned long>(n), r);
    Rat tail_term(tail, m_pow_rm1);
    tail_term.canonicalize();
    bracket += tail_term;
    out.variance = out.mean * bracket;
    out.variance.canonicalize();
    return out;
}

/// The same moments on the concentration scale m^{r-1}/n^r, under which
/// S_r concentrates at 1/r! as n grows with m^{r-1}/n^r bounded.
struct concentration_report {
    Rat scaled_mean;    ///< (m^{r-1}/n^r) E S_r = C(n,r)/n^r
    double scaled_std;  ///< (m^{r-1}/n^r) sqrt(Var S_r)
};

[[nodiscard]] inline concentration_report concentration_check(long n, long m, int r) {
    const mapping_moments mom = random_mapping_moments(n, m, r);
    concentration_report out;
    out.scaled_mean = Rat(binomial_int(static_cast<unsigned long>(n), r),
                          pow_int(Int(n), static_cast<unsigned long>(r)));
    out.scaled_mean.canonicalize();
    Rat scale(pow_int(Int(m), static_cast<unsigned long>(r - 1)),
              pow_int(Int(n), static_cast<unsigned long>(r)));
    scale.canonicalize();
    out.scaled_std = to_double(scale) * std::sqrt(to_double(mom.variance));
    return out;
}

/// Expected number of cells holding exactly j balls after k uniform draws
/// over m cells (with replacement):
///     E U_j = m C(k,j) (1/m)^j (1 - 1/m)^{k-j} = C(k,j) (m-1)^{k-j} / m^{k-1}.
[[nodiscard]] inline Rat expected_cell_counts(long k, long m, long j) {
    if (m < 1) throw domain_error("expected_cell_counts: m must be positive");
    if (j < 0 || j > k) throw out_of_range_error("expected_cell_counts: need 0 <= j <= k");
    Rat v(binomial_int(static_cast<unsigned long>(k), j) *
              pow_int(Int(m - 1), static_cast<unsigned long>(k - j)),
          pow_int(Int(m), static_cast<unsigned long>(k > 0 ? k - 1 : 0)));
    v.canonicalize();
    if (k == 0) v *= Rat(Int(m)); // the k=0 case: all m cells hold zero balls
    return v;
}

} // namespace collision_lab
