#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "collision_lab/errors.hpp"
#include "collision_lab/rational.hpp"

namespace collision_lab {

/// A finite function's preimage profile: sizes[i] is the number of domain
/// elements mapping to codomain cell i (zeros allowed). n is the domain size,
/// m the codomain size.
struct configuration {
    std::vector<long> sizes;
    long n = 0;
    long m = 0;

    configuration() = default;
    explicit configuration(std::vector<long> s) : sizes(std::move(s)) {
        for (long x : sizes) {
            if (x < 0) throw domain_error("configuration: preimage sizes must be nonnegative");
            n += x;
        }
        m = static_cast<long>(sizes.size());
        if (m == 0) throw domain_error("configuration: at least one cell is required");
    }

    /// Uniform (classical) configuration: m cells of size one.
    [[nodiscard]] static configuration classical(long m_cells) {
        if (m_cells <= 0) throw domain_error("configuration: classical m must be positive");
        return configuration(std::vector<long>(static_cast<std::size_t>(m_cells), 1));
    }

    [[nodiscard]] long max_size() const {
        long mx = 0;
        for (long x : sizes) mx = std::max(mx, x);
        return mx;
    }

    /// Distinct positive sizes with multiplicities, largest first. Grouping
    /// identical cells turns m-fold products into a handful of powers.
    [[nodiscard]] std::map<long, long, std::greater<>> grouped_sizes() const {
        std::map<long, long, std::greater<>> g;
        for (long x : sizes)
            if (x > 0) ++g[x];
        return g;
    }
};

/// Cell probabilities for the i.i.d. sampling model: draws land in cell i
/// with probability probs[i]; probabilities are exact rationals summing to 1.
struct multinomial_model {
    long n = 0; ///< Domain size: the without-replacement horizon.
    std::vector<Rat> probs;

    multinomial_model() = default;
    multinomial_model(long n_, std::vector<Rat> p) : n(n_), probs(std::move(p)) {
        if (n <= 0) throw domain_error("multinomial_model: n must be positive");
        if (probs.empty()) throw domain_error("multinomial_model: at least one cell");
        Rat total(0);
        for (const Rat& q : probs) {
            if (q < 0) throw domain_error("multinomial_model: probabilities must be nonnegative");
            total += q;
        }
        if (total != 1) throw domain_error("multinomial_model: probabilities must sum to 1");
    }
};

/// Summary statistics of a configuration at level r. These drive the bounds,
/// the asymptotic classification, and the time scales.
struct config_statistics {
    int r = 2;
    long n = 0;          ///< sum of sizes
    long m = 0;          ///< number of cells (zeros included)
    long b = 0;          ///< number of nonempty cells
    long w = 0;          ///< min(n, m)
    long x_max = 0;      ///< largest cell
    Rat s_r;                  ///< sum_i C(x_i, r)
    Rat s_tilde_r;            ///< sum_i x_i^r / r!
    Rat v_r;                  ///< sum_i x_i^r
    Rat d;                    ///< sum_i x_i * C(x_i, r)
    Rat m_r;                  ///< n^r / (r! s_r); 0 when s_r = 0
    Rat m_tilde_r;            ///< n^r / v_r
    Rat u_r;                  ///< mean size over cells with x_i >= r; 0 if none
    std::vector<std::size_t> M_r;  ///< indices of cells with x_i >= r
    std::vector<double> rho;       ///< (C(x_i, r)/s_r)^{1/r} over all cells
    std::vector<double> theta;     ///< x_i / v_r^{1/r} over all cells
};

[[nodiscard]] inline config_statistics config_statistics_of(const configuration& cfg, int r) {
    if (r < 2) throw domain_error("config_statistics: r must be at least 2");
    config_statistics st;
    st.r = r;
    st.n = cfg.n;
    st.m = cfg.m;
    st.w = std::min(cfg.n, cfg.m);
    st.x_max = cfg.max_size();
    Int s_r(0), v_r(0), d(0), sum_Mr(0);
    for (std::size_t i = 0; i < cfg.sizes.size(); ++i) {
        const long x = cfg.sizes[i];
        if (x > 0) ++st.b;
        const Int cxr = binomial_int(static_cast<unsigned long>(x), r);
        s_r += cxr;
        v_r += pow_int(Int(x), static_cast<unsigned long>(r));
        d += Int(x) * cxr;
        if (x >= r) {
            st.M_r.push_back(i);
            sum_Mr += Int(x);
        }
    }
    st.s_r = Rat(s_r);
    st.v_r = Rat(v_r);
    st.d = Rat(d);
    const Int rfact = factorial_int(static_cast<unsigned long>(r));
    st.s_tilde_r = Rat(v_r, rfact);
    st.s_tilde_r.canonicalize();
    const Int n_pow_r = pow_int(Int(cfg.n), static_cast<unsigned long>(r));
    if (s_r > 0) {
        st.m_r = Rat(n_pow_r, rfact * s_r);
        st.m_r.canonicalize();
    }
    if (v_r > 0) {
        st.m_tilde_r = Rat(n_pow_r, v_r);
        st.m_tilde_r.canonicalize();
    }
    if (!st.M_r.empty()) {
        st.u_r = Rat(sum_Mr, Int(static_cast<unsigned long>(st.M_r.size())));
        st.u_r.canonicalize();
    }
    const double inv_r = 1.0 / static_cast<double>(r);
    const double s_r_d = to_double(st.s_r);
    const double v_r_d = to_double(st.v_r);
    st.rho.reserve(cfg.sizes.size());
    st.theta.reserve(cfg.sizes.size());
    for (long x : cfg.sizes) {
        const double cxr = to_double(Rat(binomial_int(static_cast<unsigned long>(x), r)));
        st.rho.push_back(s_r_d > 0 ? std::pow(cxr / s_r_d, inv_r) : 0.0);
        st.theta.push_back(v_r_d > 0
                               ? static_cast<double>(x) / std::pow(v_r_d, inv_r)
                               : 0.0);
    }
    return st;
}

} // namespace collision_lab
