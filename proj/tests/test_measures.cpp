#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "collision_lab/collision_lab.hpp"

namespace cl = collision_lab;

namespace {

cl::Rat rat(long num, long den) {
    cl::Rat q{cl::Int(num), cl::Int(den)};
    q.canonicalize();
    return q;
}

/// Exact moments of S_r = sum_cells C(load, r) over all m^n equally likely
/// assignments of n balls to m cells, by full enumeration.
cl::mapping_moments enumerate_mapping_moments(long n, long m, int r) {
    std::vector<long> assign(static_cast<std::size_t>(n), 0);
    std::vector<long> load(static_cast<std::size_t>(m), 0);
    cl::Int sum_s(0), sum_s2(0), total(0);
    for (;;) {
        std::fill(load.begin(), load.end(), 0);
        for (long a : assign) ++load[static_cast<std::size_t>(a)];
        cl::Int s(0);
        for (long l : load)
            if (l >= r) s += cl::binomial_int(static_cast<unsigned long>(l), r);
        sum_s += s;
        sum_s2 += s * s;
        total += 1;
        std::size_t i = 0;
        while (i < assign.size() && assign[i] == m - 1) assign[i++] = 0;
        if (i == assign.size()) break;
        ++assign[i];
    }
    cl::mapping_moments out;
    out.mean = cl::Rat(sum_s, total);
    out.mean.canonicalize();
    cl::Rat second(sum_s2, total);
    second.canonicalize();
    out.variance = second - out.mean * out.mean;
    out.variance.canonicalize();
    return out;
}

} // namespace

TEST(Measures, ChiSquareStatistic) {
    EXPECT_EQ(cl::chi2_statistic(cl::configuration({2, 2})), cl::Rat(0));
    EXPECT_EQ(cl::chi2_statistic(cl::configuration({4, 0})), cl::Rat(4));
    EXPECT_EQ(cl::chi2_statistic(cl::configuration({3, 1})), cl::Rat(1));
    // Scale invariance of perfect balance: any equal split scores zero.
    EXPECT_EQ(cl::chi2_statistic(cl::configuration({5, 5, 5})), cl::Rat(0));
}

TEST(Measures, BalanceReportPinnedValues) {
    const auto rep = cl::balance_measures(cl::configuration({2, 2}), 2);
    EXPECT_EQ(rep.T_chi2, cl::Rat(0));
    EXPECT_NEAR(rep.mu2, 1.0, 1e-12);
    ASSERT_TRUE(rep.lambda_r.has_value());
    EXPECT_NEAR(*rep.lambda_r, 2.0, 1e-12);
    ASSERT_TRUE(rep.m_eff.has_value());
    EXPECT_NEAR(*rep.m_eff, 4.0, 1e-12);
    EXPECT_EQ(rep.s_r, cl::Rat(2));

    // Fully concentrated: mu2 = 0; balanced singletons: mu2 = 1, no lambda.
    EXPECT_NEAR(cl::balance_measures(cl::configuration({4, 0}), 2).mu2, 0.0, 1e-12);
    const auto ones = cl::balance_measures(cl::configuration({1, 1, 1}), 2);
    EXPECT_NEAR(ones.mu2, 1.0, 1e-12);
    EXPECT_FALSE(ones.lambda_r.has_value());
    EXPECT_FALSE(ones.m_eff.has_value());
}

TEST(Measures, BalanceValidation) {
    EXPECT_THROW((void)cl::balance_measures(cl::configuration({5}), 2), cl::domain_error);
    EXPECT_THROW((void)cl::balance_measures(cl::configuration({2, 2}), 1), cl::domain_error);
}

TEST(Measures, Mu2MatchesChiSquareIdentity) {
    // mu2 = 1 - log_m(1 + T/n) for every configuration.
    std::mt19937 rng(2024);
    std::uniform_int_distribution<int> cells(2, 9);
    std::uniform_int_distribution<long> size(0, 7);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<long> sizes(static_cast<std::size_t>(cells(rng)));
        long n = 0;
        for (long& x : sizes) {
            x = size(rng);
            n += x;
        }
        if (n == 0) continue;
        const cl::configuration cfg(sizes);
        const auto rep = cl::balance_measures(cfg, 2);
        const double t_over_n = cl::to_double(rep.T_chi2) / static_cast<double>(cfg.n);
        const double expected =
            1.0 - std::log1p(t_over_n) / std::log(static_cast<double>(cfg.m));
        EXPECT_NEAR(rep.mu2, expected, 1e-12);
    }
}

TEST(Measures, LambdaApproachesOneFromAbove) {
    // Balanced c-regular configurations: lambda_r > 1, and the excess
    // |lambda_r - 1| shrinks strictly as the number of cells grows.
    for (const auto& [c, r] : std::vector<std::pair<long, int>>{{3, 2}, {2, 2}, {4, 3}}) {
        double prev = -1;
        for (long m : {4L, 16L, 64L, 256L, 1024L}) {
            std::vector<long> sizes(static_cast<std::size_t>(m), c);
            const auto rep = cl::balance_measures(cl::configuration(sizes), r);
            ASSERT_TRUE(rep.lambda_r.has_value());
            const double excess = std::abs(*rep.lambda_r - 1.0);
            EXPECT_GT(*rep.lambda_r, 1.0) << "c=" << c << " m=" << m;
            if (prev >= 0) EXPECT_LT(excess, prev) << "c=" << c << " m=" << m;
            prev = excess;
        }
        EXPECT_LT(prev, 0.2);
    }
}

TEST(Measures, MappingMomentsPinned) {
    const auto mom = cl::random_mapping_moments(4, 2, 2);
    EXPECT_EQ(mom.mean, cl::Rat(3));
    EXPECT_EQ(mom.variance, rat(3, 2));
    // Below the collision threshold the count is identically zero.
    const auto none = cl::random_mapping_moments(1, 5, 2);
    EXPECT_EQ(none.mean, cl::Rat(0));
    EXPECT_EQ(none.variance, cl::Rat(0));
}

TEST(Measures, MappingMomentsMatchEnumeration) {
    for (const auto& [n, m, r] : std::vector<std::tuple<long, long, int>>{
             {4, 2, 2}, {5, 2, 2}, {6, 3, 2}, {8, 2, 2}, {6, 3, 3}}) {
        const auto closed = cl::random_mapping_moments(n, m, r);
        const auto exact = enumerate_mapping_moments(n, m, r);
        EXPECT_EQ(closed.mean, exact.mean) << "n=" << n << " m=" << m << " r=" << r;
        EXPECT_EQ(closed.variance, exact.variance) << "n=" << n << " m=" << m << " r=" << r;
    }
}

TEST(Measures, ConcentrationScale) {
    const auto big = cl::concentration_check(10000, 1000, 2);
    EXPECT_EQ(big.scaled_mean, rat(9999, 20000));

    // A single cell is allowed here: the count is deterministic.
    const auto one = cl::concentration_check(2, 1, 2);
    EXPECT_EQ(one.scaled_mean, rat(1, 4));
    EXPECT_NEAR(one.scaled_std, 0.0, 1e-15);

    // Along n = 10 m the fluctuation scale contracts.
    double prev = 1e9;
    for (long j = 2; j <= 4; ++j) {
        const long n = std::lround(std::pow(10.0, static_cast<double>(j)));
        const auto rep = cl::concentration_check(n, n / 10, 2);
        EXPECT_LT(rep.scaled_std, prev) << "j=" << j;
        EXPECT_NEAR(cl::to_double(rep.scaled_mean), 0.5, 0.01);
        prev = rep.scaled_std;
    }
}

TEST(Measures, ExpectedCellCounts) {
    EXPECT_EQ(cl::expected_cell_counts(2, 2, 1), cl::Rat(1));
    EXPECT_EQ(cl::expected_cell_counts(0, 7, 0), cl::Rat(7));
    // The per-j expectations tile the m cells and the k balls exactly.
    const long k = 7, m = 5;
    cl::Rat cells(0), balls(0);
    for (long j = 0; j <= k; ++j) {
        const cl::Rat u = cl::expected_cell_counts(k, m, j);
        cells += u;
        balls += cl::Rat(cl::Int(j)) * u;
    }
    cells.canonicalize();
    balls.canonicalize();
    EXPECT_EQ(cells, cl::Rat(m));
    EXPECT_EQ(balls, cl::Rat(k));

    EXPECT_THROW((void)cl::expected_cell_counts(2, 0, 1), cl::domain_error);
    EXPECT_THROW((void)cl::expected_cell_counts(2, 2, 3), cl::out_of_range_error);
}
