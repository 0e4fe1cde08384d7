#include <cmath>
#include <cstdlib>
#include <map>
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

/// Empirical P(T > k) from a report; zero beyond the recorded support.
double emp_survival(const cl::simulation_report& rep, long k) {
    for (const auto& [kk, frac] : rep.empirical_survival)
        if (kk == k) return frac;
    return 0.0;
}

/// Half-width of a 4-sigma binomial confidence band around probability p.
double band(double p, long trials) {
    return 4.0 * std::sqrt(p * (1 - p) / static_cast<double>(trials)) +
           5.0 / static_cast<double>(trials);
}

/// Number of cyclic points of the self-map f (walk-based peeling).
long cyclic_points(const std::vector<long>& f) {
    const std::size_t n = f.size();
    std::vector<int> state(n, 0);
    std::vector<long> order(n, 0);
    long cyclic = 0;
    for (std::size_t start = 0; start < n; ++start) {
        if (state[start] != 0) continue;
        std::vector<std::size_t> path;
        std::size_t v = start;
        while (state[v] == 0) {
            state[v] = 1;
            order[v] = static_cast<long>(path.size());
            path.push_back(v);
            v = static_cast<std::size_t>(f[v]);
        }
        if (state[v] == 1) cyclic += static_cast<long>(path.size()) - order[v];
        for (std::size_t u : path) state[u] = 2;
    }
    return cyclic;
}

cl::Rat tail_from_pmf(const std::vector<std::pair<long, cl::Rat>>& pmf, long k) {
    cl::Rat acc(0);
    for (const auto& [v, p] : pmf)
        if (v > k) acc += p;
    acc.canonicalize();
    return acc;
}

} // namespace

TEST(MonteCarlo, DeterministicAcrossRunsAndThreads) {
    const cl::configuration cfg({3, 2, 2});
    const auto a = cl::simulate_waiting_times(cfg, 2, cl::process_mode::K2, 20000, 7);
    const auto b = cl::simulate_waiting_times(cfg, 2, cl::process_mode::K2, 20000, 7);
    EXPECT_EQ(a.mean, b.mean);
    EXPECT_EQ(a.std_error, b.std_error);
    EXPECT_EQ(a.empirical_survival, b.empirical_survival);
    EXPECT_EQ(a.extras, b.extras);

    setenv("COLLISION_LAB_THREADS", "3", 1);
    const auto c = cl::simulate_waiting_times(cfg, 2, cl::process_mode::K2, 20000, 7);
    setenv("COLLISION_LAB_THREADS", "1", 1);
    const auto d = cl::simulate_waiting_times(cfg, 2, cl::process_mode::K2, 20000, 7);
    unsetenv("COLLISION_LAB_THREADS");
    EXPECT_EQ(a.mean, c.mean);
    EXPECT_EQ(a.mean, d.mean);
    EXPECT_EQ(a.empirical_survival, c.empirical_survival);
    EXPECT_EQ(a.empirical_survival, d.empirical_survival);

    const auto e = cl::simulate_waiting_times(cfg, 2, cl::process_mode::K2, 20000, 8);
    EXPECT_NE(a.mean, e.mean);
}

TEST(MonteCarlo, WorkerCountEnvOverride) {
    setenv("COLLISION_LAB_THREADS", "5", 1);
    EXPECT_EQ(cl::worker_count(), 5u);
    setenv("COLLISION_LAB_THREADS", "0", 1);
    EXPECT_GE(cl::worker_count(), 1u);
    unsetenv("COLLISION_LAB_THREADS");
    EXPECT_GE(cl::worker_count(), 1u);
}

TEST(MonteCarlo, BalancedPairUrnReferenceValues) {
    const cl::configuration cfg({2, 2});
    const long trials = 100000;

    const auto k1 = cl::simulate_waiting_times(cfg, 2, cl::process_mode::K1, trials, 42);
    EXPECT_NEAR(emp_survival(k1, 2), 2.0 / 3.0, band(2.0 / 3.0, trials));
    EXPECT_NEAR(k1.mean, 8.0 / 3.0, 4 * k1.std_error);

    const auto rr = cl::simulate_waiting_times(cfg, 2, cl::process_mode::R, trials, 42);
    EXPECT_NEAR(rr.mean, 2.5, 4 * rr.std_error);

    const auto k2 = cl::simulate_waiting_times(cfg, 2, cl::process_mode::K2, trials, 42);
    EXPECT_NEAR(k2.mean, 11.0 / 3.0, 4 * k2.std_error);
    ASSERT_TRUE(k2.extras.count("fraction_repeat_first"));
    ASSERT_TRUE(k2.extras.count("fraction_true_collision"));
    EXPECT_NEAR(k2.extras.at("fraction_repeat_first"), 0.5, band(0.5, trials));
    EXPECT_DOUBLE_EQ(
        k2.extras.at("fraction_repeat_first") + k2.extras.at("fraction_true_collision"), 1.0);
}

TEST(MonteCarlo, EmpiricalCurvesMatchExactSurvival) {
    const cl::configuration cfg({3, 2, 1});
    const long trials = 100000;
    for (int r : {2, 3}) {
        for (const cl::process_mode mode :
             {cl::process_mode::K1, cl::process_mode::K2, cl::process_mode::R}) {
            if (mode != cl::process_mode::R && cfg.max_size() < r) continue;
            const auto rep = cl::simulate_waiting_times(cfg, r, mode, trials, 1);
            ASSERT_FALSE(rep.empirical_survival.empty());
            for (const auto& [k, frac] : rep.empirical_survival) {
                double exact = 0;
                switch (mode) {
                    case cl::process_mode::K1: exact = cl::survival_K1(cfg, r, k).value; break;
                    case cl::process_mode::K2: exact = cl::survival_K2(cfg, r, k).value; break;
                    case cl::process_mode::R: exact = cl::survival_R(cfg, r, k).value; break;
                }
                EXPECT_NEAR(frac, exact, band(exact, trials))
                    << "r=" << r << " mode=" << cl::to_string(mode) << " k=" << k;
            }
        }
    }
}

TEST(MonteCarlo, WaitingTimeSupportBounds) {
    // K1 never exceeds n; the repetition time never exceeds b(r-1)+1.
    const cl::configuration cfg({3, 2, 2});
    const auto k1 = cl::simulate_waiting_times(cfg, 2, cl::process_mode::K1, 50000, 3);
    EXPECT_LE(k1.empirical_survival.back().first + 1, cfg.n);
    const auto rr = cl::simulate_waiting_times(cfg, 3, cl::process_mode::R, 50000, 3);
    const long b = 3;
    EXPECT_LE(rr.empirical_survival.back().first + 1, b * 2 + 1);
    EXPECT_GT(emp_survival(rr, 2), 0.0);
}

TEST(MonteCarlo, TwoStageDegenerateUrn) {
    // Single cell with probability one: K1 and R wait exactly r = 2 draws.
    const cl::multinomial_model point(2, {cl::Rat(1)});
    for (const cl::process_mode mode : {cl::process_mode::K1, cl::process_mode::R}) {
        const auto rep = cl::simulate_two_stage(point, 1, 2, mode, 3000, 11);
        EXPECT_DOUBLE_EQ(rep.mean, 2.0) << cl::to_string(mode);
        EXPECT_DOUBLE_EQ(rep.std_error, 0.0) << cl::to_string(mode);
    }
    // K2 must see two distinct balls of the two-ball cell: P(K2 > k) =
    // (1/2)^{k-1}, so E K2 = 3.
    const auto k2 = cl::simulate_two_stage(point, 1, 2, cl::process_mode::K2, 100000, 11);
    EXPECT_NEAR(k2.mean, 3.0, 4 * k2.std_error);
}

TEST(MonteCarlo, TwoStageMatchesMixtureReference) {
    // n = 4 balls over two equal cells: the exact two-stage mean is the
    // binomial mixture of per-configuration means.
    const cl::multinomial_model model(4, {rat(1, 2), rat(1, 2)});
    const long trials = 200000;
    for (const cl::process_mode mode :
         {cl::process_mode::K1, cl::process_mode::K2, cl::process_mode::R}) {
        double ref = 0;
        for (long a = 0; a <= 4; ++a) {
            cl::Rat w(cl::binomial_int(4, a), cl::Int(16));
            w.canonicalize();
            const cl::configuration cfg({a, 4 - a});
            if (mode != cl::process_mode::R && cfg.max_size() < 2) continue;
            ref += cl::to_double(w) * cl::expectation_exact(cfg, 2, mode).value;
        }
        const auto rep = cl::simulate_two_stage(model, 2, 2, mode, trials, 5);
        EXPECT_NEAR(rep.mean, ref, 4 * rep.std_error + 1e-9) << cl::to_string(mode);
    }
}

TEST(MonteCarlo, TwoStageValidation) {
    const cl::multinomial_model model(4, {rat(1, 2), rat(1, 2)});
    EXPECT_THROW((void)cl::simulate_two_stage(model, 3, 2, cl::process_mode::K1, 10, 1),
                 cl::invalid_query_error);
    // n = 2 over two cells realises (1,1) quickly, where no 2-fold cell exists.
    const cl::multinomial_model tiny(2, {rat(1, 2), rat(1, 2)});
    EXPECT_THROW((void)cl::simulate_two_stage(tiny, 2, 2, cl::process_mode::K1, 200, 1),
                 cl::invalid_query_error);
    // The with-replacement modes are fine there: repeats still happen.
    EXPECT_NO_THROW((void)cl::simulate_two_stage(tiny, 2, 2, cl::process_mode::R, 200, 1));
}

TEST(MonteCarlo, BruteForceSmallCases) {
    const auto k2 = cl::brute_force_survival(cl::configuration({2, 2}), 2,
                                             cl::process_mode::K2, 3);
    EXPECT_EQ(k2.entries[0].rational, cl::Rat(1));
    EXPECT_EQ(k2.entries[2].rational, rat(3, 4));
    EXPECT_EQ(k2.entries[3].rational, rat(7, 16));
    const auto k1 = cl::brute_force_survival(cl::configuration({2, 1, 0}), 2,
                                             cl::process_mode::K1, 2);
    EXPECT_EQ(k1.entries[2].rational, rat(2, 3));
    EXPECT_THROW(
        (void)cl::brute_force_survival(cl::configuration::classical(30), 2,
                                       cl::process_mode::R, 30),
        cl::resource_error);
}

TEST(MonteCarlo, EnumerateFixedIndegreeSmallCases) {
    // Configuration (2,1,0): three mappings of {0,1,2} with these preimage
    // sizes; two of them have two cyclic points, one has a single one.
    const cl::fixed_indegree_distributions d = cl::enumerate_fixed_indegree(
        cl::configuration({2, 1, 0}));
    EXPECT_EQ(d.mappings, cl::Int(3));
    ASSERT_EQ(d.Z_distribution.size(), 2u);
    EXPECT_EQ(d.Z_distribution[0].first, 1);
    EXPECT_EQ(d.Z_distribution[0].second, rat(1, 3));
    EXPECT_EQ(d.Z_distribution[1].first, 2);
    EXPECT_EQ(d.Z_distribution[1].second, rat(2, 3));
    EXPECT_EQ(tail_from_pmf(d.rho_distribution, 1), rat(2, 3));

    // Constant map: one cyclic point; rho is 1 from the fixed point and 2
    // from everywhere else.
    const auto c = cl::enumerate_fixed_indegree(cl::configuration({4, 0, 0, 0}));
    EXPECT_EQ(c.mappings, cl::Int(1));
    ASSERT_EQ(c.Z_distribution.size(), 1u);
    EXPECT_EQ(c.Z_distribution[0].first, 1);
    EXPECT_EQ(c.Z_distribution[0].second, cl::Rat(1));
    EXPECT_EQ(tail_from_pmf(c.rho_distribution, 0), cl::Rat(1));
    EXPECT_EQ(tail_from_pmf(c.rho_distribution, 1), rat(3, 4));
    EXPECT_EQ(tail_from_pmf(c.rho_distribution, 2), cl::Rat(0));

    // All-singleton configuration: permutations only, so every point is cyclic.
    const auto p = cl::enumerate_fixed_indegree(cl::configuration({1, 1, 1}));
    EXPECT_EQ(p.mappings, cl::Int(6));
    ASSERT_EQ(p.Z_distribution.size(), 1u);
    EXPECT_EQ(p.Z_distribution[0].first, 3);
    EXPECT_EQ(p.Z_distribution[0].second, cl::Rat(1));
}

TEST(MonteCarlo, FixedIndegreeMatchesCollisionSurvival) {
    // Functional-graph identities: with pair collisions (r = 2),
    //     P(Z > k)   = P(K1 > k+1)
    //     P(rho > k) = (n-k)/n * P(K1 > k)      for k = 0..n.
    for (const cl::configuration& cfg :
         {cl::configuration({2, 1, 0}), cl::configuration({2, 2, 0, 0}),
          cl::configuration({3, 1, 0, 1, 0})}) {
        const auto d = cl::enumerate_fixed_indegree(cfg);
        const long n = cfg.n;
        for (long k = 0; k <= n; ++k) {
            const cl::Rat expected_z = cl::survival_K1(cfg, 2, k + 1).rational;
            EXPECT_EQ(tail_from_pmf(d.Z_distribution, k), expected_z) << "Z k=" << k;
            cl::Rat expected_rho = rat(n - k, n) * cl::survival_K1(cfg, 2, k).rational;
            expected_rho.canonicalize();
            EXPECT_EQ(tail_from_pmf(d.rho_distribution, k), expected_rho) << "rho k=" << k;
        }
    }
}

TEST(MonteCarlo, EnumerateValidation) {
    // Too few cells for a self-map, mass beyond the domain, too many mappings.
    EXPECT_THROW((void)cl::enumerate_fixed_indegree(cl::configuration({2, 2})),
                 cl::invalid_query_error);
    EXPECT_THROW((void)cl::enumerate_fixed_indegree(cl::configuration({1, 1, 0, 0, 1})),
                 cl::invalid_query_error);
    EXPECT_THROW((void)cl::enumerate_fixed_indegree(cl::configuration::classical(11)),
                 cl::resource_error);
}

TEST(MonteCarlo, SampleFixedIndegree) {
    // Constant and permutation configurations are forced.
    const auto constant = cl::sample_fixed_indegree(cl::configuration({4, 0, 0, 0}), 9);
    EXPECT_EQ(constant, (std::vector<long>{0, 0, 0, 0}));
    auto perm = cl::sample_fixed_indegree(cl::configuration({1, 1, 1}), 9);
    std::sort(perm.begin(), perm.end());
    EXPECT_EQ(perm, (std::vector<long>{0, 1, 2}));

    // Same seed, same sample.
    EXPECT_EQ(cl::sample_fixed_indegree(cl::configuration({2, 1, 0}), 5),
              cl::sample_fixed_indegree(cl::configuration({2, 1, 0}), 5));

    // Empirical cyclic-point law matches the enumerated one.
    const cl::configuration cfg({2, 1, 0});
    const long samples = 40000;
    long z_above_1 = 0;
    for (long s = 0; s < samples; ++s) {
        const auto f = cl::sample_fixed_indegree(cfg, static_cast<std::uint64_t>(s));
        if (cyclic_points(f) > 1) ++z_above_1;
    }
    const double frac = static_cast<double>(z_above_1) / static_cast<double>(samples);
    EXPECT_NEAR(frac, 2.0 / 3.0, band(2.0 / 3.0, samples));
}

TEST(MonteCarlo, OccupancyCountMomentsMatchClosedForm) {
    // Uniform with-replacement occupancy: the mean number of cells holding
    // exactly j balls after k draws has a closed form; a direct simulation
    // with the library RNG must reproduce it.
    const long m = 12, k = 24, j = 2;
    const long trials = 20000;
    double sum = 0, sum_sq = 0;
    std::vector<long> hits(static_cast<std::size_t>(m));
    for (long t = 0; t < trials; ++t) {
        cl::trial_rng rng(cl::trial_seed(123, static_cast<std::uint64_t>(t)));
        std::fill(hits.begin(), hits.end(), 0);
        for (long d = 0; d < k; ++d)
            ++hits[static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(m)))];
        long cells = 0;
        for (long h : hits)
            if (h == j) ++cells;
        sum += static_cast<double>(cells);
        sum_sq += static_cast<double>(cells) * static_cast<double>(cells);
    }
    const double mean = sum / static_cast<double>(trials);
    const double var = (sum_sq - sum * mean) / static_cast<double>(trials - 1);
    const double se = std::sqrt(var / static_cast<double>(trials));
    const double expected = cl::to_double(cl::expected_cell_counts(k, m, j));
    EXPECT_NEAR(mean, expected, 4 * se + 1e-9);
}

TEST(MonteCarlo, SimulationValidation) {
    const cl::configuration cfg({2, 2});
    EXPECT_THROW((void)cl::simulate_waiting_times(cfg, 1, cl::process_mode::K1, 10, 1),
                 cl::domain_error);
    EXPECT_THROW((void)cl::simulate_waiting_times(cfg, 2, cl::process_mode::K1, 0, 1),
                 cl::invalid_query_error);
    EXPECT_THROW((void)cl::simulate_waiting_times(cl::configuration({1, 1}), 2,
                                                  cl::process_mode::K1, 10, 1),
                 cl::invalid_query_error);
    EXPECT_NO_THROW((void)cl::simulate_waiting_times(cl::configuration({1, 1}), 2,
                                                     cl::process_mode::R, 10, 1));
}
