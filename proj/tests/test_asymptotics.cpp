#include <cmath>
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

void expect_series_row(int r, const std::vector<cl::Rat>& expected) {
    const auto got = cl::asymptotic_series_coefficients(r, expected.size());
    ASSERT_EQ(got.size(), expected.size()) << "r=" << r;
    for (std::size_t i = 0; i < expected.size(); ++i)
        EXPECT_EQ(got[i], expected[i]) << "r=" << r << " i=" << i;
}

} // namespace

TEST(Asymptotics, SeriesCoefficientRows) {
    expect_series_row(2, {rat(1, 1), rat(2, 3), rat(1, 12), rat(-2, 135), rat(1, 864)});
    expect_series_row(3, {rat(1, 1), rat(1, 2), rat(21, 80), rat(7, 240), rat(83, 13440)});
    expect_series_row(4, {rat(1, 1), rat(2, 5), rat(17, 100), rat(194, 2625), rat(271, 42000)});
    expect_series_row(5, {rat(1, 1), rat(1, 3), rat(5, 42), rat(11, 252), rat(515, 31752)});
    // One order beyond the tabulated rows.
    const auto six = cl::asymptotic_series_coefficients(3, 6);
    EXPECT_EQ(six[5], rat(-249, 89600));
}

TEST(Asymptotics, SeriesArgumentChecks) {
    EXPECT_TRUE(cl::asymptotic_series_coefficients(2, 0).empty());
    EXPECT_THROW((void)cl::asymptotic_series_coefficients(1, 3), cl::domain_error);
    EXPECT_THROW((void)cl::asymptotic_series_coefficients(2, 65), cl::out_of_range_error);
}

TEST(Asymptotics, ClassicalBirthdayTripleSeries) {
    // E R_3 over 365 equally likely days.
    const auto one = cl::classical_ER_series(365, 3, 1);
    EXPECT_NEAR(one.value, 82.8744172707386, 5e-5);

    const auto three = cl::classical_ER_series(365, 3, 3);
    EXPECT_NEAR(three.value, 88.7250395777, 5e-5);
    ASSERT_EQ(three.contributions.size(), 3u);
    EXPECT_NEAR(three.contributions[0], 82.8744172707386, 1e-9);
    EXPECT_NEAR(three.contributions[1], 5.32562230700388, 1e-9);
    // a_2(3) = 21/80 makes the third term exactly (365/3)(21/80)(6/365).
    EXPECT_NEAR(three.contributions[2], 0.525, 1e-12);

    const auto six = cl::classical_ER_series(365, 3, 6);
    const double exact =
        cl::expectation_exact(cl::configuration::classical(365), 3, cl::process_mode::R).value;
    EXPECT_NEAR(exact, 88.7389176506049, 1e-9);
    EXPECT_NEAR(six.value, exact, 5e-6);
    EXPECT_NEAR(six.value, 88.7389138349897, 1e-6);
}

TEST(Asymptotics, ClassicalBirthdayPairSeries) {
    const double exact =
        cl::expectation_exact(cl::configuration::classical(365), 2, cl::process_mode::R).value;
    const auto series = cl::classical_ER_series(365, 2); // default 2r terms
    EXPECT_NEAR(series.value, exact, 0.01);
}

TEST(Asymptotics, Type1CollisionLimit) {
    // One pair cell among singletons: the only collision-capable factor is
    // G_2(2,t) = 1 - t^2.
    const cl::configuration cfg({2, 1, 1, 1});
    for (double t : {0.0, 0.25, 0.5, 0.75, 0.99}) {
        EXPECT_NEAR(cl::limit_type1_K1(cfg, 2, t), 1.0 - t * t, 1e-12) << "t=" << t;
    }
    EXPECT_EQ(cl::limit_type1_K1(cfg, 2, 1.0), 0.0);
    EXPECT_EQ(cl::limit_type1_K1(cfg, 2, 2.0), 0.0);
    EXPECT_EQ(cl::limit_type1_K1(cfg, 2, -0.5), 1.0);

    // Two cells of size 3: the limit factors as G_2(3,t)^2 with
    // G_2(3,t) = (1-t)^2 (1+2t).
    const cl::configuration two({3, 3, 1});
    for (double t : {0.2, 0.6, 0.9}) {
        const double g = (1 - t) * (1 - t) * (1 + 2 * t);
        EXPECT_NEAR(cl::limit_type1_K1(two, 2, t), g * g, 1e-12) << "t=" << t;
    }
}

TEST(Asymptotics, Type1ReplacementLimit) {
    const cl::configuration cfg({2, 1, 1, 1});
    for (double t : {0.1, 0.7, 1.5, 3.0}) {
        const double u = -std::expm1(-t);
        EXPECT_NEAR(cl::limit_type1_K2(cfg, 2, t), 1.0 - u * u, 1e-12) << "t=" << t;
        // Replacement slows collection: the K2 limit dominates the K1 one.
        EXPECT_GE(cl::limit_type1_K2(cfg, 2, t), cl::limit_type1_K1(cfg, 2, t));
    }
    EXPECT_LT(cl::limit_type1_K2(cfg, 2, 50.0), 1e-12);
    EXPECT_EQ(cl::limit_type1_K2(cfg, 2, -1.0), 1.0);
}

TEST(Asymptotics, Type2WeibullLimit) {
    // Pure dust: Weibull survival exp(-t^r/r!).
    for (double t : {0.3, 1.0, 2.2}) {
        EXPECT_NEAR(cl::limit_type2_survival({}, 2, t), std::exp(-t * t / 2), 1e-12);
        EXPECT_NEAR(cl::limit_type2_survival({}, 3, t), std::exp(-t * t * t / 6), 1e-12);
    }
    // Single full atom: e^{-t} q_r(t), no dust part.
    for (double t : {0.5, 1.7}) {
        EXPECT_NEAR(cl::limit_type2_survival({1.0}, 3, t),
                    std::exp(-t) * (1 + t + t * t / 2), 1e-12);
    }
    // Two atoms exhausting the mass: product of the atom factors.
    const double a = 0.6, b = 0.8;
    for (double t : {0.4, 1.1}) {
        const double expected =
            std::exp(-a * t) * (1 + a * t) * std::exp(-b * t) * (1 + b * t);
        EXPECT_NEAR(cl::limit_type2_survival({a, b}, 2, t), expected, 1e-12);
    }
    // Atoms plus dust: mixture of both decay mechanisms.
    const double mixed = cl::limit_type2_survival({0.5}, 2, 1.0);
    EXPECT_NEAR(mixed, std::exp(-0.75 / 2) * std::exp(-0.5) * 1.5, 1e-12);

    EXPECT_EQ(cl::limit_type2_survival({0.5}, 2, -1.0), 1.0);
    EXPECT_THROW((void)cl::limit_type2_survival({0.9, 0.9}, 2, 1.0), cl::domain_error);
    EXPECT_THROW((void)cl::limit_type2_survival({-0.1}, 2, 1.0), cl::domain_error);
}

TEST(Asymptotics, Type3DiscreteLimit) {
    const cl::multinomial_model model(6, {rat(1, 3), rat(1, 3), rat(1, 3)});
    for (long k = 0; k <= 6; ++k) {
        EXPECT_DOUBLE_EQ(cl::limit_type3_survival(model, 2, k),
                         cl::survival_K1_multinomial(model, 2, k).value);
    }
}

TEST(Asymptotics, TimeScales) {
    const auto st = cl::config_statistics_of(cl::configuration({2, 2}), 2);
    const auto ts = cl::time_scales(st);
    EXPECT_NEAR(ts.collision, 2.0, 1e-12);
    EXPECT_NEAR(ts.repetition, std::sqrt(2.0), 1e-12);
}

TEST(Asymptotics, RegimeClassification) {
    {
        const auto st = cl::config_statistics_of(cl::configuration({1, 1, 1, 1, 1}), 2);
        EXPECT_EQ(cl::classify_regime(st).regime, "no_collisions");
    }
    {
        std::vector<long> sizes(101, 1);
        sizes[0] = 2;
        const auto st = cl::config_statistics_of(cl::configuration(sizes), 2);
        EXPECT_EQ(cl::classify_regime(st).regime, "type1_fixed_atoms");
    }
    {
        const auto st = cl::config_statistics_of(cl::configuration({100, 1, 1}), 2);
        EXPECT_EQ(cl::classify_regime(st).regime, "type3_discrete");
    }
    {
        std::vector<long> sizes(2000, 2);
        const auto st = cl::config_statistics_of(cl::configuration(sizes), 2);
        EXPECT_EQ(cl::classify_regime(st).regime, "type2_weibull");
    }
    EXPECT_FALSE(cl::classify_regime(cl::config_statistics_of(cl::configuration({2, 2}), 2))
                     .reason.empty());
}

TEST(Asymptotics, LimitKindNames) {
    for (const cl::limit_kind k :
         {cl::limit_kind::type1_K1, cl::limit_kind::type1_K2, cl::limit_kind::type2_collision,
          cl::limit_kind::type2_repetition, cl::limit_kind::type3_discrete}) {
        EXPECT_EQ(cl::limit_kind_from_string(cl::to_string(k)), k);
    }
    EXPECT_THROW((void)cl::limit_kind_from_string("type9"), cl::invalid_query_error);
}

TEST(Asymptotics, Type1LimitApproximatesFiniteSurvival) {
    // One pair cell among n-2 singletons, k = t (n+1): the exact survival
    // approaches 1 - t^2 as n grows.
    const long n = 402;
    std::vector<long> sizes(static_cast<std::size_t>(n - 1), 1);
    sizes[0] = 2;
    const cl::configuration cfg(sizes);
    for (double t : {0.3, 0.6}) {
        const long k = std::lround(t * static_cast<double>(n + 1));
        const double exact = cl::survival_K1(cfg, 2, k).value;
        const double tt = static_cast<double>(k) / static_cast<double>(n + 1);
        EXPECT_NEAR(exact, 1.0 - tt * tt, 0.02) << "t=" << t;
    }
}
