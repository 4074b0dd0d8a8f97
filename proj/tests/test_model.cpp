#include <cmath>
#include <random>

#include <boost/math/distributions/poisson.hpp>
#include <gtest/gtest.h>

#include "rachopt/model.hpp"

using namespace rachopt;

TEST(ArrivalPmf, LoneArrivalLimit) { EXPECT_NEAR(conditional_arrival_pmf(1, 1e-12), 1.0, 1e-12); }

TEST(ArrivalPmf, Example) {
    EXPECT_NEAR(conditional_arrival_pmf(2, 1.0), 0.29099, 1e-5);
    EXPECT_NEAR(conditional_arrival_pmf(2, 1.0), 0.5 * std::exp(-1.0) / (1.0 - std::exp(-1.0)), 1e-15);
}

TEST(ArrivalPmf, MatchesConditionedPoisson) {
    for (double nu : {0.01, 0.3, 1.0, 7.0, 60.0}) {
        boost::math::poisson_distribution<double> pois(nu);
        const double z = 1.0 - boost::math::pdf(pois, 0.0);
        for (int k = 1; k < 40; ++k) {
            const double ref = boost::math::pdf(pois, k) / z;
            EXPECT_NEAR(conditional_arrival_pmf(k, nu), ref, 1e-12 * ref + 1e-300) << nu << " " << k;
        }
    }
}

TEST(ArrivalPmf, NormalizesUnderTruncationRule) {
    for (double nu : {0.01, 0.1, 1.0, 3.0, 10.0, 100.0}) {
        double s = 0.0;
        for (int k = 1; k <= truncation_limit(nu); ++k) s += conditional_arrival_pmf(k, nu);
        EXPECT_LT(std::abs(1.0 - s), 1e-12) << nu;
        const auto t = occupancy_table(nu, OccupancyLaw::ZeroTruncated);
        double c = 0.0;
        for (int k = 1; k <= t.k_hi; ++k) c += t.p[k];
        EXPECT_NEAR(c + t.tail, 1.0, 1e-12);
        EXPECT_LE(t.k_hi, truncation_limit(nu));
    }
}

TEST(ArrivalPmf, DeviceViewIsShiftedPoisson) {
    for (double nu : {0.2, 1.0, 5.0}) {
        boost::math::poisson_distribution<double> pois(nu);
        for (int k = 1; k < 25; ++k)
            EXPECT_NEAR(device_view_pmf(k, nu), boost::math::pdf(pois, k - 1), 1e-13) << nu << " " << k;
    }
    EXPECT_EQ(device_view_pmf(1, 0.0), 1.0);
    EXPECT_EQ(device_view_pmf(2, 0.0), 0.0);
}

TEST(ArrivalPmf, DomainErrors) {
    EXPECT_THROW(conditional_arrival_pmf(0, 1.0), DomainError);
    EXPECT_THROW(conditional_arrival_pmf(1, 0.0), DomainError);
}

TEST(Threshold, Examples) {
    EXPECT_NEAR(ibl_threshold(100, 200), std::sqrt(2.0) - 1.0, 1e-15);
    EXPECT_NEAR(ibl_threshold(100, 200), 0.414214, 1e-6);
    EXPECT_NEAR(ibl_threshold(77, 77), 1.0, 1e-15);
    EXPECT_LT(ibl_threshold(100, 1e12), 1e-9);
}

TEST(ChaseSinr, ConstantExamples) {
    for (double rho : {0.1, 1.0, 50.0}) EXPECT_DOUBLE_EQ(chase_sinr_constant({{1}, 1.0, {}}, rho, 1), rho);
    EXPECT_DOUBLE_EQ(chase_sinr_constant({{1, 1}, 1.0, {}}, 1.0, 2), 2.0);
    EXPECT_NEAR(chase_sinr_constant({{2, 1}, 1.0, {}}, 1.0, 2), 4.0 / 3.0, 1e-15);
    EXPECT_THROW(chase_sinr_constant({{1}, 1.0, {}}, 1.0, 2), DomainError);
}

TEST(ChaseSinr, RayleighExamples) {
    EXPECT_DOUBLE_EQ(chase_sinr_rayleigh({{1}, 1.0, {0.0}}, 3.0, 1), 3.0);
    EXPECT_DOUBLE_EQ(chase_sinr_rayleigh({{1, 1, 1}, 0.7, {0.0, 0.0, 0.0}}, 2.0, 3), 2.0 * 3 * 0.7);
    EXPECT_NEAR(chase_sinr_rayleigh({{1, 1}, 0.5, {0.3, 0.7}}, 2.0, 2), 4.0 / 3.0, 1e-15);
}

TEST(ChaseSinr, MonotoneInOccupancyAndSnr) {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> kd(1, 12);
    std::uniform_real_distribution<double> rd(0.01, 100.0);
    for (int trial = 0; trial < 2000; ++trial) {
        const int m = 1 + trial % 5;
        AttemptHistory h;
        for (int i = 0; i < m; ++i) h.occupancies.push_back(kd(rng));
        const double rho = rd(rng);
        const double base = chase_sinr_constant(h, rho, m);
        EXPECT_GE(chase_sinr_constant(h, rho * 1.5, m), base);
        const int i = trial % m;
        ++h.occupancies[i];
        EXPECT_LE(chase_sinr_constant(h, rho, m), base);
    }
}

TEST(SupportableOccupancy, Examples) {
    EXPECT_EQ(max_supportable_occupancy({}, 1, 0.5, 10.0), 2);
    // Gamma >= rho m on an empty prefix
    EXPECT_EQ(max_supportable_occupancy({}, 1, 10.0, 10.0), 1);
    EXPECT_EQ(max_supportable_occupancy({}, 2, 25.0, 10.0), 1);
    // argument below one clamps to one
    EXPECT_EQ(max_supportable_occupancy({9, 9}, 3, 5.0, 1.0), 1);
}

TEST(SupportableOccupancy, ConsistentWithChaseSinr) {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> kd(1, 6);
    std::uniform_real_distribution<double> ld(-3.0, 3.0);
    int checked = 0;
    for (int trial = 0; trial < 20000; ++trial) {
        const int m = 1 + trial % 6;
        std::vector<int> prefix;
        for (int i = 1; i < m; ++i) prefix.push_back(kd(rng));
        const double Gamma = std::pow(10.0, ld(rng));
        const double rho = std::pow(10.0, ld(rng));
        double S = 0.0;
        for (int k : prefix) S += k;
        const double arg = m + double(m) * m / Gamma - m / rho - S;
        const auto k = max_supportable_occupancy(prefix, m, Gamma, rho);
        AttemptHistory h{prefix, 1.0, {}};
        if (arg >= 1.0) {
            h.occupancies.push_back(static_cast<int>(k));
            EXPECT_GE(chase_sinr_constant(h, rho, m), Gamma);
            h.occupancies.back() += 1;
            EXPECT_LT(chase_sinr_constant(h, rho, m), Gamma);
            ++checked;
        } else {
            EXPECT_EQ(k, 1);
        }
    }
    EXPECT_GT(checked, 1000);
}

TEST(SupportableOccupancy, EffectiveClampOnlyWhenLoneDecodes) {
    // rho < Gamma: a lone device cannot decode on the first attempt
    EXPECT_EQ(effective_supportable_occupancy(0.0, 1, 2.0, 1.0), 0);
    EXPECT_EQ(effective_supportable_occupancy(0.0, 1, 1.0, 1.0), 1);
    EXPECT_EQ(effective_supportable_occupancy(0.0, 1, 0.5, 10.0), 2);
}

TEST(ScenarioModel, SymbolBudget) {
    Scenario s;
    s.bandwidth_hz = 10'000;
    s.deadline_s = 0.1;
    EXPECT_EQ(s.symbol_budget(), 1000);
    s.deadline_s = 0.3;
    s.bandwidth_hz = 3333.3;
    EXPECT_EQ(s.symbol_budget(), 999);
}

TEST(ScenarioModel, Validation) {
    Scenario s;
    EXPECT_NO_THROW(s.validate());
    auto bad = [&](auto mutate) {
        Scenario t;
        mutate(t);
        EXPECT_THROW(t.validate(), ConfigError);
    };
    bad([](Scenario& t) { t.outage_target = 0.0; });
    bad([](Scenario& t) { t.outage_target = 1.0; });
    bad([](Scenario& t) { t.payload_bits = 0; });
    bad([](Scenario& t) { t.bandwidth_hz = -1.0; });
    bad([](Scenario& t) { t.deadline_s = 1e-9; });
    bad([](Scenario& t) { t.snr_linear = 0.0; });
    bad([](Scenario& t) { t.fading = Fading::rayleigh(0.0); });
}

TEST(GridModel, BlockLengthFitsBudget) {
    for (std::int64_t N : {1, 7, 999, 1000, 12345})
        for (int B = 1; B <= 40; ++B)
            for (int M = 1; M <= 8; ++M) {
                const auto n = block_length(N, B, M);
                EXPECT_LE(n * B * M, N);
                EXPECT_GT((n + 1) * B * M, N);
            }
    EXPECT_THROW(make_ibl_grid(10, 100, 4, 4), ConfigError);
    EXPECT_THROW(block_length(10, 0, 1), ConfigError);
    const auto g = make_ibl_grid(1000, 100, 5, 2);
    EXPECT_EQ(g.block_length, 100);
    EXPECT_NEAR(g.sinr_threshold, 1.0, 1e-15);
}

TEST(GridModel, ConventionsRoundTrip) {
    EXPECT_DOUBLE_EQ(per_tfs_rate(12.0, 3, 2, NuConvention::PerSlot), 2.0);
    EXPECT_DOUBLE_EQ(per_tfs_rate(12.0, 3, 2, NuConvention::PerFrame), 4.0);
    for (auto c : {NuConvention::PerSlot, NuConvention::PerFrame})
        EXPECT_DOUBLE_EQ(aggregate_from_per_tfs(per_tfs_rate(17.5, 7, 3, c), 7, 3, c), 17.5);
}

TEST(Db, RoundTrip) {
    EXPECT_DOUBLE_EQ(snr_from_db(20.0), 100.0);
    EXPECT_NEAR(snr_to_db(snr_from_db(-7.3)), -7.3, 1e-14);
}
