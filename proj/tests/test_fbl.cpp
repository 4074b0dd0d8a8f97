#include <cmath>
#include <random>

#include <boost/math/tools/roots.hpp>
#include <gtest/gtest.h>

#include "rachopt/fbl.hpp"

using namespace rachopt;

namespace {

const double kLog2eSq = std::numbers::log2e * std::numbers::log2e;

Grid fgrid(int M, std::int64_t n) { return Grid{1, M, n * M, n, 0.0}; }

}  // namespace

TEST(Dispersion, Examples) {
    EXPECT_EQ(dispersion(0.0), 0.0);
    EXPECT_NEAR(dispersion(std::numeric_limits<double>::infinity()), 2.081368, 1e-6);
    EXPECT_NEAR(dispersion(1e12), kLog2eSq, 1e-9);
    EXPECT_NEAR(dispersion(1.0), 0.75 * kLog2eSq, 1e-15);
    EXPECT_NEAR(dispersion(1.0), 1.561026, 1e-6);
    EXPECT_THROW(dispersion(-1.0), DomainError);
}

TEST(AchievableRate, Examples) {
    for (double x : {0.1, 1.0, 30.0})
        EXPECT_NEAR(achievable_rate(200, 0.5, x), std::log2(1.0 + x) + 0.5 * std::log2(200.0) / 200.0, 1e-14);
    EXPECT_NEAR(achievable_rate(1'000'000'000'000, 1e-3, 3.0), 2.0, 1e-5);
    EXPECT_NEAR(achievable_rate(200, 1e-3, 1.0), 1.0 - std::sqrt(1.561026 / 200) * 3.0902 + 0.5 * std::log2(200.0) / 200.0, 1e-5);
    EXPECT_NEAR(achievable_rate(200, 1e-3, 1.0), 0.7461, 1e-4);
    EXPECT_NEAR(achievable_rate(FblRateParams{200, 100, 1e-3}, 1.0), achievable_rate(200, 1e-3, 1.0), 0.0);
}

TEST(FMetric, Examples) {
    EXPECT_NEAR(f_metric(200, 100, 1.0), (200.0 + 0.5 * std::log2(200.0) - 100.0) / std::sqrt(200.0 * 0.75 * kLog2eSq), 1e-12);
    EXPECT_NEAR(f_metric(200, 100, 1.0), 5.876, 1e-3);
    const double L = 300.0 * std::log2(1.0 + 2.5) + 0.5 * std::log2(300.0);
    EXPECT_NEAR(f_metric(300, L, 2.5), 0.0, 1e-12);
}

TEST(BlockErrorRate, Examples) {
    EXPECT_EQ(block_error_rate(200, 100, std::numeric_limits<double>::infinity()), 0.0);
    EXPECT_NEAR(block_error_rate(200, 100, 1.0), 2.1e-9, 0.1e-9);
    const double L = 300.0 * std::log2(1.0 + 2.5) + 0.5 * std::log2(300.0);
    EXPECT_NEAR(block_error_rate(300, L, 2.5), 0.5, 1e-12);
}

TEST(BlockErrorRate, DecreasingInSinrAndBlockLength) {
    for (std::int64_t n : {100, 500, 2000}) {
        double prev = 1.0;
        for (double x = 0.01; x < 100.0; x *= 1.2) {
            const double e = block_error_rate(n, 100, x);
            EXPECT_LE(e, prev);
            prev = e;
        }
    }
    // fixed rate L/n = 0.5, growing n
    for (double x : {0.8, 1.0, 3.0}) {
        double prev = 1.0;
        for (std::int64_t n = 100; n <= 3200; n *= 2) {
            const double e = block_error_rate(n, 0.5 * static_cast<double>(n), x);
            EXPECT_LE(e, prev) << x << " " << n;
            prev = e;
        }
    }
}

TEST(FMetricShape, MonotoneConcavePositiveOnGrid) {
    // finite differences in sinr, step 1e-4, tolerance 1e-6
    const double h = 1e-4;
    int points = 0;
    for (std::int64_t n : {100, 500, 2000}) {
        for (double L : {16.0, 64.0, 100.0, 400.0}) {
            if (static_cast<double>(n) > std::pow(2.0, 2.0 * L)) continue;
            for (int i = 0; i < 50; ++i) {
                const double x = 0.01 * std::pow(1e4, i / 49.0);
                const double f0 = f_metric(n, L, x), fp = f_metric(n, L, x + h), fm = f_metric(n, L, std::max(x - h, 1e-12));
                EXPECT_GT(fp - f0, -1e-6) << n << " " << L << " " << x;
                EXPECT_LT(fp - 2.0 * f0 + fm, 1e-6) << n << " " << L << " " << x;
                ++points;
            }
        }
    }
    EXPECT_GT(points, 500);
}

TEST(FblThreshold, SolvesRateEquation) {
    for (std::int64_t n : {100, 250, 1000})
        for (double L : {20.0, 100.0, 300.0}) {
            double prev = std::numeric_limits<double>::infinity();
            for (double eps : {1e-5, 1e-3, 0.05, 0.3}) {
                const double G = fbl_threshold(n, L, eps);
                EXPECT_NEAR(achievable_rate(n, eps, G), L / static_cast<double>(n), 1e-10) << n << " " << eps << " " << L;
                EXPECT_LT(G, prev);
                prev = G;
            }
        }
}

TEST(FblThreshold, ClosedFormAtHalfAndShannonLimit) {
    const double G = fbl_threshold(200, 100, 0.5);
    EXPECT_NEAR(G, std::exp2((100.0 - 0.5 * std::log2(200.0)) / 200.0) - 1.0, 1e-15);
    // n large, L/n fixed: approaches the IBL threshold
    const std::int64_t n = 100'000'000;
    EXPECT_NEAR(fbl_threshold(n, 0.5 * n, 1e-3), std::sqrt(2.0) - 1.0, 1e-3);
    EXPECT_THROW(fbl_threshold(200, 100, 0.6), DomainError);
    EXPECT_THROW(fbl_threshold(10, 1000, 1e-3), NoSolutionError);
}

TEST(FblThreshold, MatchesBoostRootFinder) {
    const std::int64_t n = 333;
    const double L = 150, eps = 1e-4;
    boost::uintmax_t it = 200;
    auto r = boost::math::tools::bisect([&](double x) { return achievable_rate(n, eps, x) - L / n; }, 1e-6, 1e3,
                                        boost::math::tools::eps_tolerance<double>(50), it);
    EXPECT_NEAR(fbl_threshold(n, L, eps), 0.5 * (r.first + r.second), 1e-12);
}

TEST(OutageFbl, MatchesMonteCarlo) {
    const double nu = 1.0, rho = 1.0;
    const int L = 100;
    const auto g = fgrid(1, 200);
    const double exact = outage_fbl(PerTfsRate{nu}, g, rho, L, 1).final();
    std::mt19937_64 rng(17);
    std::poisson_distribution<int> pois(nu);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int n = 1'000'000;
    int fails = 0;
    for (int i = 0; i < n; ++i) {
        int k;
        do k = pois(rng);
        while (k == 0);
        fails += u(rng) < block_error_rate(200, L, rho / (1.0 + rho * (k - 1)));
    }
    const double ph = double(fails) / n;
    EXPECT_LE(std::abs(ph - exact), 3.0 * std::sqrt(exact * (1.0 - exact) / n)) << exact << " " << ph;
}

TEST(OutageFbl, MatchesNestedSum) {
    const double nu = 0.8, rho = 2.0;
    const int L = 120;
    const auto g = fgrid(2, 150);
    double ref = 0.0;
    for (int k1 = 1; k1 < 40; ++k1)
        for (int k2 = 1; k2 < 40; ++k2)
            ref += conditional_arrival_pmf(k1, nu) * conditional_arrival_pmf(k2, nu) *
                   block_error_rate(150, L, chase_sinr_from_sum(k1, rho, 1)) *
                   block_error_rate(150, L, chase_sinr_from_sum(k1 + k2, rho, 2));
    EXPECT_NEAR(outage_fbl(PerTfsRate{nu}, g, rho, L, 2).final(), ref, 1e-13);
}

TEST(OutageFbl, LimitsAndMonotonicity) {
    EXPECT_LT(outage_fbl(PerTfsRate{1e-12}, fgrid(1, 200), 1e9, 100, 1).final(), 1e-12);
    const auto prof = outage_fbl(PerTfsRate{2.0}, fgrid(6, 120), 3.0, 100, 6);
    for (int m = 2; m <= 6; ++m) EXPECT_LE(prof.at(m), prof.at(m - 1));
}

TEST(OutageFblHighSnr, Examples) {
    const auto g = fgrid(2, 200);
    EXPECT_NEAR(outage_fbl_high_snr(PerTfsRate{1e-12}, fgrid(1, 200), 1.0, 100, 1), block_error_rate(200, 100, 1.0), 1e-20);
    EXPECT_LT(outage_fbl_high_snr(PerTfsRate{1.0}, g, 1e12, 100, 2), 1e-300);
    const double d1 = conditional_arrival_pmf(1, 0.2);
    const double expect = d1 * d1 * block_error_rate(200, 100, 10.0) * block_error_rate(200, 100, 20.0);
    EXPECT_NEAR(outage_fbl_high_snr(PerTfsRate{0.2}, g, 10.0, 100, 2), expect, 1e-15 * expect + 1e-300);
}

TEST(MeanFirstSinr, ClosedFormMatchesDirectSum) {
    for (double nu : {0.01, 0.5, 1.0, 4.0, 30.0})
        for (double rho : {0.05, 0.5, 2.0, 10.0}) {
            const double d = mean_first_sinr_direct(nu, rho);
            EXPECT_NEAR(mean_first_sinr_closed_form(nu, rho), d, 1e-9 * d) << nu << " " << rho;
            EXPECT_NEAR(mean_first_sinr(nu, rho), d, 1e-9 * d);
        }
    EXPECT_THROW(mean_first_sinr_closed_form(1.0, 1.0), DomainError);
    EXPECT_GT(mean_first_sinr(1.0, 1.0), 0.0);
}

TEST(JensenChain, ThreeTermOrdering) {
    const double nu = 1.0, rho = 0.5;
    const std::int64_t n = 500;
    const double L = 100;
    const auto t = occupancy_table(nu, OccupancyLaw::ZeroTruncated, 1e-20);
    double eq = 0.0, ef = 0.0, ex = 0.0;
    for (int k = 1; k <= t.k_hi; ++k) {
        const double x = rho / (1.0 + rho * (k - 1));
        eq += t.p[k] * q_function(f_metric(n, L, x));
        ef += t.p[k] * f_metric(n, L, x);
        ex += t.p[k] * x;
    }
    EXPECT_GE(eq, q_function(ef));
    EXPECT_GE(q_function(ef), q_function(f_metric(n, L, ex)));
}

TEST(LowSnrBounds, SandwichExactValue) {
    for (double nu : {0.2, 1.0, 3.0})
        for (double rho : {0.3, 1.0, 3.0}) {
            const auto g = fgrid(1, 500);
            const auto b = outage_fbl_low_snr_bounds(PerTfsRate{nu}, g, rho, 100);
            const double exact = outage_fbl(PerTfsRate{nu}, g, rho, 100, 1).final();
            EXPECT_LE(b.lower, exact + 1e-12) << nu << " " << rho;
            EXPECT_GE(b.upper, exact - 1e-12) << nu << " " << rho;
        }
    const auto b = outage_fbl_low_snr_bounds(PerTfsRate{1e-12}, fgrid(1, 500), 1e9, 100);
    EXPECT_LT(b.lower, 1e-12);
    EXPECT_LT(b.upper, 1e-12);
}

TEST(LowSnrBounds, LowerBoundNeedsPositiveMetric) {
    // rate 0.2 above log2(1.05): f < 0 where Q is concave, Jensen no longer applies
    const Grid g = fgrid(1, 500);
    const auto b = outage_fbl_low_snr_bounds(PerTfsRate{1.0}, g, 0.05, 100);
    EXPECT_LT(f_metric(500, 100, mean_first_sinr(1.0, 0.05)), 0.0);
    EXPECT_GT(b.lower, outage_fbl(PerTfsRate{1.0}, g, 0.05, 100, 1).final());
}
