#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "rachopt/ibl.hpp"
#include "rachopt/simulator.hpp"

using namespace rachopt;

namespace {

Scenario scenario(double rho = 10.0) {
    Scenario s;
    s.bandwidth_hz = 1710.0;  // N = 171
    s.deadline_s = 0.1;
    s.payload_bits = 100;
    s.outage_target = 0.1;
    s.snr_linear = rho;
    return s;
}

SimConfig config(int B, int M, double lambda, std::uint64_t arrivals = 20'000, std::uint64_t seed = 7) {
    SimConfig c;
    c.scenario = scenario();
    c.grid = make_ibl_grid(c.scenario.symbol_budget(), c.scenario.payload_bits, B, M);
    c.lambda_per_frame = lambda;
    c.measured_arrivals = arrivals;
    c.seed = seed;
    return c;
}

std::uint64_t resolved(const SimStats& s) {
    return std::accumulate(s.per_attempt_success_histogram.begin(), s.per_attempt_success_histogram.end(),
                           std::uint64_t{0});
}

}  // namespace

TEST(Simulator, SameSeedSameStats) {
    const auto a = run_simulation(config(2, 3, 4.0));
    const auto b = run_simulation(config(2, 3, 4.0));
    EXPECT_EQ(a.failures, b.failures);
    EXPECT_EQ(a.per_attempt_success_histogram, b.per_attempt_success_histogram);
    EXPECT_EQ(a.tfs_occupancy_sum, b.tfs_occupancy_sum);
    const auto c = run_simulation(config(2, 3, 4.0, 20'000, 8));
    EXPECT_NE(a.tfs_occupancy_sum, c.tfs_occupancy_sum);
}

TEST(Simulator, EveryArrivalResolvedOnce) {
    for (int M : {1, 2, 4}) {
        const auto s = run_simulation(config(2, M, 3.0));
        EXPECT_EQ(s.arrivals_measured, 20'000u);
        EXPECT_EQ(resolved(s) + s.failures, s.arrivals_measured) << M;
        EXPECT_EQ(s.per_attempt_success_histogram.size(), static_cast<std::size_t>(M));
        EXPECT_DOUBLE_EQ(s.p_fail_hat, static_cast<double>(s.failures) / s.arrivals_measured);
    }
}

TEST(Simulator, UndecodableThresholdFailsEverything) {
    SimConfig c = config(1, 3, 0.5, 2'000);
    c.grid.sinr_threshold = 3.0 * c.scenario.snr_linear * 1.01;  // beyond m rho for all m <= M
    const auto s = run_simulation(c);
    EXPECT_EQ(s.failures, s.arrivals_measured);
    EXPECT_DOUBLE_EQ(s.p_fail_hat, 1.0);
}

TEST(Simulator, VanishingLoadNeverFails) {
    const auto s = run_simulation(config(1, 1, 1e-4, 5'000));
    EXPECT_LE(s.p_fail_hat, 2e-3);
    EXPECT_NEAR(s.mean_occupancy_seen(), 1.0, 1e-2);
}

TEST(Simulator, FailureGrowsWithLoad) {
    double prev = -1.0, prev_se = 0.0;
    for (double lambda : {0.5, 2.0, 6.0}) {
        const auto s = run_simulation(config(1, 1, lambda));
        EXPECT_GT(s.p_fail_hat - prev, -3.0 * std::hypot(s.binomial_stderr, prev_se)) << lambda;
        EXPECT_GT(s.p_fail_hat, prev) << lambda;
        prev = s.p_fail_hat;
        prev_se = s.binomial_stderr;
    }
}

TEST(Simulator, AggregateRateEstimate) {
    SimStats all_ok;
    all_ok.arrivals_measured = 100;
    all_ok.per_attempt_success_histogram = {100, 0, 0};
    EXPECT_DOUBLE_EQ(estimate_aggregate_rate(all_ok, 2.0, 3), 2.0);
    SimStats none;
    none.arrivals_measured = 100;
    none.failures = 100;
    none.per_attempt_success_histogram = {0, 0, 0};
    EXPECT_DOUBLE_EQ(estimate_aggregate_rate(none, 2.0, 3), 6.0);
    SimStats half;
    half.arrivals_measured = 100;
    half.per_attempt_success_histogram = {50, 50};
    EXPECT_DOUBLE_EQ(estimate_aggregate_rate(half, 2.0, 2), 3.0);
    EXPECT_DOUBLE_EQ(estimate_aggregate_rate(SimStats{}, 2.0, 4), 2.0);
}

TEST(Simulator, MergeSumsCountsAndCommutes) {
    const auto a = run_simulation(config(2, 2, 2.0, 3'000, 1));
    const auto b = run_simulation(config(2, 2, 2.0, 5'000, 2));
    const auto c = run_simulation(config(2, 2, 2.0, 4'000, 3));
    const auto ab = merge(a, b);
    EXPECT_EQ(ab.arrivals_measured, 8'000u);
    EXPECT_EQ(ab.failures, a.failures + b.failures);
    EXPECT_EQ(resolved(ab), resolved(a) + resolved(b));
    EXPECT_DOUBLE_EQ(ab.p_fail_hat, static_cast<double>(a.failures + b.failures) / 8'000.0);
    const auto ba = merge(b, a);
    EXPECT_EQ(ab.per_attempt_success_histogram, ba.per_attempt_success_histogram);
    EXPECT_DOUBLE_EQ(ab.mean_occupancy_per_tfs, ba.mean_occupancy_per_tfs);
    const auto l = merge(merge(a, b), c), r = merge(a, merge(b, c));
    EXPECT_EQ(l.failures, r.failures);
    EXPECT_EQ(l.tfs_occupancy_sum, r.tfs_occupancy_sum);
    EXPECT_DOUBLE_EQ(l.mean_occupancy_per_tfs, r.mean_occupancy_per_tfs);
}

TEST(Simulator, ReplicationsAreDeterministic) {
    const auto a = run_replications(config(1, 2, 1.5, 2'000), 3);
    const auto b = run_replications(config(1, 2, 1.5, 2'000), 3);
    EXPECT_EQ(a.arrivals_measured, 6'000u);
    EXPECT_EQ(a.failures, b.failures);
}

TEST(Simulator, RejectsBadConfig) {
    SimConfig c = config(1, 1, -1.0);
    EXPECT_THROW(run_simulation(c), ConfigError);
    c = config(1, 1, 2e6);
    EXPECT_THROW(run_simulation(c), ConfigError);
    c = config(1, 1, 1.0);
    c.grid.bins = 0;
    EXPECT_THROW(run_simulation(c), ConfigError);
    c = config(1, 1, 1.0);
    c.scenario.regime = Regime::FBL;
    c.channel_model = ChannelModel::RayleighBlock;
    EXPECT_THROW(run_simulation(c), ConfigError);
}

// A tagged device sees itself plus a Poisson number of others, so the
// simulator is checked against the 1 + Poisson occupancy law.
TEST(Simulator, MatchesDeviceViewOutageSingleAttempt) {
    OutageOptions dv;
    dv.law = OccupancyLaw::DeviceView;
    for (double nu : {0.5, 2.0}) {
        const auto c = config(1, 1, nu, 40'000);
        const auto s = run_simulation(c);
        const double an = ibl_constant_profile({nu}, c.grid, c.scenario.snr_linear, dv).final();
        EXPECT_NEAR(s.p_fail_hat, an, 4.0 * s.binomial_stderr + 1e-12) << nu;
    }
}

// The analytic profile draws occupancy independently per attempt. In the
// simulator devices that collided redraw a bin and meet again with
// probability 1/B, so agreement needs B large.
SimConfig retransmission_config(int B, double lambda) {
    SimConfig c = config(B, 3, lambda, 40'000);
    c.scenario.bandwidth_hz = 5'000.0 * B;  // n = 166, Gamma ~ 0.52
    c.grid = make_ibl_grid(c.scenario.symbol_budget(), c.scenario.payload_bits, B, 3);
    return c;
}

FixedPointResult device_view_fixed_point(const SimConfig& c) {
    const int B = c.grid.bins, M = c.grid.attempts;
    OutageOptions dv;
    dv.law = OccupancyLaw::DeviceView;
    auto eval = [&](double x) {
        return ibl_constant_profile({per_tfs_rate(x, B, M, NuConvention::PerSlot)}, c.grid, c.scenario.snr_linear,
                                    dv)
            .p_fail_cumulative;
    };
    return solve_aggregate_rate(c.lambda_per_frame, eval, M);
}

TEST(Simulator, MatchesDeviceViewFixedPointWithRetransmissions) {
    const auto c = retransmission_config(20, 80.0);
    const auto fp = device_view_fixed_point(c);
    const auto s = run_simulation(c);
    EXPECT_NEAR(estimate_aggregate_rate(s, c.lambda_per_frame, 3), fp.lambda_aggregate, 0.02 * fp.lambda_aggregate);
    EXPECT_GT(s.p_fail_hat, 0.0);
}

TEST(Simulator, ReCollisionGapShrinksWithBins) {
    OutageOptions dv;
    dv.law = OccupancyLaw::DeviceView;
    double prev_gap = 1.0;
    for (int B : {2, 5, 20}) {
        const auto c = retransmission_config(B, 4.0 * B);
        const auto fp = device_view_fixed_point(c);
        const auto s = run_simulation(c);
        const double an = ibl_constant_profile({per_tfs_rate(fp.lambda_aggregate, B, 3, NuConvention::PerSlot)},
                                               c.grid, c.scenario.snr_linear, dv)
                              .final();
        const double gap = s.p_fail_hat - an;
        EXPECT_GT(gap, 3.0 * s.binomial_stderr) << B;  // correlated retries fail more often
        EXPECT_LT(gap, prev_gap) << B;
        prev_gap = gap;
    }
}

TEST(Simulator, OccupancyMatchesEmpiricalAggregateRate) {
    const int B = 2, M = 3;
    const auto c = config(B, M, 4.0, 40'000);
    const auto s = run_simulation(c);
    const double emp = estimate_aggregate_rate(s, c.lambda_per_frame, M);
    EXPECT_NEAR(s.mean_occupancy_per_tfs, emp / (B * M), 0.02 * emp / (B * M));
    // a tagged device shares its TFS with nu others on average
    EXPECT_NEAR(s.mean_occupancy_seen(), 1.0 + s.mean_occupancy_per_tfs, 0.02 * (1.0 + s.mean_occupancy_per_tfs));
}

TEST(Simulator, RayleighSingleAttemptMatchesDeviceView) {
    SimConfig c = config(1, 1, 1.0, 40'000);
    c.scenario.bandwidth_hz = 1000.0;  // Gamma = 1
    c.scenario.snr_linear = 1.0;
    c.scenario.fading = Fading::rayleigh(1.0);
    c.grid = make_ibl_grid(c.scenario.symbol_budget(), c.scenario.payload_bits, 1, 1);
    c.channel_model = ChannelModel::RayleighBlock;
    const auto s = run_simulation(c);
    const double an = 1.0 - interference_term_f(1.0, 1.0, 1.0, 1.0, OccupancyLaw::DeviceView);
    EXPECT_NEAR(s.p_fail_hat, an, 4.0 * s.binomial_stderr);
}
