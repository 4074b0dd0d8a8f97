#pragma once

// Slot-level Monte Carlo of the random-access protocol with Chase combining.
//
// Devices arrive per slot ~ Poisson(lambda / M) and get M consecutive slots
// starting with their arrival slot. In each slot every active device picks
// one of the B bins uniformly; all devices in a bin interfere with each
// other. A device that has not decoded after M attempts is a failure.
// Retransmitting devices persist across slots, so occupancies of successive
// attempts are correlated, unlike in the analysis.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "rachopt/fbl.hpp"
#include "rachopt/ibl.hpp"
#include "rachopt/model.hpp"

namespace rachopt {

enum class ChannelModel { ConstantSnr, RayleighBlock };

inline const char* to_string(ChannelModel c) {
    return c == ChannelModel::ConstantSnr ? "constant" : "rayleigh";
}

struct SimConfig {
    Scenario scenario{};
    Grid grid{};
    double lambda_per_frame = 1.0;
    int warmup_slots = -1;  // -1: 20 M slots, extended until the active count settles
    std::uint64_t measured_arrivals = 100'000;
    std::uint64_t seed = 1;
    ChannelModel channel_model = ChannelModel::ConstantSnr;
};

struct SimStats {
    std::uint64_t arrivals_measured = 0;
    std::uint64_t failures = 0;
    double p_fail_hat = 0.0;
    double binomial_stderr = 0.0;
    std::vector<std::uint64_t> per_attempt_success_histogram;
    double mean_occupancy_per_tfs = 0.0;
    // Extra accumulators; the derived fields above are recomputed from them.
    std::uint64_t transmissions = 0;        // by measured devices
    std::uint64_t occupancy_seen_sum = 0;   // sum of k over those transmissions
    std::uint64_t slots_measured = 0;
    std::uint64_t tfs_occupancy_sum = 0;    // over all TFS in measured slots
    int bins = 1;
    int warmup_slots_used = 0;

    [[nodiscard]] double mean_occupancy_seen() const {
        return transmissions ? static_cast<double>(occupancy_seen_sum) / transmissions : 0.0;
    }

    void finalize() {
        const double n = static_cast<double>(arrivals_measured);
        p_fail_hat = n > 0 ? static_cast<double>(failures) / n : 0.0;
        binomial_stderr = n > 0 ? std::sqrt(p_fail_hat * (1.0 - p_fail_hat) / n) : 0.0;
        mean_occupancy_per_tfs =
            slots_measured ? static_cast<double>(tfs_occupancy_sum) /
                                 (static_cast<double>(slots_measured) * bins)
                           : 0.0;
    }
};

/// Merge replication statistics; associative and order independent.
inline SimStats merge(const SimStats& a, const SimStats& b) {
    SimStats r = a;
    r.arrivals_measured += b.arrivals_measured;
    r.failures += b.failures;
    r.transmissions += b.transmissions;
    r.occupancy_seen_sum += b.occupancy_seen_sum;
    r.slots_measured += b.slots_measured;
    r.tfs_occupancy_sum += b.tfs_occupancy_sum;
    r.warmup_slots_used = std::max(a.warmup_slots_used, b.warmup_slots_used);
    if (r.per_attempt_success_histogram.size() < b.per_attempt_success_histogram.size())
        r.per_attempt_success_histogram.resize(b.per_attempt_success_histogram.size(), 0);
    for (std::size_t i = 0; i < b.per_attempt_success_histogram.size(); ++i)
        r.per_attempt_success_histogram[i] += b.per_attempt_success_histogram[i];
    r.finalize();
    return r;
}

namespace detail {

struct Device {
    int attempts = 0;
    bool measured = false;
    double occupancy_sum = 0.0;
    double desired = 1.0;
    double interference_sum = 0.0;
    int bin = 0;
};

}  // namespace detail

inline SimStats run_simulation(const SimConfig& cfg) {
    const auto& sc = cfg.scenario;
    const auto& g = cfg.grid;
    const int B = g.bins;
    const int M = g.attempts;
    if (B < 1 || M < 1 || g.block_length < 1) throw ConfigError("invalid grid");
    if (!(cfg.lambda_per_frame >= 0.0)) throw ConfigError("lambda must be >= 0");
    if (cfg.lambda_per_frame > 1e6)
        throw ConfigError("offered load above 1e6 per slot; simulation would not terminate");
    if (sc.regime == Regime::FBL && cfg.channel_model == ChannelModel::RayleighBlock)
        throw ConfigError("finite-block-length simulation supports constant SNR only");

    const double rho = sc.snr_linear;
    const double Gamma = g.sinr_threshold;
    const double mu = sc.fading.mean_inverse;
    const auto n = g.block_length;
    const int L = sc.payload_bits;
    const bool rayleigh = cfg.channel_model == ChannelModel::RayleighBlock;

    std::mt19937_64 rng(derive_seed(cfg.seed, 0));
    std::poisson_distribution<std::uint64_t> arrivals(cfg.lambda_per_frame / M);
    std::uniform_int_distribution<int> pick_bin(0, B - 1);
    std::exponential_distribution<double> fade(mu > 0.0 ? mu : 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    SimStats st;
    st.bins = B;
    st.per_attempt_success_histogram.assign(static_cast<std::size_t>(M), 0);

    std::vector<detail::Device> active, next;
    std::vector<int> occ(static_cast<std::size_t>(B));
    std::vector<double> bin_gain(static_cast<std::size_t>(B));
    std::vector<double> slot_gain;

    // Warmup: fixed length, or 20 M slots extended until the mean active count
    // of two successive 10 M-slot windows differs by under 1%.
    long warmup = cfg.warmup_slots >= 0 ? cfg.warmup_slots : -1;
    const long window = 10L * M;
    double win_prev = -1.0, win_acc = 0.0;
    long win_len = 0;

    std::uint64_t admitted = 0;
    std::uint64_t pending_measured = 0;
    long slot = 0;
    bool measuring = warmup == 0;

    for (;; ++slot) {
        if (!measuring && warmup >= 0 && slot >= warmup) measuring = true;
        if (measuring && admitted >= cfg.measured_arrivals && pending_measured == 0) break;

        const auto fresh = arrivals(rng);
        for (std::uint64_t i = 0; i < fresh; ++i) {
            detail::Device d;
            if (measuring && admitted < cfg.measured_arrivals) {
                d.measured = true;
                ++admitted;
                ++pending_measured;
            }
            if (rayleigh) d.desired = fade(rng);
            active.push_back(d);
        }

        std::fill(occ.begin(), occ.end(), 0);
        for (auto& d : active) {
            d.bin = pick_bin(rng);
            ++occ[d.bin];
        }
        if (rayleigh) {
            std::fill(bin_gain.begin(), bin_gain.end(), 0.0);
            slot_gain.resize(active.size());
            for (std::size_t i = 0; i < active.size(); ++i) {
                slot_gain[i] = fade(rng);
                bin_gain[active[i].bin] += slot_gain[i];
            }
        }
        if (measuring) {
            ++st.slots_measured;
            st.tfs_occupancy_sum += active.size();
        }

        next.clear();
        for (std::size_t i = 0; i < active.size(); ++i) {
            auto& d = active[i];
            const int k = occ[d.bin];
            const int m = ++d.attempts;
            bool ok;
            if (rayleigh) {
                d.interference_sum += rho * (bin_gain[d.bin] - slot_gain[i]);
                const double md = m;
                ok = md * md * rho * d.desired / (md + d.interference_sum) >= Gamma;
            } else {
                d.occupancy_sum += k;
                const double z = chase_sinr_from_sum(d.occupancy_sum, rho, m);
                if (sc.regime == Regime::IBL) ok = z >= Gamma || (k == 1 && rho >= Gamma);
                else ok = unif(rng) >= block_error_rate(n, L, z);
            }
            if (d.measured) {
                ++st.transmissions;
                st.occupancy_seen_sum += static_cast<std::uint64_t>(k);
            }
            if (ok) {
                if (d.measured) {
                    ++st.per_attempt_success_histogram[m - 1];
                    --pending_measured;
                }
            } else if (m >= M) {
                if (d.measured) {
                    ++st.failures;
                    --pending_measured;
                }
            } else {
                next.push_back(d);
            }
        }
        active.swap(next);

        if (!measuring && warmup < 0) {
            win_acc += static_cast<double>(active.size());
            if (++win_len == window) {
                const double mean = win_acc / window;
                const bool settled =
                    win_prev >= 0.0 && std::abs(mean - win_prev) <= 0.01 * std::max(win_prev, 1.0);
                if (slot + 1 >= 20L * M && (settled || slot + 1 >= 2000L * M)) warmup = slot + 1;
                win_prev = mean;
                win_acc = 0.0;
                win_len = 0;
            }
        }
    }
    st.arrivals_measured = admitted;
    st.warmup_slots_used = static_cast<int>(warmup < 0 ? 0 : warmup);
    st.finalize();
    return st;
}

/// Independent replications with seeds derived from cfg.seed, merged.
inline SimStats run_replications(const SimConfig& cfg, int replications) {
    SimStats total;
    for (int r = 0; r < replications; ++r) {
        SimConfig c = cfg;
        c.seed = derive_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(r));
        const auto s = run_simulation(c);
        total = r == 0 ? s : merge(total, s);
    }
    return total;
}

/// lambda (1 + sum_{m=1}^{M-1} fraction unresolved after m attempts).
inline double estimate_aggregate_rate(const SimStats& st, double lambda, int M) {
    if (st.arrivals_measured == 0) return lambda;
    const double n = static_cast<double>(st.arrivals_measured);
    double resolved = 0.0, sum = 0.0;
    for (int m = 1; m < M; ++m) {
        if (m - 1 < static_cast<int>(st.per_attempt_success_histogram.size()))
            resolved += static_cast<double>(st.per_attempt_success_histogram[m - 1]);
        sum += (n - resolved) / n;
    }
    return lambda * (1.0 + sum);
}

}  // namespace rachopt
