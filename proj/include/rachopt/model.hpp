#pragma once

// Protocol domain types, the per-TFS occupancy law, block-length accounting
// and the Chase-combined SINR.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "rachopt/specfun.hpp"

namespace rachopt {

/// Scenario or grid values that cannot describe a usable system.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class FadingKind { ConstantSnr, Rayleigh };

struct Fading {
    FadingKind kind = FadingKind::ConstantSnr;
    double mean_inverse = 1.0;  // mu; channel power gain ~ Exp with mean 1/mu

    static Fading constant() { return {}; }
    static Fading rayleigh(double mu) { return {FadingKind::Rayleigh, mu}; }
};

enum class Regime { IBL, FBL };

// How the aggregate per-frame rate lambda_M maps to the mean occupancy of one
// time-frequency slot. PerSlot spreads lambda_M over the M slots of a frame
// and the B bins of each slot; PerFrame divides by B only.
enum class NuConvention { PerSlot, PerFrame };

// Law of the occupancy seen by a transmitting device. ZeroTruncated is the
// Poisson law conditioned on k >= 1; DeviceView is 1 + Poisson(nu), i.e. the
// tagged device plus independent others.
enum class OccupancyLaw { ZeroTruncated, DeviceView };

inline const char* to_string(Regime r) { return r == Regime::IBL ? "ibl" : "fbl"; }
inline const char* to_string(FadingKind f) {
    return f == FadingKind::ConstantSnr ? "constant" : "rayleigh";
}
inline const char* to_string(NuConvention c) {
    return c == NuConvention::PerSlot ? "per-slot" : "per-frame";
}
inline const char* to_string(OccupancyLaw l) {
    return l == OccupancyLaw::ZeroTruncated ? "zero-truncated" : "device-view";
}

struct Scenario {
    double bandwidth_hz = 10'000.0;
    double deadline_s = 0.1;
    int payload_bits = 100;
    double outage_target = 0.1;
    double snr_linear = 100.0;
    Fading fading{};
    Regime regime = Regime::IBL;

    /// N = floor(T W). The tiny offset keeps e.g. 0.1 * 10000 from landing on 999.
    [[nodiscard]] std::int64_t symbol_budget() const {
        return static_cast<std::int64_t>(std::floor(deadline_s * bandwidth_hz * (1.0 + 1e-12)));
    }

    void validate() const {
        if (!(bandwidth_hz > 0.0) || !std::isfinite(bandwidth_hz))
            throw ConfigError("bandwidth must be positive");
        if (!(deadline_s > 0.0) || !std::isfinite(deadline_s))
            throw ConfigError("deadline must be positive");
        if (payload_bits <= 0) throw ConfigError("payload must be a positive bit count");
        if (!(outage_target > 0.0 && outage_target < 1.0))
            throw ConfigError("outage target must lie in (0,1)");
        if (!(snr_linear > 0.0) || !std::isfinite(snr_linear))
            throw ConfigError("snr must be positive");
        if (fading.kind == FadingKind::Rayleigh && !(fading.mean_inverse > 0.0))
            throw ConfigError("rayleigh mu must be positive");
        if (symbol_budget() < 1) throw ConfigError("T*W must be at least one symbol");
    }
};

struct Grid {
    int bins = 1;
    int attempts = 1;
    std::int64_t symbol_budget = 0;
    std::int64_t block_length = 0;
    double sinr_threshold = 0.0;
};

struct AttemptHistory {
    std::vector<int> occupancies;
    double desired_channel = 1.0;
    std::vector<double> interference;  // I_K per attempt, already scaled by rho
};

struct PerTfsRate {
    double mean = 0.0;
};

inline double snr_from_db(double db) { return std::pow(10.0, db / 10.0); }
inline double snr_to_db(double linear) { return 10.0 * std::log10(linear); }

inline std::int64_t block_length(std::int64_t N, int B, int M) {
    if (B < 1 || M < 1) throw ConfigError("bins and attempts must be >= 1");
    return N / (static_cast<std::int64_t>(B) * M);
}

/// Gamma = 2^(L/n) - 1.
inline double ibl_threshold(double L, double n) {
    return std::expm1(std::log(2.0) * L / n);
}

inline Grid make_grid(std::int64_t N, int B, int M, double threshold) {
    Grid g{B, M, N, block_length(N, B, M), threshold};
    if (g.block_length < 1) throw ConfigError("block length below one symbol");
    return g;
}

inline Grid make_ibl_grid(std::int64_t N, int L, int B, int M) {
    const auto n = block_length(N, B, M);
    if (n < 1) throw ConfigError("block length below one symbol");
    return Grid{B, M, N, n, ibl_threshold(L, static_cast<double>(n))};
}

inline double per_tfs_rate(double lambda_aggregate, int B, int M, NuConvention c) {
    return c == NuConvention::PerSlot ? lambda_aggregate / (static_cast<double>(B) * M)
                                      : lambda_aggregate / B;
}

inline double aggregate_from_per_tfs(double nu, int B, int M, NuConvention c) {
    return c == NuConvention::PerSlot ? nu * B * M : nu * B;
}

/// log of 1 - e^-nu, accurate for small and large nu.
inline double log_one_minus_exp_neg(double nu) {
    return nu < 0.693 ? std::log(-std::expm1(-nu)) : std::log1p(-std::exp(-nu));
}

/// D(k, nu) = nu^k e^-nu / (k! (1 - e^-nu)), k >= 1.
inline double conditional_arrival_pmf(int k, double nu) {
    if (k < 1) throw DomainError("occupancy must be >= 1");
    if (!(nu > 0.0)) throw DomainError("per-TFS rate must be positive");
    const double lp = k * std::log(nu) - nu - std::lgamma(k + 1.0) - log_one_minus_exp_neg(nu);
    return std::exp(lp);
}

inline double conditional_arrival_pmf(int k, PerTfsRate nu) {
    return conditional_arrival_pmf(k, nu.mean);
}

/// P(K = k) for K = 1 + Poisson(nu).
inline double device_view_pmf(int k, double nu) {
    if (k < 1) throw DomainError("occupancy must be >= 1");
    if (nu <= 0.0) return k == 1 ? 1.0 : 0.0;
    return std::exp((k - 1) * std::log(nu) - nu - std::lgamma(static_cast<double>(k)));
}

inline double occupancy_pmf(int k, double nu, OccupancyLaw law) {
    return law == OccupancyLaw::ZeroTruncated ? conditional_arrival_pmf(k, nu)
                                              : device_view_pmf(k, nu);
}

/// k_max(nu) = ceil(nu + 10 sqrt(nu) + 50).
inline int truncation_limit(double nu) {
    return static_cast<int>(std::ceil(nu + 10.0 * std::sqrt(std::max(nu, 0.0)) + 50.0));
}

/// Occupancy pmf table p[1..k_hi] plus the mass beyond k_hi. k_hi is the
/// smallest index at which the remaining tail drops below tail_target, but
/// never above truncation_limit(nu).
struct OccupancyTable {
    std::vector<double> p;  // p[0] unused
    int k_hi = 1;
    double tail = 0.0;
};

inline OccupancyTable occupancy_table(double nu, OccupancyLaw law, double tail_target = 1e-18) {
    OccupancyTable t;
    const int k_max = truncation_limit(nu);
    t.p.assign(static_cast<std::size_t>(k_max) + 1, 0.0);
    if (nu <= 0.0 || (law == OccupancyLaw::ZeroTruncated && nu < 1e-300)) {
        t.p[1] = 1.0;
        t.k_hi = 1;
        return t;
    }
    double cum = 0.0;
    int k = 1;
    for (; k <= k_max; ++k) {
        t.p[k] = occupancy_pmf(k, nu, law);
        cum += t.p[k];
        // Poisson ratio bound on the remaining tail once past the mode.
        const double shift = law == OccupancyLaw::ZeroTruncated ? 0.0 : 1.0;
        const double next_ratio = nu / (k + 1 - shift);
        if (next_ratio < 1.0) {
            const double tail_bound = t.p[k] * next_ratio / (1.0 - next_ratio);
            if (tail_bound < tail_target) break;
        }
    }
    t.k_hi = std::min(k, k_max);
    t.p.resize(static_cast<std::size_t>(t.k_hi) + 1);
    t.tail = std::max(0.0, 1.0 - cum);
    return t;
}

/// Constant-SNR Chase combining after m attempts with occupancy sum S:
/// rho m^2 / (m + rho (S - m)).
inline double chase_sinr_from_sum(double S, double rho, int m) {
    const double md = m;
    return rho * md * md / (md + rho * (S - md));
}

inline double chase_sinr_constant(const AttemptHistory& h, double rho, int m) {
    if (m < 1 || m > static_cast<int>(h.occupancies.size()))
        throw DomainError("attempt index out of range");
    const double S = std::accumulate(h.occupancies.begin(), h.occupancies.begin() + m, 0.0);
    return chase_sinr_from_sum(S, rho, m);
}

/// Rayleigh block fading: m^2 rho h1 / (m + sum_i I_i).
inline double chase_sinr_rayleigh(const AttemptHistory& h, double rho, int m) {
    if (m < 1 || m > static_cast<int>(h.interference.size()))
        throw DomainError("attempt index out of range");
    const double I = std::accumulate(h.interference.begin(), h.interference.begin() + m, 0.0);
    const double md = m;
    return md * md * rho * h.desired_channel / (md + I);
}

/// Largest k_m with chase SINR >= Gamma given the prefix occupancy sum,
/// without any lower clamp (may be zero or negative). The closed-form floor
/// is corrected against the SINR expression so the two agree in floating point.
inline std::int64_t supportable_occupancy_unclamped(double prefix_sum, int m, double Gamma,
                                                    double rho) {
    const double md = m;
    const double arg = md + md * md / Gamma - md / rho - prefix_sum;
    if (arg > 1e15) return static_cast<std::int64_t>(1e15);
    if (arg < -1e15) return static_cast<std::int64_t>(-1e15);
    auto k = static_cast<std::int64_t>(std::floor(arg));
    auto ok = [&](std::int64_t kk) {
        return chase_sinr_from_sum(prefix_sum + static_cast<double>(kk), rho, m) >= Gamma;
    };
    while (k >= 1 && !ok(k)) --k;
    while (ok(k + 1) && k + 1 <= arg + 1.0) ++k;
    return k;
}

/// k*_m = max(floor(m + m^2/Gamma - m/rho - sum k_i), 1).
inline std::int64_t max_supportable_occupancy(const std::vector<int>& prefix, int m, double Gamma,
                                              double rho) {
    if (!(Gamma > 0.0) || !(rho > 0.0) || m < 1) throw DomainError("invalid k* arguments");
    const double S = std::accumulate(prefix.begin(), prefix.end(), 0.0);
    return std::max<std::int64_t>(supportable_occupancy_unclamped(S, m, Gamma, rho), 1);
}

/// Occupancy threshold used by the outage engine and the simulator: the
/// lower clamp to one applies only when a lone transmission decodes on its own
/// (rho >= Gamma); otherwise the unclamped value stands.
inline std::int64_t effective_supportable_occupancy(double prefix_sum, int m, double Gamma,
                                                    double rho) {
    const auto k = supportable_occupancy_unclamped(prefix_sum, m, Gamma, rho);
    return std::max<std::int64_t>(k, rho >= Gamma ? 1 : 0);
}

}  // namespace rachopt
