#pragma once

// Finite-block-length rate, dispersion and error probability (normal
// approximation without the o(1/n) term), threshold inversion, FBL outage
// and its approximations and bounds.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "rachopt/ibl.hpp"
#include "rachopt/model.hpp"
#include "rachopt/specfun.hpp"

namespace rachopt {

class NoSolutionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct FblRateParams {
    std::int64_t block_length = 100;
    int payload_bits = 100;
    double error_prob = 1e-3;
};

/// Block lengths below this are outside the range where the normal
/// approximation is known to be tight; callers record a warning.
inline constexpr std::int64_t kFblMinBlockLength = 100;

inline constexpr double kLog2e = std::numbers::log2e;

/// V = (1 - 1/(1+x)^2) log2(e)^2.
inline double dispersion(double sinr) {
    if (!(sinr >= 0.0)) throw DomainError("sinr must be >= 0");
    if (std::isinf(sinr)) return kLog2e * kLog2e;
    const double a = sinr * (2.0 + sinr) / ((1.0 + sinr) * (1.0 + sinr));
    return a * kLog2e * kLog2e;
}

inline double log2_1p(double x) { return std::log1p(x) * kLog2e; }

/// C = log2(1+x) - sqrt(V/n) Qinv(eps) + 0.5 log2(n)/n.
inline double achievable_rate(std::int64_t n, double eps, double sinr) {
    if (n < 1) throw DomainError("block length must be >= 1");
    const double nd = static_cast<double>(n);
    const double qi = eps == 0.5 ? 0.0 : q_inverse(eps);
    return log2_1p(sinr) - std::sqrt(dispersion(sinr) / nd) * qi + 0.5 * std::log2(nd) / nd;
}

inline double achievable_rate(const FblRateParams& p, double sinr) {
    return achievable_rate(p.block_length, p.error_prob, sinr);
}

/// f = (n log2(1+x) + 0.5 log2 n - L) / sqrt(n V(x)).
inline double f_metric(std::int64_t n, double L, double sinr) {
    if (!(sinr > 0.0)) throw DomainError("sinr must be positive");
    const double nd = static_cast<double>(n);
    return (nd * log2_1p(sinr) + 0.5 * std::log2(nd) - L) / std::sqrt(nd * dispersion(sinr));
}

inline double block_error_rate(std::int64_t n, double L, double sinr) {
    if (std::isinf(sinr)) return 0.0;
    return q_function(f_metric(n, L, sinr));
}

/// Gamma with C_{n,eps}(Gamma) = L/n. Log-domain bisection on [1e-9, 1e9].
inline double fbl_threshold(std::int64_t n, double L, double eps) {
    if (!(eps > 0.0 && eps <= 0.5)) throw DomainError("fbl_threshold requires 0 < eps <= 0.5");
    if (n < 1) throw DomainError("block length must be >= 1");
    const double nd = static_cast<double>(n);
    const double target = L / nd;
    if (eps == 0.5) return std::exp2((L - 0.5 * std::log2(nd)) / nd) - 1.0;
    double lo = std::log(1e-9), hi = std::log(1e9);
    if (achievable_rate(n, eps, std::exp(hi)) < target)
        throw NoSolutionError("rate L/n not achievable below sinr 1e9");
    if (achievable_rate(n, eps, std::exp(lo)) >= target)
        throw DomainError("threshold below the 1e-9 search floor");
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (achievable_rate(n, eps, std::exp(mid)) < target) lo = mid;
        else hi = mid;
    }
    return std::exp(hi);
}

inline Grid make_fbl_grid(std::int64_t N, int L, int B, int M, double eps) {
    const auto n = block_length(N, B, M);
    if (n < 1) throw ConfigError("block length below one symbol");
    return Grid{B, M, N, n, fbl_threshold(n, L, eps)};
}

/// Cumulative FBL outage for m = 1..M under the per-attempt independence
/// approximation: sum over occupancy sequences of prod_i p(k_i) eps(zeta_i),
/// where zeta_i is the Chase-combined SINR of the prefix. Grouped by running
/// occupancy sum since zeta_i depends on the sequence only through it.
inline OutageResult fbl_profile(PerTfsRate nu, const Grid& grid, double rho, int L,
                                const OutageOptions& opt = {}) {
    const int M = grid.attempts;
    const auto n = grid.block_length;
    const auto table = occupancy_table(nu.mean, opt.law);
    const int k_hi = table.k_hi;
    OutageResult r;
    r.p_fail_cumulative.assign(static_cast<std::size_t>(M), 0.0);

    const double work = static_cast<double>(M) * M * k_hi * k_hi / 2.0;
    if (work <= opt.work_budget) {
        std::vector<double> w(1, 1.0);
        for (int m = 1; m <= M; ++m) {
            std::vector<double> nw(w.size() + static_cast<std::size_t>(k_hi), 0.0);
            double alive = 0.0;
            for (std::size_t S = 0; S < w.size(); ++S) {
                if (w[S] == 0.0) continue;
                alive += w[S];
                for (int k = 1; k <= k_hi; ++k) nw[S + k] += w[S] * table.p[k];
            }
            double total = 0.0;
            for (std::size_t S = 0; S < nw.size(); ++S) {
                if (nw[S] == 0.0) continue;
                nw[S] *= block_error_rate(n, L, chase_sinr_from_sum(static_cast<double>(S), rho, m));
                total += nw[S];
            }
            r.truncation_error_bound += alive * table.tail;
            r.p_fail_cumulative[m - 1] = std::min(1.0, total);
            w.swap(nw);
        }
        return r;
    }

    r.evaluation_method = EvaluationMethod::MonteCarloFallback;
    std::mt19937_64 rng(derive_seed(opt.seed, 2));
    detail::OccupancySampler draw(table);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<std::uint64_t> fails(static_cast<std::size_t>(M), 0);
    for (std::uint64_t i = 0; i < opt.mc_samples; ++i) {
        double S = 0.0;
        for (int m = 1; m <= M; ++m) {
            S += draw(rng);
            if (unif(rng) >= block_error_rate(n, L, chase_sinr_from_sum(S, rho, m))) break;
            ++fails[m - 1];
        }
    }
    double worst = 0.0;
    for (int m = 0; m < M; ++m) {
        const double p = static_cast<double>(fails[m]) / static_cast<double>(opt.mc_samples);
        r.p_fail_cumulative[m] = p;
        worst = std::max(worst, std::sqrt(p * (1.0 - p) / static_cast<double>(opt.mc_samples)));
    }
    r.truncation_error_bound = 3.0 * worst + M * table.tail;
    return r;
}

inline OutageResult outage_fbl(PerTfsRate nu, const Grid& grid, double rho, int L, int M,
                               const OutageOptions& opt = {}) {
    if (M < 1 || M > grid.attempts) throw DomainError("attempt count out of range");
    Grid g = grid;
    g.attempts = M;
    return fbl_profile(nu, g, rho, L, opt);
}

/// High-SNR approximation D(1,nu)^M prod_m Q(f(n, L, rho m)).
inline Probability outage_fbl_high_snr(PerTfsRate nu, const Grid& grid, double rho, int L, int M) {
    const double d1 = nu.mean <= 0.0 ? 1.0 : conditional_arrival_pmf(1, nu.mean);
    double p = std::pow(d1, M);
    for (int m = 1; m <= M; ++m) p *= block_error_rate(grid.block_length, L, rho * m);
    return Probability(std::clamp(p, 0.0, 1.0));
}

/// E[SINR_1] = sum_k D(k,nu) rho/(1 + rho(k-1)), summed directly.
inline double mean_first_sinr_direct(double nu, double rho) {
    const auto t = occupancy_table(nu, OccupancyLaw::ZeroTruncated, 1e-20);
    double s = 0.0;
    for (int k = t.k_hi; k >= 1; --k) s += t.p[k] * rho / (1.0 + rho * (k - 1));
    return s;
}

/// Closed form through the scaled lower incomplete gamma at negative
/// argument: (rho/(1-rho)) [1 - (nu/(e^nu - 1)) gamma*(1/rho, -nu)].
/// Singular at rho = 1 and overflow-prone for nu > 700.
inline double mean_first_sinr_closed_form(double nu, double rho) {
    if (std::abs(1.0 - rho) < 1e-3) throw DomainError("closed form is singular at rho = 1");
    if (nu > 700.0) throw DomainError("closed form overflows for nu > 700");
    if (!(nu > 0.0)) return rho;
    const double s = 1.0 / rho;
    const double g = lower_gamma_scaled(s, -nu);
    return rho / (1.0 - rho) * (1.0 - nu / std::expm1(nu) * g);
}

inline double mean_first_sinr(double nu, double rho) {
    if (std::abs(1.0 - rho) < 1e-3 || nu > 700.0 || !(nu > 0.0))
        return mean_first_sinr_direct(nu, rho);
    const double v = mean_first_sinr_closed_form(nu, rho);
    // Cancellation check; the direct sum is the fallback.
    if (!std::isfinite(v) || v <= 0.0 || v > rho) return mean_first_sinr_direct(nu, rho);
    return v;
}

struct OutageBounds {
    double lower = 0.0;
    double upper = 0.0;
};

/// Single-attempt bounds: Q(f(E[SINR_1])) below, and the Chernoff sum
/// sum_k D(k) exp(-f_k^2 / 2) (1 where f_k <= 0) above.
inline OutageBounds outage_fbl_low_snr_bounds(PerTfsRate nu, const Grid& grid, double rho, int L) {
    const auto n = grid.block_length;
    OutageBounds b;
    b.lower = block_error_rate(n, L, mean_first_sinr(nu.mean, rho));
    const auto t = occupancy_table(nu.mean, OccupancyLaw::ZeroTruncated, 1e-20);
    double up = 0.0;
    for (int k = 1; k <= t.k_hi; ++k) {
        const double f = f_metric(n, L, rho / (1.0 + rho * (k - 1)));
        up += t.p[k] * (f > 0.0 ? std::exp(-0.5 * f * f) : 1.0);
    }
    b.upper = up + t.tail;
    return b;
}

}  // namespace rachopt
