#pragma once

// Infinite-block-length outage (constant SNR and Rayleigh) and the
// aggregate-rate fixed point.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "rachopt/model.hpp"

namespace rachopt {

class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class BudgetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class EvaluationMethod { ExactEnumeration, MonteCarloFallback };

inline const char* to_string(EvaluationMethod m) {
    return m == EvaluationMethod::ExactEnumeration ? "exact" : "monte-carlo";
}

struct OutageResult {
    std::vector<double> p_fail_cumulative;  // index m-1
    double lambda_aggregate = 0.0;
    double truncation_error_bound = 0.0;
    EvaluationMethod evaluation_method = EvaluationMethod::ExactEnumeration;

    [[nodiscard]] double at(int m) const { return p_fail_cumulative.at(static_cast<std::size_t>(m - 1)); }
    [[nodiscard]] double final() const { return p_fail_cumulative.back(); }
};

struct OutageOptions {
    OccupancyLaw law = OccupancyLaw::ZeroTruncated;
    double work_budget = 1e8;  // DP cell updates before switching to Monte Carlo
    std::uint64_t mc_samples = 1'000'000;
    std::uint64_t seed = 0x243F6A8885A308D3ull;
};

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) {
    std::uint64_t s = root ^ (0xD1B54A32D192ED03ull * (stream + 1));
    return splitmix64(s);
}

namespace detail {

// Draw from an occupancy table by inverse CDF; values past k_hi are mapped to
// k_hi + 1 (they fail any threshold the table resolves).
class OccupancySampler {
public:
    explicit OccupancySampler(const OccupancyTable& t) : cdf_(t.p.size(), 0.0) {
        double c = 0.0;
        for (std::size_t k = 1; k < t.p.size(); ++k) cdf_[k] = (c += t.p[k]);
    }
    template <class Rng>
    int operator()(Rng& rng) {
        const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        auto it = std::lower_bound(cdf_.begin() + 1, cdf_.end(), u);
        return static_cast<int>(it - cdf_.begin());
    }

private:
    std::vector<double> cdf_;
};

}  // namespace detail

/// Cumulative IBL constant-SNR outage for m = 1..M.
///
/// The nested failure sums are evaluated as a recursion over the running
/// occupancy sum S: the failing mass after attempt m at sum S is the mass at
/// S - k after m-1 attempts times p(k), over k above the supportable
/// occupancy for (m, S - k). This is the same sum as full enumeration of
/// failing sequences, grouped by prefix sum.
inline OutageResult ibl_constant_profile(PerTfsRate nu, const Grid& grid, double rho,
                                         const OutageOptions& opt = {}) {
    const int M = grid.attempts;
    const double Gamma = grid.sinr_threshold;
    const auto table = occupancy_table(nu.mean, opt.law);
    const int k_hi = table.k_hi;
    OutageResult r;
    r.p_fail_cumulative.assign(static_cast<std::size_t>(M), 0.0);

    const double work = static_cast<double>(M) * M * k_hi * k_hi / 2.0;
    if (work <= opt.work_budget) {
        std::vector<double> w(1, 1.0);  // w[S]
        for (int m = 1; m <= M; ++m) {
            std::vector<double> nw(w.size() + static_cast<std::size_t>(k_hi), 0.0);
            double alive = 0.0;
            for (std::size_t S = 0; S < w.size(); ++S) {
                const double ws = w[S];
                if (ws == 0.0) continue;
                alive += ws;
                const auto ks = effective_supportable_occupancy(static_cast<double>(S), m, Gamma, rho);
                const auto from = static_cast<int>(std::clamp<std::int64_t>(ks + 1, 1, k_hi + 1));
                for (int k = from; k <= k_hi; ++k) nw[S + k] += ws * table.p[k];
            }
            r.truncation_error_bound += alive * table.tail;
            double total = 0.0;
            for (double v : nw) total += v;
            r.p_fail_cumulative[m - 1] = std::min(1.0, total);
            w.swap(nw);
        }
        return r;
    }

    r.evaluation_method = EvaluationMethod::MonteCarloFallback;
    std::mt19937_64 rng(derive_seed(opt.seed, 1));
    detail::OccupancySampler draw(table);
    std::vector<std::uint64_t> fails(static_cast<std::size_t>(M), 0);
    for (std::uint64_t i = 0; i < opt.mc_samples; ++i) {
        double S = 0.0;
        for (int m = 1; m <= M; ++m) {
            const int k = draw(rng);
            const auto ks = effective_supportable_occupancy(S, m, Gamma, rho);
            if (k <= ks) break;
            S += k;
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

/// Cumulative constant-SNR outage through attempt m.
inline Probability outage_ibl_constant(PerTfsRate nu, const Grid& grid, double rho, int m,
                                       const OutageOptions& opt = {}) {
    if (m < 1 || m > grid.attempts) throw DomainError("attempt index out of range");
    Grid g = grid;
    g.attempts = m;
    return Probability(ibl_constant_profile(nu, g, rho, opt).final());
}

/// t (e^(nu/t) - 1) / (e^nu - 1), the average of t^-(k-1) under the
/// zero-truncated Poisson law; 1 at nu -> 0 or t = 1.
inline double zero_truncated_pgf_ratio(double nu, double t) {
    if (nu <= 0.0) return 1.0;
    if (nu < 30.0) return t * std::expm1(nu / t) / std::expm1(nu);
    return t * std::exp(nu / t - nu) * (-std::expm1(-nu / t)) / (-std::expm1(-nu));
}

/// Average Laplace transform of the aggregate interference at s.
inline double interference_laplace(double s, PerTfsRate nu, double mu, double rho,
                                   OccupancyLaw law = OccupancyLaw::ZeroTruncated) {
    if (!(s >= 0.0)) throw DomainError("laplace argument must be >= 0");
    const double t = s * rho / mu + 1.0;
    if (law == OccupancyLaw::DeviceView) return std::exp(-nu.mean * (t - 1.0) / t);
    return zero_truncated_pgf_ratio(nu.mean, t);
}

/// f(mu, nu, Gamma) = e^(-mu Gamma / rho) (Gamma + 1)(e^(nu/(Gamma+1)) - 1)/(e^nu - 1).
inline double interference_term_f(double mu, double nu, double Gamma, double rho,
                                  OccupancyLaw law = OccupancyLaw::ZeroTruncated) {
    if (!(Gamma >= 0.0)) throw DomainError("threshold must be >= 0");
    const double s = mu * Gamma / rho;
    return std::exp(-s) * interference_laplace(s, PerTfsRate{nu}, mu, rho, law);
}

/// Cumulative Rayleigh outage for m = 1..M via the signed path sum. Paths
/// l_0 = 0, l_i in {l_{i-1}, l_{i-1}+1} are grouped by their current l, so
/// the 2^m terms collapse to an O(m^2) recursion.
inline OutageResult ibl_rayleigh_profile(PerTfsRate nu, const Grid& grid, double rho, double mu,
                                         const OutageOptions& opt = {}) {
    const int M = grid.attempts;
    if (M > 30) throw BudgetError("rayleigh path sum limited to 30 attempts");
    if (!(mu > 0.0)) throw DomainError("mu must be positive");
    const double Gamma = grid.sinr_threshold;
    OutageResult r;
    r.p_fail_cumulative.assign(static_cast<std::size_t>(M), 0.0);
    std::vector<double> F(static_cast<std::size_t>(M) + 1);
    for (int l = 0; l <= M; ++l) F[l] = interference_term_f(mu, nu.mean, l * Gamma, rho, opt.law);

    std::vector<double> val{1.0};
    double magnitude = 1.0;
    for (int i = 1; i <= M; ++i) {
        std::vector<double> nv(static_cast<std::size_t>(i) + 1, 0.0);
        for (int l = 0; l <= i; ++l) {
            const double stay = l < i ? val[l] : 0.0;
            const double step = l >= 1 ? val[l - 1] : 0.0;
            nv[l] = (stay + step) * F[l];
        }
        double p = 0.0;
        magnitude = 0.0;
        for (int l = 0; l <= i; ++l) {
            p += (l % 2 == 0 ? 1.0 : -1.0) * nv[l];
            magnitude += nv[l];
        }
        r.p_fail_cumulative[i - 1] = std::clamp(p, 0.0, 1.0);
        val.swap(nv);
    }
    r.truncation_error_bound = 64.0 * std::numeric_limits<double>::epsilon() * magnitude;
    return r;
}

inline Probability outage_ibl_rayleigh(PerTfsRate nu, const Grid& grid, double rho, double mu,
                                       int m, const OutageOptions& opt = {}) {
    if (m < 1 || m > grid.attempts) throw DomainError("attempt index out of range");
    Grid g = grid;
    g.attempts = m;
    return Probability(ibl_rayleigh_profile(nu, g, rho, mu, opt).final());
}

struct FixedPointResult {
    double lambda_aggregate = 0.0;
    double residual = 0.0;
    int iterations = 0;
    bool used_bisection = false;
};

/// Solve lambda_M = lambda (1 + sum_{m<M} P_fail(lambda_M, m)).
///
/// `eval(x)` returns the cumulative failure profile (at least M-1 entries)
/// for aggregate rate x. Damped iteration first; if it stalls, bisection on
/// x - g(x) above the best iterate, so the smallest root is returned.
template <class Eval>
FixedPointResult solve_aggregate_rate(double lambda, Eval&& eval, int M,
                                      std::optional<double> start = std::nullopt,
                                      double rel_tol = 1e-12, int max_iter = 10'000) {
    if (!(lambda > 0.0)) throw DomainError("lambda must be positive");
    if (M < 1) throw DomainError("M must be >= 1");
    FixedPointResult res;
    if (M == 1) {
        res.lambda_aggregate = lambda;
        return res;
    }
    const double lo = lambda;
    const double hi = lambda * M;
    auto g = [&](double x) {
        const auto p = eval(x);
        double s = 0.0;
        for (int m = 1; m < M; ++m) s += p.at(static_cast<std::size_t>(m - 1));
        const double v = lambda * (1.0 + s);
        if (!std::isfinite(v)) throw ConvergenceError("outage evaluator returned non-finite value");
        return std::clamp(v, lo, hi);
    };

    double x = std::clamp(start.value_or(lambda), lo, hi);
    constexpr double theta = 0.5;
    double best = std::numeric_limits<double>::infinity();
    double best_x = x;
    int stall = 0;
    for (int it = 0; it < max_iter; ++it) {
        const double gx = g(x);
        const double r = std::abs(x - gx);
        res.iterations = it + 1;
        if (r <= rel_tol * x) {
            res.lambda_aggregate = x;
            res.residual = r;
            return res;
        }
        if (r < best) {
            best = r;
            best_x = x;
            stall = 0;
        } else if (++stall > 50) {
            break;
        }
        x = std::clamp((1.0 - theta) * x + theta * gx, lo, hi);
    }
    // Slow approach to a near-double root: the iterate is still below the
    // smallest fixed point, accept it when close.
    if (best <= 1e-9 * best_x) {
        res.lambda_aggregate = best_x;
        res.residual = best;
        return res;
    }

    // Bracket the smallest root by stepping up from the best iterate, which
    // lies below it.
    res.used_bisection = true;
    double a = best_x, b = hi;
    for (double step = 1e-9 * best_x; a + step < hi; step *= 2.0) {
        const double t = a + step;
        if (t - g(t) >= 0.0) {
            b = t;
            break;
        }
        a = t;
    }
    for (int it = 0; it < 200 && (b - a) > 1e-15 * b; ++it) {
        const double mid = 0.5 * (a + b);
        if (mid - g(mid) < 0.0) a = mid;
        else b = mid;
        ++res.iterations;
    }
    const double xa = a, xb = b;
    const double ra = std::abs(xa - g(xa)), rb = std::abs(xb - g(xb));
    res.lambda_aggregate = ra <= rb ? xa : xb;
    res.residual = std::min(ra, rb);
    if (res.residual > 1e-6 * res.lambda_aggregate)
        throw ConvergenceError("aggregate-rate fixed point did not converge; residual " +
                               std::to_string(res.residual));
    return res;
}

}  // namespace rachopt
