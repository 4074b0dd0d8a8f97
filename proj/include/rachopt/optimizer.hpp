#pragma once

// Maximum supportable arrival rate: exhaustive (B, M) search with bisection
// on the aggregate rate, plus the closed-form high/low SNR optima.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rachopt/fbl.hpp"
#include "rachopt/ibl.hpp"
#include "rachopt/model.hpp"
#include "rachopt/specfun.hpp"

namespace rachopt {

class InfeasibleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class MonotonicityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class OptimumMethod { Exhaustive, HighSnrClosedForm, LowSnrClosedForm, RayleighHighSnr, FblHighSnr };

inline const char* to_string(OptimumMethod m) {
    switch (m) {
        case OptimumMethod::Exhaustive: return "exhaustive";
        case OptimumMethod::HighSnrClosedForm: return "high-snr";
        case OptimumMethod::LowSnrClosedForm: return "low-snr";
        case OptimumMethod::RayleighHighSnr: return "rayleigh-high-snr";
        case OptimumMethod::FblHighSnr: return "fbl-high-snr";
    }
    return "?";
}

struct CellTrace {
    int bins = 0;
    int attempts = 0;
    std::int64_t block_length = 0;
    double threshold = 0.0;
    double lambda = 0.0;
    double lambda_aggregate = 0.0;
    std::string status;  // "ok" or why the cell was skipped
};

struct Optimum {
    int bins = 0;
    int attempts = 0;
    std::int64_t block_length = 0;
    double lambda_opt = 0.0;
    double lambda_aggregate = 0.0;
    double threshold = 0.0;
    double p_fail = 0.0;
    double per_tfs_rate = 0.0;
    OptimumMethod method = OptimumMethod::Exhaustive;
    NuConvention convention = NuConvention::PerSlot;
    std::vector<std::string> warnings;
    std::vector<CellTrace> cells;
};

struct SearchOptions {
    NuConvention convention = NuConvention::PerSlot;
    int max_attempts = 16;
    // IBL constant SNR: only grids where a lone first transmission decodes
    // (Gamma <= rho). Other models: skip cells where a lone device already
    // misses the outage target.
    bool require_lone_decodable = true;
    OutageOptions outage{};
    double rel_width = 1e-12;
    int max_bisection = 60;
    bool keep_trace = false;
};

/// Cumulative outage profile P(1..M) of a grid at per-TFS rate nu.
inline OutageResult outage_profile(const Scenario& sc, const Grid& g, double nu,
                                   const OutageOptions& opt = {}) {
    const PerTfsRate r{nu};
    if (sc.regime == Regime::IBL) {
        if (sc.fading.kind == FadingKind::ConstantSnr)
            return ibl_constant_profile(r, g, sc.snr_linear, opt);
        return ibl_rayleigh_profile(r, g, sc.snr_linear, sc.fading.mean_inverse, opt);
    }
    if (sc.fading.kind == FadingKind::Rayleigh)
        throw ConfigError("finite-block-length outage under Rayleigh fading is not supported");
    return fbl_profile(r, g, sc.snr_linear, sc.payload_bits, opt);
}

/// Grid for a scenario. FBL thresholds use the per-attempt target
/// delta^(1/M); NaN when no threshold exists below sinr 1e9.
inline Grid grid_for(const Scenario& sc, int B, int M) {
    const auto N = sc.symbol_budget();
    if (sc.regime == Regime::IBL) return make_ibl_grid(N, sc.payload_bits, B, M);
    const auto n = block_length(N, B, M);
    if (n < 1) throw ConfigError("block length below one symbol");
    double Gamma = std::numeric_limits<double>::quiet_NaN();
    const double eps = std::pow(sc.outage_target, 1.0 / M);
    if (eps <= 0.5) {
        try {
            Gamma = fbl_threshold(n, sc.payload_bits, eps);
        } catch (const std::exception&) {
        }
    }
    return Grid{B, M, N, n, Gamma};
}

struct CellResult {
    bool feasible = false;
    double lambda = 0.0;
    double lambda_aggregate = 0.0;
    double nu = 0.0;
    double p_fail = 0.0;
    std::string status = "ok";
};

/// Largest lambda for one grid: bisection on lambda_M for P_fail(M) <= delta,
/// then lambda = lambda_M / (1 + sum_{m<M} P_fail(m)).
///
/// With a positive `incumbent`, a cell whose lambda cannot exceed it (since
/// lambda <= lambda_M, infeasibility at lambda_M = incumbent settles that) is
/// reported as dominated after a single evaluation.
inline CellResult optimize_cell(const Scenario& sc, const Grid& g, const SearchOptions& opt,
                                double incumbent = 0.0) {
    CellResult c;
    const int M = g.attempts;
    const int B = g.bins;
    const double delta = sc.outage_target;
    auto profile_at = [&](double lambda_M) {
        return outage_profile(sc, g, per_tfs_rate(lambda_M, B, M, opt.convention), opt.outage);
    };

    const double lone_nu = 1e-9;
    {
        const auto p = outage_profile(sc, g, lone_nu, opt.outage);
        if (p.final() > delta) {
            c.status = "lone device misses target";
            return c;
        }
    }

    const double N = static_cast<double>(sc.symbol_budget());
    double lo = 0.0, p_lo = 0.0;
    if (incumbent > 0.0) {
        const double p = profile_at(incumbent).final();
        if (p > delta) {
            c.status = "dominated";
            return c;
        }
        lo = incumbent;
        p_lo = p;
    }
    double hi = std::max(N / sc.payload_bits * M / std::numbers::ln2, 2.0 * lo);
    const double cap = hi * 1e6;
    auto p_hi_res = profile_at(hi);
    while (p_hi_res.final() <= delta && hi < cap) {
        lo = hi;
        p_lo = p_hi_res.final();
        hi *= 2.0;
        p_hi_res = profile_at(hi);
    }
    if (p_hi_res.final() <= delta) {
        c.status = "unbounded";
        return c;
    }
    double p_hi = p_hi_res.final();
    for (int it = 0; it < opt.max_bisection && (hi - lo) > opt.rel_width * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        const auto pr = profile_at(mid);
        const double p = pr.final();
        const double slack = 1e-9 + pr.truncation_error_bound;
        if (p < p_lo - slack || p > p_hi + slack) {
            std::ostringstream os;
            os << "outage not monotone in load at B=" << B << " M=" << M << " lambda_M=" << mid;
            throw MonotonicityError(os.str());
        }
        if (p <= delta) {
            lo = mid;
            p_lo = p;
        } else {
            hi = mid;
            p_hi = p;
        }
    }
    if (!(lo > 0.0)) {
        c.status = "no positive load meets target";
        return c;
    }
    // New-arrival rate carried at aggregate load x. It can peak below the
    // outage boundary; any lambda under the peak reaches its smallest fixed
    // point before the boundary, so the cell value is the peak.
    auto carried = [&](double x) {
        const auto p = profile_at(x);
        double s = 0.0;
        for (int m = 1; m < M; ++m) s += p.at(m);
        return x / (1.0 + s);
    };
    double x_best = lo;
    if (M > 1 && carried(lo * (1.0 - 1e-6)) > carried(lo)) {
        const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
        double a = 0.0, b = lo;
        double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
        double f1 = carried(x1), f2 = carried(x2);
        while (b - a > 1e-10 * lo) {
            if (f1 < f2) {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + phi * (b - a);
                f2 = carried(x2);
            } else {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - phi * (b - a);
                f1 = carried(x1);
            }
        }
        x_best = 0.5 * (a + b);
        c.status = "throughput peak below outage boundary";
    }
    const auto pr = profile_at(x_best);
    double s = 0.0;
    for (int m = 1; m < M; ++m) s += pr.at(m);
    c.feasible = true;
    c.lambda_aggregate = x_best;
    c.lambda = x_best / (1.0 + s);
    c.nu = per_tfs_rate(x_best, B, M, opt.convention);
    c.p_fail = pr.final();
    return c;
}

inline int max_bins_searched(const Scenario& sc, int max_attempts) {
    const double N = static_cast<double>(sc.symbol_budget());
    const double bound = N / sc.payload_bits * std::log2(1.0 + sc.snr_linear * max_attempts);
    return static_cast<int>(std::min(std::ceil(bound), N));
}

/// Exhaustive search over (B, M). Ties keep the smaller M, then smaller B.
inline Optimum optimize_exhaustive(const Scenario& sc, const SearchOptions& opt = {}) {
    sc.validate();
    const auto N = sc.symbol_budget();
    Optimum best;
    best.method = OptimumMethod::Exhaustive;
    best.convention = opt.convention;
    bool found = false;
    bool warned_short = false;
    const int B_max = max_bins_searched(sc, opt.max_attempts);

    for (int M = 1; M <= opt.max_attempts; ++M) {
        if (sc.regime == Regime::FBL && std::pow(sc.outage_target, 1.0 / M) >= 0.5) break;
        for (int B = 1; B <= B_max; ++B) {
            if (static_cast<std::int64_t>(B) * M > N) break;
            const Grid g = grid_for(sc, B, M);
            CellTrace tr{B, M, g.block_length, g.sinr_threshold, 0.0, 0.0, "ok"};
            if (opt.require_lone_decodable && sc.regime == Regime::IBL &&
                sc.fading.kind == FadingKind::ConstantSnr && g.sinr_threshold > sc.snr_linear) {
                tr.status = "threshold above snr";
                if (opt.keep_trace) best.cells.push_back(tr);
                continue;
            }
            const auto c = optimize_cell(sc, g, opt, found ? best.lambda_opt : 0.0);
            tr.lambda = c.lambda;
            tr.lambda_aggregate = c.lambda_aggregate;
            tr.status = c.status;
            if (opt.keep_trace) best.cells.push_back(tr);
            if (!c.feasible) continue;
            if (sc.regime == Regime::FBL && g.block_length < kFblMinBlockLength && !warned_short) {
                best.warnings.push_back("finite-block-length cells with n < 100 were evaluated");
                warned_short = true;
            }
            if (!found || c.lambda > best.lambda_opt * (1.0 + 1e-12)) {
                found = true;
                best.bins = B;
                best.attempts = M;
                best.block_length = g.block_length;
                best.lambda_opt = c.lambda;
                best.lambda_aggregate = c.lambda_aggregate;
                best.threshold = g.sinr_threshold;
                best.p_fail = c.p_fail;
                best.per_tfs_rate = c.nu;
            }
        }
    }
    if (!found) throw InfeasibleError("no (B, M, lambda > 0) meets the outage target");

    // Cross-check the winning cell against the fixed-point solver.
    if (best.attempts > 1) {
        const Grid g = grid_for(sc, best.bins, best.attempts);
        auto eval = [&](double x) {
            return outage_profile(sc, g, per_tfs_rate(x, best.bins, best.attempts, opt.convention),
                                  opt.outage)
                .p_fail_cumulative;
        };
        const auto fp = solve_aggregate_rate(best.lambda_opt * (1.0 - 1e-4), eval, best.attempts);
        const double p = eval(fp.lambda_aggregate).back();
        if (fp.lambda_aggregate > best.lambda_aggregate * (1.0 + 1e-6) ||
            p > sc.outage_target + 1e-9) {
            std::ostringstream os;
            os << "fixed point lambda_M " << fp.lambda_aggregate << " (P_fail " << p
               << ") disagrees with search lambda_M " << best.lambda_aggregate;
            best.warnings.push_back(os.str());
        }
    }
    return best;
}

/// alpha_M(delta) = u - W_{-1}(u e^u), u = delta^(1/M) - 1: the positive root
/// of alpha / (e^alpha - 1) = 1 - delta^(1/M).
inline double alpha_of_delta(double delta, int M) {
    if (!(delta > 0.0 && delta < 1.0)) throw DomainError("alpha_of_delta requires 0 < delta < 1");
    if (M < 1) throw DomainError("M must be >= 1");
    const double target = -std::expm1(std::log(delta) / M);  // 1 - delta^(1/M)
    const double u = -target;
    const double x = std::max(u * std::exp(u), -0.36787944117144233);
    double a = u - lambert_w_m1(x);
    auto h = [&](double al) { return al / std::expm1(al) - target; };
    for (int i = 0; i < 3 && a > 0.0; ++i) {
        const double em = std::expm1(a);
        const double d = (em - a * std::exp(a)) / (em * em);
        if (d == 0.0) break;
        const double step = h(a) / d;
        if (!std::isfinite(step)) break;
        a -= step;
    }
    if (!(a > 0.0) || std::abs(h(a)) > 1e-10)
        throw ConvergenceError("alpha_of_delta residual check failed");
    return a;
}

/// Per-attempt-M objective (1/M) alpha_M (1 - delta^(1/M)), proportional to
/// B(M) alpha_M (1 - delta^(1/M)).
inline double high_snr_objective(double delta, int M) {
    return alpha_of_delta(delta, M) * (-std::expm1(std::log(delta) / M)) / M;
}

/// Closed-form high-SNR optimum for constant SNR, IBL.
inline Optimum high_snr_optimum(const Scenario& sc, NuConvention conv = NuConvention::PerFrame,
                                int max_attempts = 16) {
    sc.validate();
    const double N = static_cast<double>(sc.symbol_budget());
    const double delta = sc.outage_target;
    const double rho = sc.snr_linear;
    const int L = sc.payload_bits;
    int M_opt = 1;
    double best = -1.0;
    for (int M = 1; M <= max_attempts; ++M) {
        const double B_real = N / (M * static_cast<double>(L)) * std::log2(1.0 + rho);
        const double v = B_real * alpha_of_delta(delta, M) * (-std::expm1(std::log(delta) / M));
        if (v > best * (1.0 + 1e-12)) {
            best = v;
            M_opt = M;
        }
    }
    const double B_real = N / (M_opt * static_cast<double>(L)) * std::log2(1.0 + rho);
    const int B_floor = static_cast<int>(std::floor(B_real));
    Optimum o;
    o.method = OptimumMethod::HighSnrClosedForm;
    o.convention = conv;
    o.attempts = M_opt;
    int chosen = 0;
    for (int B : {B_floor + 1, B_floor}) {
        if (B < 1) continue;
        const double n_real = N / (static_cast<double>(B) * M_opt);
        if (n_real < 1.0) continue;
        if (ibl_threshold(L, n_real) <= rho * (1.0 + 1e-12)) {
            chosen = B;
            break;
        }
    }
    if (chosen < 1) throw InfeasibleError("high-SNR closed form gives fewer than one bin");
    const double alpha = alpha_of_delta(delta, M_opt);
    o.bins = chosen;
    o.block_length = block_length(sc.symbol_budget(), chosen, M_opt);
    o.threshold = ibl_threshold(L, static_cast<double>(o.block_length));
    o.per_tfs_rate = alpha;
    o.lambda_aggregate = aggregate_from_per_tfs(alpha, chosen, M_opt, conv);
    o.lambda_opt = o.lambda_aggregate * (-std::expm1(std::log(delta) / M_opt)) / (1.0 - delta);
    o.p_fail = delta;
    return o;
}

/// High-SNR slope of lambda_opt in W (per Hz), from the 0.332 rho_dB
/// capacity approximation.
inline double high_snr_slope(const Scenario& sc, int M) {
    const double delta = sc.outage_target;
    const double alpha = alpha_of_delta(delta, M);
    return 0.332 * alpha * sc.deadline_s / (M * static_cast<double>(sc.payload_bits)) *
           (-std::expm1(std::log(delta) / M)) / (1.0 - delta) * snr_to_db(sc.snr_linear);
}

/// rho < 2^(2L/N) - 1.
inline bool low_snr_sufficient(const Scenario& sc) {
    const double N = static_cast<double>(sc.symbol_budget());
    return sc.snr_linear < std::exp2(2.0 * sc.payload_bits / N) - 1.0;
}

/// Gaussian approximation at B = M = 1.
inline Optimum low_snr_optimum(const Scenario& sc) {
    sc.validate();
    const auto N = sc.symbol_budget();
    const double Gamma = ibl_threshold(sc.payload_bits, static_cast<double>(N));
    const auto k_star = supportable_occupancy_unclamped(0.0, 1, Gamma, sc.snr_linear);
    if (k_star < 1) throw InfeasibleError("snr below single-user decodability");
    const double q = q_inverse(sc.outage_target);
    const double r = std::sqrt(static_cast<double>(k_star) + q * q / 4.0) - q / 2.0;
    Optimum o;
    o.method = OptimumMethod::LowSnrClosedForm;
    o.bins = 1;
    o.attempts = 1;
    o.block_length = N;
    o.threshold = Gamma;
    o.lambda_opt = r * r;
    o.lambda_aggregate = o.lambda_opt;
    o.per_tfs_rate = o.lambda_opt;
    o.p_fail = sc.outage_target;
    if (!low_snr_sufficient(sc)) o.warnings.push_back("snr above the low-SNR sufficient condition");
    return o;
}

namespace detail {

// Largest lambda_M on one grid with P_fail(M) <= delta, bisecting on nu.
inline double max_aggregate_for(const Scenario& sc, const Grid& g, NuConvention conv,
                                const OutageOptions& oo) {
    SearchOptions so;
    so.convention = conv;
    so.outage = oo;
    const auto c = optimize_cell(sc, g, so);
    return c.feasible ? c.lambda_aggregate : 0.0;
}

}  // namespace detail

/// Gamma_opt = M log(1/(1 - delta)) rho / mu.
inline double rayleigh_gamma_opt(const Scenario& sc, int M) {
    return M * -std::log1p(-sc.outage_target) * sc.snr_linear / sc.fading.mean_inverse;
}

/// Table-style optimum for Rayleigh fading at high SNR, IBL.
inline Optimum rayleigh_high_snr_optimum(const Scenario& sc,
                                         NuConvention conv = NuConvention::PerSlot,
                                         int max_attempts = 8) {
    sc.validate();
    if (sc.fading.kind != FadingKind::Rayleigh || sc.regime != Regime::IBL)
        throw ConfigError("rayleigh_high_snr_optimum needs Rayleigh fading and IBL");
    const double N = static_cast<double>(sc.symbol_budget());
    const double mu = sc.fading.mean_inverse;
    const double rho = sc.snr_linear;
    Optimum best;
    best.method = OptimumMethod::RayleighHighSnr;
    best.convention = conv;
    double best_score = -1.0;
    for (int M = 1; M <= max_attempts; ++M) {
        const double Gamma_opt = rayleigh_gamma_opt(sc, M);
        const int B = static_cast<int>(std::floor(N / (M * static_cast<double>(sc.payload_bits)) *
                                                  std::log2(1.0 + Gamma_opt)));
        if (B < 1 || static_cast<double>(B) * M > N) continue;
        const Grid g = grid_for(sc, B, M);
        const double lambda_M = detail::max_aggregate_for(sc, g, conv, {});
        if (!(lambda_M > 0.0)) continue;
        double denom = 1.0, fact = 1.0;
        const double x = mu * Gamma_opt / rho;
        for (int m = 1; m < M; ++m) {
            fact *= m;
            denom += fact * std::pow(x, m);
        }
        const double score = lambda_M / denom;
        if (score > best_score * (1.0 + 1e-12)) {
            best_score = score;
            const auto pr = outage_profile(sc, g, per_tfs_rate(lambda_M, B, M, conv));
            double s = 0.0;
            for (int m = 1; m < M; ++m) s += pr.at(m);
            best.bins = B;
            best.attempts = M;
            best.block_length = g.block_length;
            best.threshold = g.sinr_threshold;
            best.lambda_aggregate = lambda_M;
            best.lambda_opt = lambda_M / (1.0 + s);
            best.per_tfs_rate = per_tfs_rate(lambda_M, B, M, conv);
            best.p_fail = pr.final();
        }
    }
    if (best.bins < 1) throw InfeasibleError("rayleigh high-SNR form gives fewer than one bin");
    return best;
}

/// Largest B with L/n <= C_{n, delta^(1/M)}(m rho) for all m <= M, n = floor(N/(B M)).
inline int fbl_max_bins(const Scenario& sc, int M) {
    const double eps = std::pow(sc.outage_target, 1.0 / M);
    if (eps >= 0.5) return 0;
    const auto N = sc.symbol_budget();
    int best = 0;
    for (int B = 1; static_cast<std::int64_t>(B) * M <= N; ++B) {
        const auto n = block_length(N, B, M);
        bool ok = true;
        for (int m = 1; m <= M && ok; ++m)
            ok = static_cast<double>(sc.payload_bits) / n <= achievable_rate(n, eps, m * sc.snr_linear);
        if (!ok) break;
        best = B;
    }
    return best;
}

/// Table-style optimum for constant SNR, FBL, at high SNR.
inline Optimum fbl_high_snr_optimum(const Scenario& sc, NuConvention conv = NuConvention::PerSlot,
                                    int max_attempts = 16) {
    sc.validate();
    if (sc.fading.kind != FadingKind::ConstantSnr) throw ConfigError("fbl_high_snr_optimum needs constant SNR");
    Scenario fsc = sc;
    fsc.regime = Regime::FBL;
    Optimum best;
    best.method = OptimumMethod::FblHighSnr;
    best.convention = conv;
    for (int M = 1; M <= max_attempts; ++M) {
        const int B = fbl_max_bins(fsc, M);
        if (B < 1) {
            if (M == 1) throw InfeasibleError("no bin count meets the FBL capacity constraint");
            continue;
        }
        const Grid g = grid_for(fsc, B, M);
        const double lambda_M = detail::max_aggregate_for(fsc, g, conv, {});
        if (!(lambda_M > 0.0)) continue;
        const double nu = per_tfs_rate(lambda_M, B, M, conv);
        double s = 0.0;
        for (int m = 1; m < M; ++m) s += outage_fbl_high_snr(PerTfsRate{nu}, g, fsc.snr_linear, fsc.payload_bits, m);
        const double lambda = lambda_M / (1.0 + s);
        if (lambda > best.lambda_opt * (1.0 + 1e-12)) {
            best.bins = B;
            best.attempts = M;
            best.block_length = g.block_length;
            best.threshold = g.sinr_threshold;
            best.lambda_aggregate = lambda_M;
            best.lambda_opt = lambda;
            best.per_tfs_rate = nu;
            best.p_fail = outage_profile(fsc, g, nu).final();
        }
    }
    if (best.bins < 1) throw InfeasibleError("fbl high-SNR form found no feasible grid");
    return best;
}

}  // namespace rachopt
