#pragma once

// Parameter sweeps over one scenario field, one exhaustive optimization per
// grid point and regime. Points run on a small worker pool; rows come back in
// grid order.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <string>
#include <thread>
#include <vector>

#include "rachopt/io.hpp"
#include "rachopt/optimizer.hpp"

namespace rachopt {

enum class SweepVariable { BandwidthHz, SnrDb, Delta, PayloadBits, DeadlineS };
enum class SweepRegime { IblConstant, IblRayleigh, FblConstant };

inline SweepVariable parse_sweep_variable(const std::string& s) {
    if (s == "bandwidth-hz") return SweepVariable::BandwidthHz;
    if (s == "snr-db") return SweepVariable::SnrDb;
    if (s == "delta") return SweepVariable::Delta;
    if (s == "payload-bits") return SweepVariable::PayloadBits;
    if (s == "deadline-s") return SweepVariable::DeadlineS;
    throw ConfigError("unknown sweep variable '" + s + "'");
}

inline SweepRegime parse_sweep_regime(const std::string& s) {
    if (s == "ibl-const") return SweepRegime::IblConstant;
    if (s == "ibl-rayleigh") return SweepRegime::IblRayleigh;
    if (s == "fbl-const") return SweepRegime::FblConstant;
    throw ConfigError("unknown sweep regime '" + s + "'");
}

struct SweepSpec {
    SweepVariable variable = SweepVariable::BandwidthHz;
    std::vector<double> grid;
    Scenario fixed{};
    std::vector<SweepRegime> regimes{SweepRegime::IblConstant};
    SearchOptions search{};
    unsigned workers = 0;  // 0: hardware concurrency

    void validate() const {
        if (grid.empty()) throw ConfigError("sweep grid is empty");
        for (std::size_t i = 1; i < grid.size(); ++i)
            if (!(grid[i] > grid[i - 1])) throw ConfigError("sweep grid must be strictly increasing");
        if (regimes.empty()) throw ConfigError("sweep needs at least one regime");
    }
};

inline Scenario with_value(Scenario s, SweepVariable v, double x) {
    switch (v) {
        case SweepVariable::BandwidthHz: s.bandwidth_hz = x; break;
        case SweepVariable::SnrDb: s.snr_linear = snr_from_db(x); break;
        case SweepVariable::Delta: s.outage_target = x; break;
        case SweepVariable::PayloadBits: s.payload_bits = static_cast<int>(std::lround(x)); break;
        case SweepVariable::DeadlineS: s.deadline_s = x; break;
    }
    return s;
}

inline Scenario with_regime(Scenario s, SweepRegime r) {
    switch (r) {
        case SweepRegime::IblConstant:
            s.regime = Regime::IBL;
            s.fading.kind = FadingKind::ConstantSnr;
            break;
        case SweepRegime::IblRayleigh:
            s.regime = Regime::IBL;
            s.fading.kind = FadingKind::Rayleigh;
            break;
        case SweepRegime::FblConstant:
            s.regime = Regime::FBL;
            s.fading.kind = FadingKind::ConstantSnr;
            break;
    }
    return s;
}

inline SweepRow sweep_point(const SweepSpec& spec, double x, SweepRegime r) {
    const Scenario sc = with_regime(with_value(spec.fixed, spec.variable, x), r);
    SweepRow row;
    row.swept_value = x;
    row.regime = to_string(sc.regime);
    row.fading = to_string(sc.fading.kind);
    try {
        const auto o = optimize_exhaustive(sc, spec.search);
        row.bins = o.bins;
        row.attempts = o.attempts;
        row.lambda_opt = o.lambda_opt;
        row.lambda_aggregate = o.lambda_aggregate;
        row.gamma = o.threshold;
        row.method = to_string(o.method);
        row.arrivals_per_second = o.lambda_opt / sc.deadline_s;
    } catch (const InfeasibleError&) {
        row.method = "infeasible";
    }
    return row;
}

inline std::vector<SweepRow> run_sweep(const SweepSpec& spec) {
    spec.validate();
    const std::size_t total = spec.grid.size() * spec.regimes.size();
    std::vector<SweepRow> rows(total);
    std::vector<std::exception_ptr> errors(total);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < total;) {
            try {
                rows[i] = sweep_point(spec, spec.grid[i / spec.regimes.size()],
                                      spec.regimes[i % spec.regimes.size()]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    unsigned n = spec.workers ? spec.workers : std::max(1u, std::thread::hardware_concurrency());
    n = static_cast<unsigned>(std::min<std::size_t>(n, total));
    if (n <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < n; ++t) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return rows;
}

}  // namespace rachopt
