// rachopt command line: optimize, sweep, simulate, validate.

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rachopt/acceptance.hpp"
#include "rachopt/io.hpp"
#include "rachopt/optimizer.hpp"
#include "rachopt/simulator.hpp"
#include "rachopt/sweep.hpp"

using namespace rachopt;

namespace {

constexpr int kExitValidate = 1;
constexpr int kExitUsage = 2;
constexpr int kExitInfeasible = 3;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Scenario flags shared by all commands. Values left unset fall back to the
// --config file; anything still missing is a usage error.
struct ScenarioFlags {
    std::optional<double> bandwidth_hz, deadline_s, delta, snr_db, mu;
    std::optional<int> payload_bits;
    std::optional<std::string> regime, fading, convention;
    std::string config;

    void add(CLI::App* app) {
        app->add_option("--bandwidth-hz", bandwidth_hz, "bandwidth W in Hz");
        app->add_option("--deadline-s", deadline_s, "deadline T in seconds");
        app->add_option("--payload-bits", payload_bits, "payload L in bits");
        app->add_option("--delta", delta, "outage target");
        app->add_option("--snr-db", snr_db, "received SNR in dB");
        app->add_option("--regime", regime, "ibl or fbl")->check(CLI::IsMember({"ibl", "fbl"}));
        app->add_option("--fading", fading, "constant or rayleigh")
            ->check(CLI::IsMember({"constant", "rayleigh"}));
        app->add_option("--mu", mu, "Rayleigh mean inverse channel gain");
        app->add_option("--nu-convention", convention, "per-slot or per-frame")
            ->check(CLI::IsMember({"per-slot", "per-frame"}));
        app->add_option("--config", config, "JSON scenario file; flags override it");
    }

    json file() const { return config.empty() ? json::object() : read_json_file(config); }

    Scenario resolve(const std::vector<std::string>& optional_keys = {}) const {
        Scenario s;
        json merged = file();
        if (bandwidth_hz) merged["bandwidth_hz"] = *bandwidth_hz;
        if (deadline_s) merged["deadline_s"] = *deadline_s;
        if (payload_bits) merged["payload_bits"] = *payload_bits;
        if (delta) merged["delta"] = *delta;
        if (snr_db) {
            merged.erase("snr_linear");
            merged["snr_db"] = *snr_db;
        }
        if (regime) merged["regime"] = *regime;
        if (fading) merged["fading"] = *fading;
        if (mu) merged["mu"] = *mu;
        const char* required[] = {"bandwidth_hz", "deadline_s", "payload_bits", "delta"};
        for (const char* k : required) {
            if (merged.contains(k)) continue;
            if (std::find(optional_keys.begin(), optional_keys.end(), k) != optional_keys.end()) continue;
            throw UsageError(std::string("missing --") + dashed(k));
        }
        if (!merged.contains("snr_db") && !merged.contains("snr_linear") &&
            std::find(optional_keys.begin(), optional_keys.end(), "snr_db") == optional_keys.end())
            throw UsageError("missing --snr-db");
        apply_json(s, merged);
        return s;
    }

    NuConvention nu_convention() const {
        if (convention) return parse_convention(*convention);
        const json f = file();
        if (f.contains("nu_convention")) return parse_convention(f.at("nu_convention").get<std::string>());
        return NuConvention::PerSlot;
    }

    static std::string dashed(std::string k) {
        for (auto& c : k)
            if (c == '_') c = '-';
        return k;
    }
};

void print_optimum_row(std::ostream& os, const Optimum& o) {
    os << std::left << std::setw(20) << to_string(o.method) << std::right << std::setw(6) << o.bins
       << std::setw(6) << o.attempts << std::setw(8) << o.block_length << std::setw(14)
       << std::setprecision(6) << o.lambda_opt << std::setw(14) << o.lambda_aggregate << std::setw(14)
       << o.threshold << "\n";
}

void emit(const std::string& text, const std::string& path) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path);
}

int cmd_optimize(const ScenarioFlags& f, const std::string& output, int max_attempts) {
    const Scenario sc = f.resolve();
    sc.validate();
    SearchOptions so;
    so.convention = f.nu_convention();
    so.max_attempts = max_attempts;
    const Optimum ex = optimize_exhaustive(sc, so);

    std::optional<Optimum> closed;
    std::string closed_note;
    try {
        if (sc.regime == Regime::IBL && sc.fading.kind == FadingKind::ConstantSnr) {
            if (low_snr_sufficient(sc)) closed = low_snr_optimum(sc);
            else if (snr_to_db(sc.snr_linear) >= 10.0) closed = high_snr_optimum(sc, so.convention, max_attempts);
        } else if (snr_to_db(sc.snr_linear) >= 10.0) {
            if (sc.regime == Regime::IBL) closed = rayleigh_high_snr_optimum(sc, so.convention);
            else closed = fbl_high_snr_optimum(sc, so.convention);
        }
    } catch (const std::exception& e) {
        closed_note = e.what();
    }

    json j;
    j["scenario"] = to_json(sc);
    j["nu_convention"] = to_string(so.convention);
    j["low_snr_sufficient"] = low_snr_sufficient(sc);
    j["exhaustive"] = to_json(ex);
    if (closed) {
        j["closed_form"] = to_json(*closed);
        j["relative_gap"] = std::abs(ex.lambda_opt - closed->lambda_opt) / closed->lambda_opt;
    } else if (!closed_note.empty()) {
        j["closed_form_error"] = closed_note;
    }

    std::ostringstream table;
    table << std::left << std::setw(20) << "method" << std::right << std::setw(6) << "B" << std::setw(6) << "M"
          << std::setw(8) << "n" << std::setw(14) << "lambda_opt" << std::setw(14) << "lambda_M"
          << std::setw(14) << "gamma" << "\n";
    print_optimum_row(table, ex);
    if (closed) {
        print_optimum_row(table, *closed);
        table << "gap " << std::setprecision(4) << 100.0 * j["relative_gap"].get<double>() << "%\n";
    }
    for (const auto& w : ex.warnings) table << "warning: " << w << "\n";

    if (output.empty()) {
        std::cout << table.str() << j.dump(2) << "\n";
    } else {
        std::cout << table.str();
        emit(j.dump(2) + "\n", output);
    }
    return 0;
}

int cmd_sweep(const ScenarioFlags& f, const std::string& variable, const std::vector<double>& grid,
              const std::vector<std::string>& regimes, const std::string& output, unsigned workers,
              int max_attempts) {
    SweepSpec spec;
    spec.variable = parse_sweep_variable(variable);
    spec.grid = grid;
    const std::string swept_key = variable == "snr-db"         ? "snr_db"
                                  : variable == "bandwidth-hz" ? "bandwidth_hz"
                                  : variable == "deadline-s"   ? "deadline_s"
                                  : variable == "payload-bits" ? "payload_bits"
                                                               : "delta";
    spec.fixed = f.resolve({swept_key});
    spec.fixed = with_value(spec.fixed, spec.variable, grid.empty() ? 0.0 : grid.front());
    spec.fixed.validate();
    spec.regimes.clear();
    for (const auto& r : regimes) spec.regimes.push_back(parse_sweep_regime(r));
    spec.search.convention = f.nu_convention();
    spec.search.max_attempts = max_attempts;
    spec.workers = workers;
    const auto rows = run_sweep(spec);

    std::ostringstream os;
    write_csv_row(os, sweep_csv_header());
    for (const auto& r : rows) write_csv_row(os, r.fields());
    emit(os.str(), output);
    if (!output.empty()) std::cerr << rows.size() << " rows written to " << output << "\n";
    return 0;
}

struct SimFlags {
    int bins = 1;
    int attempts = 1;
    double lambda = 1.0;
    std::uint64_t arrivals = 100'000;
    std::uint64_t seed = 1;
    int warmup = -1;
    std::string channel;
    std::string law = "zero-truncated";
};

int cmd_simulate(const ScenarioFlags& f, const SimFlags& s, const std::string& output) {
    const Scenario sc = f.resolve();
    sc.validate();
    const NuConvention conv = f.nu_convention();
    SimConfig cfg;
    cfg.scenario = sc;
    cfg.grid = grid_for(sc, s.bins, s.attempts);
    cfg.lambda_per_frame = s.lambda;
    cfg.measured_arrivals = s.arrivals;
    cfg.seed = s.seed;
    cfg.warmup_slots = s.warmup;
    const std::string channel = s.channel.empty() ? to_string(sc.fading.kind) : s.channel;
    cfg.channel_model = channel == "rayleigh" ? ChannelModel::RayleighBlock : ChannelModel::ConstantSnr;
    Scenario analytic_sc = sc;
    analytic_sc.fading.kind =
        cfg.channel_model == ChannelModel::RayleighBlock ? FadingKind::Rayleigh : FadingKind::ConstantSnr;

    SimStats st;
    try {
        st = run_simulation(cfg);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInfeasible;
    }

    OutageOptions oo;
    oo.law = parse_occupancy_law(s.law);
    auto eval = [&](double x) {
        return outage_profile(analytic_sc, cfg.grid, per_tfs_rate(x, s.bins, s.attempts, conv), oo)
            .p_fail_cumulative;
    };
    const auto fp = solve_aggregate_rate(s.lambda, eval, s.attempts);
    const double nu = per_tfs_rate(fp.lambda_aggregate, s.bins, s.attempts, conv);
    const double analytic = eval(fp.lambda_aggregate).back();

    json j;
    j["scenario"] = to_json(sc);
    j["grid"] = {{"B", s.bins}, {"M", s.attempts}, {"block_length", cfg.grid.block_length},
                 {"gamma", cfg.grid.sinr_threshold}};
    j["lambda_per_frame"] = s.lambda;
    j["seed"] = s.seed;
    j["channel"] = channel;
    j["stats"] = to_json(st);
    j["lambda_M_empirical"] = estimate_aggregate_rate(st, s.lambda, s.attempts);
    j["analytic"] = {{"nu_convention", to_string(conv)},
                     {"occupancy_law", s.law},
                     {"lambda_M", fp.lambda_aggregate},
                     {"per_tfs_rate", nu},
                     {"p_fail", analytic}};
    j["z_score"] = st.binomial_stderr > 0 ? (st.p_fail_hat - analytic) / st.binomial_stderr : 0.0;
    emit(j.dump(2) + "\n", output);
    return 0;
}

int cmd_validate(double tolerance_scale, std::uint64_t seed, std::uint64_t arrivals) {
    AcceptanceOptions o;
    o.tolerance_scale = tolerance_scale;
    o.seed = seed;
    o.sim_arrivals = arrivals;
    std::cout << "seed " << seed << ", tolerance scale " << tolerance_scale << "\n";
    int failed = 0;
    run_acceptance(o, [&](const CriterionResult& r) {
        std::printf("C%-3d %-4s %7.2fs  %s\n      %s\n", r.id, r.passed ? "PASS" : "FAIL", r.seconds,
                    r.title.c_str(), r.detail.c_str());
        for (const auto& n : r.notes) std::printf("      note: %s\n", n.c_str());
        std::fflush(stdout);
        if (!r.passed) ++failed;
    });
    std::printf("%d/12 criteria passed\n", 12 - failed);
    return failed == 0 ? 0 : kExitValidate;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Random-access throughput optimizer and simulator"};
    app.require_subcommand(1);

    ScenarioFlags opt_f, sw_f, sim_f;
    std::string opt_out, sw_out, sim_out;
    int opt_mcap = 16, sw_mcap = 16;

    auto* opt = app.add_subcommand("optimize", "maximum supportable arrival rate for a scenario");
    opt_f.add(opt);
    opt->add_option("--output", opt_out, "write JSON here instead of stdout");
    opt->add_option("--max-attempts", opt_mcap, "largest M searched")->check(CLI::Range(1, 64));

    auto* sw = app.add_subcommand("sweep", "optimize over a grid of one scenario field, CSV out");
    sw_f.add(sw);
    std::string variable;
    std::vector<double> grid;
    std::vector<std::string> regimes{"ibl-const"};
    unsigned workers = 0;
    sw->add_option("--variable", variable, "bandwidth-hz, snr-db, delta, payload-bits or deadline-s")
        ->required()
        ->check(CLI::IsMember({"bandwidth-hz", "snr-db", "delta", "payload-bits", "deadline-s"}));
    sw->add_option("--grid", grid, "comma separated, strictly increasing")->required()->delimiter(',');
    sw->add_option("--regimes", regimes, "ibl-const, ibl-rayleigh, fbl-const")
        ->delimiter(',')
        ->check(CLI::IsMember({"ibl-const", "ibl-rayleigh", "fbl-const"}));
    sw->add_option("--output", sw_out, "CSV path (stdout if omitted)");
    sw->add_option("--workers", workers, "worker threads (0: all cores)");
    sw->add_option("--max-attempts", sw_mcap, "largest M searched")->check(CLI::Range(1, 64));

    auto* sim = app.add_subcommand("simulate", "slot-level Monte Carlo of one grid");
    sim_f.add(sim);
    SimFlags sf;
    sim->add_option("--bins", sf.bins, "B")->check(CLI::PositiveNumber);
    sim->add_option("--attempts", sf.attempts, "M")->check(CLI::PositiveNumber);
    sim->add_option("--lambda", sf.lambda, "new arrivals per frame")->check(CLI::NonNegativeNumber);
    sim->add_option("--arrivals", sf.arrivals, "measured arrivals");
    sim->add_option("--seed", sf.seed, "random seed (default 1)");
    sim->add_option("--warmup", sf.warmup, "warmup slots (-1: automatic)");
    sim->add_option("--channel", sf.channel, "constant or rayleigh (default: --fading)")
        ->check(CLI::IsMember({"constant", "rayleigh"}));
    sim->add_option("--occupancy-law", sf.law, "law for the analytic comparison")
        ->check(CLI::IsMember({"zero-truncated", "device-view"}));
    sim->add_option("--output", sim_out, "write JSON here instead of stdout");

    auto* val = app.add_subcommand("validate", "run the acceptance criteria");
    double tol_scale = 1.0;
    std::uint64_t val_seed = AcceptanceOptions{}.seed;
    std::uint64_t val_arrivals = AcceptanceOptions{}.sim_arrivals;
    val->add_option("--tolerance-scale", tol_scale, "multiply every tolerance");
    val->add_option("--seed", val_seed, "root seed");
    val->add_option("--arrivals", val_arrivals, "measured arrivals per simulation");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*opt) return cmd_optimize(opt_f, opt_out, opt_mcap);
        if (*sw) return cmd_sweep(sw_f, variable, grid, regimes, sw_out, workers, sw_mcap);
        if (*sim) return cmd_simulate(sim_f, sf, sim_out);
        if (*val) return cmd_validate(tol_scale, val_seed, val_arrivals);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.get_subcommands().front()->help();
        return kExitUsage;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const ConvergenceError& e) {
        std::cerr << "did not converge: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInfeasible;
    }
    return 0;
}
