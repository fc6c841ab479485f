#include <atomic>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "corrlink/correlation.hpp"
#include "corrlink/protocol.hpp"
#include "corrlink/region.hpp"
#include "corrlink/report_io.hpp"
#include "corrlink/rng.hpp"
#include "corrlink/verifier.hpp"

namespace {

using corrlink::json;

uint64_t resolve_seed(const CLI::App* sub, uint64_t cli_seed) {
    if (sub->count("--seed") > 0) return cli_seed;
    const char* env = std::getenv("CORRLINK_SEED");
    if (!env || !*env) return cli_seed;
    errno = 0;
    char* end = nullptr;
    unsigned long long v = std::strtoull(env, &end, 10);
    if (errno != 0 || end == env || *end != '\0')
        throw std::domain_error("invalid CORRLINK_SEED value: " + std::string(env));
    return static_cast<uint64_t>(v);
}

void emit(const std::string& payload, const std::string& out_path) {
    if (out_path.empty())
        std::fputs(payload.c_str(), stdout);
    else
        corrlink::write_text_file(out_path, payload);
}

void write_sidecar_manifest(const std::string& data_path, const json& manifest) {
    corrlink::write_text_file(data_path + ".manifest.json",
                              corrlink::render_json(corrlink::with_timestamp(manifest)));
}

struct RegionArgs {
    double p = 0, rho_tx = 0, rho_rx = 0;
    std::string out, boundary_csv;
    int resolution = 128;
};

int run_region(const RegionArgs& a) {
    corrlink::RateRegion region = corrlink::make_region(a.p, a.rho_tx, a.rho_rx);
    json params{{"p", a.p}, {"rho_tx", a.rho_tx}, {"rho_rx", a.rho_rx}};
    std::vector<std::string> outputs;
    if (!a.out.empty()) outputs.push_back(a.out);
    if (!a.boundary_csv.empty()) outputs.push_back(a.boundary_csv);
    json manifest = corrlink::make_manifest("region", params, 0, outputs);

    json payload = corrlink::region_to_json(region);
    payload["max_symmetric_sum_rate"] =
        corrlink::max_symmetric_sum_rate(a.p, a.rho_tx, a.rho_rx);
    payload["manifest"] = manifest;
    emit(corrlink::render_json(payload), a.out);
    if (!a.boundary_csv.empty()) {
        auto line = corrlink::boundary_polyline(region, a.resolution);
        corrlink::write_text_file(a.boundary_csv, corrlink::boundary_to_csv(line));
        write_sidecar_manifest(a.boundary_csv, manifest);
    }
    return 0;
}

struct DistArgs {
    double p = 0, rho_tx = 0, rho_rx = 0;
    std::string out;
};

int run_dist(const DistArgs& a) {
    corrlink::JointStatePmf pmf = corrlink::build_joint_pmf(a.p, a.rho_tx, a.rho_rx);
    json payload = corrlink::pmf_to_json(pmf.prob);
    emit(corrlink::render_json(payload), a.out);
    if (!a.out.empty()) {
        json params{{"p", a.p}, {"rho_tx", a.rho_tx}, {"rho_rx", a.rho_rx}};
        write_sidecar_manifest(a.out, corrlink::make_manifest("dist", params, 0, {a.out}));
    }
    return 0;
}

struct SimulateArgs {
    double p = 0, rho_tx = 0, rho_rx = 0;
    uint32_t m = 1000;
    std::string mode = "ledger";
    uint32_t trials = 1;
    uint64_t seed = 1;
    uint64_t field_modulus = corrlink::PrimeField::kMersenne31;
    std::string out, dump_equations;
    uint32_t jobs = 1;
    double halt_tolerance = 0.0;
};

int run_simulate(const SimulateArgs& a) {
    bool algebraic = a.mode == "algebraic";
    if (!a.dump_equations.empty() && !algebraic)
        throw std::invalid_argument("--dump-equations requires --mode algebraic");
    if (a.trials < 1) throw std::invalid_argument("--trials must be at least 1");
    // validate once, before spinning up workers, so diagnostics stay single-line
    corrlink::PrimeField field_check(a.field_modulus);
    (void)corrlink::build_joint_pmf(a.p, a.rho_tx, a.rho_rx);

    corrlink::SimConfig base;
    base.p = a.p;
    base.rho_tx = a.rho_tx;
    base.rho_rx = a.rho_rx;
    base.m = a.m;
    base.mode = algebraic ? corrlink::SimMode::algebraic : corrlink::SimMode::ledger;
    base.field_modulus = a.field_modulus;
    if (algebraic && a.m > base.algebraic_cap)
        throw std::invalid_argument("algebraic mode is capped at m = " +
                                    std::to_string(base.algebraic_cap));

    std::vector<corrlink::SimReport> reports(a.trials);
    std::vector<json> dumps(a.dump_equations.empty() ? 0 : a.trials);
    std::atomic<uint32_t> next{0};
    std::mutex err_mutex;
    std::string first_error;

    auto worker = [&]() {
        for (;;) {
            uint32_t t = next.fetch_add(1);
            if (t >= a.trials) return;
            try {
                corrlink::SimConfig cfg = base;
                cfg.seed = corrlink::derive_seed(a.seed, t);
                if (!a.dump_equations.empty()) {
                    std::vector<corrlink::EquationStore> stores;
                    reports[t] = corrlink::simulate(cfg, nullptr, &stores);
                    dumps[t] = corrlink::stores_to_json(stores);
                } else {
                    reports[t] = corrlink::simulate(cfg);
                }
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (first_error.empty()) first_error = e.what();
                return;
            }
        }
    };
    uint32_t nthreads = std::max(1u, std::min(a.jobs, a.trials));
    if (nthreads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(nthreads);
        for (uint32_t i = 0; i < nthreads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (!first_error.empty()) throw std::runtime_error(first_error);

    json params{{"p", a.p},  {"rho_tx", a.rho_tx},        {"rho_rx", a.rho_rx},
                {"m", a.m},  {"mode", a.mode},            {"trials", a.trials},
                {"field_modulus", a.field_modulus},       {"halt_tolerance", a.halt_tolerance}};
    std::vector<std::string> outputs;
    if (!a.out.empty()) outputs.push_back(a.out);
    if (!a.dump_equations.empty()) outputs.push_back(a.dump_equations);

    json payload;
    payload["manifest"] = corrlink::make_manifest("simulate", params, a.seed, outputs);
    json reps = json::array();
    uint32_t halted = 0;
    for (const auto& rep : reports) {
        if (rep.halted != "none") ++halted;
        reps.push_back(corrlink::report_to_json(rep));
    }
    payload["reports"] = reps;
    emit(corrlink::render_json(payload), a.out);

    if (!a.dump_equations.empty()) {
        json dump;
        dump["manifest"] = corrlink::make_manifest("simulate", params, a.seed, outputs);
        json trials_json = json::array();
        for (uint32_t t = 0; t < a.trials; ++t)
            trials_json.push_back({{"trial", t}, {"receivers", dumps[t]}});
        dump["trials"] = trials_json;
        corrlink::write_text_file(a.dump_equations, corrlink::render_json(dump));
    }

    double halt_frac = static_cast<double>(halted) / a.trials;
    if (halt_frac > a.halt_tolerance) {
        std::fprintf(stderr, "halt rate %g exceeds tolerance %g (%u of %u trials)\n", halt_frac,
                     a.halt_tolerance, halted, a.trials);
        return 2;
    }
    return 0;
}

struct RankRatioArgs {
    double p = 0, rho_tx = 0, rho_rx = 0;
    uint32_t m = 200;
    uint32_t trials = 200;
    uint64_t seed = 1;
    std::string family = "protocol";
    uint64_t field_modulus = corrlink::PrimeField::kMersenne31;
    double tol = 0.02;
    std::string out;
};

int run_rank_ratio(const RankRatioArgs& a) {
    corrlink::PrecoderFamily family = a.family == "random" ? corrlink::PrecoderFamily::random
                                                           : corrlink::PrecoderFamily::protocol;
    corrlink::RankRatioEstimate est = corrlink::estimate_rank_ratio(
        a.p, a.rho_tx, a.rho_rx, a.m, a.trials, a.seed, family, a.field_modulus);
    json params{{"p", a.p},           {"rho_tx", a.rho_tx}, {"rho_rx", a.rho_rx},
                {"m", a.m},           {"trials", a.trials}, {"family", a.family},
                {"field_modulus", a.field_modulus},         {"tol", a.tol}};
    std::vector<std::string> outputs;
    if (!a.out.empty()) outputs.push_back(a.out);
    json payload = corrlink::rank_ratio_to_json(est);
    payload["holds"] = est.holds(a.tol);
    payload["family"] = a.family;
    payload["m"] = a.m;
    payload["manifest"] = corrlink::make_manifest("verify rank-ratio", params, a.seed, outputs);
    emit(corrlink::render_json(payload), a.out);
    return 0;
}

struct SweepArgs {
    std::string axis;
    double from = 0, to = 0;
    uint32_t steps = 11;
    double p = 0.5, rho_tx = 0.0, rho_rx = 0.0;
    uint32_t m = 2000;
    uint32_t trials = 5;
    uint64_t seed = 1;
    std::string out;
};

int run_sweep(const SweepArgs& a) {
    if (a.steps < 1) throw std::invalid_argument("--steps must be at least 1");
    corrlink::SweepConfig cfg;
    cfg.axis = a.axis;
    for (auto& ch : cfg.axis)
        if (ch == '-') ch = '_';
    cfg.p = a.p;
    cfg.rho_tx = a.rho_tx;
    cfg.rho_rx = a.rho_rx;
    cfg.m = a.m;
    cfg.trials = a.trials;
    cfg.seed = a.seed;
    if (a.steps == 1) {
        cfg.values.push_back(a.from);
    } else {
        for (uint32_t k = 0; k < a.steps; ++k)
            cfg.values.push_back(a.from + (a.to - a.from) * k / (a.steps - 1));
    }
    std::vector<corrlink::SweepRow> rows = corrlink::sweep(cfg);
    std::string csv = corrlink::sweep_to_csv(rows);
    emit(csv, a.out);
    if (!a.out.empty()) {
        json params{{"axis", cfg.axis}, {"from", a.from},     {"to", a.to},
                    {"steps", a.steps}, {"p", a.p},           {"rho_tx", a.rho_tx},
                    {"rho_rx", a.rho_rx}, {"m", a.m},         {"trials", a.trials}};
        write_sidecar_manifest(a.out, corrlink::make_manifest("sweep", params, a.seed, {a.out}));
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"simulator and region toolkit for two-user correlated interference packet networks"};
    app.require_subcommand(1);
    int rc = 0;

    RegionArgs region_args;
    CLI::App* region = app.add_subcommand("region", "print the throughput region");
    region->add_option("--p", region_args.p, "per-link on-probability")->required();
    region->add_option("--rho-tx", region_args.rho_tx, "transmitter-side correlation")->required();
    region->add_option("--rho-rx", region_args.rho_rx, "receiver-side correlation")->required();
    region->add_option("--out", region_args.out, "write JSON here instead of stdout");
    region->add_option("--boundary-csv", region_args.boundary_csv, "also write the boundary polyline CSV");
    region->add_option("--resolution", region_args.resolution, "boundary sample count")
        ->check(CLI::Range(2, 1 << 20));
    region->callback([&]() { rc = run_region(region_args); });

    DistArgs dist_args;
    CLI::App* dist = app.add_subcommand("dist", "print the fitted 16-state joint distribution");
    dist->add_option("--p", dist_args.p, "per-link on-probability")->required();
    dist->add_option("--rho-tx", dist_args.rho_tx, "transmitter-side correlation")->required();
    dist->add_option("--rho-rx", dist_args.rho_rx, "receiver-side correlation")->required();
    dist->add_option("--out", dist_args.out, "write JSON here instead of stdout");
    dist->callback([&]() { rc = run_dist(dist_args); });

    SimulateArgs sim_args;
    CLI::App* sim = app.add_subcommand("simulate", "run protocol trials");
    sim->add_option("--p", sim_args.p, "per-link on-probability")->required();
    sim->add_option("--rho-tx", sim_args.rho_tx, "transmitter-side correlation")->required();
    sim->add_option("--rho-rx", sim_args.rho_rx, "receiver-side correlation")->required();
    sim->add_option("--m", sim_args.m, "packets per transmitter")->required();
    sim->add_option("--mode", sim_args.mode, "ledger or algebraic")
        ->check(CLI::IsMember({"ledger", "algebraic"}));
    sim->add_option("--trials", sim_args.trials, "independent trials");
    sim->add_option("--seed", sim_args.seed, "base seed (CORRLINK_SEED overrides the default)");
    sim->add_option("--field-modulus", sim_args.field_modulus, "prime field modulus");
    sim->add_option("--out", sim_args.out, "write the report JSON here instead of stdout");
    sim->add_option("--dump-equations", sim_args.dump_equations,
                    "write per-receiver equation transcripts here (algebraic mode)");
    sim->add_option("--jobs", sim_args.jobs, "worker threads across trials");
    sim->add_option("--halt-tolerance", sim_args.halt_tolerance,
                    "max tolerated halted-trial fraction before exit code 2")
        ->check(CLI::Range(0.0, 1.0));
    sim->callback([&]() {
        sim_args.seed = resolve_seed(sim, sim_args.seed);
        rc = run_simulate(sim_args);
    });

    CLI::App* verify = app.add_subcommand("verify", "statistical checks of the analytic bounds");
    verify->require_subcommand(1);
    RankRatioArgs rr_args;
    CLI::App* rr = verify->add_subcommand("rank-ratio", "estimate the cross/direct rank ratio");
    rr->add_option("--p", rr_args.p, "per-link on-probability")->required();
    rr->add_option("--rho-tx", rr_args.rho_tx, "transmitter-side correlation")->required();
    rr->add_option("--rho-rx", rr_args.rho_rx, "receiver-side correlation")->required();
    rr->add_option("--m", rr_args.m, "packets per transmitter");
    rr->add_option("--trials", rr_args.trials, "independent trials");
    rr->add_option("--seed", rr_args.seed, "base seed (CORRLINK_SEED overrides the default)");
    rr->add_option("--family", rr_args.family, "precoder family: protocol or random")
        ->check(CLI::IsMember({"protocol", "random"}));
    rr->add_option("--field-modulus", rr_args.field_modulus, "prime field modulus");
    rr->add_option("--tol", rr_args.tol, "tolerance on the ratio bound");
    rr->add_option("--out", rr_args.out, "write JSON here instead of stdout");
    rr->callback([&]() {
        rr_args.seed = resolve_seed(rr, rr_args.seed);
        rc = run_rank_ratio(rr_args);
    });

    SweepArgs sweep_args;
    CLI::App* sw = app.add_subcommand("sweep", "tabulate analytic vs simulated sum-rate");
    sw->add_option("--axis", sweep_args.axis, "swept parameter: p, rho-tx, or rho-rx")
        ->required()
        ->check(CLI::IsMember({"p", "rho-tx", "rho-rx", "rho_tx", "rho_rx"}));
    sw->add_option("--from", sweep_args.from, "sweep start")->required();
    sw->add_option("--to", sweep_args.to, "sweep end")->required();
    sw->add_option("--steps", sweep_args.steps, "point count, endpoints inclusive");
    sw->add_option("--p", sweep_args.p, "fixed on-probability");
    sw->add_option("--rho-tx", sweep_args.rho_tx, "fixed transmitter-side correlation");
    sw->add_option("--rho-rx", sweep_args.rho_rx, "fixed receiver-side correlation");
    sw->add_option("--m", sweep_args.m, "packets per transmitter per trial");
    sw->add_option("--trials", sweep_args.trials, "ledger trials per point");
    sw->add_option("--seed", sweep_args.seed, "base seed (CORRLINK_SEED overrides the default)");
    sw->add_option("--out", sweep_args.out, "write CSV here instead of stdout");
    sw->callback([&]() {
        sweep_args.seed = resolve_seed(sw, sweep_args.seed);
        rc = run_sweep(sweep_args);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::RequiredError&) {
        std::cerr << app.help() << std::flush;
        return 1;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << " (run with --help for usage)\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return rc;
}
