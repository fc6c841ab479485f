#include "corrlink/report_io.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <stdexcept>

#include "corrlink/correlation.hpp"

namespace corrlink {

json census_to_json(const QueueCensus& census) {
    json out;
    out["n"] = census.n;
    out["n_c"] = census.n_c;
    out["n_nc"] = census.n_nc;
    out["pads"] = census.pads;
    out["commons"] = census.commons;
    out["phase3_leftover"] = census.phase3_leftover;
    out["pmf_used"] = pmf_to_json(census.pmf_used);
    return out;
}

json report_to_json(const SimReport& report) {
    json out;
    out["phase1_slots"] = report.phase1_slots;
    out["phase2_slots"] = report.phase2_slots;
    out["phase3_slots"] = report.phase3_slots;
    out["topup_slots"] = report.topup_slots;
    out["halted"] = report.halted;
    out["r1"] = report.r1;
    out["r2"] = report.r2;
    out["decodable"] = report.decodable;
    out["queue_census"] = census_to_json(report.queue_census);
    return out;
}

json region_to_json(const RateRegion& region) {
    json out;
    out["p"] = region.p;
    out["rho_tx"] = region.rho_tx;
    out["rho_rx"] = region.rho_rx;
    out["beta"] = region.beta;
    out["p_rx_00"] = region.p_rx_00;
    json verts = json::array();
    for (const auto& v : region.vertices) verts.push_back({v.r1, v.r2});
    out["vertices"] = verts;
    return out;
}

json pmf_to_json(const std::array<double, 16>& prob) {
    json out;
    for (int s = 0; s < 16; ++s) {
        char key[5];
        for (int k = 0; k < 4; ++k) key[k] = static_cast<char>('0' + state_bit(static_cast<uint8_t>(s), k));
        key[4] = '\0';
        out[key] = prob[s];
    }
    return out;
}

json rank_ratio_to_json(const RankRatioEstimate& est) {
    json out;
    out["e_rank_cross"] = est.e_rank_cross;
    out["e_rank_direct"] = est.e_rank_direct;
    out["trials"] = est.trials;
    out["beta_ref"] = est.beta_ref;
    out["ratio"] = est.ratio();
    out["bound"] = 1.0 / est.beta_ref;
    out["holds"] = est.holds();
    out["per_trial_equal"] = est.per_trial_equal;
    return out;
}

json stores_to_json(const std::vector<EquationStore>& stores) {
    json out = json::array();
    for (const auto& store : stores) {
        json rows = json::array();
        for (const auto& eq : store.rows()) {
            json terms = json::array();
            for (const auto& t : eq.terms) terms.push_back({t.col, t.coef});
            rows.push_back({{"slot", eq.slot}, {"phase", eq.phase}, {"terms", terms}});
        }
        out.push_back({{"receiver_id", store.receiver_id()},
                       {"cols", store.cols()},
                       {"rows", rows}});
    }
    return out;
}

json make_manifest(const std::string& subcommand, const json& parameters, uint64_t seed,
                   const std::vector<std::string>& outputs) {
    json out;
    out["subcommand"] = subcommand;
    out["parameters"] = parameters;
    out["seed"] = seed;
    out["tool_version"] = kToolVersion;
    out["outputs"] = outputs;
    return out;
}

json with_timestamp(json manifest) {
    auto now = std::chrono::system_clock::now();
    std::time_t tt = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    manifest["timestamp"] = buf;
    return manifest;
}

std::string render_json(const json& value) { return value.dump(2) + "\n"; }

std::string fmt_double(double value) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

namespace {
void append_row(std::string& out, const std::vector<std::string>& fields) {
    for (size_t i = 0; i < fields.size(); ++i) {
        if (i) out += ',';
        out += fields[i];
    }
    out += "\r\n";
}
} // namespace

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
    std::string out;
    append_row(out, {"param", "analytic", "simulated", "trials", "stderr"});
    for (const auto& row : rows) {
        if (row.skipped) {
            append_row(out, {fmt_double(row.param), "skipped", "skipped", "0", "skipped"});
        } else {
            append_row(out, {fmt_double(row.param), fmt_double(row.analytic),
                             fmt_double(row.simulated), std::to_string(row.trials),
                             fmt_double(row.stderr_)});
        }
    }
    return out;
}

std::string boundary_to_csv(const std::vector<RatePoint>& points) {
    std::string out;
    append_row(out, {"r1", "r2"});
    for (const auto& pt : points) append_row(out, {fmt_double(pt.r1), fmt_double(pt.r2)});
    return out;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw std::runtime_error("short write to " + path);
}

} // namespace corrlink
