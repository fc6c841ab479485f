#include "corrlink/verifier.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

#include "corrlink/correlation.hpp"
#include "corrlink/rng.hpp"

namespace corrlink {

namespace {

/* Rank of the selected combination rows. Single-term rows pin their column
 * directly; whatever is left is eliminated densely with those columns
 * substituted out. */
uint32_t rows_rank(const std::vector<const PrecoderTrace::Row*>& rows, uint32_t m,
                   const PrimeField& field) {
    std::set<uint32_t> pinned;
    std::vector<const PrecoderTrace::Row*> wide;
    for (const auto* r : rows) {
        if (r->terms.empty()) continue;
        if (r->terms.size() == 1)
            pinned.insert(r->terms[0].col);
        else
            wide.push_back(r);
    }
    IncrementalRank inc(field, m);
    uint32_t dense_rank = 0;
    std::vector<uint64_t> row(m);
    for (const auto* r : wide) {
        std::fill(row.begin(), row.end(), 0);
        bool any = false;
        for (const auto& t : r->terms) {
            if (pinned.count(t.col)) continue;
            row[t.col] = field.add(row[t.col], t.coef);
            if (row[t.col]) any = true;
        }
        if (any && inc.add_row(row)) ++dense_rank;
    }
    return static_cast<uint32_t>(pinned.size()) + dense_rank;
}

} // namespace

RankRatioEstimate estimate_rank_ratio(double p, double rho_tx, double rho_rx,
                                      uint32_t m, uint32_t trials, uint64_t seed,
                                      PrecoderFamily family, uint64_t field_modulus) {
    if (p <= 0.0) throw std::domain_error("rank-ratio verification requires p > 0");
    if (trials < 1) throw std::invalid_argument("rank-ratio verification requires trials >= 1");
    PrimeField field(field_modulus);
    RankRatioEstimate est;
    est.trials = trials;
    est.beta_ref = beta(p, rho_tx);

    uint64_t sum_cross = 0, sum_direct = 0;
    for (uint32_t t = 0; t < trials; ++t) {
        PrecoderTrace trace;
        if (family == PrecoderFamily::protocol) {
            SimConfig cfg;
            cfg.p = p;
            cfg.rho_tx = rho_tx;
            cfg.rho_rx = rho_rx;
            cfg.m = m;
            cfg.mode = SimMode::algebraic;
            cfg.field_modulus = field_modulus;
            cfg.seed = derive_seed(seed, t);
            simulate(cfg, &trace);
        } else {
            // i.i.d. uniform combination rows through the same link pair
            Rng rng(derive_seed(seed, t));
            PairwiseJoint tx = pairwise_joint(p, rho_tx);
            for (uint32_t r = 0; r < 2 * m; ++r) {
                PrecoderTrace::Row row;
                double u = rng.next_unit();
                bool a11, a21;
                if (u < tx.p11) {
                    a11 = a21 = true;
                } else if (u < tx.p11 + tx.p10) {
                    a11 = true, a21 = false;
                } else if (u < tx.p11 + tx.p10 + tx.p01) {
                    a11 = false, a21 = true;
                } else {
                    a11 = a21 = false;
                }
                row.a11 = a11;
                row.a21 = a21;
                for (uint32_t c = 0; c < m; ++c) {
                    uint64_t v = rng.next_below(field.modulus());
                    if (v) row.terms.push_back({c, v});
                }
                trace.rows.push_back(std::move(row));
            }
        }
        std::vector<const PrecoderTrace::Row*> direct, cross;
        for (const auto& row : trace.rows) {
            if (row.a11) direct.push_back(&row);
            if (row.a21) cross.push_back(&row);
        }
        uint32_t rd = rows_rank(direct, m, field);
        uint32_t rc = rows_rank(cross, m, field);
        sum_direct += rd;
        sum_cross += rc;
        if (rd != rc) est.per_trial_equal = false;
    }
    est.e_rank_direct = static_cast<double>(sum_direct) / trials;
    est.e_rank_cross = static_cast<double>(sum_cross) / trials;
    return est;
}

RegionComparison compare_to_region(const std::vector<SimReport>& reports,
                                   const RateRegion& region, double tol) {
    RegionComparison cmp;
    cmp.reports_checked = static_cast<uint32_t>(reports.size());
    double max_sum = 0.0;
    for (const auto& rep : reports) {
        if (!contains(region, rep.r1, rep.r2, tol)) ++cmp.violations;
        max_sum = std::max(max_sum, rep.r1 + rep.r2);
    }
    cmp.max_sum_rate = max_sum;
    cmp.gap_to_symmetric =
        max_symmetric_sum_rate(region.p, region.rho_tx, region.rho_rx) - max_sum;
    return cmp;
}

std::vector<SweepRow> sweep(const SweepConfig& config) {
    if (config.axis != "p" && config.axis != "rho_tx" && config.axis != "rho_rx")
        throw std::invalid_argument("sweep axis must be one of p, rho_tx, rho_rx");
    std::vector<SweepRow> table;
    table.reserve(config.values.size());
    for (size_t idx = 0; idx < config.values.size(); ++idx) {
        double v = config.values[idx];
        SweepRow row;
        row.param = v;
        double p = config.p, rho_tx = config.rho_tx, rho_rx = config.rho_rx;
        if (config.axis == "p")
            p = v;
        else if (config.axis == "rho_tx")
            rho_tx = v;
        else
            rho_rx = v;

        bool feasible = rho_tx >= -1.0 && rho_tx <= 1.0 && rho_rx >= -1.0 && rho_rx <= 1.0 &&
                        feasible_range(rho_tx).contains(p) && feasible_range(rho_rx).contains(p);
        if (!feasible) {
            row.skipped = true;
            table.push_back(row);
            continue;
        }
        try {
            row.analytic = max_symmetric_sum_rate(p, rho_tx, rho_rx);
            uint64_t row_seed = derive_seed(config.seed, idx);
            double sum = 0.0, sumsq = 0.0;
            uint32_t used = 0;
            for (uint32_t t = 0; t < config.trials; ++t) {
                SimConfig cfg;
                cfg.p = p;
                cfg.rho_tx = rho_tx;
                cfg.rho_rx = rho_rx;
                cfg.m = config.m;
                cfg.mode = SimMode::ledger;
                cfg.seed = derive_seed(row_seed, t);
                SimReport rep = simulate(cfg);
                if (rep.halted != "none") continue;
                double s = rep.r1 + rep.r2;
                sum += s;
                sumsq += s * s;
                ++used;
            }
            row.trials = used;
            if (used > 0) {
                row.simulated = sum / used;
                if (used > 1) {
                    double var = (sumsq - sum * sum / used) / (used - 1);
                    row.stderr_ = std::sqrt(std::max(0.0, var) / used);
                }
            }
        } catch (const std::exception&) {
            // jointly infeasible family or other domain failure at this point
            row.skipped = true;
        }
        table.push_back(row);
    }
    return table;
}

} // namespace corrlink
