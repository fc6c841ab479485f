#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "corrlink/protocol.hpp"
#include "corrlink/region.hpp"

namespace corrlink {

enum class PrecoderFamily { protocol, random };

/* Monte-Carlo estimate of E[rank of the cross-observed combination rows]
 * against E[rank of the directly observed ones] for transmitter 0, whose
 * ratio is lower-bounded by 1/beta. */
struct RankRatioEstimate {
    double e_rank_cross = 0.0;  // mean rank of rows heard on the cross link
    double e_rank_direct = 0.0; // mean rank of rows heard on the direct link
    uint32_t trials = 0;
    double beta_ref = 1.0;
    bool per_trial_equal = true; // both ranks agreed in every single trial

    double ratio() const { return e_rank_direct > 0.0 ? e_rank_cross / e_rank_direct : 1.0; }
    bool holds(double tol = 0.02) const { return ratio() >= 1.0 / beta_ref - tol; }
};

/* family == protocol: rank statistics of the realized combination rows from
 * full algebraic-mode runs. family == random: i.i.d. uniform combination
 * rows (2m of them) through the same correlated link process. */
RankRatioEstimate estimate_rank_ratio(double p, double rho_tx, double rho_rx,
                                      uint32_t m, uint32_t trials, uint64_t seed,
                                      PrecoderFamily family = PrecoderFamily::protocol,
                                      uint64_t field_modulus = PrimeField::kMersenne31);

struct RegionComparison {
    double max_sum_rate = 0.0;
    double gap_to_symmetric = 0.0; // analytic symmetric optimum minus best observed sum
    uint32_t violations = 0;       // rate pairs outside the region beyond tolerance
    uint32_t reports_checked = 0;
};

RegionComparison compare_to_region(const std::vector<SimReport>& reports,
                                   const RateRegion& region, double tol = 0.02);

struct SweepConfig {
    std::string axis = "p"; // p | rho_tx | rho_rx
    std::vector<double> values;
    double p = 0.5; // fixed coordinates; the swept one is overridden per row
    double rho_tx = 0.0;
    double rho_rx = 0.0;
    uint32_t m = 2000;
    uint32_t trials = 5;
    uint64_t seed = 1;
};

struct SweepRow {
    double param = 0.0;
    double analytic = 0.0;  // symmetric sum-rate optimum
    double simulated = 0.0; // mean simulated sum rate over contributing trials
    uint32_t trials = 0;    // contributing (non-halted) trials
    double stderr_ = 0.0;
    bool skipped = false; // parameter point infeasible
};

std::vector<SweepRow> sweep(const SweepConfig& config);

} // namespace corrlink
