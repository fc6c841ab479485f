#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "corrlink/field.hpp"
#include "corrlink/rng.hpp"

namespace corrlink {

/* Joint on/off law of two Bernoulli(p) indicators with Pearson correlation
 * rho. p11 = p*(1-p)*rho + p^2, the rest follow from the marginals. */
struct PairwiseJoint {
    double p11 = 0.0;
    double p10 = 0.0;
    double p01 = 0.0;
    double p00 = 0.0;
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool contains(double x) const { return x >= lo && x <= hi; }
};

/* Marginal probabilities p for which a correlation of rho is achievable by
 * some bivariate Bernoulli law. rho = 1 admits every p in [0,1]. */
Interval feasible_range(double rho);

/* Throws std::domain_error (message names the violated interval) when p is
 * outside feasible_range(rho). */
PairwiseJoint pairwise_joint(double p, double rho);

/* One channel use: four link indicators packed little-endian as
 * (a11 << 3) | (a12 << 2) | (a21 << 1) | a22.
 * a11, a22 are the direct links; a12, a21 the cross links. Gains are
 * populated (nonzero field elements g11, g12, g21, g22) only by the
 * field-aware sample_state overload. */
struct ChannelState {
    uint8_t bits = 0;
    std::array<uint64_t, 4> gain{};
    int a11() const { return (bits >> 3) & 1; }
    int a12() const { return (bits >> 2) & 1; }
    int a21() const { return (bits >> 1) & 1; }
    int a22() const { return bits & 1; }
    /* link(j, i): indicator that receiver j hears transmitter i. */
    int link(int j, int i) const { return (bits >> (3 - 2 * j - i)) & 1; }
};

/* Link index order used throughout: 0 = a11, 1 = a12, 2 = a21, 3 = a22. */
inline int state_bit(uint8_t state, int link) { return (state >> (3 - link)) & 1; }

/* Maximum-entropy joint law over the 16 channel states subject to the four
 * pairwise constraints: transmitter pairs (a11,a21), (a12,a22) at rho_tx and
 * receiver pairs (a11,a12), (a21,a22) at rho_rx. Unconstrained pairs (the
 * diagonals) come out as independent as the cycle allows. */
struct JointStatePmf {
    double p = 0.0;
    double rho_tx = 0.0;
    double rho_rx = 0.0;
    std::array<double, 16> prob{};
    std::array<uint64_t, 16> cumulative{}; // fixed-point thresholds for sampling
    int ipf_sweeps = 0;                    // 0 when the direct solver was used
    double max_violation = 0.0;            // residual on the pair constraints

    double state_prob(uint8_t state) const { return prob[state]; }
};

JointStatePmf build_joint_pmf(double p, double rho_tx, double rho_rx);

/* Marginal of the pmf restricted to links (i, j), as a PairwiseJoint with
 * p10 the probability of link i on, link j off. */
PairwiseJoint pair_marginal(const JointStatePmf& pmf, int link_i, int link_j);

ChannelState sample_state(const JointStatePmf& pmf, Rng& rng);

/* As above, additionally drawing the four gains uniformly from the nonzero
 * field elements (independent of the link states). */
ChannelState sample_state(const JointStatePmf& pmf, Rng& rng, const PrimeField& field);

namespace detail {
/* Direct least-norm fit of the 16 state probabilities to the pair-marginal
 * equations; used when iterative scaling stalls on a boundary case. Exposed
 * for testing. */
std::array<double, 16> least_norm_pmf(double p, double rho_tx, double rho_rx);
} // namespace detail

} // namespace corrlink
