#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "corrlink/correlation.hpp"
#include "corrlink/field.hpp"
#include "corrlink/linalg.hpp"
#include "corrlink/rng.hpp"

namespace corrlink {

enum class SimMode { ledger, algebraic };

struct SimConfig {
    double p = 0.5;
    double rho_tx = 0.0;
    double rho_rx = 0.0;
    uint32_t m = 1000;               // fresh packets per transmitter
    SimMode mode = SimMode::ledger;
    uint64_t field_modulus = PrimeField::kMersenne31;
    uint64_t seed = 1;
    double slack_exponent = 2.0 / 3.0; // deviation slack is 2*m^(2/3)
    uint32_t algebraic_cap = 2000;     // elimination cost bound
};

/* Outcome of one transmission attempt, from the sender's two outgoing links.
 * q1: arrived at its receiver and interfered at the other one.
 * q2: missed its receiver but landed at the other one.
 * The mixed/clean label says whether the other transmitter's own link also
 * carried a packet into that cross receiver (mixed) or the copy arrived
 * clean, in which case the cross receiver already holds it. */
enum class PacketClass { delivered, q1_mixed, q1_clean, q2_mixed, q2_clean, retry };

PacketClass classify_packet(bool own_on, bool cross_on, bool other_own_heard);

struct QueueCensus {
    std::array<std::array<uint64_t, 2>, 2> n{};    // n[user][queue]: arrivals into q1/q2
    std::array<std::array<uint64_t, 2>, 2> n_c{};  // mixed sub-counts
    std::array<std::array<uint64_t, 2>, 2> n_nc{}; // clean sub-counts
    std::array<std::array<uint64_t, 2>, 2> pads{}; // fill to the deterministic size (bookkeeping only)
    std::array<uint64_t, 2> commons{};             // common packets transmitted per side
    std::array<uint64_t, 2> phase3_leftover{};
    std::array<double, 16> pmf_used{};
};

struct SimReport {
    uint64_t phase1_slots = 0;
    uint64_t phase2_slots = 0;
    uint64_t phase3_slots = 0;
    uint64_t topup_slots = 0;
    std::string halted = "none"; // none | I | II | III | expiry
    double r1 = 0.0;
    double r2 = 0.0;
    bool decodable = false;
    QueueCensus queue_census;

    uint64_t total_slots() const {
        return phase1_slots + phase2_slots + phase3_slots + topup_slots;
    }
};

/* A common packet: one packet (or a same-transmitter pair sum) that is useful
 * to both receivers and rides the two-multicast phase. */
struct CommonPacket {
    int owner = 0;                 // transmitter that sends it
    std::vector<EquationTerm> def; // 1 or 2 packet columns, unit coefficients
};

/* Every combination transmitter 0 put on the air, with the two link bits of
 * its slot. Columns are local to transmitter 0's block [0, m). Filled only in
 * algebraic mode. */
struct PrecoderTrace {
    struct Row {
        std::vector<EquationTerm> terms;
        bool a11 = false; // link into receiver 0
        bool a21 = false; // link into receiver 1
    };
    std::vector<Row> rows;
};

/* Whole-trial state shared by the phase drivers. Packet columns are global:
 * transmitter 0 owns [0, m), transmitter 1 owns [m, 2m). */
struct SimState {
    explicit SimState(const SimConfig& config);

    SimConfig cfg;
    PrimeField field;
    JointStatePmf pmf;
    Rng rng_state; // stream A: channel states only
    Rng rng_coef;  // stream B: gains and combining coefficients
    bool algebraic = false;
    uint64_t slot = 0; // global slot counter across phases

    struct QueueEntry {
        uint32_t col = 0;
        uint64_t slot = 0;
        bool mixed = false;
        int32_t pair = -1; // index into pairs, or -1
    };
    /* Same-slot collisions with all four links on: one member per side, both
     * in q1-mixed; serving either member resolves the other via cancellation. */
    struct CrossPair {
        std::array<uint32_t, 2> col{};
        uint64_t slot = 0;
        std::array<bool, 2> consumed{}; // taken into a pair-sum on that side
    };

    std::array<std::vector<QueueEntry>, 2> q1, q2;
    std::vector<CrossPair> pairs;
    std::vector<CommonPacket> commons; // side-0 atoms first, then side-1
    std::array<std::vector<uint32_t>, 2> phase3_queue;
    std::vector<EquationStore> rx;  // two receiver stores (algebraic mode)
    PrecoderTrace* trace = nullptr; // optional, algebraic mode

    SimReport report;

    bool halted() const { return report.halted != "none"; }
};

/* Phase drivers; each is a no-op when a halt is already recorded. */
void run_phase1(SimState& state);
void build_common_packets(SimState& state);
void run_two_multicast(SimState& state);
void run_phase3(SimState& state);
void run_topup(SimState& state);

SimReport simulate(const SimConfig& config);

/* As above; additionally fills `trace` with transmitter 0's realized
 * combination rows and hands back the receiver equation stores (both
 * algebraic-mode only, either pointer may be null). */
SimReport simulate(const SimConfig& config, PrecoderTrace* trace,
                   std::vector<EquationStore>* stores_out = nullptr);

/* Slot budgets, exposed for inspection. The retransmission phase budget is
 * ceil(m / (1 - p_tx_00)) + ceil(m^(2/3)); the multicast budget is
 * ceil(2 max(k1, k2) / (1 - p_rx_00)) + ceil(m^(2/3)). */
uint64_t phase1_budget(const SimConfig& config);
uint64_t multicast_budget(const SimConfig& config, uint64_t k1, uint64_t k2);

} // namespace corrlink
