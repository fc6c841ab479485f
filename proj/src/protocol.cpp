#include "corrlink/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace corrlink {

PacketClass classify_packet(bool own_on, bool cross_on, bool other_own_heard) {
    if (own_on && cross_on) return other_own_heard ? PacketClass::q1_mixed : PacketClass::q1_clean;
    if (own_on) return PacketClass::delivered;
    if (cross_on) return other_own_heard ? PacketClass::q2_mixed : PacketClass::q2_clean;
    return PacketClass::retry;
}

namespace {

uint64_t slack_slots(uint32_t m, double exponent) {
    return static_cast<uint64_t>(std::ceil(std::pow(static_cast<double>(m), exponent)));
}

// gains are uniform over the nonzero field elements, combining coefficients
// over the whole field
void draw_gains(ChannelState& cs, Rng& rng, const PrimeField& field) {
    for (int k = 0; k < 4; ++k) cs.gain[k] = 1 + rng.next_below(field.modulus() - 1);
}

void trace_row(SimState& st, std::vector<EquationTerm> terms, const ChannelState& cs) {
    if (!st.trace) return;
    std::sort(terms.begin(), terms.end(),
              [](const EquationTerm& a, const EquationTerm& b) { return a.col < b.col; });
    st.trace->rows.push_back({std::move(terms), cs.link(0, 0) != 0, cs.link(1, 0) != 0});
}

} // namespace

SimState::SimState(const SimConfig& config)
    : cfg(config),
      field(config.field_modulus),
      pmf(build_joint_pmf(config.p, config.rho_tx, config.rho_rx)),
      rng_state(derive_seed(config.seed, 0)),
      rng_coef(derive_seed(config.seed, 1)) {
    if (cfg.m < 1) throw std::invalid_argument("m must be at least 1");
    algebraic = cfg.mode == SimMode::algebraic;
    if (algebraic && cfg.m > cfg.algebraic_cap) {
        throw std::invalid_argument("algebraic mode is capped at m = " +
                                    std::to_string(cfg.algebraic_cap) +
                                    " to bound elimination cost");
    }
    if (algebraic) {
        rx.emplace_back(field, 2 * cfg.m, 1);
        rx.emplace_back(field, 2 * cfg.m, 2);
    }
    report.queue_census.pmf_used = pmf.prob;
}

uint64_t phase1_budget(const SimConfig& config) {
    PairwiseJoint tx = pairwise_joint(config.p, config.rho_tx);
    double classify_prob = 1.0 - tx.p00;
    if (classify_prob <= 0.0) return slack_slots(config.m, config.slack_exponent);
    return static_cast<uint64_t>(std::ceil(config.m / classify_prob)) +
           slack_slots(config.m, config.slack_exponent);
}

uint64_t multicast_budget(const SimConfig& config, uint64_t k1, uint64_t k2) {
    PairwiseJoint rxj = pairwise_joint(config.p, config.rho_rx);
    double hear_prob = 1.0 - rxj.p00;
    uint64_t kmax = std::max(k1, k2);
    if (hear_prob <= 0.0) return slack_slots(config.m, config.slack_exponent);
    return static_cast<uint64_t>(std::ceil(2.0 * kmax / hear_prob)) +
           slack_slots(config.m, config.slack_exponent);
}

void run_phase1(SimState& st) {
    if (st.halted()) return;
    const uint32_t m = st.cfg.m;
    PairwiseJoint tx_joint = pairwise_joint(st.cfg.p, st.cfg.rho_tx);
    double classify_prob = 1.0 - tx_joint.p00;
    if (classify_prob <= 1e-15) {
        // nothing can ever leave a fresh queue
        st.report.halted = "I";
        return;
    }
    const uint64_t budget = phase1_budget(st.cfg);
    QueueCensus& census = st.report.queue_census;

    uint32_t head[2] = {0, 0}; // next fresh packet per transmitter
    uint64_t used = 0;
    while (head[0] < m || head[1] < m) {
        if (used == budget) {
            st.report.halted = "I";
            st.report.phase1_slots = used;
            return;
        }
        ++used;
        ChannelState cs = sample_state(st.pmf, st.rng_state);
        if (st.algebraic) draw_gains(cs, st.rng_coef, st.field);
        bool active[2] = {head[0] < m, head[1] < m};
        uint32_t col[2] = {head[0], m + head[1]};

        if (st.algebraic) {
            for (int j = 0; j < 2; ++j) {
                Equation eq;
                for (int i = 0; i < 2; ++i)
                    if (active[i] && cs.link(j, i))
                        eq.terms.push_back({col[i], cs.gain[2 * j + i]});
                if (eq.terms.empty()) continue;
                eq.slot = static_cast<int32_t>(st.slot + used);
                eq.phase = 1;
                st.rx[j].add(std::move(eq));
            }
        }
        if (active[0]) trace_row(st, {{col[0], 1}}, cs);

        bool q1_here[2] = {false, false};
        for (int i = 0; i < 2; ++i) {
            if (!active[i]) continue;
            bool own = cs.link(i, i) != 0;
            bool cross = cs.link(1 - i, i) != 0;
            bool heard = active[1 - i] && cs.link(1 - i, 1 - i) != 0;
            switch (classify_packet(own, cross, heard)) {
            case PacketClass::retry:
                break;
            case PacketClass::delivered:
                ++head[i];
                break;
            case PacketClass::q1_mixed:
            case PacketClass::q1_clean: {
                bool mixed = heard;
                st.q1[i].push_back({col[i], st.slot + used, mixed, -1});
                ++census.n[i][0];
                ++(mixed ? census.n_c : census.n_nc)[i][0];
                q1_here[i] = mixed;
                ++head[i];
                break;
            }
            case PacketClass::q2_mixed:
            case PacketClass::q2_clean: {
                bool mixed = heard;
                st.q2[i].push_back({col[i], st.slot + used, mixed, -1});
                ++census.n[i][1];
                ++(mixed ? census.n_c : census.n_nc)[i][1];
                ++head[i];
                break;
            }
            }
        }
        // a same-slot collision with all four links on leaves one mixed
        // packet on each side; serving either one later serves the other
        if (q1_here[0] && q1_here[1]) {
            int32_t idx = static_cast<int32_t>(st.pairs.size());
            st.q1[0].back().pair = idx;
            st.q1[1].back().pair = idx;
            st.pairs.push_back({{st.q1[0].back().col, st.q1[1].back().col}, st.slot + used, {false, false}});
        }
    }
    st.report.phase1_slots = used;
    st.slot += used;

    // deviation bounds, checked against the realized queue sizes
    double slack = 2.0 * std::pow(static_cast<double>(m), st.cfg.slack_exponent);
    double expect[2] = {tx_joint.p11 * m / classify_prob, tx_joint.p01 * m / classify_prob};
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            double target = expect[j] + slack;
            uint64_t padded = static_cast<uint64_t>(std::ceil(target));
            census.pads[i][j] = census.n[i][j] >= padded ? 0 : padded - census.n[i][j];
            if (static_cast<double>(census.n[i][j]) > target) st.report.halted = "II";
        }
    }
    if (st.halted()) return;
    PairwiseJoint rx_joint = pairwise_joint(st.cfg.p, st.cfg.rho_rx);
    double nc_frac = rx_joint.p01 / st.cfg.p; // P(other own link off | arrived cross)
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            if (static_cast<double>(census.n_nc[i][j]) < nc_frac * census.n[i][j] - slack)
                st.report.halted = "III";
}

void build_common_packets(SimState& st) {
    if (st.halted()) return;
    QueueCensus& census = st.report.queue_census;
    for (int i = 0; i < 2; ++i) {
        // canonical consumption order: mixed singles first, then collision-pair
        // members in pair order, so both sides break pairs from the same end
        std::vector<const SimState::QueueEntry*> c1;
        for (const auto& e : st.q1[i])
            if (e.mixed && e.pair < 0) c1.push_back(&e);
        for (const auto& e : st.q1[i])
            if (e.mixed && e.pair >= 0) c1.push_back(&e);
        std::vector<uint32_t> nc2, c2;
        for (const auto& e : st.q2[i]) (e.mixed ? c2 : nc2).push_back(e.col);

        size_t t1 = std::min(nc2.size(), c1.size());
        for (size_t k = 0; k < t1; ++k) {
            CommonPacket cp;
            cp.owner = i;
            cp.def = {{nc2[k], 1}, {c1[k]->col, 1}};
            std::sort(cp.def.begin(), cp.def.end(),
                      [](const EquationTerm& a, const EquationTerm& b) { return a.col < b.col; });
            st.commons.push_back(std::move(cp));
            if (c1[k]->pair >= 0) st.pairs[c1[k]->pair].consumed[i] = true;
        }
        for (size_t k = t1; k < nc2.size(); ++k) st.phase3_queue[i].push_back(nc2[k]);
        census.phase3_leftover[i] = st.phase3_queue[i].size();
        for (uint32_t col : c2) st.commons.push_back({i, {{col, 1}}});
        for (size_t k = t1; k < c1.size(); ++k)
            if (c1[k]->pair < 0) st.commons.push_back({i, {{c1[k]->col, 1}}});
    }
    // collision pairs: an intact pair needs only one of its two members at
    // both receivers (the slot equations supply the rest), so one generic
    // single serves it; alternate the owner to balance the loads. A pair
    // whose members were consumed on both sides is resolved for free by the
    // two pair sums. A pair broken on exactly one side still owes the
    // surviving member.
    int alt = 0;
    for (const auto& pr : st.pairs) {
        if (!pr.consumed[0] && !pr.consumed[1]) {
            int o = alt & 1;
            ++alt;
            st.commons.push_back({o, {{pr.col[o], 1}}});
        } else if (pr.consumed[0] != pr.consumed[1]) {
            int o = pr.consumed[0] ? 1 : 0;
            st.commons.push_back({o, {{pr.col[o], 1}}});
        }
    }
    for (const auto& cp : st.commons) ++census.commons[cp.owner];
}

void run_two_multicast(SimState& st) {
    if (st.halted()) return;
    std::array<std::vector<const CommonPacket*>, 2> atoms;
    for (const auto& cp : st.commons) atoms[cp.owner].push_back(&cp);
    const size_t k0 = atoms[0].size(), k1 = atoms[1].size();
    const size_t total = k0 + k1;
    if (total == 0) return;

    PairwiseJoint rx_joint = pairwise_joint(st.cfg.p, st.cfg.rho_rx);
    double hear_prob = 1.0 - rx_joint.p00;
    if (hear_prob <= 1e-15) {
        st.report.halted = "expiry";
        return;
    }
    const uint64_t budget = multicast_budget(st.cfg, k0, k1);
    uint64_t used = 0;

    if (!st.algebraic) {
        // statistical bookkeeping: a generic combination stream completes
        // once each receiver has heard `total` non-erased slots
        uint64_t seen[2] = {0, 0};
        while ((seen[0] < total || seen[1] < total) && used < budget) {
            ++used;
            ChannelState cs = sample_state(st.pmf, st.rng_state);
            for (int j = 0; j < 2; ++j) {
                bool heard = (k0 > 0 && cs.link(j, 0)) || (k1 > 0 && cs.link(j, 1));
                if (heard && seen[j] < total) ++seen[j];
            }
        }
        st.report.phase2_slots = used;
        st.slot += used;
        if (seen[0] < total || seen[1] < total) st.report.halted = "expiry";
        return;
    }

    IncrementalRank need[2] = {IncrementalRank(st.field, static_cast<uint32_t>(total)),
                               IncrementalRank(st.field, static_cast<uint32_t>(total))};
    // rows a receiver contributed to its basis, in atom coordinates
    std::array<std::vector<std::pair<uint64_t, std::vector<uint64_t>>>, 2> kept;
    std::vector<uint64_t> coef[2];
    while ((need[0].rank() < total || need[1].rank() < total) && used < budget) {
        ++used;
        ChannelState cs = sample_state(st.pmf, st.rng_state);
        draw_gains(cs, st.rng_coef, st.field);
        for (int i = 0; i < 2; ++i) {
            size_t ki = atoms[i].size();
            coef[i].resize(ki);
            for (size_t t = 0; t < ki; ++t) coef[i][t] = st.rng_coef.next_below(st.field.modulus());
        }
        if (st.trace && k0 > 0) {
            std::vector<EquationTerm> terms;
            for (size_t t = 0; t < k0; ++t)
                if (coef[0][t])
                    for (const auto& term : atoms[0][t]->def)
                        terms.push_back({term.col, st.field.mul(coef[0][t], term.coef)});
            trace_row(st, std::move(terms), cs);
        }
        for (int j = 0; j < 2; ++j) {
            if (need[j].rank() == total) continue;
            std::vector<uint64_t> row(total, 0);
            bool any = false;
            size_t base = 0;
            for (int i = 0; i < 2; ++i) {
                size_t ki = atoms[i].size();
                if (ki > 0 && cs.link(j, i)) {
                    uint64_t g = cs.gain[2 * j + i];
                    for (size_t t = 0; t < ki; ++t) row[base + t] = st.field.mul(g, coef[i][t]);
                    any = true;
                }
                base += ki;
            }
            if (!any) continue;
            if (need[j].add_row(row)) kept[j].emplace_back(st.slot + used, std::move(row));
        }
    }
    st.report.phase2_slots = used;
    st.slot += used;

    if (need[0].rank() < total || need[1].rank() < total) {
        st.report.halted = "expiry";
        // keep the partial observations honest: expand what was actually
        // heard into packet coordinates (atom supports are disjoint per
        // owner, so expansion is a 1-2 term substitution per coordinate)
        for (int j = 0; j < 2; ++j) {
            for (auto& [slot_id, row] : kept[j]) {
                Equation eq;
                size_t base = 0;
                for (int i = 0; i < 2; ++i) {
                    for (size_t t = 0; t < atoms[i].size(); ++t) {
                        uint64_t c = row[base + t];
                        if (c)
                            for (const auto& term : atoms[i][t]->def)
                                eq.terms.push_back({term.col, st.field.mul(c, term.coef)});
                    }
                    base += atoms[i].size();
                }
                eq.slot = static_cast<int32_t>(slot_id);
                eq.phase = 2;
                st.rx[j].add(std::move(eq));
            }
        }
        return;
    }
    // full atom rank at both receivers: the received span equals the span of
    // the atom definitions, so store those directly (an invertible change of
    // rows; keeps every later rank computation on 1-2 term equations)
    for (int j = 0; j < 2; ++j) {
        for (int i = 0; i < 2; ++i) {
            for (const CommonPacket* cp : atoms[i]) {
                Equation eq;
                eq.terms = cp->def;
                eq.slot = static_cast<int32_t>(st.slot);
                eq.phase = 2;
                st.rx[j].add(std::move(eq));
            }
        }
    }
}

void run_phase3(SimState& st) {
    if (st.halted()) return;
    size_t head[2] = {0, 0};
    uint64_t used = 0;
    while (head[0] < st.phase3_queue[0].size() || head[1] < st.phase3_queue[1].size()) {
        ++used;
        ChannelState cs = sample_state(st.pmf, st.rng_state);
        if (st.algebraic) draw_gains(cs, st.rng_coef, st.field);
        bool active[2] = {head[0] < st.phase3_queue[0].size(), head[1] < st.phase3_queue[1].size()};
        uint32_t col[2] = {active[0] ? st.phase3_queue[0][head[0]] : 0,
                           active[1] ? st.phase3_queue[1][head[1]] : 0};
        if (st.algebraic) {
            for (int j = 0; j < 2; ++j) {
                Equation eq;
                for (int i = 0; i < 2; ++i)
                    if (active[i] && cs.link(j, i))
                        eq.terms.push_back({col[i], cs.gain[2 * j + i]});
                if (eq.terms.empty()) continue;
                eq.slot = static_cast<int32_t>(st.slot + used);
                eq.phase = 3;
                st.rx[j].add(std::move(eq));
            }
        }
        if (active[0]) trace_row(st, {{col[0], 1}}, cs);
        for (int i = 0; i < 2; ++i)
            if (active[i] && cs.link(i, i)) ++head[i];
    }
    st.report.phase3_slots = used;
    st.slot += used;
}

void run_topup(SimState& st) {
    if (st.halted() || !st.algebraic) return;
    const uint32_t m = st.cfg.m;
    const uint64_t cap = 10ull * m + 1000; // defensive; generic rows make progress w.h.p.
    uint64_t used = 0;
    for (int j = 0; j < 2; ++j) {
        uint32_t own_base = j == 0 ? 0 : m;
        while (!decodable(st.rx[j], m, m)) {
            if (used >= cap) {
                st.report.halted = "expiry";
                st.report.topup_slots = used;
                st.slot += used;
                return;
            }
            ++used;
            ChannelState cs = sample_state(st.pmf, st.rng_state);
            draw_gains(cs, st.rng_coef, st.field);
            std::vector<EquationTerm> combo;
            for (uint32_t t = 0; t < m; ++t) {
                uint64_t c = st.rng_coef.next_below(st.field.modulus());
                if (c) combo.push_back({own_base + t, c});
            }
            if (j == 0) {
                std::vector<EquationTerm> local = combo;
                trace_row(st, std::move(local), cs);
            }
            for (int r = 0; r < 2; ++r) {
                if (!cs.link(r, j)) continue;
                Equation eq;
                uint64_t g = cs.gain[2 * r + j];
                eq.terms.reserve(combo.size());
                for (const auto& term : combo) eq.terms.push_back({term.col, st.field.mul(g, term.coef)});
                eq.slot = static_cast<int32_t>(st.slot + used);
                eq.phase = 4;
                st.rx[r].add(std::move(eq));
            }
        }
    }
    st.report.topup_slots = used;
    st.slot += used;
}

SimReport simulate(const SimConfig& config, PrecoderTrace* trace,
                   std::vector<EquationStore>* stores_out) {
    SimState st(config);
    if (st.algebraic) st.trace = trace;
    run_phase1(st);
    build_common_packets(st);
    run_two_multicast(st);
    run_phase3(st);
    run_topup(st);

    SimReport& rep = st.report;
    if (!st.halted()) {
        uint64_t total = rep.total_slots();
        rep.r1 = rep.r2 = static_cast<double>(config.m) / static_cast<double>(total);
        rep.decodable = st.algebraic
                            ? decodable(st.rx[0], config.m, config.m) &&
                                  decodable(st.rx[1], config.m, config.m)
                            : true;
    } else {
        rep.r1 = rep.r2 = 0.0;
        rep.decodable = false;
    }
    if (stores_out && st.algebraic) *stores_out = std::move(st.rx);
    return rep;
}

SimReport simulate(const SimConfig& config) { return simulate(config, nullptr, nullptr); }

} // namespace corrlink
