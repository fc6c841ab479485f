#include "corrlink/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace corrlink {

namespace {

void check_rho(double rho, const char* name) {
    if (!(rho >= -1.0 && rho <= 1.0)) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "%s = %g outside [-1, 1]", name, rho);
        throw std::domain_error(buf);
    }
}

void check_feasible(double p, double rho, const char* what) {
    if (!(p >= 0.0 && p <= 1.0))
        throw std::domain_error("p = " + std::to_string(p) + " outside [0, 1]");
    Interval s = feasible_range(rho);
    if (!s.contains(p)) {
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "p = %g outside feasible range [%g, %g] for %s = %g",
                      p, s.lo, s.hi, what, rho);
        throw std::domain_error(buf);
    }
}

} // namespace

Interval feasible_range(double rho) {
    check_rho(rho, "rho");
    if (rho == 1.0) return {0.0, 1.0};
    double lo = std::max(0.0, -rho / (1.0 - rho));
    double hi = std::min(1.0, 1.0 / (1.0 - rho));
    return {lo, hi};
}

PairwiseJoint pairwise_joint(double p, double rho) {
    check_feasible(p, rho, "rho");
    double q = 1.0 - p;
    PairwiseJoint j;
    j.p11 = p * q * rho + p * p;
    j.p10 = p - j.p11;
    j.p01 = j.p10;
    j.p00 = 1.0 - j.p11 - 2.0 * j.p10;
    // clamp float dust at the boundary of the feasible range
    for (double* c : {&j.p11, &j.p10, &j.p01, &j.p00})
        if (*c < 0.0 && *c > -1e-12) *c = 0.0;
    return j;
}

namespace {

/* The four pairwise constraints of the cycle a11 - a21 - a22 - a12 - a11.
 * links: 0 = a11, 1 = a12, 2 = a21, 3 = a22. */
struct PairConstraint {
    int link_i, link_j;
    std::array<double, 4> cell; // target for (bi, bj) at index bi*2 + bj
};

std::array<double, 4> cells_of(const PairwiseJoint& j) {
    return {j.p00, j.p01, j.p10, j.p11};
}

std::array<PairConstraint, 4> make_constraints(double p, double rho_tx, double rho_rx) {
    auto tx = cells_of(pairwise_joint(p, rho_tx));
    auto rx = cells_of(pairwise_joint(p, rho_rx));
    return {{
        {0, 2, tx}, // transmitter 1 sees (a11, a21)
        {1, 3, tx}, // transmitter 2 sees (a12, a22)
        {0, 1, rx}, // receiver 1 hears (a11, a12)
        {2, 3, rx}, // receiver 2 hears (a21, a22)
    }};
}

double cell_mass(const std::array<double, 16>& prob, const PairConstraint& c, int cell) {
    int bi = cell >> 1, bj = cell & 1;
    double sum = 0.0;
    for (int s = 0; s < 16; ++s)
        if (state_bit(static_cast<uint8_t>(s), c.link_i) == bi &&
            state_bit(static_cast<uint8_t>(s), c.link_j) == bj)
            sum += prob[s];
    return sum;
}

double max_constraint_violation(const std::array<double, 16>& prob,
                                const std::array<PairConstraint, 4>& cons) {
    double worst = 0.0;
    for (const auto& c : cons)
        for (int cell = 0; cell < 4; ++cell)
            worst = std::max(worst, std::abs(cell_mass(prob, c, cell) - c.cell[cell]));
    return worst;
}

} // namespace

namespace detail {

std::array<double, 16> least_norm_pmf(double p, double rho_tx, double rho_rx) {
    auto cons = make_constraints(p, rho_tx, rho_rx);

    // Rows: 16 pair-cell equations plus the normalization. Minimum-norm
    // solution of A x = b via x = A^T y, (A A^T) y = b.
    constexpr int kRows = 17, kCols = 16;
    double a[kRows][kCols] = {};
    double b[kRows] = {};
    int r = 0;
    for (const auto& c : cons)
        for (int cell = 0; cell < 4; ++cell, ++r) {
            int bi = cell >> 1, bj = cell & 1;
            for (int s = 0; s < kCols; ++s)
                if (state_bit(static_cast<uint8_t>(s), c.link_i) == bi &&
                    state_bit(static_cast<uint8_t>(s), c.link_j) == bj)
                    a[r][s] = 1.0;
            b[r] = c.cell[cell];
        }
    for (int s = 0; s < kCols; ++s) a[16][s] = 1.0;
    b[16] = 1.0;

    double m[kRows][kRows + 1];
    for (int i = 0; i < kRows; ++i) {
        for (int j = 0; j < kRows; ++j) {
            double dot = 0.0;
            for (int k = 0; k < kCols; ++k) dot += a[i][k] * a[j][k];
            m[i][j] = dot;
        }
        m[i][kRows] = b[i];
    }

    // Gaussian elimination with partial pivoting; rank-deficient rows are
    // skipped (the system is consistent whenever the targets are feasible).
    int piv_row[kRows];
    int npiv = 0;
    for (int col = 0; col < kRows && npiv < kRows; ++col) {
        int best = -1;
        double best_abs = 1e-9;
        for (int i = npiv; i < kRows; ++i)
            if (std::abs(m[i][col]) > best_abs) { best = i; best_abs = std::abs(m[i][col]); }
        if (best < 0) continue;
        for (int j = 0; j <= kRows; ++j) std::swap(m[npiv][j], m[best][j]);
        for (int i = 0; i < kRows; ++i) {
            if (i == npiv || m[i][col] == 0.0) continue;
            double f = m[i][col] / m[npiv][col];
            for (int j = col; j <= kRows; ++j) m[i][j] -= f * m[npiv][j];
        }
        piv_row[npiv] = col;
        ++npiv;
    }
    double y[kRows] = {};
    for (int i = 0; i < npiv; ++i) y[piv_row[i]] = m[i][kRows] / m[i][piv_row[i]];

    std::array<double, 16> x{};
    for (int s = 0; s < kCols; ++s) {
        double dot = 0.0;
        for (int i = 0; i < kRows; ++i) dot += a[i][s] * y[i];
        x[s] = dot;
    }

    double resid = 0.0;
    for (int i = 0; i < kRows; ++i) {
        double dot = 0.0;
        for (int s = 0; s < kCols; ++s) dot += a[i][s] * x[s];
        resid = std::max(resid, std::abs(dot - b[i]));
    }
    if (resid > 1e-9)
        throw std::domain_error("pair constraints are jointly infeasible");
    return x;
}

} // namespace detail

JointStatePmf build_joint_pmf(double p, double rho_tx, double rho_rx) {
    check_feasible(p, rho_tx, "rho_tx");
    check_feasible(p, rho_rx, "rho_rx");

    auto cons = make_constraints(p, rho_tx, rho_rx);
    for (auto& c : cons)
        for (double& t : c.cell)
            if (t < 1e-15) t = 0.0; // exact zeros drive the support collapse

    JointStatePmf pmf;
    pmf.p = p;
    pmf.rho_tx = rho_tx;
    pmf.rho_rx = rho_rx;
    pmf.prob.fill(1.0 / 16.0);

    constexpr int kMaxSweeps = 10000;
    constexpr double kTol = 1e-10;
    bool converged = false;
    for (int sweep = 1; sweep <= kMaxSweeps; ++sweep) {
        for (const auto& c : cons) {
            for (int cell = 0; cell < 4; ++cell) {
                double cur = cell_mass(pmf.prob, c, cell);
                double t = c.cell[cell];
                if (cur <= 0.0) {
                    if (t > 1e-13)
                        throw std::domain_error(
                            "pair constraints are jointly infeasible");
                    continue;
                }
                double f = t / cur;
                int bi = cell >> 1, bj = cell & 1;
                for (int s = 0; s < 16; ++s)
                    if (state_bit(static_cast<uint8_t>(s), c.link_i) == bi &&
                        state_bit(static_cast<uint8_t>(s), c.link_j) == bj)
                        pmf.prob[s] *= f;
            }
        }
        double viol = max_constraint_violation(pmf.prob, cons);
        if (viol < kTol) {
            pmf.ipf_sweeps = sweep;
            pmf.max_violation = viol;
            converged = true;
            break;
        }
    }

    if (!converged) {
        auto x = detail::least_norm_pmf(p, rho_tx, rho_rx);
        double total = 0.0;
        for (double& v : x) {
            if (v < 0.0) {
                if (v < -1e-9)
                    throw std::domain_error(
                        "pair constraints are jointly infeasible");
                v = 0.0;
            }
            total += v;
        }
        for (double& v : x) v /= total;
        pmf.prob = x;
        pmf.ipf_sweeps = 0;
        pmf.max_violation = max_constraint_violation(pmf.prob, cons);
        if (pmf.max_violation > 1e-9)
            throw std::domain_error("pair constraints are jointly infeasible");
    }

    long double acc = 0.0L;
    for (int s = 0; s < 16; ++s) {
        acc += pmf.prob[s];
        long double scaled = acc * 18446744073709551616.0L; // 2^64
        pmf.cumulative[s] = scaled >= 18446744073709551615.0L
                                ? UINT64_MAX
                                : static_cast<uint64_t>(scaled);
    }
    pmf.cumulative[15] = UINT64_MAX;
    return pmf;
}

PairwiseJoint pair_marginal(const JointStatePmf& pmf, int link_i, int link_j) {
    PairwiseJoint j;
    for (int s = 0; s < 16; ++s) {
        int bi = state_bit(static_cast<uint8_t>(s), link_i);
        int bj = state_bit(static_cast<uint8_t>(s), link_j);
        double v = pmf.prob[s];
        if (bi && bj) j.p11 += v;
        else if (bi) j.p10 += v;
        else if (bj) j.p01 += v;
        else j.p00 += v;
    }
    return j;
}

ChannelState sample_state(const JointStatePmf& pmf, Rng& rng) {
    uint64_t u = rng.next();
    ChannelState st;
    st.bits = 15;
    for (uint8_t s = 0; s < 15; ++s)
        if (u < pmf.cumulative[s]) { st.bits = s; break; }
    return st;
}

ChannelState sample_state(const JointStatePmf& pmf, Rng& rng, const PrimeField& field) {
    ChannelState st = sample_state(pmf, rng);
    for (auto& g : st.gain) g = 1 + rng.next() % (field.modulus() - 1);
    return st;
}

} // namespace corrlink
