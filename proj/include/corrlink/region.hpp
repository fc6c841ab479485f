#pragma once

#include <array>
#include <vector>

namespace corrlink {

/* Weight of the partner's rate in the coupled sum constraints. */
double beta(double p, double rho_tx);

/* Probability that a receiver hears neither transmitter in a slot. */
double p_rx_00(double p, double rho_rx);

struct RatePoint {
    double r1 = 0.0;
    double r2 = 0.0;
};

/* The achievable-rate polytope
 *   0 <= r1 <= p,  0 <= r2 <= p,
 *   r1 + beta * r2 <= rhs,  beta * r1 + r2 <= rhs,
 * with rhs = beta * (1 - p_rx_00). Vertices are in counter-clockwise order
 * starting at the origin; active[k] marks constraints that support an edge. */
struct RateRegion {
    double p = 0.0;
    double rho_tx = 0.0;
    double rho_rx = 0.0;
    double beta = 0.0;
    double p_rx_00 = 0.0;
    double rhs = 0.0;
    std::vector<RatePoint> vertices;
    std::array<bool, 6> active{};
};

RateRegion make_region(double p, double rho_tx, double rho_rx);

bool contains(const RateRegion& region, double r1, double r2, double tol = 1e-12);

/* Largest sum rate r1 + r2 = 2r achievable with r1 = r2. */
double max_symmetric_sum_rate(double p, double rho_tx, double rho_rx);

/* The Pareto frontier from (p, 0) to (0, p), sampled at `resolution` points
 * (>= 2) spaced by arc length, with every polytope vertex on the frontier
 * inserted exactly. */
std::vector<RatePoint> boundary_polyline(const RateRegion& region, int resolution);

} // namespace corrlink
