#include "corrlink/region.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "corrlink/correlation.hpp"

namespace corrlink {

namespace {

void check_inputs(double p, double rho, const char* what) {
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

struct HalfPlane {
    double a, b, c; // a*r1 + b*r2 <= c
};

} // namespace

double beta(double p, double rho_tx) {
    check_inputs(p, rho_tx, "rho_tx");
    return 1.0 + (1.0 - rho_tx) * (1.0 - p);
}

double p_rx_00(double p, double rho_rx) {
    check_inputs(p, rho_rx, "rho_rx");
    return 1.0 + p * p + p * (1.0 - p) * rho_rx - 2.0 * p;
}

RateRegion make_region(double p, double rho_tx, double rho_rx) {
    RateRegion reg;
    reg.p = p;
    reg.rho_tx = rho_tx;
    reg.rho_rx = rho_rx;
    reg.beta = beta(p, rho_tx);
    reg.p_rx_00 = p_rx_00(p, rho_rx);
    reg.rhs = reg.beta * (1.0 - reg.p_rx_00);

    const HalfPlane hp[6] = {
        {-1.0, 0.0, 0.0},          {0.0, -1.0, 0.0},
        {1.0, 0.0, p},             {0.0, 1.0, p},
        {1.0, reg.beta, reg.rhs},  {reg.beta, 1.0, reg.rhs},
    };

    constexpr double kFeasTol = 1e-12;
    std::vector<RatePoint> pts;
    for (int i = 0; i < 6; ++i) {
        for (int j = i + 1; j < 6; ++j) {
            double det = hp[i].a * hp[j].b - hp[i].b * hp[j].a;
            if (std::abs(det) <= 1e-12) continue;
            double r1 = (hp[i].c * hp[j].b - hp[i].b * hp[j].c) / det;
            double r2 = (hp[i].a * hp[j].c - hp[i].c * hp[j].a) / det;
            bool ok = true;
            for (const auto& h : hp)
                if (h.a * r1 + h.b * r2 > h.c + kFeasTol) { ok = false; break; }
            if (!ok) continue;
            bool dup = false;
            for (const auto& v : pts)
                if (std::abs(v.r1 - r1) < 1e-10 && std::abs(v.r2 - r2) < 1e-10) {
                    dup = true;
                    break;
                }
            if (!dup) pts.push_back({r1, r2});
        }
    }

    double cx = 0.0, cy = 0.0;
    for (const auto& v : pts) { cx += v.r1; cy += v.r2; }
    cx /= std::max<size_t>(pts.size(), 1);
    cy /= std::max<size_t>(pts.size(), 1);
    std::sort(pts.begin(), pts.end(), [&](const RatePoint& a, const RatePoint& b) {
        return std::atan2(a.r2 - cy, a.r1 - cx) < std::atan2(b.r2 - cy, b.r1 - cx);
    });

    // rotate so the origin comes first
    size_t start = 0;
    for (size_t k = 0; k < pts.size(); ++k)
        if (std::abs(pts[k].r1) < 1e-10 && std::abs(pts[k].r2) < 1e-10) {
            start = k;
            break;
        }
    std::rotate(pts.begin(), pts.begin() + static_cast<long>(start), pts.end());
    reg.vertices = std::move(pts);

    // a constraint supports an edge iff two vertices satisfy it with equality
    size_t need = std::min<size_t>(2, reg.vertices.size());
    for (int k = 0; k < 6; ++k) {
        size_t touching = 0;
        for (const auto& v : reg.vertices)
            if (std::abs(hp[k].a * v.r1 + hp[k].b * v.r2 - hp[k].c) <= 1e-9)
                ++touching;
        reg.active[static_cast<size_t>(k)] = touching >= need && need > 0;
    }
    return reg;
}

bool contains(const RateRegion& region, double r1, double r2, double tol) {
    if (r1 < -tol || r2 < -tol) return false;
    if (r1 > region.p + tol || r2 > region.p + tol) return false;
    if (r1 + region.beta * r2 > region.rhs + tol) return false;
    if (region.beta * r1 + r2 > region.rhs + tol) return false;
    return true;
}

double max_symmetric_sum_rate(double p, double rho_tx, double rho_rx) {
    double b = beta(p, rho_tx);
    double rhs = b * (1.0 - p_rx_00(p, rho_rx));
    double r = std::min(p, rhs / (1.0 + b));
    return 2.0 * r;
}

std::vector<RatePoint> boundary_polyline(const RateRegion& region, int resolution) {
    if (resolution < 2) throw std::invalid_argument("resolution must be >= 2");
    if (region.vertices.size() <= 1) return region.vertices;

    // Counter-clockwise from the origin, the frontier is everything after it.
    std::vector<RatePoint> chain(region.vertices.begin() + 1, region.vertices.end());

    std::vector<double> arc(chain.size(), 0.0);
    for (size_t k = 1; k < chain.size(); ++k)
        arc[k] = arc[k - 1] + std::hypot(chain[k].r1 - chain[k - 1].r1,
                                         chain[k].r2 - chain[k - 1].r2);
    double total = arc.back();
    if (total <= 0.0) return {chain.front()};

    auto point_at = [&](double t) -> RatePoint {
        size_t k = 1;
        while (k < chain.size() - 1 && arc[k] < t) ++k;
        double seg = arc[k] - arc[k - 1];
        double u = seg > 0.0 ? (t - arc[k - 1]) / seg : 0.0;
        return {chain[k - 1].r1 + u * (chain[k].r1 - chain[k - 1].r1),
                chain[k - 1].r2 + u * (chain[k].r2 - chain[k - 1].r2)};
    };

    std::vector<double> stops;
    for (int k = 0; k < resolution; ++k)
        stops.push_back(total * k / (resolution - 1));
    for (size_t k = 0; k < chain.size(); ++k) stops.push_back(arc[k]);
    std::sort(stops.begin(), stops.end());

    std::vector<RatePoint> out;
    for (double t : stops) {
        RatePoint pt = point_at(t);
        if (!out.empty() && std::abs(out.back().r1 - pt.r1) < 1e-9 &&
            std::abs(out.back().r2 - pt.r2) < 1e-9)
            continue;
        out.push_back(pt);
    }
    return out;
}

} // namespace corrlink
