#include "herdsim/reach_avoid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace herdsim {

namespace {

void check_ratio(double ratio) {
    if (!(ratio > 0.0 && ratio < 1.0))
        throw std::invalid_argument("speed ratio must lie in (0, 1)");
}

}  // namespace

ApolloniusCircle apollonius_circle(Vec2 xa, Vec2 xd, double ratio) {
    check_ratio(ratio);
    const double sep = distance(xa, xd);
    if (sep < 1e-12) throw std::invalid_argument("apollonius_circle: coincident agents");
    const double k = 1.0 - ratio * ratio;
    ApolloniusCircle c;
    c.center = (xa - xd * (ratio * ratio)) / k;
    c.radius = ratio / k * sep;
    return c;
}

double judgment(double la, double ld, double phi, double ratio) {
    check_ratio(ratio);
    if (la < 0.0 || ld < 0.0) throw std::invalid_argument("judgment: negative line distance");
    const double s = std::sin(phi);
    if (!(s > 0.0)) throw std::invalid_argument("judgment: sight angle outside (0, pi)");
    return la * (1.0 - ratio / s) - ld * (ratio / s - ratio * ratio);
}

double risk_margin(double la, double ld, double phi, double ratio) {
    return judgment(la, ld, phi, ratio) / (1.0 - ratio * ratio);
}

NecessaryConditions conditions(double la, double ld, double phi, double ratio) {
    check_ratio(ratio);
    if (la < 0.0 || ld < 0.0) throw std::invalid_argument("conditions: negative line distance");
    const double band = std::acos(ratio);
    NecessaryConditions c;
    c.angle_ok = std::abs(phi - kPi / 2.0) <= band;
    const double s = std::sin(phi);
    if (!(s > 0.0)) {
        c.distance_ok = false;
        return c;
    }
    // ld < la (sin phi - ratio) / (ratio (1 - ratio sin phi)); the denominator
    // is positive for ratio < 1, so cross-multiply to avoid the division.
    c.distance_ok = ld * ratio * (1.0 - ratio * s) < la * (s - ratio);
    return c;
}

GameStatus classify(double la, double ld, double phi, double ratio, double tol) {
    GameStatus st;
    st.judgment_value = judgment(la, ld, phi, ratio);
    st.margin = st.judgment_value / (1.0 - ratio * ratio);
    if (st.judgment_value > tol)
        st.tag = GameTag::DefenderWins;
    else if (st.judgment_value < -tol)
        st.tag = GameTag::LineReachable;
    else
        st.tag = GameTag::OnBarrier;
    return st;
}

bool reachable_set_contains(Vec2 p, Vec2 xa, std::span<const Vec2> defenders,
                            double ratio) {
    check_ratio(ratio);
    const double da = distance(p, xa);
    for (const Vec2& xd : defenders) {
        if (da > ratio * distance(p, xd)) return false;
    }
    return true;
}

bool fence_breach_possible(Vec2 xa, std::span<const Vec2> defenders,
                           std::span<const Vec2> beacons, double ratio) {
    check_ratio(ratio);
    if (beacons.size() < 3) throw std::invalid_argument("fence needs at least 3 beacons");
    if (defenders.empty()) return true;

    const std::size_t n = beacons.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 b0 = beacons[i];
        const Vec2 b1 = beacons[(i + 1) % n];
        const Vec2 e = b1 - b0;
        const double len = e.norm();
        if (len < 1e-12) throw std::invalid_argument("fence edge is degenerate");
        const Vec2 u = e / len;
        const Vec2 nrm = rotate90(u);

        // Intersect every defender's reach-disc chord on this edge's line.
        double lo = 0.0, hi = len;
        bool empty = false;
        for (const Vec2& xd : defenders) {
            const ApolloniusCircle disc = apollonius_circle(xa, xd, ratio);
            const double d = std::abs(dot(disc.center - b0, nrm));
            if (d >= disc.radius) {
                empty = true;  // this defender already seals the line
                break;
            }
            const double half = std::sqrt(disc.radius * disc.radius - d * d);
            const double sc = dot(disc.center - b0, u);
            lo = std::max(lo, sc - half);
            hi = std::min(hi, sc + half);
            if (hi - lo <= 1e-12) {
                empty = true;
                break;
            }
        }
        if (!empty) return true;
    }
    return false;
}

bool fence_breach_possible_sampled(Vec2 xa, std::span<const Vec2> defenders,
                                   std::span<const Vec2> beacons, double ratio,
                                   double step) {
    check_ratio(ratio);
    if (beacons.size() < 3) throw std::invalid_argument("fence needs at least 3 beacons");
    if (step <= 0.0) throw std::invalid_argument("sampling step must be positive");

    const std::size_t n = beacons.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 b0 = beacons[i];
        const Vec2 b1 = beacons[(i + 1) % n];
        const double len = distance(b0, b1);
        const int count = std::max(1, static_cast<int>(std::ceil(len / step)));
        for (int k = 0; k <= count; ++k) {
            const Vec2 p = b0 + (b1 - b0) * (static_cast<double>(k) / count);
            const double da = distance(p, xa);
            bool strictly_inside = true;
            for (const Vec2& xd : defenders) {
                if (!(da < ratio * distance(p, xd))) {
                    strictly_inside = false;
                    break;
                }
            }
            if (strictly_inside) return true;
        }
    }
    return false;
}

}  // namespace herdsim
