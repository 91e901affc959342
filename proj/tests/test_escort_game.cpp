#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "herdsim/escort_game.hpp"

using namespace herdsim;

namespace {

GameLayerParams defaults() { return GameLayerParams{}; }

}  // namespace

TEST_CASE("desired stand-off distance") {
    const GameLayerParams p = defaults();  // k_delta 0.5, ratio 0.65
    CHECK(desired_distance(1.0, 0.0, p) == doctest::Approx(0.7692307692).epsilon(1e-9));
    CHECK(desired_distance(2.0, 0.0, p) ==
          doctest::Approx(2.0 * desired_distance(1.0, 0.0, p)).epsilon(1e-12));
    CHECK(desired_distance(1.0, 0.4, p) ==
          doctest::Approx(desired_distance(1.0, -0.4, p)).epsilon(1e-12));  // even in the angle
    CHECK(desired_distance(1.0, 0.4, p) < desired_distance(1.0, 0.0, p));
    CHECK(desired_distance(1.0, 0.8, p) < desired_distance(1.0, 0.4, p));

    const double cone = std::acos(p.design_ratio);
    CHECK(desired_distance(1.0, cone - 1e-7, p) < 1e-6);  // vanishes at the cone edge
    CHECK_THROWS_AS(desired_distance(1.0, cone, p), std::domain_error);
    CHECK_THROWS_AS(desired_distance(1.0, cone + 0.2, p), std::domain_error);
    CHECK_THROWS_AS(desired_distance(0.0, 0.0, p), std::invalid_argument);

    GameLayerParams bad = defaults();
    bad.k_delta = 1.0;
    CHECK_THROWS_AS(desired_distance(1.0, 0.0, bad), std::invalid_argument);
}

TEST_CASE("channel normalizers") {
    const GameLayerParams p = defaults();
    const Normalizers n = normalizers(1.0, 1.0, 0.0, p);
    CHECK(n.horizontal == doctest::Approx(2.3382591005).epsilon(1e-9));
    CHECK(n.vertical == doctest::Approx(0.7692307692).epsilon(1e-9));

    // k_delta = 1/2 makes the vertical normalizer branch-independent and
    // equal to the stand-off distance.
    CHECK(normalizers(1.0, 1.0, 0.0, p, false).vertical ==
          doctest::Approx(n.vertical).epsilon(1e-12));
    CHECK(desired_distance(1.0, 0.0, p) == doctest::Approx(n.vertical).epsilon(1e-12));

    // Asymmetric split: the branch picks k or 1-k.
    GameLayerParams q = defaults();
    q.k_delta = 0.3;
    CHECK(normalizers(1.0, 1.0, 0.0, q, true).vertical ==
          doctest::Approx(0.3 / 0.65).epsilon(1e-12));
    CHECK(normalizers(1.0, 1.0, 0.0, q, false).vertical ==
          doctest::Approx(0.7 / 0.65).epsilon(1e-12));

    // Horizontal normalizer is linear in the two line distances.
    CHECK(normalizers(2.0, 3.0, 0.0, p).horizontal ==
          doctest::Approx(2.5 * n.horizontal).epsilon(1e-12));

    // The vertical normalizer collapses at the cone edge and throws beyond.
    const double cone = std::acos(p.design_ratio);
    CHECK(normalizers(1.0, 1.0, cone - 1e-7, p).vertical < 1e-6);
    CHECK_THROWS_AS(normalizers(1.0, 1.0, cone, p), std::domain_error);
    CHECK_THROWS_AS(normalizers(0.0, 1.0, 0.0, p), std::invalid_argument);
    CHECK_THROWS_AS(normalizers(1.0, -0.1, 0.0, p), std::invalid_argument);
}

TEST_CASE("performance funnel profile") {
    const GameLayerParams p = defaults();  // decay 1, floor 0.8
    CHECK(ppf_rho(0.0, p) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ppf_rho(1.0, p) == doctest::Approx(0.8735758882).epsilon(1e-9));
    CHECK(ppf_rho(50.0, p) == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(ppf_rho_rate(0.0, p) == doctest::Approx(-0.2).epsilon(1e-12));

    // Monotone decreasing, bounded by (floor, 1]; rate matches a finite difference.
    for (int k = 0; k < 41; ++k) {
        const double t = 0.25 * k;
        CHECK(ppf_rho(t, p) > p.funnel_floor);
        CHECK(ppf_rho(t, p) <= 1.0 + 1e-15);
        const double h = 1e-6;
        const double fd = (ppf_rho(t + h, p) - ppf_rho(t - h, p)) / (2.0 * h);
        CHECK(std::abs(ppf_rho_rate(t, p) - fd) < 1e-9);
        if (k > 0) CHECK(ppf_rho(t, p) < ppf_rho(0.25 * (k - 1), p));
    }
}

TEST_CASE("error transform: symmetric band") {
    CHECK(transform_error(0.0, 1.0) == doctest::Approx(0.0));
    CHECK(transform_error(0.5, 1.0) == doctest::Approx(0.5493061443).epsilon(1e-9));
    CHECK(transform_error(-0.5, 1.0) == doctest::Approx(-0.5493061443).epsilon(1e-9));
    CHECK(transform_error(0.25, 0.5) == doctest::Approx(transform_error(0.5, 1.0)).epsilon(1e-12));

    // Round trip: e_tilde = rho * tanh(epsilon).
    std::mt19937_64 gen(307);
    std::uniform_real_distribution<double> uz(-0.999, 0.999), ur(0.1, 2.0);
    for (int k = 0; k < 500; ++k) {
        const double rho = ur(gen), z = uz(gen);
        const double eps = transform_error(z * rho, rho);
        CHECK(rho * std::tanh(eps) == doctest::Approx(z * rho).epsilon(1e-10));
    }

    CHECK_THROWS_AS(transform_error(1.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(transform_error(-1.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(transform_error(2.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(transform_error(0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(transform_error(0.0, -1.0), std::invalid_argument);
}

TEST_CASE("error transform: asymmetric bands") {
    // delta = 1 reduces to the symmetric transform.
    CHECK(transform_error_general(0.3, 1.0, 1.0, true) ==
          doctest::Approx(transform_error(0.3, 1.0)).epsilon(1e-12));
    CHECK(transform_error_general(0.3, 1.0, 1.0, false) ==
          doctest::Approx(transform_error(0.3, 1.0)).epsilon(1e-12));

    // Positive branch: epsilon = artanh(z) + ln(delta)/2 on the band (-delta, 1).
    const double d = 0.6;
    CHECK(transform_error_general(0.3, 1.0, d, true) ==
          doctest::Approx(std::atanh(0.3) + 0.5 * std::log(d)).epsilon(1e-12));
    CHECK(transform_error_general(-0.5, 1.0, d, true) ==
          doctest::Approx(std::atanh(-0.5) + 0.5 * std::log(d)).epsilon(1e-12));
    CHECK_THROWS_AS(transform_error_general(-d, 1.0, d, true), std::domain_error);
    CHECK_THROWS_AS(transform_error_general(1.0, 1.0, d, true), std::domain_error);
    CHECK_NOTHROW(transform_error_general(-d + 1e-9, 1.0, d, true));

    // Negative branch mirrors the positive one.
    CHECK(transform_error_general(-0.3, 1.0, d, false) ==
          doctest::Approx(-transform_error_general(0.3, 1.0, d, true)).epsilon(1e-12));
    CHECK_THROWS_AS(transform_error_general(d, 1.0, d, false), std::domain_error);
    CHECK_THROWS_AS(transform_error_general(-1.0, 1.0, d, false), std::domain_error);
    CHECK_NOTHROW(transform_error_general(d - 1e-9, 1.0, d, false));

    // The equilibrium of the shifted transform sits at z* = (1-d)/(1+d).
    const double zstar = (1.0 - d) / (1.0 + d);
    CHECK(transform_error_general(zstar, 1.0, d, true) == doctest::Approx(0.0).epsilon(1e-12));

    CHECK_THROWS_AS(transform_error_general(0.0, 1.0, 0.0, true), std::invalid_argument);
    CHECK_THROWS_AS(transform_error_general(0.0, 1.0, 1.5, true), std::invalid_argument);
}

TEST_CASE("vertical band asymmetry ratio") {
    CHECK(vertical_delta(0.5, true) == doctest::Approx(1.0));
    CHECK(vertical_delta(0.5, false) == doctest::Approx(1.0));
    CHECK(vertical_delta(0.3, true) == doctest::Approx(1.0));           // min(7/3, 1)
    CHECK(vertical_delta(0.3, false) == doctest::Approx(3.0 / 7.0).epsilon(1e-12));
    CHECK(vertical_delta(0.7, true) == doctest::Approx(3.0 / 7.0).epsilon(1e-12));
    CHECK(vertical_delta(0.7, false) == doctest::Approx(1.0));
    CHECK_THROWS_AS(vertical_delta(0.0, true), std::invalid_argument);
    CHECK_THROWS_AS(vertical_delta(1.0, true), std::invalid_argument);
}

TEST_CASE("channel state assembly") {
    const ChannelState s = make_channel_state(0.5, 2.0, 1.0, 1.0, true);
    CHECK(s.e == doctest::Approx(0.5));
    CHECK(s.normalizer == doctest::Approx(2.0));
    CHECK(s.e_tilde == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(s.rho == doctest::Approx(1.0));
    CHECK(s.epsilon == doctest::Approx(std::atanh(0.25)).epsilon(1e-12));
    CHECK(s.delta_g == doctest::Approx(1.0));
    CHECK(s.positive_branch);
    CHECK_THROWS_AS(make_channel_state(0.0, 0.0, 1.0, 1.0, true), std::invalid_argument);
    CHECK_THROWS_AS(make_channel_state(2.0, 1.0, 1.0, 1.0, true), std::domain_error);
}

TEST_CASE("channel controls: equilibria and feedforward") {
    // Symmetric band, zero error, static geometry: the command vanishes / is
    // the pure feedforward.
    const ChannelState zero = make_channel_state(0.0, 1.3, 0.9, 1.0, true);
    CHECK(vertical_control(zero, 0.0, 0.0, 0.0, 2.0) == doctest::Approx(0.0));
    CHECK(vertical_control(zero, 0.0, 0.0, 1.7, 2.0) == doctest::Approx(1.7).epsilon(1e-12));
    CHECK(horizontal_control(zero, 0.0, 0.0, 1.0, 2.0) == doctest::Approx(1.0).epsilon(1e-12));

    // Asymmetric band: the resting point moves to z* = (1-d)/(1+d).
    const double d = 3.0 / 7.0;
    const double zstar = (1.0 - d) / (1.0 + d);
    const ChannelState rest = make_channel_state(zstar * 1.3 * 0.9, 1.3, 0.9, d, true);
    CHECK(vertical_control(rest, 0.0, 0.0, 0.4, 2.0) == doctest::Approx(0.4).epsilon(1e-10));

    // A positive vertical error is pushed back toward the line.
    const ChannelState high = make_channel_state(0.4, 1.0, 0.9, 1.0, true);
    CHECK(vertical_control(high, 0.0, 0.0, 0.0, 2.0) < 0.0);
    const ChannelState low = make_channel_state(-0.4, 1.0, 0.9, 1.0, true);
    CHECK(vertical_control(low, 0.0, 0.0, 0.0, 2.0) > 0.0);

    // Singular channel: the controller refuses to divide by (almost) zero.
    const ChannelState tiny = make_channel_state(0.0, 1e-12, 0.5, 1.0, true);
    CHECK_THROWS_AS(vertical_control(tiny, 0.0, 0.0, 0.0, 2.0), std::runtime_error);
    CHECK_THROWS_AS(horizontal_control(tiny, 0.0, 0.0, 0.0, 2.0), std::runtime_error);
}

TEST_CASE("channel controls: closed-loop finite-difference exponential decay") {
    // Property: if the raw error follows e_dot = u - feedforward_rate while
    // the normalizer and funnel follow their declared rates, the transformed
    // error contracts as epsilon_dot = -gain * epsilon.
    std::mt19937_64 gen(311);
    std::uniform_real_distribution<double> uxi(0.3, 3.0), urho(0.81, 1.0);
    std::uniform_real_distribution<double> uz(-0.75, 0.8), urate(-1.0, 1.0);
    std::uniform_real_distribution<double> urho_rate(-0.2, 0.0);
    const double h = 1e-6;
    int checked = 0;
    for (int k = 0; k < 1000; ++k) {
        const bool branch = (k % 2 == 0);
        const double delta = (k % 3 == 0) ? 1.0 : ((k % 3 == 1) ? 0.6 : 3.0 / 7.0);
        const double xi = uxi(gen), rho = urho(gen);
        const double lower = branch ? -delta : -1.0;
        const double upper = branch ? 1.0 : delta;
        double z = uz(gen);
        z = lower + (upper - lower) * (z + 0.75) / 1.55;  // rescale into the band
        z = std::clamp(z, lower * 0.9, upper * 0.9);
        const double e = z * xi * rho;
        const double xi_rate = urate(gen), rho_rate = urho_rate(gen);
        const double ff = urate(gen) * 1.5;
        const double gain = (k % 2 == 0) ? 2.0 : 1.3;

        const ChannelState s = make_channel_state(e, xi, rho, delta, branch);
        const bool vertical = (k % 5 != 0);
        const double u = vertical
                             ? vertical_control(s, xi_rate, rho_rate, ff, gain)
                             : horizontal_control(s, xi_rate, rho_rate, ff, gain);
        const double e2 = e + h * (u - ff);
        const ChannelState s2 =
            make_channel_state(e2, xi + h * xi_rate, rho + h * rho_rate, delta, branch);
        const double fd = (s2.epsilon - s.epsilon) / h;
        CHECK(std::abs(fd + gain * s.epsilon) <=
              1e-3 * std::abs(gain * s.epsilon) + 1e-5);
        ++checked;
    }
    CHECK(checked == 1000);
}

TEST_CASE("frame rotation and saturation of the escort command") {
    // Edge (1,0)->(-1,0): frame axes coincide with the ground axes.
    const DefenseLineFrame ident = DefenseLineFrame::from_edge({1, 0}, {-1, 0});
    CHECK(distance(escort_input(0.7, -0.3, ident, 10.0), {0.7, -0.3}) < 1e-12);

    // Edge (-1,0)->(1,0): the frame is the ground frame rotated by pi.
    const DefenseLineFrame flipped = DefenseLineFrame::from_edge({-1, 0}, {1, 0});
    CHECK(distance(escort_input(1.0, 2.0, flipped, 10.0), {-1.0, -2.0}) < 1e-12);

    // Edge (0,0)->(0,1): frame horizontal maps to ground (0,-1).
    const DefenseLineFrame quarter = DefenseLineFrame::from_edge({0, 0}, {0, 1});
    CHECK(distance(escort_input(1.0, 0.0, quarter, 10.0), {0.0, -1.0}) < 1e-12);
    CHECK(distance(escort_input(0.0, 1.0, quarter, 10.0), {1.0, 0.0}) < 1e-12);

    // Saturation preserves direction and caps the magnitude exactly.
    const Vec2 capped = escort_input(3.0, 4.0, ident, 2.5);
    CHECK(capped.norm() == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(distance(capped, {1.5, 2.0}) < 1e-12);

    // Rotation preserves the norm below the cap.
    std::mt19937_64 gen(313);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int k = 0; k < 200; ++k) {
        const Vec2 g{u(gen), u(gen)};
        const Vec2 out = escort_input(g.x, g.y, quarter, 100.0);
        CHECK(out.norm() == doctest::Approx(g.norm()).epsilon(1e-12));
    }
}
