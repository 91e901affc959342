#pragma once

#include "herdsim/geometry.hpp"
#include "herdsim/vec2.hpp"

namespace herdsim {

// Escort-stage game layer: per-edge horizontal/vertical error channels with a
// prescribed-performance funnel, exact error-transformation control, and the
// frame rotation back to ground coordinates.

struct GameLayerParams {
    double k_delta = 0.5;         // split ratio of the admissible vertical band
    double funnel_decay = 1.0;    // 1/s, exponential funnel contraction rate
    double funnel_floor = 0.8;    // terminal funnel width (dimensionless)
    double vertical_gain = 2.0;   // 1/s
    double horizontal_gain = 2.0; // 1/s
    double design_ratio = 0.65;   // speed ratio the escort geometry is designed for
};

// Adaptive stand-off distance from the defense line:
// (1 - k_delta) * l_a / ratio * (cos e_phi - ratio)/(1 - ratio*cos e_phi).
// Throws std::domain_error when |e_phi| >= arccos(ratio) (the horizontal
// channel has left its admissible cone).
double desired_distance(double attacker_dist, double angle_error, const GameLayerParams& params);

struct Normalizers {
    double horizontal = 0.0;  // meters, scales e_h
    double vertical = 0.0;    // meters, scales e_v
};

// Horizontal normalizer (l_d + l_a)*tan(arccos ratio) and vertical normalizer
// G * b * l_a / ratio where G = (cos e_phi - ratio)/(1 - ratio*cos e_phi) and
// b = k_delta on the positive branch (vertical error started >= 0) or
// 1 - k_delta on the negative branch. Throws like desired_distance.
Normalizers normalizers(double attacker_dist, double defender_dist, double angle_error,
                        const GameLayerParams& params, bool positive_branch = true);

// Performance funnel rho(t) = (1 - floor)*exp(-decay*t) + floor and its rate.
double ppf_rho(double t, const GameLayerParams& params);
double ppf_rho_rate(double t, const GameLayerParams& params);

// Unified transform (k_delta = 1/2): epsilon = artanh(e_tilde/rho).
// Throws std::domain_error when |e_tilde| >= rho (funnel violation).
double transform_error(double e_tilde, double rho);

// General transform for asymmetric bands: epsilon = artanh(e_tilde/rho) +
// (positive branch ? +1 : -1) * ln(delta)/2, with the admissible band
// (-delta*rho, rho) on the positive branch and (-rho, delta*rho) on the
// negative one. Throws std::domain_error outside the band.
double transform_error_general(double e_tilde, double rho, double delta, bool positive_branch);

struct ChannelState {
    double e = 0.0;           // raw error (meters)
    double normalizer = 0.0;  // meters
    double e_tilde = 0.0;     // e / normalizer
    double rho = 1.0;         // funnel width at the current time
    double epsilon = 0.0;     // transformed error
    double delta_f = 1.0;     // vertical-band asymmetry ratio
    double delta_g = 1.0;     // horizontal-band asymmetry ratio (always 1)
    bool positive_branch = true;
};

// Assembles a channel state, computing e_tilde and epsilon. `delta` is the
// asymmetry ratio of this channel's own band (1 for horizontal channels and
// for k_delta = 1/2 vertical channels).
ChannelState make_channel_state(double e, double normalizer, double rho, double delta,
                                bool positive_branch);

// Vertical-band asymmetry ratio for a vertical error that started on the
// given branch: min((1-k)/k, 1) on the positive branch, min(k/(1-k), 1) on
// the negative one.
double vertical_delta(double k_delta, bool positive_branch);

// Exact-linearization channel controls; derivative arguments are the caller's
// first-order differences. Throws std::runtime_error when the channel is
// singular (normalizer*rho below 1e-9).
double vertical_control(const ChannelState& state, double normalizer_rate, double rho_rate,
                        double desired_distance_rate, double gain);
double horizontal_control(const ChannelState& state, double normalizer_rate, double rho_rate,
                          double attacker_along_line_velocity, double gain);

// Rotate (g_h, g_v) from the defense-line frame into ground coordinates and
// saturate at v_max.
Vec2 escort_input(double g_h, double g_v, const DefenseLineFrame& frame, double v_max);

}  // namespace herdsim
