#include "herdsim/escort_game.hpp"

#include <cmath>
#include <stdexcept>

namespace herdsim {

namespace {

void check_params(const GameLayerParams& p) {
    if (!(p.k_delta > 0.0 && p.k_delta < 1.0))
        throw std::invalid_argument("game layer: k_delta must lie in (0, 1)");
    if (!(p.funnel_floor > 0.0 && p.funnel_floor < 1.0))
        throw std::invalid_argument("game layer: funnel_floor must lie in (0, 1)");
    if (!(p.funnel_decay > 0.0 && p.vertical_gain > 0.0 && p.horizontal_gain > 0.0))
        throw std::invalid_argument("game layer: decay and gains must be positive");
    if (!(p.design_ratio > 0.0 && p.design_ratio < 1.0))
        throw std::invalid_argument("game layer: design_ratio must lie in (0, 1)");
}

// (cos e_phi - ratio) / (1 - ratio * cos e_phi); positive iff the sight line
// is within the admissible cone.
double angle_factor(double angle_error, double ratio) {
    const double c = std::cos(angle_error);
    return (c - ratio) / (1.0 - ratio * c);
}

}  // namespace

double desired_distance(double attacker_dist, double angle_error, const GameLayerParams& params) {
    check_params(params);
    if (!(attacker_dist > 0.0))
        throw std::invalid_argument("desired_distance: attacker distance must be positive");
    const double g = angle_factor(angle_error, params.design_ratio);
    if (g <= 0.0)
        throw std::domain_error("desired_distance: sight angle outside the admissible cone");
    return (1.0 - params.k_delta) * attacker_dist / params.design_ratio * g;
}

Normalizers normalizers(double attacker_dist, double defender_dist, double angle_error,
                        const GameLayerParams& params, bool positive_branch) {
    check_params(params);
    if (!(attacker_dist > 0.0))
        throw std::invalid_argument("normalizers: attacker distance must be positive");
    if (defender_dist < 0.0)
        throw std::invalid_argument("normalizers: defender distance must be non-negative");
    const double g = angle_factor(angle_error, params.design_ratio);
    if (g <= 0.0)
        throw std::domain_error("normalizers: sight angle outside the admissible cone");
    Normalizers n;
    const double band = std::acos(params.design_ratio);
    n.horizontal = (defender_dist + attacker_dist) * std::tan(band);
    const double split = positive_branch ? params.k_delta : (1.0 - params.k_delta);
    n.vertical = g * split * attacker_dist / params.design_ratio;
    return n;
}

double ppf_rho(double t, const GameLayerParams& params) {
    return (1.0 - params.funnel_floor) * std::exp(-params.funnel_decay * t) + params.funnel_floor;
}

double ppf_rho_rate(double t, const GameLayerParams& params) {
    return -params.funnel_decay * (1.0 - params.funnel_floor) * std::exp(-params.funnel_decay * t);
}

double transform_error(double e_tilde, double rho) {
    return transform_error_general(e_tilde, rho, 1.0, true);
}

double transform_error_general(double e_tilde, double rho, double delta, bool positive_branch) {
    if (!(rho > 0.0)) throw std::invalid_argument("transform_error: rho must be positive");
    if (!(delta > 0.0 && delta <= 1.0))
        throw std::invalid_argument("transform_error: delta must lie in (0, 1]");
    const double z = e_tilde / rho;
    const double lower = positive_branch ? -delta : -1.0;
    const double upper = positive_branch ? 1.0 : delta;
    if (!(z > lower && z < upper))
        throw std::domain_error("transform_error: error outside the performance funnel");
    const double shift = 0.5 * std::log(delta);
    return std::atanh(z) + (positive_branch ? shift : -shift);
}

ChannelState make_channel_state(double e, double normalizer, double rho, double delta,
                                bool positive_branch) {
    if (!(normalizer > 0.0))
        throw std::invalid_argument("channel state: normalizer must be positive");
    ChannelState s;
    s.e = e;
    s.normalizer = normalizer;
    s.e_tilde = e / normalizer;
    s.rho = rho;
    s.delta_f = delta;
    s.delta_g = 1.0;
    s.positive_branch = positive_branch;
    s.epsilon = transform_error_general(s.e_tilde, rho, delta, positive_branch);
    return s;
}

double vertical_delta(double k_delta, bool positive_branch) {
    if (!(k_delta > 0.0 && k_delta < 1.0))
        throw std::invalid_argument("vertical_delta: k_delta must lie in (0, 1)");
    const double r = positive_branch ? (1.0 - k_delta) / k_delta : k_delta / (1.0 - k_delta);
    return std::min(r, 1.0);
}

namespace {

double channel_control(const ChannelState& s, double normalizer_rate, double rho_rate,
                       double gain) {
    const double denom = s.normalizer * s.rho;
    if (denom < 1e-9) throw std::runtime_error("escort channel singular: normalizer*rho < 1e-9");
    const double width_sq = denom * denom - s.e * s.e;
    return (-gain * s.epsilon * width_sq + s.e * (normalizer_rate * s.rho + s.normalizer * rho_rate)) /
           denom;
}

}  // namespace

double vertical_control(const ChannelState& state, double normalizer_rate, double rho_rate,
                        double desired_distance_rate, double gain) {
    // Feedforward enters with a plus sign: the vertical error is
    // (defender height) - (desired height) and the command is the defender's
    // frame-vertical velocity, so exact cancellation of the moving set-point
    // requires adding its rate. The closed-loop finite-difference test pins
    // epsilon_dot = -gain * epsilon only with this orientation.
    return channel_control(state, normalizer_rate, rho_rate, gain) + desired_distance_rate;
}

double horizontal_control(const ChannelState& state, double normalizer_rate, double rho_rate,
                          double attacker_along_line_velocity, double gain) {
    return channel_control(state, normalizer_rate, rho_rate, gain) + attacker_along_line_velocity;
}

Vec2 escort_input(double g_h, double g_v, const DefenseLineFrame& frame, double v_max) {
    return saturate(frame.frame_to_ground({g_h, g_v}), v_max);
}

}  // namespace herdsim
