#include "fgs/guidance.hpp"

#include <cmath>
#include <stdexcept>

namespace fgs {

void GuidanceConfig::validate() const {
    if (w_cfg < 0.0 || w_fg < 0.0) throw std::invalid_argument("guidance scales must be >= 0");
    if (!(k > 0.0)) throw std::invalid_argument("scheduling parameter k must be positive");
    if (policy.tau < 0.0 || policy.tau > 1.0) throw std::invalid_argument("tau must lie in [0, 1]");
}

namespace {

void check_same(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw std::invalid_argument("guidance: shape mismatch");
}

} // namespace

Vec cfg_combine(const Vec& eps_c, const Vec& eps_u, double w) {
    check_same(eps_c, eps_u);
    Vec out(eps_c.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = eps_c[i] + w * (eps_c[i] - eps_u[i]);
    return out;
}

Vec fg_combine(const Vec& eps_ci, const Vec& eps_cip, double w) {
    check_same(eps_ci, eps_cip);
    Vec out(eps_ci.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = eps_ci[i] + w * (eps_ci[i] - eps_cip[i]);
    return out;
}

Vec combined(const Vec& eps_ci, const Vec& eps_ui, const Vec& eps_cip, double w_cfg, double w_fg) {
    check_same(eps_ci, eps_ui);
    check_same(eps_ci, eps_cip);
    if (w_fg == 0.0) return cfg_combine(eps_ci, eps_ui, w_cfg);
    if (w_cfg == 0.0) return fg_combine(eps_ci, eps_cip, w_fg);
    Vec out(eps_ci.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = eps_ci[i] + w_cfg * (eps_ci[i] - eps_ui[i]) + w_fg * (eps_ci[i] - eps_cip[i]);
    return out;
}

double progress(int t, int T) {
    if (T < 2) throw std::invalid_argument("progress: T must be >= 2");
    return double(T - t) / double(T - 1);
}

std::pair<double, double> schedule_scales(double s, double k, double w_d, double w_i) {
    if (!(s >= 0.0 && s <= 1.0)) throw std::invalid_argument("schedule_scales: s must lie in [0, 1]");
    if (!(k > 0.0)) throw std::invalid_argument("schedule_scales: k must be positive");
    const double den = std::log1p(k);
    return {w_d * std::log1p(k * (1.0 - s)) / den, w_i * std::log1p(k * s) / den};
}

ScheduledScales assign_roles(TransferTag tag, double w_cfg_base, double w_fg_base, double k, int steps,
                             bool schedule_cfg) {
    if (steps < 2) throw std::invalid_argument("assign_roles: need at least 2 steps");
    ScheduledScales out;
    out.w_cfg.resize(steps);
    out.w_fg.resize(steps);
    for (int i = 0; i < steps; ++i) {
        const double s = double(i) / double(steps - 1);
        if (tag == TransferTag::Layout) {
            auto [d, inc] = schedule_scales(s, k, w_fg_base, w_cfg_base);
            out.w_fg[i] = d;
            out.w_cfg[i] = schedule_cfg ? inc : w_cfg_base;
        } else {
            auto [d, inc] = schedule_scales(s, k, w_cfg_base, w_fg_base);
            out.w_cfg[i] = schedule_cfg ? d : w_cfg_base;
            out.w_fg[i] = inc;
        }
    }
    return out;
}

ScheduledScales make_scales(const GuidanceConfig& g, int steps) {
    if (g.scheduled) return assign_roles(g.tag, g.w_cfg, g.w_fg, g.k, steps, g.schedule_cfg);
    ScheduledScales out;
    out.w_cfg.assign(steps, g.w_cfg);
    out.w_fg.assign(steps, g.w_fg);
    return out;
}

} // namespace fgs
