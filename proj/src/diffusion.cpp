#include "fgs/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fgs {

ScheduleKind parse_schedule_kind(const std::string& s) {
    if (s == "linear" || s == "linear-beta") return ScheduleKind::LinearBeta;
    if (s == "cosine") return ScheduleKind::Cosine;
    throw std::invalid_argument("unknown schedule kind: " + s);
}

std::string to_string(ScheduleKind k) { return k == ScheduleKind::LinearBeta ? "linear" : "cosine"; }

NoiseSchedule make_schedule(ScheduleKind kind, int T) {
    if (T < 2) throw std::invalid_argument("make_schedule: T must be >= 2");
    NoiseSchedule s;
    s.kind = kind;
    s.T = T;
    s.alpha.assign(T + 1, 1.0);
    Vec beta(T + 1, 0.0);
    if (kind == ScheduleKind::LinearBeta) {
        const double scale = 1000.0 / T;
        const double lo = 1e-4 * scale, hi = 0.02 * scale;
        for (int t = 1; t <= T; ++t) beta[t] = lo + (hi - lo) * double(t - 1) / double(T - 1);
    } else {
        auto f = [T](int t) {
            double c = std::cos((double(t) / T + 0.008) / 1.008 * std::numbers::pi / 2.0);
            return c * c;
        };
        for (int t = 1; t <= T; ++t) beta[t] = 1.0 - f(t) / f(t - 1);
    }
    for (int t = 1; t <= T; ++t) {
        const double b = std::clamp(beta[t], 1e-8, 0.999);
        s.alpha[t] = s.alpha[t - 1] * (1.0 - b);
    }
    return s;
}

double a_coef(double alpha) { return std::sqrt(std::max(0.0, 1.0 / alpha - 1.0)); }

double a_coef(const NoiseSchedule& s, int t) {
    if (t < 0 || t > s.T) throw std::out_of_range("a_coef: t out of range");
    return a_coef(s.alpha[t]);
}

LatentState add_noise(const Vec& z0, const Vec& eps, const NoiseSchedule& s, int t) {
    if (z0.size() != eps.size()) throw std::invalid_argument("add_noise: shape mismatch");
    if (t < 0 || t > s.T) throw std::out_of_range("add_noise: t out of range");
    const double a = std::sqrt(s.alpha[t]);
    const double b = std::sqrt(1.0 - s.alpha[t]);
    LatentState out{Vec(z0.size()), t};
    for (std::size_t i = 0; i < z0.size(); ++i) out.value[i] = a * z0[i] + b * eps[i];
    return out;
}

namespace {

LatentState ddim_move(const LatentState& z, const Vec& eps, const NoiseSchedule& s, int to) {
    if (z.value.size() != eps.size()) throw std::invalid_argument("ddim step: shape mismatch");
    const double af = s.alpha[z.t], at = s.alpha[to];
    const double c0 = std::sqrt(at / af);
    const double c1 = std::sqrt(at) * (a_coef(at) - a_coef(af));
    LatentState out{Vec(eps.size()), to};
    for (std::size_t i = 0; i < eps.size(); ++i) out.value[i] = c0 * z.value[i] + c1 * eps[i];
    return out;
}

} // namespace

LatentState ddim_sample_step(const LatentState& z, const Vec& eps_hat, const NoiseSchedule& s) {
    if (z.t < 1 || z.t > s.T) throw std::logic_error("ddim_sample_step: requires 1 <= t <= T");
    return ddim_move(z, eps_hat, s, z.t - 1);
}

LatentState ddim_invert_step(const LatentState& z, const Vec& eps_hat, const NoiseSchedule& s) {
    if (z.t < 0 || z.t >= s.T) throw std::logic_error("ddim_invert_step: requires 0 <= t < T");
    return ddim_move(z, eps_hat, s, z.t + 1);
}

std::vector<Vec> invert_trajectory(const Vec& z0, const EpsFn& eps, const NoiseSchedule& s) {
    std::vector<Vec> traj;
    traj.reserve(s.T + 1);
    LatentState z{z0, 0};
    traj.push_back(z0);
    for (int t = 0; t < s.T; ++t) {
        z = ddim_invert_step(z, eps(z.value, t), s);
        traj.push_back(z.value);
    }
    return traj;
}

std::vector<Vec> sample_trajectory(const Vec& zT, const EpsFn& eps, const NoiseSchedule& s) {
    std::vector<Vec> traj;
    traj.reserve(s.T + 1);
    LatentState z{zT, s.T};
    traj.push_back(zT);
    for (int t = s.T; t >= 1; --t) {
        z = ddim_sample_step(z, eps(z.value, t), s);
        traj.push_back(z.value);
    }
    return traj;
}

} // namespace fgs
