#pragma once

#include <functional>
#include <string>
#include <vector>

#include "fgs/tensor.hpp"

namespace fgs {

enum class ScheduleKind { LinearBeta, Cosine };

ScheduleKind parse_schedule_kind(const std::string& s);
std::string to_string(ScheduleKind k);

/// alpha[0] belongs to the clean image, alpha[T] to the noisiest latent.
struct NoiseSchedule {
    ScheduleKind kind = ScheduleKind::LinearBeta;
    int T = 0;
    Vec alpha;
};

struct LatentState {
    Vec value;
    int t = 0;
};

NoiseSchedule make_schedule(ScheduleKind kind, int T);

double a_coef(double alpha);
double a_coef(const NoiseSchedule& s, int t);

LatentState add_noise(const Vec& z0, const Vec& eps, const NoiseSchedule& s, int t);
LatentState ddim_sample_step(const LatentState& z, const Vec& eps_hat, const NoiseSchedule& s);
LatentState ddim_invert_step(const LatentState& z, const Vec& eps_hat, const NoiseSchedule& s);

using EpsFn = std::function<Vec(const Vec& z, int t)>;

// returns z_0 ... z_T
std::vector<Vec> invert_trajectory(const Vec& z0, const EpsFn& eps, const NoiseSchedule& s);
// returns z_T ... z_0
std::vector<Vec> sample_trajectory(const Vec& zT, const EpsFn& eps, const NoiseSchedule& s);

} // namespace fgs
