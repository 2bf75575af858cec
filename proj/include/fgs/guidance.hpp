#pragma once

#include <utility>

#include "fgs/tensor.hpp"
#include "fgs/transfer.hpp"

namespace fgs {

struct GuidanceConfig {
    double w_cfg = 7.5;
    double w_fg = 10.0;
    double k = 100.0;
    bool scheduled = true;
    bool schedule_cfg = true;
    TransferTag tag = TransferTag::Layout;
    PerturbKind perturb = PerturbKind::blur(5.0);
    InjectionPolicy policy{0.5};

    void validate() const;
};

struct ScheduledScales {
    Vec w_cfg;
    Vec w_fg;
};

Vec cfg_combine(const Vec& eps_c, const Vec& eps_u, double w);
Vec fg_combine(const Vec& eps_ci, const Vec& eps_cip, double w);
Vec combined(const Vec& eps_ci, const Vec& eps_ui, const Vec& eps_cip, double w_cfg, double w_fg);

double progress(int t, int T);
std::pair<double, double> schedule_scales(double s, double k, double w_d, double w_i);

/// Per-step scales ordered from the noisiest step (index 0) to the last.
ScheduledScales assign_roles(TransferTag tag, double w_cfg_base, double w_fg_base, double k, int steps,
                             bool schedule_cfg = true);
ScheduledScales make_scales(const GuidanceConfig& g, int steps);

} // namespace fgs
