#pragma once

#include <optional>
#include <vector>

#include "fgs/diffusion.hpp"
#include "fgs/tensor.hpp"

namespace fgs {

/// Isotropic Gaussian mixture; var == 0 marks a point mass.
struct MixtureModel {
    std::size_t dim = 0;
    Vec weights;
    std::vector<Vec> means;
    Vec vars;

    std::size_t size() const { return weights.size(); }
    void validate() const;
};

/// A subset of component indices, or the null condition (all components).
struct ConditionSet {
    std::optional<std::vector<int>> indices;

    static ConditionSet null() { return {}; }
    static ConditionSet of(std::vector<int> idx) { return {std::move(idx)}; }
    bool is_null() const { return !indices.has_value(); }
};

struct Responsibilities {
    Vec r;
    bool degenerate = false;
};

Responsibilities responsibilities(const Vec& z, double alpha, const MixtureModel& m, const ConditionSet& cond);
Responsibilities responsibilities(const LatentState& z, const MixtureModel& m, const ConditionSet& cond,
                                  const NoiseSchedule& s);

struct EpsOutput {
    Vec eps;
    bool guarded = false;
};

EpsOutput analytic_eps(const Vec& z, double alpha, const MixtureModel& m, const ConditionSet& cond);
EpsOutput analytic_eps(const LatentState& z, const MixtureModel& m, const ConditionSet& cond, const NoiseSchedule& s);

EpsOutput override_eps(const Vec& z, double alpha, const MixtureModel& m, const Vec& injected_r);
EpsOutput override_eps(const LatentState& z, const MixtureModel& m, const NoiseSchedule& s, const Vec& injected_r);

/// E[z_0 | z_t] under the given responsibilities.
Vec posterior_mean(const Vec& z, double alpha, const MixtureModel& m, const Vec& r);

} // namespace fgs
