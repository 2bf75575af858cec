#include "fgs/analytic.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace fgs {

void MixtureModel::validate() const {
    if (weights.empty()) throw std::invalid_argument("mixture has no components");
    if (means.size() != weights.size() || vars.size() != weights.size())
        throw std::invalid_argument("mixture component arrays differ in length");
    double sum = 0.0;
    for (std::size_t j = 0; j < weights.size(); ++j) {
        if (!(weights[j] > 0.0)) throw std::invalid_argument("mixture weights must be positive");
        if (vars[j] < 0.0) throw std::invalid_argument("mixture variances must be >= 0");
        if (means[j].size() != dim) throw std::invalid_argument("mixture mean has wrong dimension");
        sum += weights[j];
    }
    if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("mixture weights must sum to 1");
}

Responsibilities responsibilities(const Vec& z, double alpha, const MixtureModel& m, const ConditionSet& cond) {
    if (z.size() != m.dim) throw std::invalid_argument("responsibilities: latent dimension mismatch");
    const std::size_t K = m.size();
    std::vector<char> active(K, cond.is_null() ? 1 : 0);
    if (!cond.is_null()) {
        if (cond.indices->empty()) throw std::invalid_argument("condition set is empty");
        for (int j : *cond.indices) {
            if (j < 0 || static_cast<std::size_t>(j) >= K) throw std::invalid_argument("condition index out of range");
            active[j] = 1;
        }
    }
    const double ninf = -std::numeric_limits<double>::infinity();
    const double sa = std::sqrt(alpha);
    Vec lp(K, ninf);
    double best = ninf;
    for (std::size_t j = 0; j < K; ++j) {
        if (!active[j]) continue;
        const double var = alpha * m.vars[j] + 1.0 - alpha;
        double d2 = 0.0;
        for (std::size_t i = 0; i < m.dim; ++i) {
            const double d = z[i] - sa * m.means[j][i];
            d2 += d * d;
        }
        double l;
        if (var > 0.0)
            l = std::log(m.weights[j]) - 0.5 * d2 / var - 0.5 * double(m.dim) * std::log(var);
        else
            l = d2 == 0.0 ? std::log(m.weights[j]) : ninf;
        lp[j] = l;
        if (l > best) best = l;
    }
    Responsibilities out;
    out.r.assign(K, 0.0);
    if (best == ninf) {
        out.degenerate = true;
        double n = 0.0;
        for (std::size_t j = 0; j < K; ++j) n += active[j];
        for (std::size_t j = 0; j < K; ++j)
            if (active[j]) out.r[j] = 1.0 / n;
        return out;
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < K; ++j) {
        if (!active[j]) continue;
        out.r[j] = std::exp(lp[j] - best);
        sum += out.r[j];
    }
    for (double& r : out.r) r /= sum;
    return out;
}

Responsibilities responsibilities(const LatentState& z, const MixtureModel& m, const ConditionSet& cond,
                                  const NoiseSchedule& s) {
    return responsibilities(z.value, s.alpha.at(z.t), m, cond);
}

Vec posterior_mean(const Vec& z, double alpha, const MixtureModel& m, const Vec& r) {
    const double sa = std::sqrt(alpha);
    Vec x0(m.dim, 0.0);
    for (std::size_t j = 0; j < m.size(); ++j) {
        if (r[j] == 0.0) continue;
        const double var = alpha * m.vars[j] + 1.0 - alpha;
        const double gain = var > 0.0 ? sa * m.vars[j] / var : 0.0;
        const Vec& mu = m.means[j];
        for (std::size_t i = 0; i < m.dim; ++i) x0[i] += r[j] * (mu[i] + gain * (z[i] - sa * mu[i]));
    }
    return x0;
}

EpsOutput override_eps(const Vec& z, double alpha, const MixtureModel& m, const Vec& injected_r) {
    if (z.size() != m.dim) throw std::invalid_argument("override_eps: latent dimension mismatch");
    if (injected_r.size() != m.size()) throw std::invalid_argument("override_eps: responsibility length mismatch");
    double sum = 0.0;
    for (double r : injected_r) {
        if (!(r >= 0.0)) throw std::invalid_argument("override_eps: negative responsibility");
        sum += r;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("override_eps: responsibilities must sum to 1");
    EpsOutput out;
    out.eps.assign(m.dim, 0.0);
    if (alpha >= 1.0) {
        out.guarded = true;
        return out;
    }
    const Vec x0 = posterior_mean(z, alpha, m, injected_r);
    const double sa = std::sqrt(alpha);
    const double sb = std::sqrt(1.0 - alpha);
    for (std::size_t i = 0; i < m.dim; ++i) out.eps[i] = (z[i] - sa * x0[i]) / sb;
    return out;
}

EpsOutput override_eps(const LatentState& z, const MixtureModel& m, const NoiseSchedule& s, const Vec& injected_r) {
    return override_eps(z.value, s.alpha.at(z.t), m, injected_r);
}

EpsOutput analytic_eps(const Vec& z, double alpha, const MixtureModel& m, const ConditionSet& cond) {
    return override_eps(z, alpha, m, responsibilities(z, alpha, m, cond).r);
}

EpsOutput analytic_eps(const LatentState& z, const MixtureModel& m, const ConditionSet& cond, const NoiseSchedule& s) {
    return analytic_eps(z.value, s.alpha.at(z.t), m, cond);
}

} // namespace fgs
