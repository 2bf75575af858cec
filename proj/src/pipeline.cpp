#include "fgs/pipeline.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace fgs {

AnalyticDenoiser::AnalyticDenoiser(MixtureModel mixture, std::vector<ConditionSet> conditions, double mix)
    : mixture_(std::move(mixture)), conditions_(std::move(conditions)), mix_(mix) {
    mixture_.validate();
    if (mix_ < 0.0 || mix_ > 1.0) throw std::invalid_argument("injection mix must lie in [0, 1]");
}

const ConditionSet& AnalyticDenoiser::condition(Condition c) const {
    if (c.is_null()) return null_;
    if (c.id >= static_cast<int>(conditions_.size())) throw std::invalid_argument("condition id out of range");
    return conditions_[c.id];
}

Vec AnalyticDenoiser::inject_map(const Vec& I, const Vec& own) const {
    if (I.size() != own.size()) throw std::invalid_argument("injected responsibilities have wrong length");
    Vec r(own.size());
    for (std::size_t j = 0; j < r.size(); ++j) r[j] = own[j] + mix_ * (I[j] - own[j]);
    return r;
}

Vec AnalyticDenoiser::eps(const Vec& z, int t, const NoiseSchedule& s, Condition c, Payload* record) const {
    const double a = s.alpha.at(t);
    Responsibilities r = responsibilities(z, a, mixture_, condition(c));
    Vec e = override_eps(z, a, mixture_, r.r).eps;
    if (record) *record = Payload::vector(std::move(r.r));
    return e;
}

Vec AnalyticDenoiser::eps_injected(const Vec& z, int t, const NoiseSchedule& s, Condition c, const Payload& I) const {
    if (I.is_attention() || I.rows != 1) throw std::invalid_argument("analytic injection expects a vector payload");
    const double a = s.alpha.at(t);
    const Responsibilities own = responsibilities(z, a, mixture_, condition(c));
    return override_eps(z, a, mixture_, inject_map(I.data, own.r)).eps;
}

Vec LearnedDenoiser::eps(const Vec& z, int t, const NoiseSchedule&, Condition c, Payload* record) const {
    ForwardOutput out = forward(*params_, z, t, c.id, AttentionControl::record());
    if (record) *record = std::move(out.att);
    return std::move(out.eps);
}

Vec LearnedDenoiser::eps_injected(const Vec& z, int t, const NoiseSchedule&, Condition c, const Payload& I) const {
    return forward(*params_, z, t, c.id, AttentionControl::inject(I)).eps;
}

ReconMode parse_recon_mode(const std::string& s) {
    if (s == "replay") return ReconMode::Replay;
    if (s == "resample") return ReconMode::Resample;
    throw std::invalid_argument("unknown reconstruction mode: " + s);
}

std::string to_string(ReconMode m) { return m == ReconMode::Replay ? "replay" : "resample"; }

void EditRequest::validate() const {
    if (!denoiser) throw std::invalid_argument("edit request has no denoiser");
    if (input.size() != denoiser->dim()) throw std::invalid_argument("input does not match the denoiser dimension");
    if (sched.T < 2 || sched.alpha.size() != static_cast<std::size_t>(sched.T) + 1)
        throw std::invalid_argument("edit request has an invalid schedule");
    guidance.validate();
}

std::vector<Vec> invert(const Vec& input, Condition source, const Denoiser& d, const NoiseSchedule& s) {
    return invert_trajectory(
        input, [&](const Vec& z, int t) { return d.eps(z, t, s, source, nullptr); }, s);
}

namespace {

void check_finite(const Vec& z, int t) {
    for (double v : z)
        if (!std::isfinite(v)) throw std::runtime_error("non-finite latent at step " + std::to_string(t));
}

EditResult run_impl(const EditRequest& req, bool with_fg) {
    req.validate();
    const Denoiser& den = *req.denoiser;
    const NoiseSchedule& s = req.sched;
    const int T = s.T;
    const GuidanceConfig& g = req.guidance;
    const ScheduledScales scales = make_scales(g, T);
    SeededRng rng(req.seed);

    EditResult res;
    res.packets.tag = g.tag;
    res.inversion = invert(req.input, req.source, den, s);
    Vec zr = res.inversion[T];
    Vec ze = zr;
    res.recon_traj.push_back(zr);
    res.edit_traj.push_back(ze);

    for (int t = T; t >= 1; --t) {
        const int i = T - t;
        const double wc = scales.w_cfg[i];
        const double wf = with_fg ? scales.w_fg[i] : 0.0;

        Payload I;
        if (req.recon_mode == ReconMode::Replay) {
            zr = res.inversion[t];
            den.eps(zr, t, s, req.source, &I);
            zr = res.inversion[t - 1];
        } else {
            const Vec ec = den.eps(zr, t, s, req.source, &I);
            const Vec eu = den.eps(zr, t, s, Condition::null(), nullptr);
            zr = ddim_sample_step({zr, t}, cfg_combine(ec, eu, wc), s).value;
            check_finite(zr, t);
        }

        StepRecord rec;
        rec.t = t;
        rec.w_cfg = wc;
        rec.w_fg = wf;
        rec.injected = should_inject(t, T, g.policy);
        if (rec.injected) {
            rec.eps_c = den.eps_injected(ze, t, s, req.target, I);
            const Vec eu = den.eps_injected(ze, t, s, Condition::null(), I);
            rec.d_cfg.resize(ze.size());
            for (std::size_t k = 0; k < ze.size(); ++k) rec.d_cfg[k] = rec.eps_c[k] - eu[k];
            if (with_fg) {
                const Payload Ip = perturb(I, g.perturb, rng);
                const Vec ep = den.eps_injected(ze, t, s, req.target, Ip);
                rec.d_fg.resize(ze.size());
                for (std::size_t k = 0; k < ze.size(); ++k) rec.d_fg[k] = rec.eps_c[k] - ep[k];
                rec.applied = combined(rec.eps_c, eu, ep, wc, wf);
            } else {
                rec.applied = cfg_combine(rec.eps_c, eu, wc);
            }
        } else {
            rec.eps_c = den.eps(ze, t, s, req.target, nullptr);
            const Vec eu = den.eps(ze, t, s, Condition::null(), nullptr);
            rec.d_cfg.resize(ze.size());
            for (std::size_t k = 0; k < ze.size(); ++k) rec.d_cfg[k] = rec.eps_c[k] - eu[k];
            rec.applied = cfg_combine(rec.eps_c, eu, wc);
        }
        res.packets.capture(t, std::move(I));

        ze = ddim_sample_step({ze, t}, rec.applied, s).value;
        check_finite(ze, t);
        res.recon_traj.push_back(zr);
        res.edit_traj.push_back(ze);
        res.steps.push_back(std::move(rec));
    }
    res.recon = zr;
    res.edited = ze;
    return res;
}

} // namespace

EditResult run_fgs(const EditRequest& req) { return run_impl(req, true); }

EditResult run_baseline(const EditRequest& req) { return run_impl(req, false); }

Reconstruction reconstruct_only(const Vec& input, Condition source, const Denoiser& d, const NoiseSchedule& s,
                                ReconMode mode, double w_cfg) {
    if (input.size() != d.dim()) throw std::invalid_argument("input does not match the denoiser dimension");
    Reconstruction out;
    out.inversion = invert(input, source, d, s);
    Vec z = out.inversion[s.T];
    out.trajectory.push_back(z);
    for (int t = s.T; t >= 1; --t) {
        Payload I;
        if (mode == ReconMode::Replay) {
            d.eps(out.inversion[t], t, s, source, &I);
            z = out.inversion[t - 1];
        } else {
            const Vec ec = d.eps(z, t, s, source, &I);
            const Vec eu = w_cfg != 0.0 ? d.eps(z, t, s, Condition::null(), nullptr) : ec;
            z = ddim_sample_step({z, t}, cfg_combine(ec, eu, w_cfg), s).value;
            check_finite(z, t);
        }
        out.packets.capture(t, std::move(I));
        out.trajectory.push_back(z);
    }
    out.recon = z;
    return out;
}

} // namespace fgs
