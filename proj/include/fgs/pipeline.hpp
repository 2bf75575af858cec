#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "fgs/analytic.hpp"
#include "fgs/diffusion.hpp"
#include "fgs/guidance.hpp"
#include "fgs/nnmodel.hpp"
#include "fgs/transfer.hpp"

namespace fgs {

/// Condition id; negative means the null condition.
struct Condition {
    int id = -1;

    static Condition null() { return {}; }
    bool is_null() const { return id < 0; }
};

class Denoiser {
public:
    virtual ~Denoiser() = default;

    virtual std::size_t dim() const = 0;
    virtual Vec eps(const Vec& z, int t, const NoiseSchedule& s, Condition c, Payload* record) const = 0;
    virtual Vec eps_injected(const Vec& z, int t, const NoiseSchedule& s, Condition c, const Payload& I) const = 0;
};

/// Mixture denoiser. Condition ids index `conditions`. Injection blends
/// the transferred responsibilities I with the editing path's own:
///     r = own + mix * (I - own)
/// so mix = 0 ignores I and mix = 1 replaces own responsibilities.
class AnalyticDenoiser : public Denoiser {
public:
    AnalyticDenoiser(MixtureModel mixture, std::vector<ConditionSet> conditions, double mix);

    std::size_t dim() const override { return mixture_.dim; }
    Vec eps(const Vec& z, int t, const NoiseSchedule& s, Condition c, Payload* record) const override;
    Vec eps_injected(const Vec& z, int t, const NoiseSchedule& s, Condition c, const Payload& I) const override;

    const MixtureModel& mixture() const { return mixture_; }
    const ConditionSet& condition(Condition c) const;
    Vec inject_map(const Vec& I, const Vec& own) const;

private:
    MixtureModel mixture_;
    std::vector<ConditionSet> conditions_;
    ConditionSet null_;
    double mix_;
};

class LearnedDenoiser : public Denoiser {
public:
    explicit LearnedDenoiser(std::shared_ptr<const DenoiserParams> params) : params_(std::move(params)) {}

    std::size_t dim() const override { return static_cast<std::size_t>(params_->shape.tokens()); }
    Vec eps(const Vec& z, int t, const NoiseSchedule& s, Condition c, Payload* record) const override;
    Vec eps_injected(const Vec& z, int t, const NoiseSchedule& s, Condition c, const Payload& I) const override;

    const DenoiserParams& params() const { return *params_; }

private:
    std::shared_ptr<const DenoiserParams> params_;
};

enum class ReconMode { Resample, Replay };

ReconMode parse_recon_mode(const std::string& s);
std::string to_string(ReconMode m);

struct EditRequest {
    Vec input;
    Condition source;
    Condition target;
    GuidanceConfig guidance;
    ReconMode recon_mode = ReconMode::Replay;
    const Denoiser* denoiser = nullptr;
    NoiseSchedule sched;
    std::uint64_t seed = 0;

    void validate() const;
};

struct StepRecord {
    int t = 0;
    bool injected = false;
    double w_cfg = 0.0;
    double w_fg = 0.0;
    Vec eps_c;
    Vec d_cfg;
    Vec d_fg; // empty when no FG term was formed
    Vec applied;
};

struct EditResult {
    Vec recon;
    Vec edited;
    std::vector<Vec> inversion;  // z_0 ... z_T
    std::vector<Vec> recon_traj; // z_T ... z_0
    std::vector<Vec> edit_traj;  // z_T ... z_0
    std::vector<StepRecord> steps;
    TransferPacket packets;
};

struct Reconstruction {
    Vec recon;
    std::vector<Vec> inversion;
    std::vector<Vec> trajectory; // z_T ... z_0
    TransferPacket packets;
};

std::vector<Vec> invert(const Vec& input, Condition source, const Denoiser& d, const NoiseSchedule& s);

Reconstruction reconstruct_only(const Vec& input, Condition source, const Denoiser& d, const NoiseSchedule& s,
                                ReconMode mode, double w_cfg = 0.0);

EditResult run_fgs(const EditRequest& req);
EditResult run_baseline(const EditRequest& req);

} // namespace fgs
