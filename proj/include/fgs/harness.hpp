#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "fgs/config.hpp"
#include "fgs/dataset.hpp"
#include "fgs/metrics.hpp"
#include "fgs/nnmodel.hpp"
#include "fgs/pipeline.hpp"

namespace fgs {

struct HarnessConfig {
    std::uint64_t seed = 2024;
    int scenes = 50;

    ScheduleKind schedule_kind = ScheduleKind::LinearBeta;
    int T = 50;

    GuidanceConfig guidance;
    double blur_sigma = 5.0;
    double noise_scale = 0.1;

    ReconMode recon_mode = ReconMode::Replay;
    std::string denoiser = "analytic";
    std::string checkpoint;

    double spread = 0.1;
    Vec offsets = {-1.0, 0.0, 1.0};
    double mix = 0.1;

    int classifier_size = 600;
    std::uint64_t classifier_seed = 11;
    ClassifierHyper classifier;

    Vec sweep_k = {10, 50, 100, 500, 1000};
    Vec sweep_sigma = {1, 2, 5, 10, 100};
    Vec sweep_w_fg = {0, 5, 10, 20, 50};

    int misalign_runs = 100;

    int train_size = 600;
    std::uint64_t train_data_seed = 7;
    TrainHyper train;

    static HarnessConfig from(const Config& c);
    static std::vector<std::string> known_keys();
    PerturbKind perturb_for(PerturbType t) const;
};

struct Lab {
    HarnessConfig cfg;
    NoiseSchedule sched;
    std::shared_ptr<const Denoiser> denoiser;
    Classifier classifier;

    static Lab build(const HarnessConfig& cfg);
    std::vector<Scene> scenes(int n) const;
};

struct RunSpec {
    std::string label;
    bool fg = true;
    GuidanceConfig g;
};

struct MetricsRow {
    std::uint64_t run_id = 0;
    int scene = 0;
    std::string label;
    double tau = 0.0;
    double k = 0.0;
    double sigma = 0.0;
    double w_fg = 0.0;
    std::string perturb;
    bool scheduled = false;
    double faithfulness_whole = 0.0;
    double faithfulness_unedited = 0.0;
    double structure_selfsim = 0.0;
    double editability_whole = 0.0;
    double editability_edited = 0.0;
    double cosine_mean = 0.0;
};

EditRequest make_request(const Lab& lab, const Scene& scene, const RunSpec& spec, std::uint64_t run_id);
MetricsRow evaluate_run(const Lab& lab, const Scene& scene, int scene_index, const RunSpec& spec, std::uint64_t run_id,
                        EditResult* keep = nullptr);

/// Rows are ordered spec-major then scene; run id = spec index * scenes + scene.
std::vector<MetricsRow> run_specs(const Lab& lab, const std::vector<Scene>& scenes, const std::vector<RunSpec>& specs);

std::string metrics_csv_header();
std::string metrics_csv(const std::vector<MetricsRow>& rows);

RunSpec baseline_spec(const HarnessConfig& cfg, double tau);
RunSpec fg_spec(const HarnessConfig& cfg);
RunSpec fgs_spec(const HarnessConfig& cfg);

std::vector<RunSpec> table1_specs(const HarnessConfig& cfg);
std::vector<RunSpec> table2_specs(const HarnessConfig& cfg);
std::vector<RunSpec> sweep_specs(const HarnessConfig& cfg);

struct Summary {
    std::string label;
    int n = 0;
    double faithfulness_whole = 0.0;
    double faithfulness_unedited = 0.0;
    double structure_selfsim = 0.0;
    double editability_whole = 0.0;
    double editability_edited = 0.0;
};

/// Medians per label, in first-appearance order.
std::vector<Summary> summarize(const std::vector<MetricsRow>& rows);
const Summary& find_summary(const std::vector<Summary>& s, const std::string& label);
std::string summary_csv(const std::vector<Summary>& s);

Curve misalignment(const Lab& lab, const std::vector<Scene>& scenes, const RunSpec& spec);
std::string curve_csv(const Curve& c);

} // namespace fgs
