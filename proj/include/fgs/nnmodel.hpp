#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "fgs/diffusion.hpp"
#include "fgs/tensor.hpp"
#include "fgs/transfer.hpp"

namespace fgs {

struct ModelShape {
    int height = 16;
    int width = 16;
    int d = 32;
    int hidden = 64;
    int temb = 32;
    int n_cond = 6;

    int tokens() const { return height * width; }
    int null_id() const { return n_cond; }
};

struct ParamBlock {
    std::string name;
    int rows = 0;
    int cols = 0;
    std::size_t offset = 0;

    std::size_t size() const { return static_cast<std::size_t>(rows) * cols; }
};

/// Parameters live in one flat vector; the block table gives names,
/// shapes and offsets in checkpoint order.
struct DenoiserParams {
    ModelShape shape;
    std::vector<ParamBlock> blocks;
    Vec flat;

    static DenoiserParams init(const ModelShape& shape, std::uint64_t seed);
    static std::vector<ParamBlock> layout(const ModelShape& shape);

    const ParamBlock& block(const std::string& name) const;
    const double* ptr(const std::string& name) const { return flat.data() + block(name).offset; }
    double* ptr(const std::string& name) { return flat.data() + block(name).offset; }
    void validate() const;
};

enum class AttentionMode { Record, Inject, PerturbInject };

struct AttentionControl {
    AttentionMode mode = AttentionMode::Record;
    const Payload* matrix = nullptr;

    static AttentionControl record() { return {}; }
    static AttentionControl inject(const Payload& m) { return {AttentionMode::Inject, &m}; }
    static AttentionControl perturb_inject(const Payload& m) { return {AttentionMode::PerturbInject, &m}; }
};

struct ForwardOutput {
    Vec eps;
    Payload att;
};

Vec timestep_embedding(int t, int dim);

// cond_id < 0 selects the null condition
ForwardOutput forward(const DenoiserParams& p, const Vec& z, int t, int cond_id, const AttentionControl& control);

struct TrainItem {
    Vec z0;
    int cond_id = -1;
};

struct NoisedItem {
    Vec z0;
    int cond_id = -1;
    int t = 1;
    Vec eps;
};

struct LossGrad {
    double loss = 0.0;
    Vec grads;
};

/// Mean squared error over items and pixels with exact gradients.
LossGrad loss_fixed(const DenoiserParams& p, const std::vector<NoisedItem>& items, const NoiseSchedule& s,
                    bool want_grads = true);
std::vector<NoisedItem> draw_noise(const std::vector<TrainItem>& batch, SeededRng& rng, const NoiseSchedule& s);
LossGrad loss_and_grads(const DenoiserParams& p, const std::vector<TrainItem>& batch, SeededRng& rng,
                        const NoiseSchedule& s);

struct TrainHyper {
    int steps = 2000;
    int batch = 16;
    double lr = 0.01;
    double momentum = 0.9;
    double cond_dropout = 0.1;
    double clip = 1.0; // global gradient norm bound, <= 0 disables
    std::uint64_t seed = 0;
    int log_every = 100;
};

using TrainLogFn = std::function<void(int step, double loss)>;

DenoiserParams train(const std::vector<TrainItem>& data, const TrainHyper& hyper, const NoiseSchedule& s,
                     const ModelShape& shape = {}, const TrainLogFn& log = {});
DenoiserParams train_from(DenoiserParams p, const std::vector<TrainItem>& data, const TrainHyper& hyper,
                          const NoiseSchedule& s, const TrainLogFn& log = {});

/// Multinomial logistic regression on raw pixels.
struct Classifier {
    int n_classes = 0;
    int dim = 0;
    Vec weights; // n_classes x dim
    Vec bias;

    bool trained() const { return n_classes > 0; }
    Vec log_probs(const Vec& x) const;
    Vec probs(const Vec& x) const;
    int predict(const Vec& x) const;
};

struct ClassifierHyper {
    double l2 = 1e-5;
    double lr = 2.0;
    int iters = 1000;
};

Classifier classifier_train(const std::vector<Vec>& x, const std::vector<int>& y, int n_classes,
                            const ClassifierHyper& hyper = {});

} // namespace fgs
