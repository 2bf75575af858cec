#pragma once

#include <map>
#include <string>

#include "fgs/tensor.hpp"

namespace fgs {

enum class TransferTag { Layout, Detail };

TransferTag parse_tag(const std::string& s);
std::string to_string(TransferTag t);

/// Row-stochastic matrix (attention, grid_h x grid_w keys per row) or a
/// single normalized vector (rows == 1, grid_h == 0).
struct Payload {
    int rows = 0;
    int cols = 0;
    int grid_h = 0;
    int grid_w = 0;
    Vec data;

    static Payload vector(Vec v);
    static Payload attention(int n, int grid_h, int grid_w, Vec data);

    bool is_attention() const { return grid_h > 0; }
    const double* row(int i) const { return data.data() + static_cast<std::size_t>(i) * cols; }
    double* row(int i) { return data.data() + static_cast<std::size_t>(i) * cols; }
    void validate(double tol = 1e-9) const;
};

struct TransferPacket {
    TransferTag tag = TransferTag::Layout;
    std::map<int, Payload> steps;

    void capture(int t, Payload p);
    const Payload& at(int t) const;
    std::size_t size() const { return steps.size(); }
};

struct InjectionPolicy {
    double tau = 0.5;
};

bool should_inject(int t, int T, const InjectionPolicy& policy);

enum class PerturbType { Blur, Noise, Identity };

struct PerturbKind {
    PerturbType type = PerturbType::Blur;
    double param = 5.0; // sigma for blur, scale for noise

    static PerturbKind blur(double sigma) { return {PerturbType::Blur, sigma}; }
    static PerturbKind noise(double scale) { return {PerturbType::Noise, scale}; }
    static PerturbKind identity() { return {PerturbType::Identity, 0.0}; }
};

PerturbType parse_perturb(const std::string& s);
std::string to_string(PerturbType p);

Payload perturb(const Payload& p, const PerturbKind& kind, SeededRng& rng);
Payload perturb_reference(const Payload& p, const PerturbKind& kind, SeededRng& rng);

} // namespace fgs
