#include "fgs/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fgs {

TransferTag parse_tag(const std::string& s) {
    if (s == "layout") return TransferTag::Layout;
    if (s == "detail") return TransferTag::Detail;
    throw std::invalid_argument("unknown transfer tag: " + s);
}

std::string to_string(TransferTag t) { return t == TransferTag::Layout ? "layout" : "detail"; }

PerturbType parse_perturb(const std::string& s) {
    if (s == "blur") return PerturbType::Blur;
    if (s == "noise") return PerturbType::Noise;
    if (s == "identity") return PerturbType::Identity;
    throw std::invalid_argument("unknown perturbation kind: " + s);
}

std::string to_string(PerturbType p) {
    switch (p) {
    case PerturbType::Blur: return "blur";
    case PerturbType::Noise: return "noise";
    case PerturbType::Identity: return "identity";
    }
    return "?";
}

Payload Payload::vector(Vec v) {
    Payload p;
    p.rows = 1;
    p.cols = static_cast<int>(v.size());
    p.data = std::move(v);
    return p;
}

Payload Payload::attention(int n, int gh, int gw, Vec d) {
    if (gh * gw != n) throw std::invalid_argument("attention payload: key grid does not match n");
    if (d.size() != static_cast<std::size_t>(n) * n) throw std::invalid_argument("attention payload: size mismatch");
    Payload p;
    p.rows = n;
    p.cols = n;
    p.grid_h = gh;
    p.grid_w = gw;
    p.data = std::move(d);
    return p;
}

void Payload::validate(double tol) const {
    if (rows <= 0 || cols <= 0 || data.size() != static_cast<std::size_t>(rows) * cols)
        throw std::invalid_argument("malformed payload");
    for (int i = 0; i < rows; ++i) {
        double s = 0.0;
        for (int j = 0; j < cols; ++j) {
            const double v = row(i)[j];
            if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("payload entries must be finite and >= 0");
            s += v;
        }
        if (std::abs(s - 1.0) > tol) throw std::invalid_argument("payload rows must sum to 1");
    }
}

void TransferPacket::capture(int t, Payload p) {
    if (steps.count(t)) throw std::logic_error("duplicate capture for timestep " + std::to_string(t));
    steps.emplace(t, std::move(p));
}

const Payload& TransferPacket::at(int t) const {
    auto it = steps.find(t);
    if (it == steps.end()) throw std::out_of_range("no payload captured at timestep " + std::to_string(t));
    return it->second;
}

bool should_inject(int t, int T, const InjectionPolicy& policy) {
    return double(t) > (1.0 - policy.tau) * double(T);
}

namespace {

void normalize_row(double* r, int n) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += r[j];
    if (s > 0.0) {
        for (int j = 0; j < n; ++j) r[j] /= s;
    } else {
        for (int j = 0; j < n; ++j) r[j] = 1.0 / n;
    }
}

void blur_row(const Payload& in, Payload& out, int i, const Kernel1D& k) {
    if (in.is_attention()) {
        Grid g(in.grid_h, in.grid_w, Vec(in.row(i), in.row(i) + in.cols));
        Grid b = convolve_separable(g, k);
        std::copy(b.data.begin(), b.data.end(), out.row(i));
    } else {
        Vec b = convolve1d(Vec(in.row(i), in.row(i) + in.cols), k);
        std::copy(b.begin(), b.end(), out.row(i));
    }
    normalize_row(out.row(i), out.cols);
}

Kernel1D blur_kernel(const Payload& p, double sigma) {
    const int limit = p.is_attention() ? std::min(p.grid_h, p.grid_w) : p.cols;
    return gaussian_kernel(sigma, default_radius(sigma, limit));
}

Payload perturb_impl(const Payload& p, const PerturbKind& kind, SeededRng& rng, bool parallel) {
    if (p.rows <= 0 || p.data.size() != static_cast<std::size_t>(p.rows) * p.cols)
        throw std::invalid_argument("perturb: malformed payload");
    Payload out = p;
    switch (kind.type) {
    case PerturbType::Blur: {
        if (!(kind.param > 0.0)) throw std::invalid_argument("blur sigma must be positive");
        const Kernel1D k = blur_kernel(p, kind.param);
        if (is_delta(k)) return out;
        if (parallel) {
#pragma omp parallel for schedule(static)
            for (int i = 0; i < p.rows; ++i) blur_row(p, out, i, k);
        } else {
            for (int i = 0; i < p.rows; ++i) blur_row(p, out, i, k);
        }
        break;
    }
    case PerturbType::Noise: {
        if (!(kind.param > 0.0)) throw std::invalid_argument("noise scale must be positive");
        for (double& v : out.data) v = std::max(0.0, v + kind.param * rng.normal());
        for (int i = 0; i < out.rows; ++i) normalize_row(out.row(i), out.cols);
        break;
    }
    case PerturbType::Identity: {
        if (p.is_attention()) {
            std::fill(out.data.begin(), out.data.end(), 0.0);
            for (int i = 0; i < out.rows; ++i) out.row(i)[i] = 1.0;
        } else {
            std::fill(out.data.begin(), out.data.end(), 1.0 / out.cols);
        }
        break;
    }
    }
    return out;
}

} // namespace

Payload perturb(const Payload& p, const PerturbKind& kind, SeededRng& rng) { return perturb_impl(p, kind, rng, true); }

Payload perturb_reference(const Payload& p, const PerturbKind& kind, SeededRng& rng) {
    return perturb_impl(p, kind, rng, false);
}

} // namespace fgs
