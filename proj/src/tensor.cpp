#include "fgs/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fgs {

Grid::Grid(int h, int w, double fill) : height(h), width(w) {
    if (h <= 0 || w <= 0) throw std::invalid_argument("grid dimensions must be positive");
    data.assign(static_cast<std::size_t>(h) * w, fill);
}

Grid::Grid(int h, int w, Vec values) : height(h), width(w), data(std::move(values)) {
    if (h <= 0 || w <= 0) throw std::invalid_argument("grid dimensions must be positive");
    if (data.size() != static_cast<std::size_t>(h) * w)
        throw std::invalid_argument("grid data length does not match shape");
}

Kernel2D Kernel2D::outer(const Kernel1D& k) {
    Kernel2D out;
    out.radius = k.radius;
    const std::size_t n = k.weights.size();
    out.weights.resize(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) out.weights[i * n + j] = k.weights[i] * k.weights[j];
    return out;
}

Kernel1D gaussian_kernel(double sigma, int radius) {
    if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_kernel: sigma must be positive");
    if (radius < 1) throw std::invalid_argument("gaussian_kernel: radius must be >= 1");
    Kernel1D k;
    k.radius = radius;
    k.weights.resize(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        double w = std::exp(-(double(i) * i) / (2.0 * sigma * sigma));
        k.weights[i + radius] = w;
        sum += w;
    }
    for (double& w : k.weights) w /= sum;
    return k;
}

int default_radius(double sigma, int limit) {
    int r = static_cast<int>(std::ceil(3.0 * sigma));
    r = std::min(r, limit - 1);
    return std::max(r, 1);
}

bool is_delta(const Kernel1D& k) {
    for (int i = 0; i < static_cast<int>(k.weights.size()); ++i)
        if (i != k.radius && k.weights[i] != 0.0) return false;
    return k.weights[k.radius] == 1.0;
}

int reflect_index(int i, int n) {
    if (n == 1) return 0;
    while (i < 0 || i >= n) {
        if (i < 0) i = -i;
        if (i >= n) i = 2 * n - 2 - i;
    }
    return i;
}

namespace {

void check_kernel(const Grid& g, int radius) {
    if (radius >= std::min(g.height, g.width))
        throw std::invalid_argument("convolve: kernel radius must be smaller than the grid");
}

inline double convolve_at(const Grid& g, const Kernel2D& k, int y, int x) {
    const int r = k.radius;
    const int kw = 2 * r + 1;
    double acc = 0.0;
    for (int dy = -r; dy <= r; ++dy) {
        const int yy = reflect_index(y + dy, g.height);
        for (int dx = -r; dx <= r; ++dx) {
            const int xx = reflect_index(x + dx, g.width);
            acc += k.weights[(dy + r) * kw + (dx + r)] * g.at(yy, xx);
        }
    }
    return acc;
}

} // namespace

Grid convolve(const Grid& g, const Kernel2D& k) {
    check_kernel(g, k.radius);
    Grid out(g.height, g.width);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < g.height; ++y)
        for (int x = 0; x < g.width; ++x) out.at(y, x) = convolve_at(g, k, y, x);
    return out;
}

Grid convolve_reference(const Grid& g, const Kernel2D& k) {
    check_kernel(g, k.radius);
    Grid out(g.height, g.width);
    for (int y = 0; y < g.height; ++y)
        for (int x = 0; x < g.width; ++x) out.at(y, x) = convolve_at(g, k, y, x);
    return out;
}

Grid convolve_separable(const Grid& g, const Kernel1D& k) {
    check_kernel(g, k.radius);
    const int r = k.radius;
    Grid tmp(g.height, g.width);
    for (int y = 0; y < g.height; ++y)
        for (int x = 0; x < g.width; ++x) {
            double acc = 0.0;
            for (int d = -r; d <= r; ++d) acc += k.weights[d + r] * g.at(y, reflect_index(x + d, g.width));
            tmp.at(y, x) = acc;
        }
    Grid out(g.height, g.width);
    for (int y = 0; y < g.height; ++y)
        for (int x = 0; x < g.width; ++x) {
            double acc = 0.0;
            for (int d = -r; d <= r; ++d) acc += k.weights[d + r] * tmp.at(reflect_index(y + d, g.height), x);
            out.at(y, x) = acc;
        }
    return out;
}

Vec convolve1d(const Vec& v, const Kernel1D& k) {
    const int n = static_cast<int>(v.size());
    if (k.radius >= n) throw std::invalid_argument("convolve1d: kernel radius must be smaller than the vector");
    const int r = k.radius;
    Vec out(v.size());
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int d = -r; d <= r; ++d) acc += k.weights[d + r] * v[reflect_index(i + d, n)];
        out[i] = acc;
    }
    return out;
}

Cosine cosine_similarity(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw std::invalid_argument("cosine_similarity: length mismatch");
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    if (aa == 0.0 || bb == 0.0) return {0.0, true};
    double c = ab / (std::sqrt(aa) * std::sqrt(bb));
    return {std::clamp(c, -1.0, 1.0), false};
}

std::uint64_t SeededRng::next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double SeededRng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double SeededRng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double th = 2.0 * std::numbers::pi * u2;
    spare_ = rad * std::sin(th);
    has_spare_ = true;
    return rad * std::cos(th);
}

std::uint64_t SeededRng::below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("SeededRng::below: n must be positive");
    return next_u64() % n;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t id) {
    SeededRng r(seed ^ (id * 0xd1342543de82ef95ULL + 0x632be59bd9b4e019ULL));
    return r.next_u64();
}

Vec sample_standard_normal(SeededRng& rng, std::size_t n) {
    if (n == 0) throw std::invalid_argument("sample_standard_normal: n must be >= 1");
    Vec v(n);
    for (double& x : v) x = rng.normal();
    return v;
}

void matmul(const double* a, const double* b, double* c, int m, int k, int n) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) {
        double* ci = c + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) ci[j] = 0.0;
        for (int p = 0; p < k; ++p) {
            const double aip = a[static_cast<std::size_t>(i) * k + p];
            const double* bp = b + static_cast<std::size_t>(p) * n;
            for (int j = 0; j < n; ++j) ci[j] += aip * bp[j];
        }
    }
}

void matmul_reference(const double* a, const double* b, double* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        double* ci = c + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) ci[j] = 0.0;
        for (int p = 0; p < k; ++p) {
            const double aip = a[static_cast<std::size_t>(i) * k + p];
            const double* bp = b + static_cast<std::size_t>(p) * n;
            for (int j = 0; j < n; ++j) ci[j] += aip * bp[j];
        }
    }
}

void matmul_bt(const double* a, const double* b, double* c, int m, int k, int n) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int p = 0; p < k; ++p) acc += a[static_cast<std::size_t>(i) * k + p] * b[static_cast<std::size_t>(j) * k + p];
            c[static_cast<std::size_t>(i) * n + j] = acc;
        }
}

void matmul_bt_reference(const double* a, const double* b, double* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int p = 0; p < k; ++p) acc += a[static_cast<std::size_t>(i) * k + p] * b[static_cast<std::size_t>(j) * k + p];
            c[static_cast<std::size_t>(i) * n + j] = acc;
        }
}

double dot(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

Vec axpy(const Vec& x, double a, const Vec& y) {
    if (x.size() != y.size()) throw std::invalid_argument("axpy: length mismatch");
    Vec out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = a * x[i] + y[i];
    return out;
}

} // namespace fgs
