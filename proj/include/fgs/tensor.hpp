#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace fgs {

using Vec = std::vector<double>;

struct Grid {
    int height = 0;
    int width = 0;
    Vec data;

    Grid() = default;
    Grid(int h, int w, double fill = 0.0);
    Grid(int h, int w, Vec values);

    double& at(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }
    double at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }
    std::size_t size() const { return data.size(); }
};

struct Kernel1D {
    int radius = 0;
    Vec weights;
};

// weights stored row-major, (2r+1) x (2r+1)
struct Kernel2D {
    int radius = 0;
    Vec weights;

    static Kernel2D outer(const Kernel1D& k);
};

Kernel1D gaussian_kernel(double sigma, int radius);
int default_radius(double sigma, int limit);
bool is_delta(const Kernel1D& k);

// reflect-101 padding: -1 -> 1, n -> n-2
int reflect_index(int i, int n);

Grid convolve(const Grid& g, const Kernel2D& k);
Grid convolve_reference(const Grid& g, const Kernel2D& k);
Grid convolve_separable(const Grid& g, const Kernel1D& k);
Vec convolve1d(const Vec& v, const Kernel1D& k);

struct Cosine {
    double value = 0.0;
    bool degenerate = false;
};

Cosine cosine_similarity(const Vec& a, const Vec& b);

/// SplitMix64 stream. Normals come from Box-Muller on pairs of
/// 53-bit uniforms; the second value of each pair is cached.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed = 0) : state_(seed) {}

    std::uint64_t next_u64();
    double uniform();
    double normal();
    std::uint64_t below(std::uint64_t n);

private:
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t id);
Vec sample_standard_normal(SeededRng& rng, std::size_t n);

// c[m x n] = a[m x k] * b[k x n]
void matmul(const double* a, const double* b, double* c, int m, int k, int n);
void matmul_reference(const double* a, const double* b, double* c, int m, int k, int n);
// c[m x n] = a[m x k] * b[n x k]^T
void matmul_bt(const double* a, const double* b, double* c, int m, int k, int n);
void matmul_bt_reference(const double* a, const double* b, double* c, int m, int k, int n);

double dot(const Vec& a, const Vec& b);
double norm(const Vec& a);
Vec axpy(const Vec& x, double a, const Vec& y);

} // namespace fgs
