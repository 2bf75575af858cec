#include "fgs/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fgs {

namespace {

bool inside(int shape, double x, double y) {
    switch (static_cast<Shape>(shape)) {
    case Shape::Square: return std::abs(x) <= 3.0 && std::abs(y) <= 3.0;
    case Shape::Circle: return x * x + y * y <= 3.2 * 3.2;
    case Shape::Cross:
        return (std::abs(x) <= 1.0 && std::abs(y) <= 3.2) || (std::abs(y) <= 1.0 && std::abs(x) <= 3.2);
    }
    return false;
}

} // namespace

Grid render_coverage(int shape, double cy, double cx) {
    if (shape < 0 || shape >= kShapes) throw std::invalid_argument("unknown shape");
    constexpr int ss = 8;
    Grid g(kImageSize, kImageSize);
    for (int i = 0; i < kImageSize; ++i)
        for (int j = 0; j < kImageSize; ++j) {
            int hits = 0;
            for (int a = 0; a < ss; ++a)
                for (int b = 0; b < ss; ++b) {
                    const double y = i + (a + 0.5) / ss - cy;
                    const double x = j + (b + 0.5) / ss - cx;
                    hits += inside(shape, x, y);
                }
            g.at(i, j) = double(hits) / (ss * ss);
        }
    return g;
}

Grid render_template(int shape, double cy, double cx) {
    Grid g = render_coverage(shape, cy, cx);
    for (double& v : g.data) v = kBackground + (kForeground - kBackground) * v;
    return g;
}

Mask object_mask(double cy, double cx) {
    Mask m(kImageSize * kImageSize, 0);
    const int y0 = std::max(0, static_cast<int>(std::floor(cy - 3.2)));
    const int y1 = std::min(kImageSize, static_cast<int>(std::ceil(cy + 3.2)));
    const int x0 = std::max(0, static_cast<int>(std::floor(cx - 3.2)));
    const int x1 = std::min(kImageSize, static_cast<int>(std::ceil(cx + 3.2)));
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) m[y * kImageSize + x] = 1;
    return m;
}

std::vector<Scene> gen_dataset(std::uint64_t seed, int n, const Vec& offsets) {
    if (n < 1) throw std::invalid_argument("gen_dataset: n must be >= 1");
    if (offsets.empty()) throw std::invalid_argument("gen_dataset: need at least one offset");
    SeededRng rng(seed);
    std::vector<Scene> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
        Scene s;
        s.cond_id = i % kClasses;
        s.shape = class_shape(s.cond_id);
        s.slot = class_slot(s.cond_id);
        s.cy = kCenterY + offsets[rng.below(offsets.size())];
        s.cx = kSlotX[s.slot] + offsets[rng.below(offsets.size())];
        s.image = render_template(s.shape, s.cy, s.cx);
        for (double& v : s.image.data) v = std::clamp(v + kPixelNoise * rng.normal(), 0.0, 1.0);
        s.mask = object_mask(s.cy, s.cx);
        out.push_back(std::move(s));
    }
    return out;
}

int edit_target(int cond_id) { return class_id((class_shape(cond_id) + 1) % kShapes, class_slot(cond_id)); }

SceneMixture make_scene_mixture(double spread, const Vec& offsets) {
    if (!(spread >= 0.0)) throw std::invalid_argument("mixture spread must be >= 0");
    if (offsets.empty()) throw std::invalid_argument("mixture needs at least one offset");
    SceneMixture sm;
    MixtureModel& m = sm.mixture;
    m.dim = kImageSize * kImageSize;
    sm.conditions.assign(kClasses, ConditionSet::of({}));
    int j = 0;
    for (int slot = 0; slot < kSlots; ++slot)
        for (int shape = 0; shape < kShapes; ++shape)
            for (double dy : offsets)
                for (double dx : offsets) {
                    m.means.push_back(render_template(shape, kCenterY + dy, kSlotX[slot] + dx).data);
                    m.vars.push_back(spread * spread);
                    sm.conditions[class_id(shape, slot)].indices->push_back(j++);
                }
    m.weights.assign(m.means.size(), 1.0 / double(m.means.size()));
    return sm;
}

} // namespace fgs
