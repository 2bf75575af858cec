#pragma once

#include <cstdint>
#include <vector>

#include "fgs/analytic.hpp"
#include "fgs/tensor.hpp"

namespace fgs {

enum class Shape { Square = 0, Circle = 1, Cross = 2 };

inline constexpr int kImageSize = 16;
inline constexpr int kShapes = 3;
inline constexpr int kSlots = 2;
inline constexpr int kClasses = kShapes * kSlots;
inline constexpr double kBackground = 0.1;
inline constexpr double kForeground = 0.9;
inline constexpr double kPixelNoise = 0.02;
inline constexpr double kCenterY = 8.0;
inline constexpr double kSlotX[kSlots] = {4.0, 12.0};

inline int class_id(int shape, int slot) { return shape * kSlots + slot; }
inline int class_shape(int id) { return id / kSlots; }
inline int class_slot(int id) { return id % kSlots; }

using Mask = std::vector<std::uint8_t>;

struct Scene {
    Grid image;
    int shape = 0;
    int slot = 0;
    int cond_id = 0;
    double cy = kCenterY;
    double cx = 0.0;
    Mask mask;
};

/// Area coverage of the shape, 8x8 supersampled per pixel.
Grid render_coverage(int shape, double cy, double cx);
Grid render_template(int shape, double cy, double cx);
Mask object_mask(double cy, double cx);

std::vector<Scene> gen_dataset(std::uint64_t seed, int n, const Vec& offsets = {-1.0, 0.0, 1.0});

/// The benchmark edit changes the shape and keeps the slot.
int edit_target(int cond_id);

struct SceneMixture {
    MixtureModel mixture;
    std::vector<ConditionSet> conditions; // indexed by class id
};

/// Components ordered slot, shape, dy, dx (last varies fastest).
SceneMixture make_scene_mixture(double spread, const Vec& offsets);

} // namespace fgs
