#pragma once

#include <utility>
#include <vector>

#include "fgs/dataset.hpp"
#include "fgs/nnmodel.hpp"
#include "fgs/pipeline.hpp"
#include "fgs/tensor.hpp"

namespace fgs {

struct Faithfulness {
    double whole = 0.0;
    double unedited = 0.0;
    bool degenerate = false;
};

/// RMS pixel distance over the whole image and over pixels outside the mask.
Faithfulness faithfulness_distance(const Grid& input, const Grid& edited, const Mask& mask);

/// Distance between the patch cosine self-similarity matrices of two images.
double structure_selfsim_distance(const Grid& input, const Grid& edited, int patch = 4);

struct Editability {
    double whole = 0.0;
    double edited_region = 0.0;
};

Editability editability_score(const Grid& edited, int target_cond, const Classifier& clf, const Mask& mask);

using Curve = std::vector<std::pair<int, double>>;

/// Cosine between the CFG and FG directions at every step that formed an FG term.
Curve misalignment_curve(const EditResult& result);
Curve mean_curve(const std::vector<Curve>& curves);

Grid clamp_image(const Vec& v, int h = kImageSize, int w = kImageSize);
double median(std::vector<double> v);

} // namespace fgs
