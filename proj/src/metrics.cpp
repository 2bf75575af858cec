#include "fgs/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace fgs {

Faithfulness faithfulness_distance(const Grid& input, const Grid& edited, const Mask& mask) {
    if (input.height != edited.height || input.width != edited.width)
        throw std::invalid_argument("faithfulness_distance: shape mismatch");
    if (mask.size() != input.size()) throw std::invalid_argument("faithfulness_distance: mask has wrong size");
    double all = 0.0, outside = 0.0;
    std::size_t n_out = 0;
    for (std::size_t i = 0; i < input.size(); ++i) {
        const double d = edited.data[i] - input.data[i];
        all += d * d;
        if (!mask[i]) {
            outside += d * d;
            ++n_out;
        }
    }
    Faithfulness f;
    f.whole = std::sqrt(all / double(input.size()));
    if (n_out == 0) {
        f.degenerate = true;
        f.unedited = 0.0;
    } else {
        f.unedited = std::sqrt(outside / double(n_out));
    }
    return f;
}

namespace {

std::vector<Vec> centered_patches(const Grid& g, int patch) {
    std::vector<Vec> out;
    for (int py = 0; py < g.height / patch; ++py)
        for (int px = 0; px < g.width / patch; ++px) {
            Vec v;
            v.reserve(patch * patch);
            for (int y = 0; y < patch; ++y)
                for (int x = 0; x < patch; ++x) v.push_back(g.at(py * patch + y, px * patch + x));
            double mean = 0.0;
            for (double a : v) mean += a;
            mean /= double(v.size());
            for (double& a : v) a -= mean;
            out.push_back(std::move(v));
        }
    return out;
}

Vec selfsim(const Grid& g, int patch) {
    const auto p = centered_patches(g, patch);
    const std::size_t n = p.size();
    Vec m(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) m[i * n + j] = cosine_similarity(p[i], p[j]).value;
    return m;
}

} // namespace

double structure_selfsim_distance(const Grid& input, const Grid& edited, int patch) {
    if (input.height != edited.height || input.width != edited.width)
        throw std::invalid_argument("structure_selfsim_distance: shape mismatch");
    if (patch < 1 || input.height % patch || input.width % patch)
        throw std::invalid_argument("structure_selfsim_distance: image not divisible into patches");
    const Vec a = selfsim(input, patch), b = selfsim(edited, patch);
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s) / double(a.size());
}

Editability editability_score(const Grid& edited, int target_cond, const Classifier& clf, const Mask& mask) {
    if (mask.size() != edited.size()) throw std::invalid_argument("editability_score: mask has wrong size");
    if (target_cond < 0 || target_cond >= clf.n_classes) throw std::invalid_argument("editability_score: bad target");
    Editability e;
    e.whole = clf.log_probs(edited.data)[target_cond];
    Vec crop(edited.size(), 0.0);
    for (std::size_t i = 0; i < crop.size(); ++i)
        if (mask[i]) crop[i] = edited.data[i];
    e.edited_region = clf.log_probs(crop)[target_cond];
    return e;
}

Curve misalignment_curve(const EditResult& result) {
    Curve c;
    for (const auto& st : result.steps) {
        if (!st.injected || st.d_fg.empty()) continue;
        c.emplace_back(st.t, cosine_similarity(st.d_cfg, st.d_fg).value);
    }
    return c;
}

Curve mean_curve(const std::vector<Curve>& curves) {
    std::map<int, std::pair<double, int>> acc;
    for (const auto& c : curves)
        for (auto [t, v] : c) {
            acc[t].first += v;
            acc[t].second += 1;
        }
    Curve out;
    for (auto it = acc.rbegin(); it != acc.rend(); ++it) out.emplace_back(it->first, it->second.first / it->second.second);
    return out;
}

Grid clamp_image(const Vec& v, int h, int w) {
    Grid g(h, w, v);
    for (double& x : g.data) x = std::clamp(x, 0.0, 1.0);
    return g;
}

double median(std::vector<double> v) {
    if (v.empty()) throw std::invalid_argument("median of empty sequence");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace fgs
