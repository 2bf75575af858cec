#pragma once

#include <map>
#include <string>
#include <vector>

#include "fgs/diffusion.hpp"
#include "fgs/nnmodel.hpp"
#include "fgs/tensor.hpp"

namespace fgs {

/// "%.6g" formatting used for every CSV number.
std::string fmt6(double v);

std::string pgm_bytes(const Grid& g);
void export_pgm(const Grid& g, const std::string& path);

struct Series {
    std::string name;
    Vec x;
    Vec y;
};

struct PlotSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_x = false;
};

std::string svg_plot(const std::vector<Series>& series, const PlotSpec& spec);
void export_svg_plot(const std::vector<Series>& series, const PlotSpec& spec, const std::string& path);

struct NamedTensor {
    std::string name;
    std::vector<int> shape;
    Vec data;
};

/// File layout: "FGS1", u32 LE header length, header text of key=value
/// lines, then little-endian float32 payload in tensor order, row-major.
struct Checkpoint {
    std::map<std::string, std::string> meta;
    std::vector<NamedTensor> tensors;

    const NamedTensor& tensor(const std::string& name) const;
};

std::string serialize_checkpoint(const Checkpoint& ck);
Checkpoint deserialize_checkpoint(const std::string& bytes);
void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

Checkpoint params_to_checkpoint(const DenoiserParams& p, std::uint64_t seed, const NoiseSchedule& s);
DenoiserParams params_from_checkpoint(const Checkpoint& ck);

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

} // namespace fgs
