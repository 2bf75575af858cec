#include "fgs/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace fgs {

std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string pgm_bytes(const Grid& g) {
    std::string out = "P5\n" + std::to_string(g.width) + " " + std::to_string(g.height) + "\n255\n";
    for (double v : g.data) {
        if (!std::isfinite(v)) throw std::invalid_argument("export_pgm: non-finite pixel");
        const double c = std::clamp(v, 0.0, 1.0);
        out.push_back(static_cast<char>(static_cast<unsigned char>(std::floor(c * 255.0 + 0.5))));
    }
    return out;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!f) throw std::runtime_error("write failed for " + path);
}

std::string read_text(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void export_pgm(const Grid& g, const std::string& path) { write_text(path, pgm_bytes(g)); }

namespace {

std::string esc(const std::string& s) {
    std::string o;
    for (char c : s) {
        if (c == '<') o += "&lt;";
        else if (c == '>') o += "&gt;";
        else if (c == '&') o += "&amp;";
        else o += c;
    }
    return o;
}

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

} // namespace

std::string svg_plot(const std::vector<Series>& series, const PlotSpec& spec) {
    if (series.empty()) throw std::invalid_argument("svg plot: empty series list");
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    auto tx = [&](double x) { return spec.log_x ? std::log10(x) : x; };
    for (const auto& s : series) {
        if (s.x.empty() || s.x.size() != s.y.size()) throw std::invalid_argument("svg plot: empty or ragged series");
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (spec.log_x && !(s.x[i] > 0.0)) throw std::invalid_argument("svg plot: log axis needs positive x");
            x0 = std::min(x0, tx(s.x[i]));
            x1 = std::max(x1, tx(s.x[i]));
            y0 = std::min(y0, s.y[i]);
            y1 = std::max(y1, s.y[i]);
        }
    }
    if (x1 == x0) { x0 -= 1.0; x1 += 1.0; }
    if (y1 == y0) { y0 -= 1.0; y1 += 1.0; }
    const double W = 640, H = 400, L = 70, R = 20, Tm = 40, B = 50;
    auto px = [&](double x) { return L + (tx(x) - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - Tm - B); };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << esc(spec.title) << "</text>\n";
    o << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    o << "<line x1=\"" << L << "\" y1=\"" << Tm << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double yv = y0 + (y1 - y0) * i / 4.0;
        const double xv = x0 + (x1 - x0) * i / 4.0;
        const double xs = L + (W - L - R) * i / 4.0;
        o << "<text x=\"" << L - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\" font-size=\"11\">" << fmt6(yv)
          << "</text>\n";
        o << "<text x=\"" << xs << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\" font-size=\"11\">"
          << fmt6(spec.log_x ? std::pow(10.0, xv) : xv) << "</text>\n";
    }
    o << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\" font-size=\"13\">"
      << esc(spec.x_label) << "</text>\n";
    o << "<text x=\"16\" y=\"" << (Tm + H - B) / 2 << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 16 "
      << (Tm + H - B) / 2 << ")\">" << esc(spec.y_label) << "</text>\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* col = kColors[k % 6];
        o << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) o << fmt6(px(s.x[i])) << "," << fmt6(py(s.y[i])) << " ";
        o << "\"/>\n";
        for (std::size_t i = 0; i < s.x.size(); ++i)
            o << "<circle cx=\"" << fmt6(px(s.x[i])) << "\" cy=\"" << fmt6(py(s.y[i])) << "\" r=\"2.5\" fill=\"" << col
              << "\"/>\n";
        o << "<text x=\"" << W - R - 4 << "\" y=\"" << Tm + 14 * (k + 1) << "\" text-anchor=\"end\" font-size=\"11\" fill=\""
          << col << "\">" << esc(s.name) << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

void export_svg_plot(const std::vector<Series>& series, const PlotSpec& spec, const std::string& path) {
    write_text(path, svg_plot(series, spec));
}

const NamedTensor& Checkpoint::tensor(const std::string& name) const {
    for (const auto& t : tensors)
        if (t.name == name) return t;
    throw std::out_of_range("checkpoint has no tensor " + name);
}

namespace {

std::size_t shape_count(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw std::invalid_argument("checkpoint: non-positive dimension");
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const std::string& in, std::size_t pos) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(static_cast<unsigned char>(in[pos + i])) << (8 * i);
    return v;
}

} // namespace

std::string serialize_checkpoint(const Checkpoint& ck) {
    std::ostringstream h;
    std::map<std::string, std::string> meta = ck.meta;
    meta.erase("version");
    meta.erase("count");
    h << "version=1\n";
    for (const auto& [k, v] : meta) {
        if (k.find_first_of("=\n") != std::string::npos || v.find('\n') != std::string::npos || k == "tensor")
            throw std::invalid_argument("checkpoint: invalid metadata entry " + k);
        h << k << "=" << v << "\n";
    }
    std::size_t count = 0;
    for (const auto& t : ck.tensors) {
        const std::size_t n = shape_count(t.shape);
        if (n != t.data.size()) throw std::invalid_argument("checkpoint: tensor " + t.name + " does not match its shape");
        h << "tensor=" << t.name << ":";
        for (std::size_t i = 0; i < t.shape.size(); ++i) h << (i ? "x" : "") << t.shape[i];
        h << "\n";
        count += n;
    }
    h << "count=" << count << "\n";
    const std::string header = h.str();

    std::string out = "FGS1";
    put_u32(out, static_cast<std::uint32_t>(header.size()));
    out += header;
    out.reserve(out.size() + 4 * count);
    for (const auto& t : ck.tensors)
        for (double v : t.data) {
            const float f = static_cast<float>(v);
            std::uint32_t bits;
            std::memcpy(&bits, &f, 4);
            put_u32(out, bits);
        }
    return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
    if (bytes.size() < 8 || bytes.compare(0, 4, "FGS1") != 0) throw std::runtime_error("checkpoint: bad magic");
    const std::uint32_t hlen = get_u32(bytes, 4);
    if (bytes.size() < 8 + std::size_t(hlen)) throw std::runtime_error("checkpoint: truncated header");
    std::istringstream h(bytes.substr(8, hlen));
    Checkpoint ck;
    std::string line;
    std::size_t declared = 0;
    bool have_count = false, have_version = false;
    while (std::getline(h, line)) {
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw std::runtime_error("checkpoint: malformed metadata line");
        const std::string k = line.substr(0, eq), v = line.substr(eq + 1);
        if (k == "version") {
            if (v != "1") throw std::runtime_error("checkpoint: unsupported version " + v);
            have_version = true;
        } else if (k == "count") {
            declared = std::stoull(v);
            have_count = true;
        } else if (k == "tensor") {
            const auto colon = v.rfind(':');
            if (colon == std::string::npos) throw std::runtime_error("checkpoint: malformed tensor entry");
            NamedTensor t;
            t.name = v.substr(0, colon);
            std::stringstream ds(v.substr(colon + 1));
            std::string dim;
            while (std::getline(ds, dim, 'x')) t.shape.push_back(std::stoi(dim));
            if (t.shape.empty()) throw std::runtime_error("checkpoint: tensor without shape");
            ck.tensors.push_back(std::move(t));
        } else {
            ck.meta[k] = v;
        }
    }
    if (!have_version || !have_count) throw std::runtime_error("checkpoint: missing version or count");
    std::size_t total = 0;
    for (const auto& t : ck.tensors) total += shape_count(t.shape);
    if (total != declared) throw std::runtime_error("checkpoint: element count does not match tensor shapes");
    const std::size_t payload = bytes.size() - 8 - hlen;
    if (payload < 4 * declared) throw std::runtime_error("checkpoint: truncated payload");
    if (payload > 4 * declared) throw std::runtime_error("checkpoint: trailing bytes after payload");
    std::size_t pos = 8 + hlen;
    for (auto& t : ck.tensors) {
        t.data.resize(shape_count(t.shape));
        for (double& v : t.data) {
            const std::uint32_t bits = get_u32(bytes, pos);
            float f;
            std::memcpy(&f, &bits, 4);
            v = f;
            pos += 4;
        }
    }
    return ck;
}

void save_checkpoint(const std::string& path, const Checkpoint& ck) { write_text(path, serialize_checkpoint(ck)); }

Checkpoint load_checkpoint(const std::string& path) { return deserialize_checkpoint(read_text(path)); }

Checkpoint params_to_checkpoint(const DenoiserParams& p, std::uint64_t seed, const NoiseSchedule& s) {
    Checkpoint ck;
    ck.meta["module"] = "nnmodel";
    ck.meta["seed"] = std::to_string(seed);
    ck.meta["schedule"] = to_string(s.kind) + ":" + std::to_string(s.T);
    const ModelShape& m = p.shape;
    ck.meta["shape"] = std::to_string(m.height) + "x" + std::to_string(m.width) + ",d=" + std::to_string(m.d) +
                       ",hidden=" + std::to_string(m.hidden) + ",temb=" + std::to_string(m.temb) +
                       ",conds=" + std::to_string(m.n_cond);
    for (const auto& b : p.blocks)
        ck.tensors.push_back({b.name, {b.rows, b.cols}, Vec(p.flat.begin() + b.offset, p.flat.begin() + b.offset + b.size())});
    return ck;
}

DenoiserParams params_from_checkpoint(const Checkpoint& ck) {
    auto it = ck.meta.find("module");
    if (it == ck.meta.end() || it->second != "nnmodel") throw std::runtime_error("checkpoint does not hold model parameters");
    ModelShape m;
    const std::string sh = ck.meta.at("shape");
    if (std::sscanf(sh.c_str(), "%dx%d,d=%d,hidden=%d,temb=%d,conds=%d", &m.height, &m.width, &m.d, &m.hidden, &m.temb,
                    &m.n_cond) != 6)
        throw std::runtime_error("checkpoint: malformed model shape " + sh);
    DenoiserParams p;
    p.shape = m;
    p.blocks = DenoiserParams::layout(m);
    p.flat.assign(p.blocks.back().offset + p.blocks.back().size(), 0.0);
    if (ck.tensors.size() != p.blocks.size()) throw std::runtime_error("checkpoint: wrong number of parameter tensors");
    for (std::size_t i = 0; i < p.blocks.size(); ++i) {
        const auto& b = p.blocks[i];
        const auto& t = ck.tensors[i];
        if (t.name != b.name || t.shape != std::vector<int>{b.rows, b.cols})
            throw std::runtime_error("checkpoint: parameter tensor mismatch at " + t.name);
        std::copy(t.data.begin(), t.data.end(), p.flat.begin() + b.offset);
    }
    p.validate();
    return p;
}

} // namespace fgs
