#include "fgs/nnmodel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fgs {

std::vector<ParamBlock> DenoiserParams::layout(const ModelShape& s) {
    const int n = s.tokens(), d = s.d, h = s.hidden;
    std::vector<ParamBlock> out = {
        {"w_in", 1, d, 0},        {"b_in", 1, d, 0},      {"pos", n, d, 0},     {"w_t", s.temb, d, 0},
        {"b_t", 1, d, 0},         {"cond", s.n_cond + 1, d, 0},                 {"wq", d, d, 0},
        {"wk", d, d, 0},          {"wv", d, d, 0},        {"wo", d, d, 0},      {"w1", d, h, 0},
        {"b1", 1, h, 0},          {"w2", h, d, 0},        {"b2", 1, d, 0},      {"w_out", d, 1, 0},
        {"b_out", 1, 1, 0},
    };
    std::size_t off = 0;
    for (auto& b : out) {
        b.offset = off;
        off += b.size();
    }
    return out;
}

DenoiserParams DenoiserParams::init(const ModelShape& shape, std::uint64_t seed) {
    DenoiserParams p;
    p.shape = shape;
    p.blocks = layout(shape);
    p.flat.assign(p.blocks.back().offset + p.blocks.back().size(), 0.0);
    SeededRng rng(seed);
    auto fill = [&](const std::string& name, double scale) {
        const ParamBlock& b = p.block(name);
        for (std::size_t i = 0; i < b.size(); ++i) p.flat[b.offset + i] = scale * rng.normal();
    };
    const double d = shape.d;
    fill("w_in", 1.0);
    fill("pos", 0.1);
    fill("w_t", 1.0 / std::sqrt(double(shape.temb)));
    fill("cond", 0.5);
    fill("wq", 1.0 / std::sqrt(d));
    fill("wk", 1.0 / std::sqrt(d));
    fill("wv", 1.0 / std::sqrt(d));
    fill("wo", 1.0 / std::sqrt(d));
    fill("w1", 1.0 / std::sqrt(d));
    fill("w2", 1.0 / std::sqrt(double(shape.hidden)));
    fill("w_out", 0.1 / std::sqrt(d));
    return p;
}

const ParamBlock& DenoiserParams::block(const std::string& name) const {
    for (const auto& b : blocks)
        if (b.name == name) return b;
    throw std::out_of_range("unknown parameter block: " + name);
}

void DenoiserParams::validate() const {
    const auto expect = layout(shape);
    if (expect.size() != blocks.size()) throw std::invalid_argument("parameter layout mismatch");
    for (std::size_t i = 0; i < blocks.size(); ++i)
        if (expect[i].name != blocks[i].name || expect[i].rows != blocks[i].rows || expect[i].cols != blocks[i].cols)
            throw std::invalid_argument("parameter block mismatch: " + blocks[i].name);
    if (flat.size() != expect.back().offset + expect.back().size()) throw std::invalid_argument("parameter count mismatch");
    for (double v : flat)
        if (!std::isfinite(v)) throw std::invalid_argument("non-finite parameter");
}

Vec timestep_embedding(int t, int dim) {
    const int half = dim / 2;
    Vec e(dim, 0.0);
    for (int j = 0; j < half; ++j) {
        const double f = std::exp(-std::log(10000.0) * double(j) / double(half));
        e[j] = std::sin(double(t) * f);
        e[half + j] = std::cos(double(t) * f);
    }
    return e;
}

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// c[m x n] += a[r x m]^T b[r x n]
void matmul_tn_acc(const double* a, const double* b, double* c, int r, int m, int n) {
    for (int p = 0; p < r; ++p) {
        const double* ap = a + static_cast<std::size_t>(p) * m;
        const double* bp = b + static_cast<std::size_t>(p) * n;
        for (int i = 0; i < m; ++i) {
            const double v = ap[i];
            if (v == 0.0) continue;
            double* ci = c + static_cast<std::size_t>(i) * n;
            for (int j = 0; j < n; ++j) ci[j] += v * bp[j];
        }
    }
}

struct Cache {
    Vec temb_in, h0, q, k, v, a, o, h1, u, g, h2, eps;
    bool injected = false;
};

void check_injection(const Payload& m, int n) {
    if (m.rows != n || m.cols != n) throw std::invalid_argument("injected attention has wrong shape");
    m.validate(1e-9);
}

void run_forward(const DenoiserParams& p, const Vec& z, int t, int cond_id, const AttentionControl& ctl, Cache& c) {
    const ModelShape& s = p.shape;
    const int n = s.tokens(), d = s.d, h = s.hidden;
    if (static_cast<int>(z.size()) != n) throw std::invalid_argument("forward: latent has wrong size");
    if (cond_id >= s.n_cond) throw std::invalid_argument("forward: condition id out of range");
    const int cid = cond_id < 0 ? s.null_id() : cond_id;

    c.temb_in = timestep_embedding(t, s.temb);
    Vec e(d, 0.0);
    const double* wt = p.ptr("w_t");
    const double* bt = p.ptr("b_t");
    const double* ce = p.ptr("cond") + static_cast<std::size_t>(cid) * d;
    for (int j = 0; j < d; ++j) {
        double acc = bt[j] + ce[j];
        for (int i = 0; i < s.temb; ++i) acc += c.temb_in[i] * wt[static_cast<std::size_t>(i) * d + j];
        e[j] = acc;
    }
    const double* win = p.ptr("w_in");
    const double* bin = p.ptr("b_in");
    const double* pos = p.ptr("pos");
    c.h0.assign(static_cast<std::size_t>(n) * d, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j)
            c.h0[static_cast<std::size_t>(i) * d + j] = z[i] * win[j] + bin[j] + pos[static_cast<std::size_t>(i) * d + j] + e[j];

    c.q.resize(static_cast<std::size_t>(n) * d);
    c.k.resize(c.q.size());
    c.v.resize(c.q.size());
    matmul(c.h0.data(), p.ptr("wq"), c.q.data(), n, d, d);
    matmul(c.h0.data(), p.ptr("wk"), c.k.data(), n, d, d);
    matmul(c.h0.data(), p.ptr("wv"), c.v.data(), n, d, d);

    c.injected = ctl.mode != AttentionMode::Record;
    if (c.injected) {
        if (!ctl.matrix) throw std::invalid_argument("forward: injection requires a matrix");
        check_injection(*ctl.matrix, n);
        c.a = ctl.matrix->data;
    } else {
        c.a.resize(static_cast<std::size_t>(n) * n);
        matmul_bt(c.q.data(), c.k.data(), c.a.data(), n, d, n);
        const double scale = 1.0 / std::sqrt(double(d));
        for (int i = 0; i < n; ++i) {
            double* row = c.a.data() + static_cast<std::size_t>(i) * n;
            double mx = -INFINITY;
            for (int j = 0; j < n; ++j) {
                row[j] *= scale;
                mx = std::max(mx, row[j]);
            }
            double sum = 0.0;
            for (int j = 0; j < n; ++j) {
                row[j] = std::exp(row[j] - mx);
                sum += row[j];
            }
            for (int j = 0; j < n; ++j) row[j] /= sum;
        }
    }

    c.o.resize(static_cast<std::size_t>(n) * d);
    matmul(c.a.data(), c.v.data(), c.o.data(), n, n, d);
    c.h1.resize(c.o.size());
    matmul(c.o.data(), p.ptr("wo"), c.h1.data(), n, d, d);
    for (std::size_t i = 0; i < c.h1.size(); ++i) c.h1[i] += c.h0[i];

    c.u.resize(static_cast<std::size_t>(n) * h);
    matmul(c.h1.data(), p.ptr("w1"), c.u.data(), n, d, h);
    const double* b1 = p.ptr("b1");
    c.g.resize(c.u.size());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < h; ++j) {
            double& u = c.u[static_cast<std::size_t>(i) * h + j];
            u += b1[j];
            c.g[static_cast<std::size_t>(i) * h + j] = u * sigmoid(u);
        }
    c.h2.resize(static_cast<std::size_t>(n) * d);
    matmul(c.g.data(), p.ptr("w2"), c.h2.data(), n, h, d);
    const double* b2 = p.ptr("b2");
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) {
            const std::size_t ij = static_cast<std::size_t>(i) * d + j;
            c.h2[ij] += c.h1[ij] + b2[j];
        }

    const double* wout = p.ptr("w_out");
    const double bout = p.ptr("b_out")[0];
    c.eps.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double acc = bout;
        for (int j = 0; j < d; ++j) acc += c.h2[static_cast<std::size_t>(i) * d + j] * wout[j];
        c.eps[i] = acc;
    }
}

void run_backward(const DenoiserParams& p, const Vec& z, int cond_id, const Cache& c, const Vec& deps, Vec& grad) {
    const ModelShape& s = p.shape;
    const int n = s.tokens(), d = s.d, h = s.hidden;
    const int cid = cond_id < 0 ? s.null_id() : cond_id;
    auto g = [&](const char* name) { return grad.data() + p.block(name).offset; };

    Vec dh2(static_cast<std::size_t>(n) * d);
    const double* wout = p.ptr("w_out");
    double* gwout = g("w_out");
    double gbout = 0.0;
    for (int i = 0; i < n; ++i) {
        gbout += deps[i];
        for (int j = 0; j < d; ++j) {
            gwout[j] += deps[i] * c.h2[static_cast<std::size_t>(i) * d + j];
            dh2[static_cast<std::size_t>(i) * d + j] = deps[i] * wout[j];
        }
    }
    g("b_out")[0] += gbout;

    matmul_tn_acc(c.g.data(), dh2.data(), g("w2"), n, h, d);
    double* gb2 = g("b2");
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) gb2[j] += dh2[static_cast<std::size_t>(i) * d + j];
    Vec du(static_cast<std::size_t>(n) * h);
    matmul_bt(dh2.data(), p.ptr("w2"), du.data(), n, d, h);
    for (std::size_t i = 0; i < du.size(); ++i) {
        const double sg = sigmoid(c.u[i]);
        du[i] *= sg * (1.0 + c.u[i] * (1.0 - sg));
    }
    matmul_tn_acc(c.h1.data(), du.data(), g("w1"), n, d, h);
    double* gb1 = g("b1");
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < h; ++j) gb1[j] += du[static_cast<std::size_t>(i) * h + j];
    Vec dh1(static_cast<std::size_t>(n) * d);
    matmul_bt(du.data(), p.ptr("w1"), dh1.data(), n, h, d);
    for (std::size_t i = 0; i < dh1.size(); ++i) dh1[i] += dh2[i];

    matmul_tn_acc(c.o.data(), dh1.data(), g("wo"), n, d, d);
    Vec dout(static_cast<std::size_t>(n) * d);
    matmul_bt(dh1.data(), p.ptr("wo"), dout.data(), n, d, d);
    Vec dh0 = dh1;

    Vec dv(static_cast<std::size_t>(n) * d, 0.0);
    matmul_tn_acc(c.a.data(), dout.data(), dv.data(), n, n, d);
    Vec tmp(static_cast<std::size_t>(n) * d);
    if (!c.injected) {
        Vec ds(static_cast<std::size_t>(n) * n);
        matmul_bt(dout.data(), c.v.data(), ds.data(), n, d, n);
        const double scale = 1.0 / std::sqrt(double(d));
        for (int i = 0; i < n; ++i) {
            const double* a = c.a.data() + static_cast<std::size_t>(i) * n;
            double* r = ds.data() + static_cast<std::size_t>(i) * n;
            double dot = 0.0;
            for (int j = 0; j < n; ++j) dot += a[j] * r[j];
            for (int j = 0; j < n; ++j) r[j] = a[j] * (r[j] - dot) * scale;
        }
        Vec dq(static_cast<std::size_t>(n) * d);
        matmul(ds.data(), c.k.data(), dq.data(), n, n, d);
        Vec dk(static_cast<std::size_t>(n) * d, 0.0);
        matmul_tn_acc(ds.data(), c.q.data(), dk.data(), n, n, d);
        matmul_tn_acc(c.h0.data(), dq.data(), g("wq"), n, d, d);
        matmul_tn_acc(c.h0.data(), dk.data(), g("wk"), n, d, d);
        matmul_bt(dq.data(), p.ptr("wq"), tmp.data(), n, d, d);
        for (std::size_t i = 0; i < dh0.size(); ++i) dh0[i] += tmp[i];
        matmul_bt(dk.data(), p.ptr("wk"), tmp.data(), n, d, d);
        for (std::size_t i = 0; i < dh0.size(); ++i) dh0[i] += tmp[i];
    }
    matmul_tn_acc(c.h0.data(), dv.data(), g("wv"), n, d, d);
    matmul_bt(dv.data(), p.ptr("wv"), tmp.data(), n, d, d);
    for (std::size_t i = 0; i < dh0.size(); ++i) dh0[i] += tmp[i];

    Vec de(d, 0.0);
    double* gwin = g("w_in");
    double* gbin = g("b_in");
    double* gpos = g("pos");
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) {
            const double v = dh0[static_cast<std::size_t>(i) * d + j];
            gwin[j] += v * z[i];
            gbin[j] += v;
            gpos[static_cast<std::size_t>(i) * d + j] += v;
            de[j] += v;
        }
    double* gcond = g("cond") + static_cast<std::size_t>(cid) * d;
    double* gwt = g("w_t");
    double* gbt = g("b_t");
    for (int j = 0; j < d; ++j) {
        gcond[j] += de[j];
        gbt[j] += de[j];
        for (int i = 0; i < s.temb; ++i) gwt[static_cast<std::size_t>(i) * d + j] += c.temb_in[i] * de[j];
    }
}

} // namespace

ForwardOutput forward(const DenoiserParams& p, const Vec& z, int t, int cond_id, const AttentionControl& control) {
    Cache c;
    run_forward(p, z, t, cond_id, control, c);
    const int n = p.shape.tokens();
    ForwardOutput out;
    out.eps = std::move(c.eps);
    out.att = Payload::attention(n, p.shape.height, p.shape.width, std::move(c.a));
    return out;
}

std::vector<NoisedItem> draw_noise(const std::vector<TrainItem>& batch, SeededRng& rng, const NoiseSchedule& s) {
    std::vector<NoisedItem> out;
    out.reserve(batch.size());
    for (const auto& it : batch) {
        NoisedItem ni;
        ni.z0 = it.z0;
        ni.cond_id = it.cond_id;
        ni.t = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(s.T)));
        ni.eps = sample_standard_normal(rng, it.z0.size());
        out.push_back(std::move(ni));
    }
    return out;
}

LossGrad loss_fixed(const DenoiserParams& p, const std::vector<NoisedItem>& items, const NoiseSchedule& s,
                    bool want_grads) {
    if (items.empty()) throw std::invalid_argument("loss: empty batch");
    const int n = p.shape.tokens();
    const int B = static_cast<int>(items.size());
    const double norm = 1.0 / (double(B) * n);
    std::vector<double> losses(B, 0.0);
    std::vector<Vec> grads(want_grads ? B : 0);
#pragma omp parallel for schedule(static)
    for (int b = 0; b < B; ++b) {
        const NoisedItem& it = items[b];
        const LatentState zt = add_noise(it.z0, it.eps, s, it.t);
        Cache c;
        run_forward(p, zt.value, it.t, it.cond_id, AttentionControl::record(), c);
        Vec deps(n);
        double l = 0.0;
        for (int i = 0; i < n; ++i) {
            const double r = c.eps[i] - it.eps[i];
            l += r * r;
            deps[i] = 2.0 * r * norm;
        }
        losses[b] = l * norm;
        if (want_grads) {
            grads[b].assign(p.flat.size(), 0.0);
            run_backward(p, zt.value, it.cond_id, c, deps, grads[b]);
        }
    }
    LossGrad out;
    for (int b = 0; b < B; ++b) out.loss += losses[b];
    if (want_grads) {
        out.grads.assign(p.flat.size(), 0.0);
        for (int b = 0; b < B; ++b)
            for (std::size_t i = 0; i < out.grads.size(); ++i) out.grads[i] += grads[b][i];
    }
    return out;
}

LossGrad loss_and_grads(const DenoiserParams& p, const std::vector<TrainItem>& batch, SeededRng& rng,
                        const NoiseSchedule& s) {
    return loss_fixed(p, draw_noise(batch, rng, s), s, true);
}

DenoiserParams train_from(DenoiserParams p, const std::vector<TrainItem>& data, const TrainHyper& hyper,
                          const NoiseSchedule& s, const TrainLogFn& log) {
    if (data.empty()) throw std::invalid_argument("train: empty dataset");
    if (hyper.batch < 1) throw std::invalid_argument("train: batch must be >= 1");
    SeededRng rng(hyper.seed);
    Vec vel(p.flat.size(), 0.0);
    for (int step = 0; step <= hyper.steps; ++step) {
        std::vector<TrainItem> batch;
        batch.reserve(hyper.batch);
        for (int b = 0; b < hyper.batch; ++b) {
            TrainItem it = data[rng.below(data.size())];
            if (rng.uniform() < hyper.cond_dropout) it.cond_id = -1;
            batch.push_back(std::move(it));
        }
        LossGrad lg = loss_and_grads(p, batch, rng, s);
        if (!std::isfinite(lg.loss))
            throw std::runtime_error("training diverged at step " + std::to_string(step) + " (loss is not finite)");
        if (log && hyper.log_every > 0 && step % hyper.log_every == 0) log(step, lg.loss);
        if (step == hyper.steps) break;
        double scale = 1.0;
        if (hyper.clip > 0.0) {
            const double gn = norm(lg.grads);
            if (gn > hyper.clip) scale = hyper.clip / gn;
        }
        for (std::size_t i = 0; i < p.flat.size(); ++i) {
            vel[i] = hyper.momentum * vel[i] - hyper.lr * scale * lg.grads[i];
            p.flat[i] += vel[i];
        }
    }
    return p;
}

DenoiserParams train(const std::vector<TrainItem>& data, const TrainHyper& hyper, const NoiseSchedule& s,
                     const ModelShape& shape, const TrainLogFn& log) {
    return train_from(DenoiserParams::init(shape, derive_seed(hyper.seed, 0x1417)), data, hyper, s, log);
}

Vec Classifier::log_probs(const Vec& x) const {
    if (!trained()) throw std::logic_error("classifier used before training");
    if (static_cast<int>(x.size()) != dim) throw std::invalid_argument("classifier: input has wrong size");
    Vec z(n_classes);
    double mx = -INFINITY;
    for (int c = 0; c < n_classes; ++c) {
        double acc = bias[c];
        const double* w = weights.data() + static_cast<std::size_t>(c) * dim;
        for (int i = 0; i < dim; ++i) acc += w[i] * x[i];
        z[c] = acc;
        mx = std::max(mx, acc);
    }
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - mx);
    const double lse = mx + std::log(sum);
    for (double& v : z) v -= lse;
    return z;
}

Vec Classifier::probs(const Vec& x) const {
    Vec lp = log_probs(x);
    for (double& v : lp) v = std::exp(v);
    return lp;
}

int Classifier::predict(const Vec& x) const {
    Vec lp = log_probs(x);
    return static_cast<int>(std::max_element(lp.begin(), lp.end()) - lp.begin());
}

Classifier classifier_train(const std::vector<Vec>& x, const std::vector<int>& y, int n_classes,
                            const ClassifierHyper& hyper) {
    if (x.empty() || x.size() != y.size()) throw std::invalid_argument("classifier_train: bad dataset");
    if (n_classes < 2 || n_classes > 64) throw std::invalid_argument("classifier_train: need 2 to 64 classes");
    const int dim = static_cast<int>(x[0].size());
    for (const auto& v : x)
        if (static_cast<int>(v.size()) != dim) throw std::invalid_argument("classifier_train: ragged inputs");
    for (int c : y)
        if (c < 0 || c >= n_classes) throw std::invalid_argument("classifier_train: label out of range");
    Classifier clf;
    clf.n_classes = n_classes;
    clf.dim = dim;
    clf.weights.assign(static_cast<std::size_t>(n_classes) * dim, 0.0);
    clf.bias.assign(n_classes, 0.0);
    Vec vw(clf.weights.size(), 0.0), vb(n_classes, 0.0);
    const int n = static_cast<int>(x.size());
    const double inv_n = 1.0 / double(n);
    Vec xs(static_cast<std::size_t>(n) * dim);
    for (int s = 0; s < n; ++s) std::copy(x[s].begin(), x[s].end(), xs.begin() + static_cast<std::size_t>(s) * dim);
    Vec logits(static_cast<std::size_t>(n) * n_classes);
    Vec gw(clf.weights.size()), gb(n_classes);
    for (int it = 0; it < hyper.iters; ++it) {
        matmul_bt(xs.data(), clf.weights.data(), logits.data(), n, dim, n_classes);
        std::fill(gb.begin(), gb.end(), 0.0);
        for (int s = 0; s < n; ++s) {
            double* z = logits.data() + static_cast<std::size_t>(s) * n_classes;
            double mx = -INFINITY;
            for (int c = 0; c < n_classes; ++c) mx = std::max(mx, z[c] += clf.bias[c]);
            double sum = 0.0;
            for (int c = 0; c < n_classes; ++c) sum += (z[c] = std::exp(z[c] - mx));
            for (int c = 0; c < n_classes; ++c) z[c] = (z[c] / sum - (c == y[s] ? 1.0 : 0.0)) * inv_n;
            for (int c = 0; c < n_classes; ++c) gb[c] += z[c];
        }
#pragma omp parallel for schedule(static)
        for (int i = 0; i < dim; ++i) {
            double acc[64];
            const int nc = std::min(n_classes, 64);
            std::fill(acc, acc + nc, 0.0);
            for (int s = 0; s < n; ++s) {
                const double xi = xs[static_cast<std::size_t>(s) * dim + i];
                const double* pr = logits.data() + static_cast<std::size_t>(s) * n_classes;
                for (int c = 0; c < nc; ++c) acc[c] += pr[c] * xi;
            }
            for (int c = 0; c < nc; ++c) gw[static_cast<std::size_t>(c) * dim + i] = acc[c];
        }
        for (std::size_t i = 0; i < gw.size(); ++i) {
            vw[i] = 0.9 * vw[i] - hyper.lr * (gw[i] + hyper.l2 * clf.weights[i]);
            clf.weights[i] += vw[i];
        }
        for (int c = 0; c < n_classes; ++c) {
            vb[c] = 0.9 * vb[c] - hyper.lr * gb[c];
            clf.bias[c] += vb[c];
        }
    }
    return clf;
}

} // namespace fgs
