#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>

#include "fgs/harness.hpp"
#include "fgs/io.hpp"

using namespace fgs;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(const char* id, const char* name, const std::function<Verdict()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
        v = body();
    } catch (const std::exception& e) {
        v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!v.pass) ++failures;
    std::printf("%s %s  %s  [%s] (%.1fs)\n", id, v.pass ? "PASS" : "FAIL", name, v.detail.c_str(), secs);
    std::fflush(stdout);
}

std::string num(double v) { return fmt6(v); }

double rel_error(const Vec& a, const Vec& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (a[i] - b[i]) * (a[i] - b[i]);
        den += b[i] * b[i];
    }
    return std::sqrt(num / den);
}

MixtureModel unit_gaussian(std::size_t dim) {
    MixtureModel m;
    m.dim = dim;
    m.weights = {1.0};
    m.means = {Vec(dim, 0.0)};
    m.vars = {1.0};
    return m;
}

double round_trip(const Vec& z0, int T) {
    const auto s = make_schedule(ScheduleKind::LinearBeta, T);
    const auto m = unit_gaussian(z0.size());
    const EpsFn eps = [&](const Vec& z, int t) { return analytic_eps(z, s.alpha[t], m, ConditionSet::null()).eps; };
    const auto inv = invert_trajectory(z0, eps, s);
    return rel_error(sample_trajectory(inv.back(), eps, s).back(), z0);
}

Verdict a1() {
    SeededRng rng(101);
    double worst = 0.0;
    int ordered = 0;
    for (int i = 0; i < 32; ++i) {
        const Vec z0 = {rng.normal(), rng.normal()};
        worst = std::max(worst, round_trip(z0, 1000));
        ordered += round_trip(z0, 500) < round_trip(z0, 50);
    }
    return {worst < 1e-2 && ordered == 32,
            "max rel err T=1000 " + num(worst) + ", err(500)<err(50) for " + std::to_string(ordered) + "/32"};
}

MixtureModel random_mixture(SeededRng& rng, std::size_t dim) {
    MixtureModel m;
    m.dim = dim;
    const int K = 2 + static_cast<int>(rng.below(3));
    double sum = 0.0;
    for (int j = 0; j < K; ++j) {
        m.weights.push_back(0.2 + rng.uniform());
        sum += m.weights.back();
        Vec mu(dim);
        for (double& v : mu) v = 2.0 * rng.normal();
        m.means.push_back(mu);
        m.vars.push_back(j == 0 && rng.uniform() < 0.3 ? 0.0 : 0.05 + 0.5 * rng.uniform());
    }
    for (double& w : m.weights) w /= sum;
    return m;
}

// Importance-weighted forward-process estimate of E[eps | z_t, c] and its standard error.
std::pair<Vec, Vec> monte_carlo_eps(const MixtureModel& m, const std::vector<int>& comps, const Vec& z, double alpha,
                                    int n, SeededRng& rng) {
    const std::size_t d = m.dim;
    const double sa = std::sqrt(alpha), sb = std::sqrt(1.0 - alpha);
    double wsum = 0.0;
    for (int j : comps) wsum += m.weights[j];
    std::vector<double> w(n);
    std::vector<Vec> e(n, Vec(d));
    double total = 0.0;
    for (int s = 0; s < n; ++s) {
        double u = rng.uniform() * wsum, acc = 0.0;
        int j = comps.back();
        for (int c : comps) {
            acc += m.weights[c];
            if (u < acc) {
                j = c;
                break;
            }
        }
        double q = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            const double x0 = m.means[j][i] + std::sqrt(m.vars[j]) * rng.normal();
            e[s][i] = (z[i] - sa * x0) / sb;
            q += e[s][i] * e[s][i];
        }
        w[s] = std::exp(-0.5 * q);
        total += w[s];
    }
    Vec mean(d, 0.0), se(d, 0.0);
    for (int s = 0; s < n; ++s)
        for (std::size_t i = 0; i < d; ++i) mean[i] += w[s] * e[s][i] / total;
    for (int s = 0; s < n; ++s)
        for (std::size_t i = 0; i < d; ++i) {
            const double r = w[s] / total * (e[s][i] - mean[i]);
            se[i] += r * r;
        }
    for (double& v : se) v = std::sqrt(v);
    return {mean, se};
}

Verdict a2() {
    SeededRng rng(202);
    int checks = 0, within = 0;
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t dim = trial % 2 ? 2 : 1;
        const MixtureModel m = random_mixture(rng, dim);
        std::vector<int> comps;
        for (std::size_t j = 0; j < m.size(); ++j)
            if (trial % 3 != 0 || j % 2 == 0) comps.push_back(static_cast<int>(j));
        const ConditionSet cond = trial % 3 == 0 ? ConditionSet::of(comps) : ConditionSet::null();
        const double alpha = 0.05 + 0.9 * rng.uniform();
        const int j = comps[rng.below(comps.size())];
        Vec z(dim);
        for (std::size_t i = 0; i < dim; ++i)
            z[i] = std::sqrt(alpha) * (m.means[j][i] + std::sqrt(m.vars[j]) * rng.normal()) +
                   std::sqrt(1.0 - alpha) * rng.normal();
        const Vec exact = analytic_eps(z, alpha, m, cond).eps;
        const auto [mc, se] = monte_carlo_eps(m, comps, z, alpha, 1000000, rng);
        for (std::size_t i = 0; i < dim; ++i) {
            // a point mass holding all posterior mass makes every sample identical
            const double floor = 1e-9 * (1.0 + std::abs(mc[i]));
            const double zscore = std::abs(exact[i] - mc[i]) / std::max(se[i], floor);
            worst = std::max(worst, zscore);
            ++checks;
            within += zscore < 3.0;
        }
    }
    return {within == checks, std::to_string(within) + "/" + std::to_string(checks) +
                                  " coordinates within 3 SE, max |z| " + num(worst)};
}

Verdict a3() {
    const auto s = make_schedule(ScheduleKind::LinearBeta, 50);
    auto p = DenoiserParams::init(ModelShape{}, 303);
    SeededRng rng(304);
    std::vector<TrainItem> batch;
    for (const auto& sc : gen_dataset(305, 4)) batch.push_back({sc.image.data, sc.cond_id});
    batch[3].cond_id = -1;
    const auto items = draw_noise(batch, rng, s);
    const Vec grads = loss_fixed(p, items, s, true).grads;
    double worst = 0.0;
    for (int n = 0; n < 100; ++n) {
        const std::size_t i = rng.below(p.flat.size());
        const double keep = p.flat[i], h = 1e-5;
        p.flat[i] = keep + h;
        const double up = loss_fixed(p, items, s, false).loss;
        p.flat[i] = keep - h;
        const double dn = loss_fixed(p, items, s, false).loss;
        p.flat[i] = keep;
        const double fd = (up - dn) / (2.0 * h);
        worst = std::max(worst, std::abs(grads[i] - fd) / std::max(1e-8, std::abs(fd)));
    }
    return {worst < 1e-3, "max relative error " + num(worst) + " over 100 coordinates"};
}

Verdict a4(const Lab& lab, const std::vector<Scene>& scenes) {
    int same_wfg0 = 0, same_delta = 0;
    const int n = 10;
    for (int i = 0; i < n; ++i) {
        RunSpec fgs = fgs_spec(lab.cfg);
        fgs.g.w_fg = 0.0;
        const EditRequest r0 = make_request(lab, scenes[i], fgs, i);
        same_wfg0 += run_fgs(r0).edited == run_baseline(r0).edited;

        RunSpec delta = baseline_spec(lab.cfg, lab.cfg.guidance.policy.tau);
        delta.g.perturb = PerturbKind::blur(1e-6);
        const EditRequest r1 = make_request(lab, scenes[i], delta, i);
        same_delta += run_fgs(r1).edited == run_baseline(r1).edited;
    }
    bool endpoints = true;
    for (double k : {10.0, 100.0, 1000.0}) {
        const auto a = schedule_scales(0.0, k, 10.0, 7.5), b = schedule_scales(1.0, k, 10.0, 7.5);
        endpoints = endpoints && std::abs(a.first - 10.0) <= 1e-15 * 10.0 && a.second == 0.0 && b.first == 0.0 &&
                    std::abs(b.second - 7.5) <= 1e-15 * 7.5;
    }
    SeededRng rng(404);
    int same_combine = 0;
    for (int t = 0; t < 100; ++t) {
        const Vec c = sample_standard_normal(rng, 8), u = sample_standard_normal(rng, 8),
                  p = sample_standard_normal(rng, 8);
        const double w = 10.0 * rng.uniform();
        same_combine += combined(c, u, p, w, 0.0) == cfg_combine(c, u, w);
    }
    const bool ok = same_wfg0 == n && same_delta == n && endpoints && same_combine == 100;
    return {ok, "w_fg=0 " + std::to_string(same_wfg0) + "/" + std::to_string(n) + ", delta blur " +
                    std::to_string(same_delta) + "/" + std::to_string(n) + ", endpoints " + (endpoints ? "ok" : "off") +
                    ", combine " + std::to_string(same_combine) + "/100"};
}

Verdict a5() {
    MixtureModel m;
    m.dim = 1;
    m.weights = {0.5, 0.5};
    m.means = {{-2.0}, {2.0}};
    m.vars = {0.09, 0.09};
    AnalyticDenoiser den(m, {ConditionSet::of({0}), ConditionSet::of({1})}, 0.0);
    const auto s = make_schedule(ScheduleKind::LinearBeta, 50);
    int nearer = 0;
    for (int seed = 0; seed < 256; ++seed) {
        SeededRng rng(derive_seed(505, seed));
        Vec z = {rng.normal()};
        for (int t = s.T; t >= 1; --t) {
            const Vec ec = den.eps(z, t, s, Condition{1}, nullptr);
            const Vec eu = den.eps(z, t, s, Condition::null(), nullptr);
            z = ddim_sample_step({z, t}, cfg_combine(ec, eu, 7.5), s).value;
        }
        nearer += std::abs(z[0] - 2.0) < std::abs(z[0] + 2.0);
    }
    return {nearer >= 254, std::to_string(nearer) + "/256 samples nearer the conditioned mean"};
}

Verdict a6(const std::vector<Summary>& t1) {
    const auto& b4 = find_summary(t1, "baseline(tau=0.4)");
    const auto& b5 = find_summary(t1, "baseline(tau=0.5)");
    const auto& b6 = find_summary(t1, "baseline(tau=0.6)");
    const auto& fgs = find_summary(t1, "fgs");
    const bool a = b5.faithfulness_unedited <= b4.faithfulness_unedited &&
                   b6.faithfulness_unedited <= b5.faithfulness_unedited &&
                   b5.editability_edited <= b4.editability_edited && b6.editability_edited <= b5.editability_edited;
    const bool b = fgs.faithfulness_unedited <= 0.95 * b5.faithfulness_unedited;
    const double fgs_drop = b5.editability_edited - fgs.editability_edited;
    const double tau_drop = b5.editability_edited - b6.editability_edited;
    const bool c = fgs_drop < tau_drop;
    return {a && b && c, std::string("(a) ") + (a ? "ok" : "violated") + " fu " + num(b4.faithfulness_unedited) + "/" +
                             num(b5.faithfulness_unedited) + "/" + num(b6.faithfulness_unedited) + " ee " +
                             num(b4.editability_edited) + "/" + num(b5.editability_edited) + "/" +
                             num(b6.editability_edited) + "; (b) " + (b ? "ok" : "violated") + " fgs fu " +
                             num(fgs.faithfulness_unedited) + " vs " + num(0.95 * b5.faithfulness_unedited) +
                             "; (c) " + (c ? "ok" : "violated") + " fgs ee drop " + num(fgs_drop) + " vs tau drop " +
                             num(tau_drop)};
}

Verdict a7(const std::vector<Summary>& t2, const std::string& base_label) {
    const double base = find_summary(t2, base_label).faithfulness_unedited;
    std::string detail = "baseline " + num(base);
    bool ok = true;
    for (const char* k : {"fgs-noise", "fgs-identity", "fgs-blur"}) {
        const double v = find_summary(t2, k).faithfulness_unedited;
        ok = ok && v < base;
        detail += std::string(", ") + k + " " + num(v) + (v < base ? "" : " (not below)");
    }
    return {ok, detail};
}

Verdict a8(const Lab& lab, const std::filesystem::path& out) {
    const auto scenes = lab.scenes(100);
    const RunSpec spec = fgs_spec(lab.cfg);
    const Curve c = misalignment(lab, scenes, spec);
    int expected = 0;
    for (int t = 1; t <= lab.sched.T; ++t) expected += should_inject(t, lab.sched.T, spec.g.policy);
    bool bounded = true;
    for (auto [t, v] : c) bounded = bounded && v >= -1.0 && v <= 1.0 && std::isfinite(v);

    const std::string csv = curve_csv(c);
    write_text((out / "misalign.csv").string(), csv);
    Series s{"mean cosine", {}, {}};
    for (auto [t, v] : c) {
        s.x.push_back(t);
        s.y.push_back(v);
    }
    export_svg_plot({s}, {"CFG / FG direction alignment", "timestep t", "cosine similarity", false},
                    (out / "misalign.svg").string());
    const bool files = read_text((out / "misalign.csv").string()) == csv &&
                       read_text((out / "misalign.svg").string()).find("<svg") != std::string::npos;

    std::vector<Curve> synthetic;
    for (int i = 0; i < 5; ++i) {
        EditResult r = run_fgs(make_request(lab, scenes[i], spec, i));
        for (auto& st : r.steps)
            if (!st.d_fg.empty()) st.d_fg = st.d_cfg;
        synthetic.push_back(misalignment_curve(r));
    }
    bool ones = true;
    for (auto [t, v] : mean_curve(synthetic)) ones = ones && std::abs(v - 1.0) < 1e-12;

    const bool ok = static_cast<int>(c.size()) == expected && bounded && files && ones;
    return {ok, std::to_string(c.size()) + " rows for " + std::to_string(expected) + " injected steps, bounded " +
                    (bounded ? "yes" : "no") + ", csv+svg " + (files ? "written" : "missing") + ", self-test " +
                    (ones ? "constant 1" : "off") + ", cos range " + num(c.empty() ? 0 : c.back().second) + ".." +
                    num(c.empty() ? 0 : c.front().second)};
}

Verdict a9(const Lab& lab, const std::vector<Scene>& scenes) {
    const auto specs = sweep_specs(lab.cfg);
    const auto rows = run_specs(lab, scenes, specs);
    const bool count = rows.size() == scenes.size() * 15 && specs.size() == 15;
    const bool deterministic = metrics_csv(rows) == metrics_csv(run_specs(lab, scenes, specs));
    RunSpec no_fg;
    for (const auto& sp : specs)
        if (sp.label == "w_fg=0") no_fg = {"no-fg", false, sp.g};
    const auto base = run_specs(lab, scenes, {no_fg});
    int equal = 0, total = 0;
    for (const auto& r : rows) {
        if (r.label != "w_fg=0") continue;
        const auto& b = base[r.scene];
        ++total;
        equal += r.faithfulness_whole == b.faithfulness_whole && r.faithfulness_unedited == b.faithfulness_unedited &&
                 r.structure_selfsim == b.structure_selfsim && r.editability_whole == b.editability_whole &&
                 r.editability_edited == b.editability_edited;
    }
    const bool ok = count && deterministic && total == static_cast<int>(scenes.size()) && equal == total;
    return {ok, std::to_string(rows.size()) + " rows, deterministic " + (deterministic ? "yes" : "no") +
                    ", w_fg=0 rows equal to no-FG rows " + std::to_string(equal) + "/" + std::to_string(total)};
}

Verdict a10(const HarnessConfig& cfg, const std::filesystem::path& out) {
    const auto sched = make_schedule(cfg.schedule_kind, cfg.T);
    const auto p = DenoiserParams::init(ModelShape{}, 1010);
    const std::string path = (out / "roundtrip.fgs1").string();
    save_checkpoint(path, params_to_checkpoint(p, 1010, sched));
    const std::string first = read_text(path);
    const auto q = params_from_checkpoint(load_checkpoint(path));
    bool exact = q.flat.size() == p.flat.size();
    for (std::size_t i = 0; exact && i < p.flat.size(); ++i) exact = q.flat[i] == double(float(p.flat[i]));
    save_checkpoint(path, params_to_checkpoint(q, 1010, sched));
    exact = exact && read_text(path) == first;

    auto csv_of = [&] {
        const Lab lab = Lab::build(cfg);
        return metrics_csv(run_specs(lab, lab.scenes(cfg.scenes), table1_specs(cfg)));
    };
    const std::string a = csv_of(), b = csv_of();
    return {exact && a == b, std::string("checkpoint ") + (exact ? "bit-exact" : "differs") + ", benchmark CSV " +
                                 (a == b ? "byte-identical" : "differs") + " (" + std::to_string(a.size()) + " bytes)"};
}

} // namespace

int main() {
    const std::filesystem::path out = "acceptance_out";
    std::filesystem::create_directories(out);
    const HarnessConfig cfg;
    const Lab lab = Lab::build(cfg);
    const auto scenes = lab.scenes(cfg.scenes);

    report("A1", "DDIM round trip", a1);
    report("A2", "oracle equivalence", a2);
    report("A3", "gradient check", a3);
    report("A4", "exact reductions", [&] { return a4(lab, scenes); });
    report("A5", "CFG sharpening", a5);

    std::vector<Summary> t1, t2;
    report("A6", "tau trade-off and FGS", [&] {
        const auto rows = run_specs(lab, scenes, table1_specs(cfg));
        write_text((out / "table1.csv").string(), metrics_csv(rows));
        t1 = summarize(rows);
        write_text((out / "summary_table1.csv").string(), summary_csv(t1));
        return a6(t1);
    });
    report("A7", "perturbation ablation", [&] {
        const auto specs = table2_specs(cfg);
        const auto rows = run_specs(lab, scenes, specs);
        write_text((out / "table2.csv").string(), metrics_csv(rows));
        t2 = summarize(rows);
        write_text((out / "summary_table2.csv").string(), summary_csv(t2));
        return a7(t2, specs[0].label);
    });
    report("A8", "direction misalignment curve", [&] { return a8(lab, out); });
    report("A9", "hyperparameter sweep", [&] { return a9(lab, scenes); });
    report("A10", "persistence and reproducibility", [&] { return a10(cfg, out); });

    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
