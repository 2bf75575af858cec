#include "fgs/harness.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "fgs/io.hpp"

namespace fgs {

std::vector<std::string> HarnessConfig::known_keys() {
    return {"bench.seed",          "bench.scenes",        "schedule.kind",        "schedule.T",
            "guidance.w_cfg",      "guidance.w_fg",       "guidance.k",           "guidance.scheduled",
            "guidance.schedule_cfg", "guidance.tag",      "guidance.tau",         "transfer.perturb",
            "transfer.sigma",      "transfer.noise_scale", "transfer.mix",        "pipeline.recon_mode",
            "pipeline.denoiser",   "pipeline.checkpoint", "mixture.spread",       "mixture.offsets",
            "classifier.size",     "classifier.seed",     "classifier.l2",        "classifier.lr",
            "classifier.iters",    "sweep.k",             "sweep.sigma",          "sweep.w_fg",
            "misalign.runs",       "train.size",          "train.data_seed",      "train.steps",
            "train.batch",         "train.lr",            "train.momentum",       "train.cond_dropout",
            "train.seed",          "train.log_every",     "train.clip"};
}

PerturbKind HarnessConfig::perturb_for(PerturbType t) const {
    switch (t) {
    case PerturbType::Blur: return PerturbKind::blur(blur_sigma);
    case PerturbType::Noise: return PerturbKind::noise(noise_scale);
    case PerturbType::Identity: return PerturbKind::identity();
    }
    return PerturbKind::identity();
}

HarnessConfig HarnessConfig::from(const Config& c) {
    c.require_known(known_keys());
    HarnessConfig h;
    h.seed = static_cast<std::uint64_t>(c.get_int("bench.seed", static_cast<long long>(h.seed)));
    h.scenes = static_cast<int>(c.get_int("bench.scenes", h.scenes));
    h.schedule_kind = parse_schedule_kind(c.get_string("schedule.kind", to_string(h.schedule_kind)));
    h.T = static_cast<int>(c.get_int("schedule.T", h.T));

    GuidanceConfig& g = h.guidance;
    g.w_cfg = c.get_double("guidance.w_cfg", g.w_cfg);
    g.w_fg = c.get_double("guidance.w_fg", g.w_fg);
    g.k = c.get_double("guidance.k", g.k);
    g.scheduled = c.get_bool("guidance.scheduled", g.scheduled);
    g.schedule_cfg = c.get_bool("guidance.schedule_cfg", g.schedule_cfg);
    g.tag = parse_tag(c.get_string("guidance.tag", to_string(g.tag)));
    g.policy.tau = c.get_double("guidance.tau", g.policy.tau);
    h.blur_sigma = c.get_double("transfer.sigma", h.blur_sigma);
    h.noise_scale = c.get_double("transfer.noise_scale", h.noise_scale);
    g.perturb = h.perturb_for(parse_perturb(c.get_string("transfer.perturb", "blur")));
    g.validate();
    h.mix = c.get_double("transfer.mix", h.mix);

    h.recon_mode = parse_recon_mode(c.get_string("pipeline.recon_mode", to_string(h.recon_mode)));
    h.denoiser = c.get_string("pipeline.denoiser", h.denoiser);
    if (h.denoiser != "analytic" && h.denoiser != "learned")
        throw std::invalid_argument("pipeline.denoiser must be analytic or learned");
    h.checkpoint = c.get_string("pipeline.checkpoint", h.checkpoint);

    h.spread = c.get_double("mixture.spread", h.spread);
    h.offsets = c.get_list("mixture.offsets", h.offsets);

    h.classifier_size = static_cast<int>(c.get_int("classifier.size", h.classifier_size));
    h.classifier_seed = static_cast<std::uint64_t>(c.get_int("classifier.seed", static_cast<long long>(h.classifier_seed)));
    h.classifier.l2 = c.get_double("classifier.l2", h.classifier.l2);
    h.classifier.lr = c.get_double("classifier.lr", h.classifier.lr);
    h.classifier.iters = static_cast<int>(c.get_int("classifier.iters", h.classifier.iters));

    h.sweep_k = c.get_list("sweep.k", h.sweep_k);
    h.sweep_sigma = c.get_list("sweep.sigma", h.sweep_sigma);
    h.sweep_w_fg = c.get_list("sweep.w_fg", h.sweep_w_fg);
    h.misalign_runs = static_cast<int>(c.get_int("misalign.runs", h.misalign_runs));

    h.train_size = static_cast<int>(c.get_int("train.size", h.train_size));
    h.train_data_seed = static_cast<std::uint64_t>(c.get_int("train.data_seed", static_cast<long long>(h.train_data_seed)));
    h.train.steps = static_cast<int>(c.get_int("train.steps", h.train.steps));
    h.train.batch = static_cast<int>(c.get_int("train.batch", h.train.batch));
    h.train.lr = c.get_double("train.lr", h.train.lr);
    h.train.momentum = c.get_double("train.momentum", h.train.momentum);
    h.train.cond_dropout = c.get_double("train.cond_dropout", h.train.cond_dropout);
    h.train.seed = static_cast<std::uint64_t>(c.get_int("train.seed", static_cast<long long>(h.train.seed)));
    h.train.log_every = static_cast<int>(c.get_int("train.log_every", h.train.log_every));
    h.train.clip = c.get_double("train.clip", h.train.clip);
    return h;
}

Lab Lab::build(const HarnessConfig& cfg) {
    Lab lab;
    lab.cfg = cfg;
    lab.sched = make_schedule(cfg.schedule_kind, cfg.T);
    if (cfg.denoiser == "analytic") {
        SceneMixture sm = make_scene_mixture(cfg.spread, cfg.offsets);
        lab.denoiser = std::make_shared<AnalyticDenoiser>(std::move(sm.mixture), std::move(sm.conditions), cfg.mix);
    } else {
        if (cfg.checkpoint.empty()) throw std::invalid_argument("learned denoiser needs pipeline.checkpoint");
        auto p = std::make_shared<DenoiserParams>(params_from_checkpoint(load_checkpoint(cfg.checkpoint)));
        lab.denoiser = std::make_shared<LearnedDenoiser>(p);
    }
    const auto data = gen_dataset(cfg.classifier_seed, cfg.classifier_size, cfg.offsets);
    std::vector<Vec> x;
    std::vector<int> y;
    for (const auto& s : data) {
        x.push_back(s.image.data);
        y.push_back(s.cond_id);
    }
    lab.classifier = classifier_train(x, y, kClasses, cfg.classifier);
    return lab;
}

std::vector<Scene> Lab::scenes(int n) const { return gen_dataset(cfg.seed, n, cfg.offsets); }

EditRequest make_request(const Lab& lab, const Scene& scene, const RunSpec& spec, std::uint64_t run_id) {
    EditRequest r;
    r.input = scene.image.data;
    r.source = Condition{scene.cond_id};
    r.target = Condition{edit_target(scene.cond_id)};
    r.guidance = spec.g;
    r.recon_mode = lab.cfg.recon_mode;
    r.denoiser = lab.denoiser.get();
    r.sched = lab.sched;
    r.seed = derive_seed(lab.cfg.seed, run_id);
    return r;
}

MetricsRow evaluate_run(const Lab& lab, const Scene& scene, int scene_index, const RunSpec& spec, std::uint64_t run_id,
                        EditResult* keep) {
    const EditRequest req = make_request(lab, scene, spec, run_id);
    EditResult res = spec.fg ? run_fgs(req) : run_baseline(req);
    const Grid edited = clamp_image(res.edited);
    const int target = edit_target(scene.cond_id);

    MetricsRow row;
    row.run_id = run_id;
    row.scene = scene_index;
    row.label = spec.label;
    row.tau = spec.g.policy.tau;
    row.k = spec.g.k;
    row.sigma = spec.g.perturb.param;
    row.w_fg = spec.fg ? spec.g.w_fg : 0.0;
    row.perturb = spec.fg ? to_string(spec.g.perturb.type) : "none";
    row.scheduled = spec.g.scheduled;
    const Faithfulness f = faithfulness_distance(scene.image, edited, scene.mask);
    row.faithfulness_whole = f.whole;
    row.faithfulness_unedited = f.unedited;
    row.structure_selfsim = structure_selfsim_distance(scene.image, edited);
    const Editability e = editability_score(edited, target, lab.classifier, scene.mask);
    row.editability_whole = e.whole;
    row.editability_edited = e.edited_region;
    double cs = 0.0;
    int nc = 0;
    for (const auto& st : res.steps)
        if (st.w_fg > 0.0 && !st.d_fg.empty()) {
            cs += cosine_similarity(st.d_cfg, st.d_fg).value;
            ++nc;
        }
    row.cosine_mean = nc ? cs / nc : 0.0;
    if (keep) *keep = std::move(res);
    return row;
}

std::vector<MetricsRow> run_specs(const Lab& lab, const std::vector<Scene>& scenes, const std::vector<RunSpec>& specs) {
    const int ns = static_cast<int>(scenes.size());
    const int total = ns * static_cast<int>(specs.size());
    std::vector<MetricsRow> rows(total);
    std::vector<std::string> errors(total);
#pragma omp parallel for schedule(dynamic)
    for (int r = 0; r < total; ++r) {
        try {
            rows[r] = evaluate_run(lab, scenes[r % ns], r % ns, specs[r / ns], static_cast<std::uint64_t>(r));
        } catch (const std::exception& ex) {
            errors[r] = ex.what();
        }
    }
    for (int r = 0; r < total; ++r)
        if (!errors[r].empty()) throw std::runtime_error("run " + std::to_string(r) + ": " + errors[r]);
    return rows;
}

std::string metrics_csv_header() {
    return "run_id,scene,label,tau,k,sigma,w_fg,perturb,scheduled,faithfulness_whole,faithfulness_unedited,"
           "structure_selfsim,editability_whole,editability_edited,cosine_mean\n";
}

std::string metrics_csv(const std::vector<MetricsRow>& rows) {
    std::ostringstream o;
    o << metrics_csv_header();
    for (const auto& r : rows)
        o << r.run_id << ',' << r.scene << ',' << r.label << ',' << fmt6(r.tau) << ',' << fmt6(r.k) << ','
          << fmt6(r.sigma) << ',' << fmt6(r.w_fg) << ',' << r.perturb << ',' << (r.scheduled ? 1 : 0) << ','
          << fmt6(r.faithfulness_whole) << ',' << fmt6(r.faithfulness_unedited) << ',' << fmt6(r.structure_selfsim)
          << ',' << fmt6(r.editability_whole) << ',' << fmt6(r.editability_edited) << ',' << fmt6(r.cosine_mean)
          << '\n';
    return o.str();
}

RunSpec baseline_spec(const HarnessConfig& cfg, double tau) {
    RunSpec s;
    s.label = "baseline(tau=" + fmt6(tau) + ")";
    s.fg = false;
    s.g = cfg.guidance;
    s.g.scheduled = false;
    s.g.policy.tau = tau;
    return s;
}

RunSpec fg_spec(const HarnessConfig& cfg) {
    RunSpec s;
    s.label = "fg";
    s.g = cfg.guidance;
    s.g.scheduled = false;
    return s;
}

RunSpec fgs_spec(const HarnessConfig& cfg) {
    RunSpec s;
    s.label = "fgs";
    s.g = cfg.guidance;
    s.g.scheduled = true;
    return s;
}

std::vector<RunSpec> table1_specs(const HarnessConfig& cfg) {
    return {baseline_spec(cfg, 0.4), baseline_spec(cfg, 0.5), baseline_spec(cfg, 0.6), fg_spec(cfg), fgs_spec(cfg)};
}

std::vector<RunSpec> table2_specs(const HarnessConfig& cfg) {
    std::vector<RunSpec> out = {baseline_spec(cfg, cfg.guidance.policy.tau)};
    for (PerturbType t : {PerturbType::Noise, PerturbType::Identity, PerturbType::Blur}) {
        RunSpec s = fgs_spec(cfg);
        s.g.perturb = cfg.perturb_for(t);
        s.label = "fgs-" + to_string(t);
        out.push_back(s);
    }
    return out;
}

std::vector<RunSpec> sweep_specs(const HarnessConfig& cfg) {
    std::vector<RunSpec> out;
    for (double k : cfg.sweep_k) {
        RunSpec s = fgs_spec(cfg);
        s.g.k = k;
        s.label = "k=" + fmt6(k);
        out.push_back(s);
    }
    for (double sigma : cfg.sweep_sigma) {
        RunSpec s = fgs_spec(cfg);
        s.g.perturb = PerturbKind::blur(sigma);
        s.label = "sigma=" + fmt6(sigma);
        out.push_back(s);
    }
    for (double w : cfg.sweep_w_fg) {
        RunSpec s = fgs_spec(cfg);
        s.g.w_fg = w;
        s.label = "w_fg=" + fmt6(w);
        out.push_back(s);
    }
    return out;
}

std::vector<Summary> summarize(const std::vector<MetricsRow>& rows) {
    std::vector<std::string> order;
    for (const auto& r : rows)
        if (std::find(order.begin(), order.end(), r.label) == order.end()) order.push_back(r.label);
    std::vector<Summary> out;
    for (const auto& label : order) {
        std::vector<double> fw, fu, ss, ew, ee;
        for (const auto& r : rows)
            if (r.label == label) {
                fw.push_back(r.faithfulness_whole);
                fu.push_back(r.faithfulness_unedited);
                ss.push_back(r.structure_selfsim);
                ew.push_back(r.editability_whole);
                ee.push_back(r.editability_edited);
            }
        out.push_back({label, static_cast<int>(fw.size()), median(fw), median(fu), median(ss), median(ew), median(ee)});
    }
    return out;
}

const Summary& find_summary(const std::vector<Summary>& s, const std::string& label) {
    for (const auto& x : s)
        if (x.label == label) return x;
    throw std::out_of_range("no summary for " + label);
}

std::string summary_csv(const std::vector<Summary>& s) {
    std::ostringstream o;
    o << "label,n,faithfulness_whole,faithfulness_unedited,structure_selfsim,editability_whole,editability_edited\n";
    for (const auto& x : s)
        o << x.label << ',' << x.n << ',' << fmt6(x.faithfulness_whole) << ',' << fmt6(x.faithfulness_unedited) << ','
          << fmt6(x.structure_selfsim) << ',' << fmt6(x.editability_whole) << ',' << fmt6(x.editability_edited) << '\n';
    return o.str();
}

Curve misalignment(const Lab& lab, const std::vector<Scene>& scenes, const RunSpec& spec) {
    const int n = static_cast<int>(scenes.size());
    std::vector<Curve> curves(n);
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n; ++i) {
        const EditRequest req = make_request(lab, scenes[i], spec, static_cast<std::uint64_t>(i));
        curves[i] = misalignment_curve(run_fgs(req));
    }
    return mean_curve(curves);
}

std::string curve_csv(const Curve& c) {
    std::ostringstream o;
    o << "t,cosine\n";
    for (auto [t, v] : c) o << t << ',' << fmt6(v) << '\n';
    return o.str();
}

} // namespace fgs
