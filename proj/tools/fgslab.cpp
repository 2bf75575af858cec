#include <filesystem>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "fgs/harness.hpp"
#include "fgs/io.hpp"

using namespace fgs;
namespace fs = std::filesystem;

namespace {

struct Globals {
    std::string config;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string out = "out";
};

HarnessConfig load_config(const Globals& g) {
    Config c = g.config.empty() ? Config{} : Config::load(g.config);
    if (g.seed_set) c.set("bench.seed", std::to_string(g.seed));
    return HarnessConfig::from(c);
}

std::string path_in(const Globals& g, const std::string& name) {
    fs::create_directories(g.out);
    return (fs::path(g.out) / name).string();
}

Grid mask_grid(const Mask& m) {
    Grid g(kImageSize, kImageSize);
    for (std::size_t i = 0; i < m.size(); ++i) g.data[i] = m[i] ? 1.0 : 0.0;
    return g;
}

int cmd_gen_data(const Globals& g, int n) {
    const HarnessConfig cfg = load_config(g);
    const auto scenes = gen_dataset(cfg.seed, n, cfg.offsets);
    std::ostringstream csv;
    csv << "index,cond_id,shape,slot,cy,cx,file\n";
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        const std::string file = "scene_" + std::to_string(i) + ".pgm";
        export_pgm(scenes[i].image, path_in(g, file));
        csv << i << ',' << scenes[i].cond_id << ',' << scenes[i].shape << ',' << scenes[i].slot << ','
            << fmt6(scenes[i].cy) << ',' << fmt6(scenes[i].cx) << ',' << file << '\n';
    }
    write_text(path_in(g, "scenes.csv"), csv.str());
    std::cout << "wrote " << scenes.size() << " scenes to " << g.out << "\n";
    return 0;
}

int cmd_train(const Globals& g) {
    const HarnessConfig cfg = load_config(g);
    const NoiseSchedule sched = make_schedule(cfg.schedule_kind, cfg.T);
    std::vector<TrainItem> data;
    for (const auto& s : gen_dataset(cfg.train_data_seed, cfg.train_size, cfg.offsets)) data.push_back({s.image.data, s.cond_id});
    std::ostringstream log;
    log << "step,loss\n";
    const DenoiserParams p = train(data, cfg.train, sched, ModelShape{}, [&](int step, double loss) {
        log << step << ',' << fmt6(loss) << '\n';
        std::cout << "step " << step << " loss " << fmt6(loss) << std::endl;
    });
    write_text(path_in(g, "train_log.csv"), log.str());
    const std::string ck = path_in(g, "model.fgs1");
    save_checkpoint(ck, params_to_checkpoint(p, cfg.train.seed, sched));
    std::cout << "saved " << ck << "\n";
    return 0;
}

int cmd_edit(const Globals& g, int scene_index, const std::string& method) {
    const HarnessConfig cfg = load_config(g);
    const Lab lab = Lab::build(cfg);
    const auto scenes = lab.scenes(std::max(scene_index + 1, cfg.scenes));
    const Scene& sc = scenes.at(scene_index);
    RunSpec spec;
    if (method == "fgs") spec = fgs_spec(cfg);
    else if (method == "fg") spec = fg_spec(cfg);
    else if (method == "baseline") spec = baseline_spec(cfg, cfg.guidance.policy.tau);
    else throw std::invalid_argument("unknown method " + method);

    EditResult res;
    const MetricsRow row = evaluate_run(lab, sc, scene_index, spec, static_cast<std::uint64_t>(scene_index), &res);
    write_text(path_in(g, "edit_metrics.csv"), metrics_csv({row}));
    export_pgm(sc.image, path_in(g, "input.pgm"));
    export_pgm(clamp_image(res.recon), path_in(g, "recon.pgm"));
    export_pgm(clamp_image(res.edited), path_in(g, "edited.pgm"));

    Checkpoint ck;
    ck.meta["module"] = "pipeline";
    ck.meta["method"] = method;
    ck.meta["seed"] = std::to_string(cfg.seed);
    ck.meta["schedule"] = to_string(cfg.schedule_kind) + ":" + std::to_string(cfg.T);
    ck.meta["scene"] = std::to_string(scene_index);
    ck.tensors.push_back({"input", {kImageSize, kImageSize}, sc.image.data});
    ck.tensors.push_back({"mask", {kImageSize, kImageSize}, mask_grid(sc.mask).data});
    ck.tensors.push_back({"recon", {kImageSize, kImageSize}, res.recon});
    ck.tensors.push_back({"edited", {kImageSize, kImageSize}, res.edited});
    Vec traj;
    for (const auto& z : res.edit_traj) traj.insert(traj.end(), z.begin(), z.end());
    ck.tensors.push_back({"edit_trajectory", {static_cast<int>(res.edit_traj.size()), kImageSize * kImageSize}, traj});
    save_checkpoint(path_in(g, "edit.fgs1"), ck);

    std::cout << "scene " << scene_index << " cond " << sc.cond_id << " -> " << edit_target(sc.cond_id) << " (" << method
              << ")\n"
              << "faithfulness_unedited " << fmt6(row.faithfulness_unedited) << "  editability_edited "
              << fmt6(row.editability_edited) << "\n";
    return 0;
}

void plot_grid(const Globals& g, const std::vector<MetricsRow>& rows, const std::string& prefix, const Vec& values,
               const std::string& name, bool log_x) {
    Series fu{"median faithfulness_unedited", {}, {}};
    for (double v : values) {
        std::vector<double> col;
        for (const auto& r : rows)
            if (r.label == prefix + fmt6(v)) col.push_back(r.faithfulness_unedited);
        fu.x.push_back(v);
        fu.y.push_back(median(col));
    }
    export_svg_plot({fu}, {"Sweep over " + name, name, "faithfulness_unedited", log_x},
                    path_in(g, "sweep_" + name + ".svg"));
}

int cmd_sweep(const Globals& g, const std::string& kind) {
    const HarnessConfig cfg = load_config(g);
    const Lab lab = Lab::build(cfg);
    const auto scenes = lab.scenes(cfg.scenes);
    std::vector<RunSpec> specs;
    if (kind == "fig6") specs = sweep_specs(cfg);
    else if (kind == "table1") specs = table1_specs(cfg);
    else if (kind == "table2") specs = table2_specs(cfg);
    else throw std::invalid_argument("unknown sweep kind " + kind);
    const auto rows = run_specs(lab, scenes, specs);
    write_text(path_in(g, "sweep_" + kind + ".csv"), metrics_csv(rows));
    const auto summary = summarize(rows);
    write_text(path_in(g, "summary_" + kind + ".csv"), summary_csv(summary));
    std::cout << summary_csv(summary);
    if (kind == "fig6") {
        bool pos_w = true;
        for (double w : cfg.sweep_w_fg) pos_w = pos_w && w > 0.0;
        plot_grid(g, rows, "k=", cfg.sweep_k, "k", true);
        plot_grid(g, rows, "sigma=", cfg.sweep_sigma, "sigma", true);
        plot_grid(g, rows, "w_fg=", cfg.sweep_w_fg, "w_fg", pos_w);
    }
    return 0;
}

int cmd_misalign(const Globals& g, int runs) {
    const HarnessConfig cfg = load_config(g);
    const Lab lab = Lab::build(cfg);
    const int n = runs > 0 ? runs : cfg.misalign_runs;
    const Curve c = misalignment(lab, lab.scenes(n), fgs_spec(cfg));
    write_text(path_in(g, "misalign.csv"), curve_csv(c));
    Series s{"mean cosine(d_cfg, d_fg)", {}, {}};
    for (auto [t, v] : c) {
        s.x.push_back(t);
        s.y.push_back(v);
    }
    export_svg_plot({s}, {"CFG / FG direction alignment", "timestep t", "cosine similarity", false},
                    path_in(g, "misalign.svg"));
    std::cout << curve_csv(c);
    return 0;
}

int cmd_export(const Globals& g, const std::string& input, const std::string& only) {
    const Checkpoint ck = load_checkpoint(input);
    std::ostringstream meta;
    for (const auto& [k, v] : ck.meta) meta << k << '=' << v << '\n';
    write_text(path_in(g, "meta.txt"), meta.str());
    const int px = kImageSize * kImageSize;
    int written = 0;
    for (const auto& t : ck.tensors) {
        if (!only.empty() && t.name != only) continue;
        std::ostringstream csv;
        for (std::size_t i = 0; i < t.data.size(); ++i) csv << fmt6(t.data[i]) << ((i + 1) % t.shape.back() ? ',' : '\n');
        write_text(path_in(g, t.name + ".csv"), csv.str());
        if (t.data.size() % px == 0 && t.shape.back() % px == 0) {
            const std::size_t frames = t.data.size() / px;
            for (std::size_t f = 0; f < frames; ++f) {
                Grid img(kImageSize, kImageSize, Vec(t.data.begin() + f * px, t.data.begin() + (f + 1) * px));
                const std::string name = frames == 1 ? t.name + ".pgm" : t.name + "_" + std::to_string(f) + ".pgm";
                export_pgm(clamp_image(img.data), path_in(g, name));
            }
        }
        ++written;
    }
    if (!only.empty() && written == 0) throw std::invalid_argument("checkpoint has no tensor " + only);
    std::cout << "exported " << written << " tensors to " << g.out << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"fgslab: faithfulness-guided diffusion editing lab"};
    Globals g;
    app.add_option("--config", g.config, "config file (section.key = value)");
    app.add_option_function<std::uint64_t>(
        "--seed", [&](const std::uint64_t& s) { g.seed = s, g.seed_set = true; }, "benchmark seed override");
    app.add_option("--out", g.out, "output directory");
    app.require_subcommand(1);

    int n = 600;
    auto* gen = app.add_subcommand("gen-data", "generate procedural scenes");
    gen->add_option("--n", n, "number of scenes");

    app.add_subcommand("train", "train the learned denoiser");

    int scene = 0;
    std::string method = "fgs";
    auto* edit = app.add_subcommand("edit", "edit one benchmark scene");
    edit->add_option("--scene", scene, "scene index");
    edit->add_option("--method", method, "fgs | fg | baseline");

    std::string kind = "fig6";
    auto* sweep = app.add_subcommand("sweep", "run a benchmark sweep");
    sweep->add_option("--kind", kind, "fig6 | table1 | table2");

    int runs = 0;
    auto* mis = app.add_subcommand("misalign", "CFG/FG direction alignment curve");
    mis->add_option("--runs", runs, "number of edits (default misalign.runs)");

    std::string input, tensor;
    auto* exp = app.add_subcommand("export", "export checkpoint tensors to CSV/PGM");
    exp->add_option("--input", input, "checkpoint file")->required();
    exp->add_option("--tensor", tensor, "only this tensor");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*gen) return cmd_gen_data(g, n);
        if (app.got_subcommand("train")) return cmd_train(g);
        if (*edit) return cmd_edit(g, scene, method);
        if (*sweep) return cmd_sweep(g, kind);
        if (*mis) return cmd_misalign(g, runs);
        if (*exp) return cmd_export(g, input, tensor);
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
    return 0;
}
