// Copyright Contributors to the splatlab project
// SPDX-License-Identifier: Apache-2.0
//
// splatlab command-line tool: train, render, eval, export, make-toy.
//
#include "splatlab/io/checkpoint.hpp"
#include "splatlab/io/dataset.hpp"
#include "splatlab/io/init.hpp"
#include "splatlab/io/model_io.hpp"
#include "splatlab/io/toy.hpp"
#include "splatlab/optim/trainer.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace splatlab;
using Json = nlohmann::ordered_json;

namespace {

constexpr std::size_t kRandomInitCount = 100000;
constexpr long kCheckpointIters[] = {7000, 30000};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Options {
    fs::path data;
    fs::path out;
    fs::path model;
    int iters = 30000;
    std::uint64_t seed = 0;
    bool deterministic = false;
    int resolution_scale = 1;
    std::string background = "0,0,0";
    int eval_interval = 1000;
    std::string split = "test";
    int toy_size = 128;
    int toy_gaussians = 8;
};

Vec3<double> parse_background(const std::string &text) {
    std::istringstream ss(text);
    Vec3<double> c;
    char sep = 0;
    if (!(ss >> c[0] >> sep) || sep != ',' || !(ss >> c[1] >> sep) || sep != ',' || !(ss >> c[2]) || !ss.eof() ||
        !c.allFinite() || c.minCoeff() < 0.0 || c.maxCoeff() > 1.0)
        throw InvalidArgument("--background expects r,g,b with components in [0, 1], got '" + text + "'");
    return c;
}

void require_dir(const fs::path &p, const char *flag) {
    if (p.empty()) throw InvalidArgument(std::string(flag) + " is required");
    if (!fs::is_directory(p)) throw ResourceError("dataset directory '" + p.string() + "' does not exist");
}

void require_file(const fs::path &p, const char *flag) {
    if (p.empty()) throw InvalidArgument(std::string(flag) + " is required");
    if (!fs::is_regular_file(p)) throw ResourceError("file '" + p.string() + "' does not exist");
}

/// Model from a .splat file, a checkpoint or a PLY export.
SplatModel load_any_model(const fs::path &path) {
    require_file(path, "--model");
    std::ifstream in(path, std::ios::binary);
    char magic[4] = {};
    in.read(magic, 4);
    if (std::string(magic, 4) == std::string(kModelMagic, 4)) return load_model(path);
    if (std::string(magic, 4) == std::string(kCheckpointMagic, 4)) return load_checkpoint(path).model;
    if (std::string(magic, 4) == "ply\n") return import_ply(path);
    throw FormatError("'" + path.string() + "': not a splat model, checkpoint or PLY file");
}

std::vector<Gaussian<float>> to_gaussians(const SplatModel &m) { return m.gaussians; }

std::string fixed(double v, int digits) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << v;
    return os.str();
}

Json json_number(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    return v;
}

struct ViewMetrics {
    std::string name;
    ImageMetrics metrics;
    double render_seconds = 0.0;
};

struct SplitMetrics {
    std::vector<ViewMetrics> views;
    double mean_psnr = 0.0;
    double mean_ssim = 0.0;
};

SplitMetrics evaluate(const std::vector<Gaussian<float>> &gaussians, int sh_degree,
                      const std::vector<TrainView<float>> &views, const Vec3<double> &background, bool deterministic) {
    SplitMetrics s;
    for (const auto &v : views) {
        const auto t0 = Clock::now();
        const Image<float> img = render_image(gaussians, v.camera, sh_degree, background, deterministic);
        ViewMetrics m;
        m.render_seconds = seconds_since(t0);
        m.name = v.camera.name;
        m.metrics = compute_metrics(img, v.image);
        s.mean_psnr += m.metrics.psnr;
        s.mean_ssim += m.metrics.ssim;
        s.views.push_back(m);
    }
    if (!views.empty()) {
        s.mean_psnr /= double(views.size());
        s.mean_ssim /= double(views.size());
    }
    return s;
}

Json split_json(const SplitMetrics &s) {
    Json j;
    j["mean_psnr"] = json_number(s.mean_psnr);
    j["mean_ssim"] = json_number(s.mean_ssim);
    Json list = Json::array();
    for (const auto &v : s.views) {
        Json e;
        e["name"] = v.name;
        e["psnr"] = json_number(v.metrics.psnr);
        e["ssim"] = json_number(v.metrics.ssim);
        list.push_back(e);
    }
    j["per_image"] = list;
    return j;
}

void write_json(const fs::path &path, const Json &j) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw ResourceError("cannot write '" + path.string() + "'");
    out << j.dump(2) << '\n';
}

struct LoadedData {
    SfmScene scene;
    Split split;
    std::vector<TrainView<float>> train;
    std::vector<TrainView<float>> test;
};

LoadedData load_data(const Options &o) {
    require_dir(o.data, "--data");
    LoadedData d;
    d.scene = load_scene(o.data);
    if (d.scene.cameras.empty()) throw FormatError("dataset '" + o.data.string() + "' has no images");
    const auto views = load_views<float>(d.scene, o.resolution_scale, worker_count(false));
    d.split = split_every_nth(views.size());
    // A single image is used for training and evaluation alike.
    if (d.split.train.empty()) d.split.train = d.split.test;
    for (auto i : d.split.train) d.train.push_back(views[i]);
    for (auto i : d.split.test) d.test.push_back(views[i]);
    return d;
}

const std::vector<TrainView<float>> &pick_split(const LoadedData &d, const std::string &split) {
    return split == "train" ? d.train : d.test;
}

fs::path checkpoint_path(const fs::path &out, long iteration) {
    std::ostringstream name;
    name << "iter_" << std::setw(6) << std::setfill('0') << iteration << ".ckpt";
    return out / "checkpoints" / name.str();
}

void save_trainer(const Trainer<float> &t, const fs::path &path) {
    Checkpoint ck;
    ck.model = to_model(t.gaussians(), t.active_sh_degree());
    ck.moments = t.moments();
    ck.iteration = t.iteration();
    ck.active_sh_degree = t.active_sh_degree();
    fs::create_directories(path.parent_path());
    save_checkpoint(path, ck);
}

int cmd_train(const Options &o) {
    if (o.iters < 0) throw InvalidArgument("--iters must be non-negative");
    if (o.eval_interval < 0) throw InvalidArgument("--eval-interval must be non-negative");
    const Vec3<double> background = parse_background(o.background);
    if (o.out.empty()) throw InvalidArgument("--out is required");
    const auto t_start = Clock::now();
    const LoadedData d = load_data(o);
    fs::create_directories(o.out);

    std::vector<Camera> cams = d.scene.cameras;
    auto init = init_from_points<float>(d.scene.points, d.scene.colors, random_init_bounds(cams), kRandomInitCount,
                                        o.seed);
    TrainConfig cfg = TrainConfig::for_iterations(o.iters);
    cfg.background = background;
    cfg.deterministic = o.deterministic;
    Trainer<float> trainer(std::move(init), d.train, d.scene.extent, cfg, o.seed);
    const double load_seconds = seconds_since(t_start);
    std::cout << "loaded " << d.train.size() << " train / " << d.test.size() << " test views, "
              << trainer.gaussians().size() << " initial gaussians, extent " << fixed(d.scene.extent, 4) << std::endl;

    const auto &monitor = d.test.empty() ? d.train : d.test;
    const auto t_train = Clock::now();
    double eval_seconds = 0.0;
    StepReport last;
    for (long i = 1; i <= o.iters; ++i) {
        try {
            last = trainer.step();
        } catch (const TrainingDiverged &e) {
            throw TrainingDiverged(std::string(e.what()) + "; checkpoints already written are kept");
        }
        for (const long at : kCheckpointIters)
            if (i == at) save_trainer(trainer, checkpoint_path(o.out, i));
        if ((o.eval_interval > 0 && i % o.eval_interval == 0) || i == o.iters) {
            const auto t_eval = Clock::now();
            const auto m = evaluate(trainer.gaussians(), trainer.active_sh_degree(), monitor, background, o.deterministic);
            eval_seconds += seconds_since(t_eval);
            std::cout << "iter=" << i << " loss=" << fixed(last.loss, 6) << " gaussians=" << last.gaussians
                      << " psnr=" << fixed(m.mean_psnr, 2) << std::endl;
        }
    }
    const double train_seconds = seconds_since(t_train) - eval_seconds;
    save_trainer(trainer, checkpoint_path(o.out, trainer.iteration()));
    save_model(o.out / "model.splat", to_model(trainer.gaussians(), trainer.active_sh_degree()));

    const auto t_eval = Clock::now();
    const auto test = evaluate(trainer.gaussians(), trainer.active_sh_degree(), d.test, background, o.deterministic);
    const auto train = evaluate(trainer.gaussians(), trainer.active_sh_degree(), d.train, background, o.deterministic);
    eval_seconds += seconds_since(t_eval);

    Json report;
    report["iterations"] = trainer.iteration();
    report["gaussians"] = trainer.gaussians().size();
    report["sh_degree"] = trainer.active_sh_degree();
    report["split"] = "test";
    const Json tj = split_json(test);
    for (const auto &[k, v] : tj.items()) report[k] = v;
    report["train"] = split_json(train);
    report["timings"] = {{"load_seconds", load_seconds},
                         {"train_seconds", train_seconds},
                         {"eval_seconds", eval_seconds},
                         {"total_seconds", seconds_since(t_start)}};
    write_json(o.out / "metrics.json", report);
    std::cout << "final test psnr=" << fixed(test.mean_psnr, 2) << " ssim=" << fixed(test.mean_ssim, 4)
              << " gaussians=" << trainer.gaussians().size() << " -> " << (o.out / "model.splat").string()
              << std::endl;
    return 0;
}

int cmd_render(const Options &o) {
    const Vec3<double> background = parse_background(o.background);
    const SplatModel model = load_any_model(o.model);
    if (o.out.empty()) throw InvalidArgument("--out is required");
    require_dir(o.data, "--data");
    const SfmScene scene = load_scene(o.data);
    const Split split = split_every_nth(scene.cameras.size());
    std::vector<std::size_t> ids;
    if (o.split == "all") {
        for (std::size_t i = 0; i < scene.cameras.size(); ++i) ids.push_back(i);
    } else {
        ids = o.split == "train" ? split.train : split.test;
    }
    fs::create_directories(o.out);
    const auto gaussians = to_gaussians(model);
    double render_seconds = 0.0;
    for (const auto i : ids) {
        const Camera cam = scene.cameras[i].downscaled(o.resolution_scale);
        const auto t0 = Clock::now();
        const Image<float> img = render_image(gaussians, cam, model.sh_degree, background, o.deterministic);
        render_seconds += seconds_since(t0);
        write_png(o.out / fs::path(cam.name).filename().replace_extension(".png"), img);
    }
    const double fps = render_seconds > 0.0 ? double(ids.size()) / render_seconds : 0.0;
    std::cout << "rendered " << ids.size() << " images to " << o.out.string() << " fps=" << fixed(fps, 2)
              << std::endl;
    return 0;
}

int cmd_eval(const Options &o) {
    const Vec3<double> background = parse_background(o.background);
    const SplatModel model = load_any_model(o.model);
    const LoadedData d = load_data(o);
    const auto t0 = Clock::now();
    const auto m = evaluate(to_gaussians(model), model.sh_degree, pick_split(d, o.split), background, o.deterministic);
    Json report;
    report["gaussians"] = model.gaussians.size();
    report["sh_degree"] = model.sh_degree;
    report["split"] = o.split;
    const Json sj = split_json(m);
    for (const auto &[k, v] : sj.items()) report[k] = v;
    report["timings"] = {{"eval_seconds", seconds_since(t0)}};
    const fs::path out = o.out.empty() ? fs::path("metrics.json") : o.out;
    write_json(out, report);
    std::cout << o.split << " psnr=" << fixed(m.mean_psnr, 2) << " ssim=" << fixed(m.mean_ssim, 4) << " -> "
              << out.string() << std::endl;
    return 0;
}

int cmd_export(const Options &o) {
    const SplatModel model = load_any_model(o.model);
    if (o.out.empty()) throw InvalidArgument("--out is required");
    if (o.out.has_parent_path()) fs::create_directories(o.out.parent_path());
    if (o.out.extension() == ".ply")
        export_ply(o.out, model);
    else
        save_model(o.out, model);
    std::cout << "exported " << model.gaussians.size() << " gaussians to " << o.out.string() << std::endl;
    return 0;
}

int cmd_make_toy(const Options &o) {
    if (o.out.empty()) throw InvalidArgument("--out is required");
    ToySceneOptions opt;
    opt.seed = o.seed;
    opt.size = o.toy_size;
    opt.gaussians = o.toy_gaussians;
    const ToyScene scene = make_toy_scene(opt);
    write_toy_dataset(o.out, scene, 16, o.seed);
    std::cout << "wrote toy dataset with " << scene.train.size() + scene.test.size() << " images to "
              << o.out.string() << std::endl;
    return 0;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"splatlab: differentiable 3D Gaussian splatting"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App *cmd) {
        cmd->add_option("--seed", o.seed, "Random seed");
        cmd->add_flag("--deterministic", o.deterministic, "Single worker, bit-identical output");
        cmd->add_option("--background", o.background, "Background colour r,g,b in [0,1]");
        cmd->add_option("--resolution-scale", o.resolution_scale, "Downscale images by this factor")
            ->check(CLI::PositiveNumber);
    };

    auto *train = app.add_subcommand("train", "Optimize a model from a COLMAP dataset");
    train->add_option("--data", o.data, "Dataset directory")->required();
    train->add_option("--out", o.out, "Output directory")->required();
    train->add_option("--iters", o.iters, "Training iterations");
    train->add_option("--eval-interval", o.eval_interval, "Report held-out PSNR every N iterations (0: end only)");
    add_common(train);

    auto *render = app.add_subcommand("render", "Render dataset cameras to PNG");
    render->add_option("--model", o.model, "Model, checkpoint or PLY file")->required();
    render->add_option("--data", o.data, "Dataset directory providing cameras")->required();
    render->add_option("--out", o.out, "Output directory")->required();
    render->add_option("--split", o.split, "Cameras to render")->check(CLI::IsMember({"train", "test", "all"}));
    add_common(render);

    auto *eval = app.add_subcommand("eval", "Compute PSNR/SSIM against dataset images");
    eval->add_option("--model", o.model, "Model, checkpoint or PLY file")->required();
    eval->add_option("--data", o.data, "Dataset directory")->required();
    eval->add_option("--out", o.out, "Metrics JSON path");
    eval->add_option("--split", o.split, "Views to evaluate")->check(CLI::IsMember({"train", "test"}));
    add_common(eval);

    auto *exp = app.add_subcommand("export", "Convert a model to PLY or the binary model format");
    exp->add_option("--model", o.model, "Model, checkpoint or PLY file")->required();
    exp->add_option("--out", o.out, "Output path; .ply selects PLY")->required();

    auto *toy = app.add_subcommand("make-toy", "Write a synthetic COLMAP dataset");
    toy->add_option("--out", o.out, "Output directory")->required();
    toy->add_option("--seed", o.seed, "Scene seed");
    toy->add_option("--size", o.toy_size, "Image size in pixels")->check(CLI::PositiveNumber);
    toy->add_option("--gaussians", o.toy_gaussians, "Ground-truth Gaussian count")->check(CLI::NonNegativeNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        std::cerr << "splatlab: error: " << e.what() << std::endl;
        return e.get_exit_code() != 0 ? e.get_exit_code() : 2;
    }

    try {
        if (*train) return cmd_train(o);
        if (*render) return cmd_render(o);
        if (*eval) return cmd_eval(o);
        if (*exp) return cmd_export(o);
        if (*toy) return cmd_make_toy(o);
    } catch (const std::exception &e) {
        std::string msg = e.what();
        for (auto &c : msg)
            if (c == '\n') c = ' ';
        std::cerr << "splatlab: error: " << msg << std::endl;
        return 1;
    }
    return 1;
}
