#include "hofsurf/checkpoint.hpp"
#include "hofsurf/checks.hpp"
#include "hofsurf/error.hpp"
#include "hofsurf/io.hpp"
#include "hofsurf/metrics.hpp"
#include "hofsurf/model.hpp"
#include "hofsurf/render.hpp"
#include "hofsurf/sampling.hpp"
#include "hofsurf/training.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace hofsurf;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

// Seed stream for model initialization.
constexpr std::uint64_t kModelStream = 0x4d4f44;

// "%g" with the exponent padding removed: 1e-05 -> 1e-5.
std::string short_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", v);
    std::string s = buf;
    const auto e = s.find('e');
    if (e == std::string::npos) return s;
    std::string mant = s.substr(0, e);
    std::string exp = s.substr(e + 1);
    std::string sign;
    if (exp[0] == '-' || exp[0] == '+') {
        if (exp[0] == '-') sign = "-";
        exp.erase(0, 1);
    }
    exp.erase(0, std::min(exp.find_first_not_of('0'), exp.size() - 1));
    return mant + "e" + sign + exp;
}

struct TrainArgs {
    std::string mesh;
    std::string dataset;
    std::string mode = "learned-code";
    std::size_t iters = 100;
    std::size_t epochs = 20;
    std::size_t batch = 1;
    double lr = 1e-5;
    double lambda_cd = 1.0;
    double lambda_cos = 0.1;
    std::size_t samples = 1000;
    std::size_t gt_samples = 10000;
    std::uint64_t seed = 0;
    std::string out;
    std::string log;
    std::size_t cos_warmup = 0;
    bool resample_gt = false;
    std::vector<std::size_t> hidden{128, 128};
    std::size_t head_hidden = 1024;
    std::size_t code_dim = 64;
    std::size_t image_size = 64;
    std::string resume;
    std::uint64_t checkpoint_every = 0;
    std::string save_inputs;
    bool timing = false;
    bool quiet = false;
};

struct ReconstructArgs {
    std::string ckpt;
    std::size_t samples = 2500;
    std::string out;
    std::string image;
    std::size_t object = 0;
    std::uint64_t seed = 0;
    std::vector<std::size_t> hidden;
    bool ascii = false;
};

struct EvalArgs {
    std::vector<std::string> pred;
    std::vector<std::string> gt_mesh;
    std::vector<std::string> ids;
    std::vector<std::string> categories;
    double tau = 1e-4;
    std::string tau_on = "squared";
    std::size_t gt_samples = 10000;
    std::size_t cos_samples = 2500;
    std::uint64_t seed = 0;
    bool json = false;
    bool csv = false;
    std::string out;
};

struct ExportArgs {
    std::string planes;
    std::string ckpt;
    std::string image;
    std::size_t object = 0;
    std::size_t samples = 2500;
    std::uint64_t seed = 0;
    double edge = 0.02;
    std::string out;
};

struct SelftestArgs {
    bool full = false;
    std::size_t torus_iterations = 2000;
};

bool is_mesh_file(const fs::path& p) {
    auto ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".obj" || ext == ".ply";
}

std::vector<fs::path> dataset_files(const TrainArgs& a) {
    if (!a.mesh.empty()) return {fs::path(a.mesh)};
    if (!fs::is_directory(a.dataset)) throw IoError(a.dataset, "not a directory");
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(a.dataset)) {
        if (entry.is_regular_file() && is_mesh_file(entry.path())) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw DomainError("no .obj or .ply files under " + a.dataset);
    return files;
}

Camera training_camera(const TriangleMesh& mesh) {
    const Vec3 c = mesh.centroid();
    double radius = 0.0;
    for (const auto& v : mesh.vertices()) radius = std::max(radius, (v - c).norm());
    return orbit_camera(mesh, std::max(3.0 * radius, 1e-3), 30.0, 20.0);
}

int cmd_train(const TrainArgs& a) {
    const bool image_mode = a.mode == "image";
    const auto files = dataset_files(a);

    std::vector<TrainObject> data;
    data.reserve(files.size());
    for (std::size_t i = 0; i < files.size(); ++i) {
        TriangleMesh mesh = load_mesh(files[i].string());
        TrainObject obj{files[i].stem().string(), mesh, ObjectCode{i}};
        if (image_mode) {
            const Camera cam = training_camera(mesh);
            InputImage img = render_synthetic(mesh, cam, a.image_size, 3);
            obj.mesh = to_camera_frame(mesh, cam);
            if (!a.save_inputs.empty()) {
                fs::create_directories(a.save_inputs);
                save_image_grid(img, (fs::path(a.save_inputs) / (obj.id + ".hofi")).string());
            }
            obj.input = std::move(img);
        }
        data.push_back(std::move(obj));
    }

    TrainConfig cfg;
    cfg.learning_rate = a.lr;
    cfg.batch_size = a.batch;
    cfg.epochs = a.epochs;
    cfg.iterations_per_object = a.iters;
    cfg.samples_per_iter = a.samples;
    cfg.gt_samples = a.gt_samples;
    cfg.loss_weights = LossWeights{a.lambda_cd, a.lambda_cos};
    cfg.seed = a.seed;
    cfg.cos_warmup = a.cos_warmup;
    cfg.resample_gt = a.resample_gt;
    cfg.nan_dump_path = a.out + ".nan.csv";
    cfg.validate();

    std::cout << "hofsurf train: objects=" << data.size() << " mode=" << a.mode
              << " epochs=" << a.epochs << " iters=" << a.iters << " batch=" << a.batch
              << " lambda_CD=" << short_number(a.lambda_cd)
              << " lambda_cos=" << short_number(a.lambda_cos) << " lr=" << short_number(a.lr)
              << " samples=" << a.samples << " gt_samples=" << a.gt_samples << " seed=" << a.seed
              << '\n';

    std::optional<Trainer> trainer;
    if (!a.resume.empty()) {
        trainer.emplace(Trainer::resume(load_checkpoint(a.resume), std::move(data), cfg));
    } else {
        EncoderSpec enc;
        enc.mode = image_mode ? EncoderMode::Conv : EncoderMode::LearnedCode;
        enc.code_dim = a.code_dim;
        enc.object_count = data.size();
        enc.image_size = a.image_size;
        enc.head_hidden = a.head_hidden;
        MappingNetSpec ms;
        ms.hidden_dims = a.hidden;
        trainer.emplace(HofModel::initialize(ms, enc, derive_seed(a.seed, kModelStream)),
                        std::move(data), cfg);
    }
    std::cout << "parameters: model " << trainer->model().parameter_count() << ", mapping "
              << trainer->model().mapping().param_count() << ", steps "
              << trainer->total_iterations() << '\n';

    std::string log = train_log_header();
    const std::uint64_t total = trainer->total_iterations();
    const std::uint64_t every = std::max<std::uint64_t>(total / 20, 1);
    TrainCallbacks cb;
    cb.checkpoint_every = a.checkpoint_every;
    cb.on_record = [&](const TrainRecord& r) {
        TrainRecord row = r;
        if (!a.timing) row.seconds = 0.0;
        log += train_log_row(row);
        if (!a.quiet && (r.iteration % every == 0 || r.iteration == total)) {
            std::cerr << "iter " << r.iteration << "/" << total << "  chamfer " << r.loss.chamfer
                      << "  cosine " << r.loss.cosine << "  total " << r.loss.total << '\n';
        }
    };
    cb.on_checkpoint = [&](const Checkpoint& ckpt) {
        save_checkpoint(ckpt, a.out);
        if (!a.log.empty()) write_file_atomic(a.log, log);
    };

    try {
        train(*trainer, cb);
    } catch (const NumericalError&) {
        if (!a.log.empty()) write_file_atomic(a.log, log);
        std::cerr << "training aborted; batch written to " << cfg.nan_dump_path << '\n';
        throw;
    }
    std::cout << "wrote " << a.out;
    if (!a.log.empty()) std::cout << " and " << a.log;
    std::cout << '\n';
    return 0;
}

WeightVector theta_for(const Checkpoint& ckpt, const std::string& image, std::size_t object) {
    const HofModel& model = ckpt.model;
    if (model.encoder().mode == EncoderMode::Conv) {
        if (image.empty()) throw DomainError("image-mode checkpoint needs --image");
        return hof_weights(model, load_image_grid(image));
    }
    if (!image.empty()) throw DomainError("--image given for a learned-code checkpoint");
    if (object >= model.encoder().object_count) {
        throw DomainError("object " + std::to_string(object) + " out of range; checkpoint has " +
                          std::to_string(model.encoder().object_count));
    }
    return hof_weights(model, ObjectCode{object});
}

int cmd_reconstruct(const ReconstructArgs& a) {
    const Checkpoint ckpt = load_checkpoint(a.ckpt);
    const MappingNetSpec& spec = ckpt.model.mapping();
    if (!a.hidden.empty()) {
        MappingNetSpec want = spec;
        want.hidden_dims = a.hidden;
        want.validate();
        if (!(want == spec)) {
            throw ContractError("checkpoint mapping network has " +
                                std::to_string(spec.param_count()) +
                                " parameters, requested spec has " +
                                std::to_string(want.param_count()));
        }
    }
    const WeightVector theta = theta_for(ckpt, a.image, a.object);
    const Reconstruction rec = reconstruct_surface(spec, theta, a.samples, a.seed);
    save_oriented_cloud(rec.cloud, a.out, !a.ascii);
    std::cout << "samples " << a.samples << "  vertices " << rec.cloud.size() << "  degenerate "
              << rec.degenerate << "  -> " << a.out << '\n';
    return 0;
}

int cmd_eval(const EvalArgs& a) {
    if (a.pred.size() != a.gt_mesh.size()) {
        throw ContractError("got " + std::to_string(a.pred.size()) + " --pred and " +
                            std::to_string(a.gt_mesh.size()) + " --gt-mesh values");
    }
    if (!a.ids.empty() && a.ids.size() != a.pred.size()) {
        throw ContractError("--id must be given once per --pred");
    }
    if (!a.categories.empty() && a.categories.size() != a.pred.size()) {
        throw ContractError("--category must be given once per --pred");
    }
    EvalConfig cfg;
    cfg.tau = a.tau;
    cfg.tau_mode = a.tau_on == "euclidean" ? TauMode::Euclidean : TauMode::Squared;
    cfg.n_gt_samples = a.gt_samples;
    cfg.n_cosine_samples = std::min(a.cos_samples, a.gt_samples);
    cfg.validate();

    std::vector<EvalRow> rows;
    for (std::size_t i = 0; i < a.pred.size(); ++i) {
        const OrientedPointCloud pred = load_oriented_cloud(a.pred[i]);
        const TriangleMesh gt = load_mesh(a.gt_mesh[i]);
        EvalRow row;
        row.id = a.ids.empty() ? fs::path(a.pred[i]).stem().string() : a.ids[i];
        if (!a.categories.empty()) row.category = a.categories[i];
        try {
            row.report = evaluate(pred, gt, cfg, a.seed);
        } catch (const Error& e) {
            throw Error(a.pred[i] + " vs " + a.gt_mesh[i] + ": " + e.what());
        }
        rows.push_back(std::move(row));
    }
    const std::string text = a.json ? format_eval_json(rows, cfg) : format_eval_csv(rows, cfg);
    if (a.out.empty()) {
        std::cout << text;
    } else {
        write_file_atomic(a.out, text);
    }
    return 0;
}

int cmd_export(const ExportArgs& a) {
    std::vector<TangentPlane> planes;
    if (!a.planes.empty()) {
        const OrientedPointCloud cloud = load_oriented_cloud(a.planes);
        planes.reserve(cloud.size());
        for (std::size_t i = 0; i < cloud.size(); ++i) planes.push_back({cloud.points[i], cloud.normals[i]});
    } else {
        const Checkpoint ckpt = load_checkpoint(a.ckpt);
        const WeightVector theta = theta_for(ckpt, a.image, a.object);
        planes = reconstruct_surface(ckpt.model.mapping(), theta, a.samples, a.seed).planes;
    }
    const PatchExport ex = export_patches(planes, a.edge, a.out);
    std::cout << "triangles " << ex.written << "  skipped " << ex.skipped << "  -> " << a.out << '\n';
    return 0;
}

int cmd_selftest(const SelftestArgs& a) {
    std::vector<checks::CheckResult> results = checks::run_selftest();
    for (const auto& r : results) std::cout << checks::format_result(r) << '\n' << std::flush;
    if (a.full) {
        checks::TorusRunConfig tc;
        tc.iterations = a.torus_iterations;
        const checks::TorusRun run = checks::run_torus_overfit(tc);
        for (auto r : {checks::figure1_workflow(run), checks::desk_convergence(run)}) {
            std::cout << checks::format_result(r) << '\n';
            results.push_back(std::move(r));
        }
    }
    std::vector<std::string> failed;
    for (const auto& r : results) {
        if (!r.passed) failed.push_back(r.name);
    }
    if (failed.empty()) {
        std::cout << "all " << results.size() << " checks passed\n";
        return 0;
    }
    std::cout << failed.size() << " of " << results.size() << " checks failed:";
    for (const auto& n : failed) std::cout << "\n  " << n;
    std::cout << '\n';
    return kExitFailure;
}

} // namespace

int main(int argc, char** argv) {
#ifdef HOFSURF_INJECT_GRADIENT_FAULT
    hofsurf::ad::testing::set_gradient_fault(true);
#endif
    CLI::App app{"Surface reconstruction with higher-order mapping functions", "hofsurf"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "hofsurf 0.1.0");

    TrainArgs ta;
    auto* train_cmd = app.add_subcommand("train", "Fit the model to one mesh or a directory of meshes");
    auto* inputs = train_cmd->add_option_group("input");
    inputs->add_option("--mesh", ta.mesh, "Single OBJ or PLY mesh")->check(CLI::ExistingFile);
    inputs->add_option("--dataset", ta.dataset, "Directory searched recursively for meshes")
        ->check(CLI::ExistingDirectory);
    inputs->require_option(1);
    train_cmd->add_option("--mode", ta.mode, "Encoder")
        ->check(CLI::IsMember({"learned-code", "image"}))
        ->capture_default_str();
    train_cmd->add_option("--iters", ta.iters, "Iterations per object per epoch")->capture_default_str();
    train_cmd->add_option("--epochs", ta.epochs)->capture_default_str()->check(CLI::PositiveNumber);
    train_cmd->add_option("--batch", ta.batch, "Objects per step")->capture_default_str()->check(CLI::PositiveNumber);
    train_cmd->add_option("--lr", ta.lr)->capture_default_str()->check(CLI::NonNegativeNumber);
    train_cmd->add_option("--lambda-cd", ta.lambda_cd)->capture_default_str()->check(CLI::NonNegativeNumber);
    train_cmd->add_option("--lambda-cos", ta.lambda_cos)->capture_default_str()->check(CLI::NonNegativeNumber);
    train_cmd->add_option("--samples", ta.samples, "Sphere samples per step")->capture_default_str()->check(CLI::PositiveNumber);
    train_cmd->add_option("--gt-samples", ta.gt_samples)->capture_default_str()->check(CLI::PositiveNumber);
    train_cmd->add_option("--seed", ta.seed)->capture_default_str();
    train_cmd->add_option("--out", ta.out, "Checkpoint path")->required();
    train_cmd->add_option("--log", ta.log, "CSV training log");
    train_cmd->add_option("--cos-warmup", ta.cos_warmup, "Steps before the cosine term is enabled")->capture_default_str();
    train_cmd->add_flag("--resample-gt", ta.resample_gt, "New ground-truth sample every step");
    train_cmd->add_option("--hidden", ta.hidden, "Mapping network hidden widths")->delimiter(',')->capture_default_str();
    train_cmd->add_option("--head-hidden", ta.head_hidden)->capture_default_str()->check(CLI::PositiveNumber);
    train_cmd->add_option("--code-dim", ta.code_dim)->capture_default_str()->check(CLI::PositiveNumber);
    train_cmd->add_option("--image-size", ta.image_size)->capture_default_str()->check(CLI::Range(8, 1024));
    train_cmd->add_option("--resume", ta.resume, "Continue from a checkpoint")->check(CLI::ExistingFile);
    train_cmd->add_option("--checkpoint-every", ta.checkpoint_every)->capture_default_str();
    train_cmd->add_option("--save-inputs", ta.save_inputs, "Directory for rendered input images");
    train_cmd->add_flag("--timing", ta.timing, "Record wall-clock seconds in the log");
    train_cmd->add_flag("-q,--quiet", ta.quiet);

    ReconstructArgs ra;
    auto* rec_cmd = app.add_subcommand("reconstruct", "Map sphere samples through a trained network");
    rec_cmd->add_option("--ckpt", ra.ckpt)->required()->check(CLI::ExistingFile);
    rec_cmd->add_option("--samples", ra.samples)->capture_default_str()->check(CLI::PositiveNumber);
    rec_cmd->add_option("--out", ra.out, "Oriented point cloud PLY")->required();
    rec_cmd->add_option("--image", ra.image, "Input image grid for image-mode checkpoints")->check(CLI::ExistingFile);
    rec_cmd->add_option("--object", ra.object, "Object index for learned-code checkpoints")->capture_default_str();
    rec_cmd->add_option("--seed", ra.seed)->capture_default_str();
    rec_cmd->add_option("--hidden", ra.hidden, "Expected hidden widths")->delimiter(',');
    rec_cmd->add_flag("--ascii", ra.ascii, "Write ASCII instead of binary PLY");

    EvalArgs ea;
    auto* eval_cmd = app.add_subcommand("eval", "Score predicted clouds against ground-truth meshes");
    eval_cmd->add_option("--pred", ea.pred)->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--gt-mesh", ea.gt_mesh)->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--id", ea.ids);
    eval_cmd->add_option("--category", ea.categories);
    eval_cmd->add_option("--tau", ea.tau)->capture_default_str()->check(CLI::PositiveNumber);
    eval_cmd->add_option("--tau-on", ea.tau_on)
        ->check(CLI::IsMember({"squared", "euclidean"}))
        ->capture_default_str();
    eval_cmd->add_option("--gt-samples", ea.gt_samples)->capture_default_str()->check(CLI::PositiveNumber);
    eval_cmd->add_option("--cos-samples", ea.cos_samples)->capture_default_str()->check(CLI::PositiveNumber);
    eval_cmd->add_option("--seed", ea.seed)->capture_default_str();
    auto* json_flag = eval_cmd->add_flag("--json", ea.json);
    eval_cmd->add_flag("--csv", ea.csv)->excludes(json_flag);
    eval_cmd->add_option("--out", ea.out, "Write the report here instead of stdout");

    ExportArgs xa;
    auto* exp_cmd = app.add_subcommand("export-patches", "Write one triangle per tangent plane as OBJ");
    auto* sources = exp_cmd->add_option_group("source");
    sources->add_option("--planes", xa.planes, "Oriented point cloud PLY")->check(CLI::ExistingFile);
    sources->add_option("--ckpt", xa.ckpt)->check(CLI::ExistingFile);
    sources->require_option(1);
    exp_cmd->add_option("--image", xa.image)->check(CLI::ExistingFile);
    exp_cmd->add_option("--object", xa.object)->capture_default_str();
    exp_cmd->add_option("--samples", xa.samples)->capture_default_str()->check(CLI::PositiveNumber);
    exp_cmd->add_option("--seed", xa.seed)->capture_default_str();
    exp_cmd->add_option("--edge", xa.edge, "Triangle side length")->capture_default_str()->check(CLI::PositiveNumber);
    exp_cmd->add_option("--out", xa.out)->required();

    SelftestArgs sa;
    auto* self_cmd = app.add_subcommand("selftest", "Run the built-in correctness checks");
    self_cmd->add_flag("--full", sa.full, "Include the torus overfit run");
    self_cmd->add_option("--torus-iterations", sa.torus_iterations)->capture_default_str()->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*train_cmd) return cmd_train(ta);
        if (*rec_cmd) return cmd_reconstruct(ra);
        if (*eval_cmd) return cmd_eval(ea);
        if (*exp_cmd) return cmd_export(xa);
        if (*self_cmd) return cmd_selftest(sa);
    } catch (const std::exception& e) {
        std::cerr << "hofsurf: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitUsage;
}
