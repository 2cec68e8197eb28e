#include "hofsurf/training.hpp"

#include "hofsurf/error.hpp"
#include "hofsurf/io.hpp"
#include "hofsurf/sampling.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace hofsurf {

namespace {

constexpr std::uint64_t kSphereStream = 0x5350'4852;
constexpr std::uint64_t kGtStream = 0x4754'5054;

std::string number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

void TrainConfig::validate() const {
    if (!(learning_rate >= 0.0 && learning_rate < 1.0)) {
        throw DomainError("learning rate must lie in [0, 1)");
    }
    if (batch_size == 0 || epochs == 0 || samples_per_iter == 0 || gt_samples == 0) {
        throw DomainError("batch size, epochs and sample counts must be >= 1");
    }
    loss_weights.validate();
    adam.validate();
}

std::uint64_t TrainConfig::total_iterations(std::size_t object_count) const {
    const std::uint64_t visits = static_cast<std::uint64_t>(object_count) * iterations_per_object;
    return epochs * ((visits + batch_size - 1) / batch_size);
}

std::uint64_t sphere_seed(std::uint64_t seed, std::uint64_t iteration) {
    return derive_seed(derive_seed(seed, kSphereStream), iteration);
}

std::uint64_t gt_seed(std::uint64_t seed, std::size_t object, std::uint64_t iteration) {
    return derive_seed(derive_seed(derive_seed(seed, kGtStream), object), iteration);
}

Trainer::Trainer(HofModel model, std::vector<TrainObject> dataset, TrainConfig cfg)
    : model_(std::move(model)), data_(std::move(dataset)), cfg_(std::move(cfg)) {
    if (data_.empty()) throw DomainError("training dataset is empty");
    cfg_.validate();
    for (const TrainObject& obj : data_) {
        if (const auto* code = std::get_if<ObjectCode>(&obj.input)) {
            if (model_.encoder().mode != EncoderMode::LearnedCode) {
                throw ContractError("object " + obj.id + " has a code input but the encoder takes images");
            }
            if (code->index >= model_.encoder().object_count) {
                throw ContractError("object " + obj.id + " uses code " + std::to_string(code->index) +
                                    " but the model has " +
                                    std::to_string(model_.encoder().object_count));
            }
        } else if (model_.encoder().mode != EncoderMode::Conv) {
            throw ContractError("object " + obj.id + " has an image input but the encoder uses codes");
        }
    }
    std::vector<Tensor> values;
    for (const NamedTensor& p : model_.parameters()) values.push_back(p.value);
    adam_ = AdamState::zeros_like(values);
    total_ = cfg_.total_iterations(data_.size());
    if (!cfg_.resample_gt) {
        for (std::size_t i = 0; i < data_.size(); ++i) gt_.push_back(ground_truth_for(i, 0));
    }
}

Trainer Trainer::resume(Checkpoint ckpt, std::vector<TrainObject> dataset, TrainConfig cfg) {
    if (!ckpt.training) throw ContractError("checkpoint holds no optimizer state to resume from");
    if (ckpt.training->seed != cfg.seed) {
        throw ContractError("checkpoint was trained with seed " + std::to_string(ckpt.training->seed) +
                            " but the run uses seed " + std::to_string(cfg.seed));
    }
    Trainer t(std::move(ckpt.model), std::move(dataset), std::move(cfg));
    t.adam_ = std::move(ckpt.training->adam);
    t.iteration_ = ckpt.training->iteration;
    return t;
}

Trainer::GroundTruth Trainer::ground_truth_for(std::size_t object, std::uint64_t iteration) const {
    GroundTruth gt;
    gt.cloud = sample_mesh_uniform(data_[object].mesh, cfg_.gt_samples,
                                   gt_seed(cfg_.seed, object, cfg_.resample_gt ? iteration : 0));
    gt.index = std::make_shared<const KdTree>(gt.cloud.points);
    return gt;
}

LossReport Trainer::probe(std::size_t object, std::uint64_t iteration) const {
    if (object >= data_.size()) throw DomainError("object index out of range");
    const GroundTruth gt = cfg_.resample_gt ? ground_truth_for(object, iteration) : gt_[object];
    ad::Tape tape;
    const auto params = bind_parameters(tape, model_, false);
    const ad::Var theta = hof_forward(model_, params, data_[object].input);
    const auto sphere = sample_sphere_uniform(cfg_.samples_per_iter, sphere_seed(cfg_.seed, iteration));
    const MappingOutput out =
        mapping_forward(model_.mapping(), theta, tape.constant(sphere_samples_tensor(sphere)));
    return total_loss(gt.cloud, out, cfg_.loss_weights, gt.index.get()).report;
}

void Trainer::dump_batch(std::uint64_t iteration, std::size_t object,
                         const std::vector<Vec3>& sphere, const Tensor& output,
                         const std::string& reason) const {
    if (cfg_.nan_dump_path.empty()) return;
    std::ostringstream os;
    os << "# non-finite training step: " << reason << "\n";
    os << "# iteration " << iteration << ", object " << data_[object].id << ", seed " << cfg_.seed
       << "\n";
    os << "sx,sy,sz,px,py,pz,vx,vy,vz\n";
    const std::size_t width = output.size() / std::max<std::size_t>(sphere.size(), 1);
    for (std::size_t i = 0; i < sphere.size(); ++i) {
        os << number(sphere[i].x()) << ',' << number(sphere[i].y()) << ',' << number(sphere[i].z());
        for (std::size_t k = 0; k < width; ++k) os << ',' << number(output[i * width + k]);
        os << '\n';
    }
    write_file_atomic(cfg_.nan_dump_path, os.str());
}

TrainRecord Trainer::step() {
    if (done()) throw ContractError("training budget already exhausted");
    const auto start = std::chrono::steady_clock::now();
    const std::uint64_t it = iteration_;

    LossWeights weights = cfg_.loss_weights;
    if (it < cfg_.cos_warmup) weights.lambda_cos = 0.0;

    ad::Tape tape;
    const auto params = bind_parameters(tape, model_, true);

    TrainRecord rec;
    rec.iteration = it + 1;
    rec.epoch = it / std::max<std::uint64_t>(total_ / cfg_.epochs, 1);
    std::vector<ad::Var> objectives;
    LossReport sum;
    for (std::size_t b = 0; b < cfg_.batch_size; ++b) {
        const std::uint64_t slot = it * cfg_.batch_size + b;
        const std::size_t object = static_cast<std::size_t>(slot % data_.size());
        if (b == 0) rec.object = object;
        const GroundTruth gt = cfg_.resample_gt ? ground_truth_for(object, it) : gt_[object];
        const auto sphere = sample_sphere_uniform(cfg_.samples_per_iter, sphere_seed(cfg_.seed, slot));
        Tensor output;
        TotalLoss loss;
        try {
            const ad::Var theta = hof_forward(model_, params, data_[object].input);
            const MappingOutput out = mapping_forward(model_.mapping(), theta,
                                                      tape.constant(sphere_samples_tensor(sphere)));
            output = out.raw.value();
            loss = total_loss(gt.cloud, out, weights, gt.index.get());
            if (!std::isfinite(loss.report.total)) throw NumericalError("loss is not finite");
        } catch (const NumericalError& e) {
            dump_batch(rec.iteration, object, sphere, output, e.what());
            throw NumericalError("training diverged at iteration " + std::to_string(rec.iteration) +
                                 " (object " + data_[object].id + "): " + e.what());
        }
        objectives.push_back(loss.value);
        sum.chamfer += loss.report.chamfer;
        sum.cosine += loss.report.cosine;
        sum.degenerate_count += loss.report.degenerate_count;
        if (cfg_.batch_size == 1) sum.total = loss.report.total;
    }

    ad::Var objective = objectives.front();
    if (cfg_.batch_size > 1) {
        for (std::size_t b = 1; b < objectives.size(); ++b) objective = ad::add(objective, objectives[b]);
        objective = ad::scale(objective, 1.0 / static_cast<double>(cfg_.batch_size));
        const double inv = 1.0 / static_cast<double>(cfg_.batch_size);
        sum.chamfer *= inv;
        sum.cosine *= inv;
        sum.total = weights.lambda_cd * sum.chamfer + weights.lambda_cos * sum.cosine;
    }
    rec.loss = sum;

    tape.backward(objective);
    std::vector<Tensor> grads;
    std::vector<Tensor*> targets;
    for (std::size_t i = 0; i < params.size(); ++i) {
        grads.push_back(tape.grad(params[i]));
        if (!grads.back().all_finite()) {
            throw NumericalError("non-finite gradient for " + model_.parameters()[i].name +
                                 " at iteration " + std::to_string(rec.iteration));
        }
        targets.push_back(&model_.parameters()[i].value);
    }
    adam_step(targets, grads, adam_, cfg_.learning_rate, cfg_.adam);
    for (const Tensor* p : targets) {
        if (!p->all_finite()) {
            throw NumericalError("parameters became non-finite at iteration " +
                                 std::to_string(rec.iteration));
        }
    }
    ++iteration_;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rec;
}

Checkpoint Trainer::checkpoint() const {
    Checkpoint ckpt{model_, std::nullopt, TrainState{iteration_, cfg_.seed, adam_}};
    ckpt.theta = hof_weights(model_, data_.front().input);
    return ckpt;
}

std::vector<TrainRecord> train(Trainer& trainer, const TrainCallbacks& callbacks) {
    std::vector<TrainRecord> records;
    while (!trainer.done()) {
        records.push_back(trainer.step());
        if (callbacks.on_record) callbacks.on_record(records.back());
        if (callbacks.on_checkpoint && callbacks.checkpoint_every > 0 &&
            trainer.iteration() % callbacks.checkpoint_every == 0 && !trainer.done()) {
            callbacks.on_checkpoint(trainer.checkpoint());
        }
    }
    if (callbacks.on_checkpoint) callbacks.on_checkpoint(trainer.checkpoint());
    return records;
}

std::vector<TrainRecord> train(HofModel model, std::vector<TrainObject> dataset,
                               const TrainConfig& cfg, Checkpoint* final_checkpoint) {
    Trainer trainer(std::move(model), std::move(dataset), cfg);
    TrainCallbacks cb;
    if (final_checkpoint) cb.on_checkpoint = [&](const Checkpoint& c) { *final_checkpoint = c; };
    return train(trainer, cb);
}

std::string train_log_header() { return "iteration,chamfer,cosine,total,degenerate_count,seconds\n"; }

std::string train_log_row(const TrainRecord& r) {
    return std::to_string(r.iteration) + ',' + number(r.loss.chamfer) + ',' + number(r.loss.cosine) +
           ',' + number(r.loss.total) + ',' + std::to_string(r.loss.degenerate_count) + ',' +
           number(r.seconds) + '\n';
}

} // namespace hofsurf
