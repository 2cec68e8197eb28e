#pragma once

#include "hofsurf/adam.hpp"
#include "hofsurf/checkpoint.hpp"
#include "hofsurf/geometry.hpp"
#include "hofsurf/kdtree.hpp"
#include "hofsurf/losses.hpp"
#include "hofsurf/model.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace hofsurf {

struct TrainConfig {
    double learning_rate = 1e-5;
    std::size_t batch_size = 1;
    // An epoch visits every object `iterations_per_object` times, round robin.
    // Zero iterations is a valid no-op run.
    std::size_t epochs = 20;
    std::size_t iterations_per_object = 1;
    std::size_t samples_per_iter = 1000;
    std::size_t gt_samples = 10000;
    LossWeights loss_weights;
    AdamConfig adam;
    std::uint64_t seed = 0;
    // The cosine term is left out of the objective for this many steps.
    std::size_t cos_warmup = 0;
    // Draw a new ground-truth sample every step instead of once per object.
    bool resample_gt = false;
    // Where a NaN abort writes the offending batch; empty disables the dump.
    std::string nan_dump_path;

    void validate() const;
    std::uint64_t total_iterations(std::size_t object_count) const;
};

struct TrainObject {
    std::string id;
    // Ground-truth surface, already in the frame the model should predict in.
    TriangleMesh mesh;
    HofInput input;
};

struct TrainRecord {
    std::uint64_t iteration = 0; // 1-based
    std::uint64_t epoch = 0;     // 0-based
    std::size_t object = 0;
    LossReport loss;
    double seconds = 0.0;
};

// Seeds used by the training loop, derived from TrainConfig::seed.
std::uint64_t sphere_seed(std::uint64_t seed, std::uint64_t iteration);
std::uint64_t gt_seed(std::uint64_t seed, std::size_t object, std::uint64_t iteration);

// Stepwise optimizer loop over a fixed dataset.
class Trainer {
public:
    Trainer(HofModel model, std::vector<TrainObject> dataset, TrainConfig cfg);
    // Continues from the optimizer state stored in a checkpoint.
    static Trainer resume(Checkpoint ckpt, std::vector<TrainObject> dataset, TrainConfig cfg);

    // One optimizer step on the next object. Throws NumericalError on a
    // non-finite loss or gradient, after writing the batch to
    // cfg.nan_dump_path when set.
    TrainRecord step();
    bool done() const noexcept { return iteration_ >= total_; }

    // Loss for `object` on the sphere sample of step `iteration` with the
    // current parameters, without updating anything.
    LossReport probe(std::size_t object, std::uint64_t iteration) const;

    std::uint64_t iteration() const noexcept { return iteration_; }
    std::uint64_t total_iterations() const noexcept { return total_; }
    const HofModel& model() const noexcept { return model_; }
    const TrainConfig& config() const noexcept { return cfg_; }
    const AdamState& adam() const noexcept { return adam_; }
    const OrientedPointCloud& ground_truth(std::size_t object) const { return gt_.at(object).cloud; }

    // Model, theta of object 0 and the optimizer state.
    Checkpoint checkpoint() const;

private:
    struct GroundTruth {
        OrientedPointCloud cloud;
        std::shared_ptr<const KdTree> index;
    };

    GroundTruth ground_truth_for(std::size_t object, std::uint64_t iteration) const;
    void dump_batch(std::uint64_t iteration, std::size_t object, const std::vector<Vec3>& sphere,
                    const Tensor& output, const std::string& reason) const;

    HofModel model_;
    std::vector<TrainObject> data_;
    TrainConfig cfg_;
    AdamState adam_;
    std::vector<GroundTruth> gt_;
    std::uint64_t iteration_ = 0;
    std::uint64_t total_ = 0;
};

// Runs a Trainer to completion. `on_record` sees every step; `on_checkpoint`
// is called every `checkpoint_every` steps (0 disables) and at the end.
struct TrainCallbacks {
    std::function<void(const TrainRecord&)> on_record;
    std::function<void(const Checkpoint&)> on_checkpoint;
    std::uint64_t checkpoint_every = 0;
};

std::vector<TrainRecord> train(Trainer& trainer, const TrainCallbacks& callbacks = {});
// Convenience: fresh model, full run. Throws DomainError for an empty dataset.
std::vector<TrainRecord> train(HofModel model, std::vector<TrainObject> dataset,
                               const TrainConfig& cfg, Checkpoint* final_checkpoint = nullptr);

// CSV with header iteration,chamfer,cosine,total,degenerate_count,seconds.
std::string train_log_header();
std::string train_log_row(const TrainRecord& record);

} // namespace hofsurf
