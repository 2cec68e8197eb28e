#include "support.hpp"

#include "hofsurf/adam.hpp"
#include "hofsurf/checkpoint.hpp"
#include "hofsurf/error.hpp"
#include "hofsurf/io.hpp"
#include "hofsurf/training.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

using namespace hofsurf;

namespace {

HofModel tiny_model(std::size_t objects, std::uint64_t seed) {
    MappingNetSpec ms;
    ms.hidden_dims = {16, 16};
    EncoderSpec es;
    es.code_dim = 8;
    es.head_hidden = 16;
    es.object_count = objects;
    return HofModel::initialize(ms, es, seed);
}

std::vector<TrainObject> tiny_data() {
    return {{"torus", make_torus(0.3, 0.1, 16, 8), ObjectCode{0}},
            {"cube", make_cube(0.3), ObjectCode{1}}};
}

TrainConfig tiny_config() {
    TrainConfig cfg;
    cfg.learning_rate = 1e-3;
    cfg.epochs = 1;
    cfg.iterations_per_object = 5;
    cfg.samples_per_iter = 100;
    cfg.gt_samples = 300;
    cfg.seed = 17;
    return cfg;
}

std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("hofsurf_unit_" + name);
}

} // namespace

TEST(Adam, ZeroGradientLeavesParameters) {
    Tensor x({3}, {1, -2, 3});
    const Tensor before = x;
    Tensor* params[] = {&x};
    const Tensor grads[] = {Tensor({3})};
    AdamState st = AdamState::zeros_like(std::vector<Tensor>{x});
    for (int i = 0; i < 5; ++i) adam_step(params, grads, st, 0.1, AdamConfig{});
    EXPECT_EQ(x, before);
}

TEST(Adam, FirstStepHasLearningRateMagnitude) {
    Tensor x({1}, {0.0});
    Tensor* params[] = {&x};
    const Tensor grads[] = {Tensor({1}, {1.0})};
    AdamState st = AdamState::zeros_like(std::vector<Tensor>{x});
    adam_step(params, grads, st, 0.1, AdamConfig{});
    EXPECT_NEAR(x[0], -0.1, 1e-7);
    EXPECT_EQ(st.step, 1u);
}

TEST(Adam, ConvergesOnQuadratic) {
    Tensor x({1}, {0.0});
    Tensor* params[] = {&x};
    AdamState st = AdamState::zeros_like(std::vector<Tensor>{x});
    for (int i = 0; i < 200; ++i) {
        const Tensor grads[] = {Tensor({1}, {2.0 * (x[0] - 3.0)})};
        adam_step(params, grads, st, 0.1, AdamConfig{});
    }
    EXPECT_LT(std::fabs(x[0] - 3.0), 0.05);
}

TEST(Adam, RejectsMismatchedInputs) {
    Tensor x({2});
    Tensor* params[] = {&x};
    const Tensor grads[] = {Tensor({3})};
    AdamState st = AdamState::zeros_like(std::vector<Tensor>{x});
    EXPECT_THROW(adam_step(params, grads, st, 0.1, AdamConfig{}), ContractError);
    AdamConfig bad;
    bad.beta1 = 1.0;
    EXPECT_THROW(bad.validate(), DomainError);
}

TEST(TrainConfigType, IterationAccounting) {
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.iterations_per_object = 4;
    cfg.batch_size = 3;
    EXPECT_EQ(cfg.total_iterations(5), 3u * 7u);
    EXPECT_EQ(TrainConfig{}.total_iterations(1), 20u);
    cfg.batch_size = 0;
    EXPECT_THROW(cfg.validate(), DomainError);
}

TEST(Training, TenIterationsGiveTenRecords) {
    TrainConfig cfg = tiny_config();
    cfg.iterations_per_object = 10;
    const auto records = train(tiny_model(1, 1), {tiny_data()[0]}, cfg);
    ASSERT_EQ(records.size(), 10u);
    for (std::size_t i = 0; i < records.size(); ++i) {
        EXPECT_EQ(records[i].iteration, i + 1);
        EXPECT_EQ(records[i].object, 0u);
    }
}

TEST(Training, EmptyDatasetIsRejected) {
    EXPECT_THROW(train(tiny_model(1, 1), {}, tiny_config()), DomainError);
}

TEST(Training, InputsMustMatchTheEncoder) {
    auto data = tiny_data();
    data[1].input = ObjectCode{5};
    EXPECT_THROW(Trainer(tiny_model(2, 1), data, tiny_config()), ContractError);
}

TEST(Training, ZeroLearningRateKeepsParameters) {
    TrainConfig cfg = tiny_config();
    cfg.learning_rate = 0.0;
    const HofModel model = tiny_model(2, 2);
    Trainer trainer(model, tiny_data(), cfg);
    train(trainer);
    const auto& before = model.parameters();
    const auto& after = trainer.model().parameters();
    ASSERT_EQ(before.size(), after.size());
    for (std::size_t i = 0; i < before.size(); ++i) EXPECT_EQ(before[i].value, after[i].value);
}

TEST(Training, RoundRobinAndTotalIdentity) {
    TrainConfig cfg = tiny_config();
    const auto records = train(tiny_model(2, 3), tiny_data(), cfg);
    ASSERT_EQ(records.size(), 10u);
    for (std::size_t i = 0; i < records.size(); ++i) {
        EXPECT_EQ(records[i].object, i % 2);
        const LossReport& l = records[i].loss;
        EXPECT_EQ(l.total, cfg.loss_weights.lambda_cd * l.chamfer + cfg.loss_weights.lambda_cos * l.cosine);
        EXPECT_GE(l.cosine, 0.0);
        EXPECT_LE(l.cosine, 1.0);
    }
}

TEST(Training, IdenticalSeedsIdenticalTrajectories) {
    const auto a = train(tiny_model(2, 4), tiny_data(), tiny_config());
    const auto b = train(tiny_model(2, 4), tiny_data(), tiny_config());
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        TrainRecord x = a[i], y = b[i];
        x.seconds = y.seconds = 0.0;
        EXPECT_EQ(train_log_row(x), train_log_row(y));
    }
}

TEST(Training, LossDecreasesOnAFixedObject) {
    TrainConfig cfg = tiny_config();
    cfg.iterations_per_object = 60;
    cfg.learning_rate = 3e-3;
    const auto records = train(tiny_model(1, 5), {tiny_data()[0]}, cfg);
    EXPECT_LT(records.back().loss.chamfer, 0.5 * records.front().loss.chamfer);
}

TEST(Training, ResumeMatchesUninterruptedRun) {
    TrainConfig full = tiny_config();
    full.epochs = 2;
    Checkpoint end_full = Checkpoint{tiny_model(2, 6), std::nullopt, std::nullopt};
    const auto a = train(tiny_model(2, 6), tiny_data(), full, &end_full);

    TrainConfig half = tiny_config();
    Checkpoint mid = Checkpoint{tiny_model(2, 6), std::nullopt, std::nullopt};
    train(tiny_model(2, 6), tiny_data(), half, &mid);

    // Through the byte format, as a real restart would.
    Checkpoint restored = parse_checkpoint(encode_checkpoint(mid), "mid");
    Trainer resumed = Trainer::resume(std::move(restored), tiny_data(), full);
    EXPECT_EQ(resumed.iteration(), 10u);
    const auto b = train(resumed);
    ASSERT_EQ(b.size(), 10u);
    for (std::size_t i = 0; i < b.size(); ++i) {
        EXPECT_EQ(b[i].iteration, a[10 + i].iteration);
        EXPECT_EQ(b[i].loss.chamfer, a[10 + i].loss.chamfer);
        EXPECT_EQ(b[i].loss.total, a[10 + i].loss.total);
    }
    EXPECT_EQ(encode_checkpoint(resumed.checkpoint()), encode_checkpoint(end_full));
}

TEST(Training, ResumeRejectsDifferentSeed) {
    Checkpoint mid = Checkpoint{tiny_model(2, 7), std::nullopt, std::nullopt};
    train(tiny_model(2, 7), tiny_data(), tiny_config(), &mid);
    TrainConfig other = tiny_config();
    other.seed = 99;
    EXPECT_THROW(Trainer::resume(mid, tiny_data(), other), ContractError);
}

TEST(Training, ReloadedCheckpointReproducesFinalLoss) {
    Trainer trainer(tiny_model(2, 8), tiny_data(), tiny_config());
    train(trainer);
    const std::uint64_t last = trainer.iteration();
    const LossReport live = trainer.probe(0, last);
    Trainer reloaded = Trainer::resume(parse_checkpoint(encode_checkpoint(trainer.checkpoint()), "ckpt"),
                                       tiny_data(), tiny_config());
    const LossReport again = reloaded.probe(0, last);
    EXPECT_NEAR(again.total, live.total, 1e-12);
    EXPECT_EQ(again.chamfer, live.chamfer);
}

TEST(Training, CosineWarmupLeavesCosineOutOfTotal) {
    TrainConfig cfg = tiny_config();
    cfg.cos_warmup = 3;
    const auto records = train(tiny_model(2, 9), tiny_data(), cfg);
    for (std::size_t i = 0; i < records.size(); ++i) {
        const LossReport& l = records[i].loss;
        const double lambda_cos = i < 3 ? 0.0 : cfg.loss_weights.lambda_cos;
        EXPECT_EQ(l.total, cfg.loss_weights.lambda_cd * l.chamfer + lambda_cos * l.cosine) << i;
        EXPECT_GT(l.cosine, 0.0);
    }
}

TEST(Training, DivergenceAbortsWithDump) {
    TrainConfig cfg = tiny_config();
    cfg.nan_dump_path = temp_path("nan.csv").string();
    std::filesystem::remove(cfg.nan_dump_path);
    // Weights this large overflow to inf within a few layers.
    HofModel model = tiny_model(2, 10);
    for (auto& p : model.parameters())
        for (std::size_t i = 0; i < p.value.size(); ++i) p.value[i] = 1e120;
    EXPECT_THROW(train(std::move(model), tiny_data(), cfg), NumericalError);
    EXPECT_TRUE(std::filesystem::exists(cfg.nan_dump_path));
    std::filesystem::remove(cfg.nan_dump_path);
}

TEST(Training, ImageModeSteps) {
    MappingNetSpec ms;
    ms.hidden_dims = {8};
    EncoderSpec es;
    es.mode = EncoderMode::Conv;
    es.image_size = 16;
    es.conv_widths = {4, 4, 4};
    es.growth = 2;
    es.head_hidden = 8;
    InputImage img = InputImage::blank(16, 16, 3);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = (i % 7) / 7.0;
    TrainConfig cfg = tiny_config();
    cfg.iterations_per_object = 3;
    const auto records = train(HofModel::initialize(ms, es, 11), {{"cube", make_cube(0.3), img}}, cfg);
    EXPECT_EQ(records.size(), 3u);
}

TEST(Training, LogFormat) {
    TrainRecord r;
    r.iteration = 3;
    r.loss = {0.5, 0.25, 0.525, 2};
    EXPECT_EQ(train_log_header(), "iteration,chamfer,cosine,total,degenerate_count,seconds\n");
    EXPECT_EQ(train_log_row(r), "3,0.5,0.25,0.52500000000000002,2,0\n");
}

TEST(Checkpoint, RoundTripIsBitExact) {
    Trainer trainer(tiny_model(2, 12), tiny_data(), tiny_config());
    train(trainer);
    const Checkpoint ckpt = trainer.checkpoint();
    const std::string bytes = encode_checkpoint(ckpt);
    const Checkpoint back = parse_checkpoint(bytes, "mem");
    EXPECT_EQ(encode_checkpoint(back), bytes);
    ASSERT_TRUE(back.theta.has_value());
    EXPECT_EQ(*back.theta, hof_weights(back.model, ObjectCode{0}));
    ASSERT_TRUE(back.training.has_value());
    EXPECT_EQ(*back.training, *ckpt.training);

    const auto path = temp_path("ckpt.hofs");
    save_checkpoint(ckpt, path.string());
    EXPECT_EQ(read_file(path.string()), bytes);
    EXPECT_FALSE(std::filesystem::exists(path.string() + ".tmp"));
    std::filesystem::remove(path);
}

TEST(Checkpoint, RejectsCorruptInput) {
    Trainer trainer(tiny_model(1, 13), {tiny_data()[0]}, tiny_config());
    const std::string bytes = encode_checkpoint(trainer.checkpoint());
    EXPECT_THROW(parse_checkpoint(bytes.substr(0, bytes.size() - 5), "cut"), ParseError);
    EXPECT_THROW(parse_checkpoint("HOFX" + bytes.substr(4), "magic"), ParseError);
    EXPECT_THROW(parse_checkpoint(bytes + "x", "tail"), ParseError);
    std::string version = bytes;
    version[4] = 9;
    EXPECT_THROW(parse_checkpoint(version, "version"), ParseError);
}
