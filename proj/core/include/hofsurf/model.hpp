#pragma once

#include "hofsurf/autodiff.hpp"
#include "hofsurf/geometry.hpp"
#include "hofsurf/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace hofsurf {

// --- mapping network f_theta ------------------------------------------------

struct LayerShape {
    std::size_t in;
    std::size_t out;
};

// Fully connected net from a sphere point to a 6-D tangent plane [p v].
// Hidden layers use ReLU; the output layer is linear so p and v can take any
// sign. The default has three layers: 3 -> 128 -> 128 -> 6.
struct MappingNetSpec {
    std::size_t input_dim = 3;
    std::vector<std::size_t> hidden_dims{128, 128};
    std::size_t output_dim = 6;

    // Three fully connected layers of `width` units. With
    // `extra_output_layer` the three layers are all hidden and a separate
    // output layer follows (four weight matrices in total).
    static MappingNetSpec with_fc_layers(std::size_t width, bool extra_output_layer);

    std::vector<LayerShape> layers() const;
    // Sum over layers of in*out + out.
    std::size_t param_count() const;
    void validate() const;

    friend bool operator==(const MappingNetSpec&, const MappingNetSpec&) = default;
};

// Per-layer parameters. `weight` is [in x out] so a batch X[n x in] maps to
// X * weight + bias.
struct LayerWeights {
    Tensor weight;
    Tensor bias;
};

// Flat parameter vector theta. Packing order: for each layer in sequence, the
// weight matrix row-major, then the bias.
struct WeightVector {
    std::vector<double> values;

    std::size_t size() const noexcept { return values.size(); }
    friend bool operator==(const WeightVector&, const WeightVector&) = default;
};

WeightVector pack(const MappingNetSpec& spec, const std::vector<LayerWeights>& layers);
std::vector<LayerWeights> unpack(const MappingNetSpec& spec, const WeightVector& theta);

// Oriented surface element predicted for one sphere sample.
struct TangentPlane {
    Vec3 p;
    Vec3 v;

    // ||v|| < 1e-12: no usable normal.
    bool degenerate() const noexcept;
    // v / ||v||; throws DomainError when degenerate.
    Vec3 normal() const;
};

inline constexpr double kDegenerateDirection = 1e-12;

struct MappingOutput {
    ad::Var raw;       // [n x 6]
    ad::Var position;  // [n x 3], first three outputs
    ad::Var direction; // [n x 3], last three outputs
};

// Batched forward pass of f_theta on the tape. `theta` holds param_count()
// values (any shape); `x` is [n x input_dim]. Each output row depends only on
// its input row. Differentiable with respect to both theta and x.
MappingOutput mapping_forward(const MappingNetSpec& spec, ad::Var theta, ad::Var x);

std::vector<TangentPlane> to_tangent_planes(const MappingOutput& out);

// Frozen evaluation: maps unit-sphere points through f_theta. Throws
// ContractError for a theta of the wrong length or a non-unit input.
std::vector<TangentPlane> map_sphere_points(const MappingNetSpec& spec, const WeightVector& theta,
                                            std::span<const Vec3> points);

struct Reconstruction {
    std::vector<TangentPlane> planes; // one per sphere sample
    OrientedPointCloud cloud;         // non-degenerate planes only
    std::size_t degenerate = 0;
};

// Maps `n` uniform sphere samples drawn with `seed` through f_theta.
Reconstruction reconstruct_surface(const MappingNetSpec& spec, const WeightVector& theta,
                                   std::size_t n, std::uint64_t seed);

// He-initialized mapping weights (zero biases), packed.
WeightVector init_mapping_weights(const MappingNetSpec& spec, std::uint64_t seed);

// --- higher-order function g ------------------------------------------------

// Image with H x W x C pixels in [0, 1], stored row-major with channels last.
struct InputImage {
    std::size_t height = 64;
    std::size_t width = 64;
    std::size_t channels = 3;
    std::vector<double> pixels;

    static InputImage blank(std::size_t height, std::size_t width, std::size_t channels);
    double& at(std::size_t y, std::size_t x, std::size_t c) {
        return pixels[(y * width + x) * channels + c];
    }
    double at(std::size_t y, std::size_t x, std::size_t c) const {
        return pixels[(y * width + x) * channels + c];
    }
    // Throws DomainError for a size mismatch or a pixel outside [0, 1].
    void validate() const;
    // [C x H x W] tensor for the convolution trunk.
    Tensor to_chw() const;
};

enum class EncoderMode : std::uint32_t {
    // Per-object trainable code feeding the weight-emission head.
    LearnedCode = 0,
    // Convolutional trunk: three stride-2 convolutions, each followed by a
    // densely connected convolution whose output is concatenated to its input.
    Conv = 1,
};

struct EncoderSpec {
    EncoderMode mode = EncoderMode::LearnedCode;
    // Learned-code mode.
    std::size_t code_dim = 64;
    std::size_t object_count = 1;
    // Conv mode.
    std::size_t image_size = 64;
    std::size_t channels = 3;
    std::vector<std::size_t> conv_widths{16, 32, 64};
    std::size_t growth = 16;
    // Width of the layer in front of the weight-emission layer.
    std::size_t head_hidden = 1024;
    // Std of the initial weight-emission matrix; small so the first mapping
    // networks stay close to the emission bias.
    double emission_std = 1e-3;

    void validate() const;
    friend bool operator==(const EncoderSpec&, const EncoderSpec&) = default;
};

struct NamedTensor {
    std::string name;
    Tensor value;
};

// Which object to reconstruct in learned-code mode.
struct ObjectCode {
    std::size_t index = 0;
};

using HofInput = std::variant<ObjectCode, InputImage>;

// Encoder plus weight-emission head; owns every trainable parameter.
class HofModel {
public:
    // Parameters laid out for the specs but zero-filled.
    HofModel(MappingNetSpec mapping, EncoderSpec encoder);

    // Random initialization: He weights throughout, small emission weights
    // and an emission bias equal to a He-initialized packed theta, so the
    // initial output is a sensible mapping network for every input.
    static HofModel initialize(MappingNetSpec mapping, EncoderSpec encoder, std::uint64_t seed);

    const MappingNetSpec& mapping() const noexcept { return mapping_; }
    const EncoderSpec& encoder() const noexcept { return encoder_; }

    std::vector<NamedTensor>& parameters() noexcept { return params_; }
    const std::vector<NamedTensor>& parameters() const noexcept { return params_; }
    Tensor& parameter(const std::string& name);
    const Tensor& parameter(const std::string& name) const;

    // Total trainable values.
    std::size_t parameter_count() const;

    // Expected shapes of all parameters for the given specs, in storage order.
    static std::vector<NamedTensor> layout(const MappingNetSpec& mapping,
                                           const EncoderSpec& encoder);

private:
    MappingNetSpec mapping_;
    EncoderSpec encoder_;
    std::vector<NamedTensor> params_;
};

// Records every model parameter on the tape, as leaves or constants.
std::vector<ad::Var> bind_parameters(ad::Tape& tape, const HofModel& model, bool trainable);

// theta = g(input) as a [1 x param_count] tape node. `params` comes from
// bind_parameters() on the same model.
ad::Var hof_forward(const HofModel& model, std::span<const ad::Var> params, const HofInput& input);

// Frozen evaluation of g.
WeightVector hof_weights(const HofModel& model, const HofInput& input);

} // namespace hofsurf
