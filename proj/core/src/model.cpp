#include "hofsurf/model.hpp"

#include "hofsurf/error.hpp"
#include "hofsurf/sampling.hpp"

#include <cmath>
#include <random>

namespace hofsurf {

// --- MappingNetSpec ---------------------------------------------------------

MappingNetSpec MappingNetSpec::with_fc_layers(std::size_t width, bool extra_output_layer) {
    MappingNetSpec spec;
    spec.hidden_dims = extra_output_layer ? std::vector<std::size_t>{width, width, width}
                                          : std::vector<std::size_t>{width, width};
    return spec;
}

std::vector<LayerShape> MappingNetSpec::layers() const {
    std::vector<LayerShape> out;
    std::size_t in = input_dim;
    for (std::size_t h : hidden_dims) {
        out.push_back({in, h});
        in = h;
    }
    out.push_back({in, output_dim});
    return out;
}

std::size_t MappingNetSpec::param_count() const {
    std::size_t n = 0;
    for (const LayerShape& l : layers()) n += l.in * l.out + l.out;
    return n;
}

void MappingNetSpec::validate() const {
    if (input_dim != 3 || output_dim != 6) {
        throw DomainError("mapping net must map R^3 to R^6, got " + std::to_string(input_dim) + " -> " +
                          std::to_string(output_dim));
    }
    for (std::size_t h : hidden_dims) {
        if (h == 0) throw DomainError("mapping net hidden width must be positive");
    }
}

// --- packing ----------------------------------------------------------------

WeightVector pack(const MappingNetSpec& spec, const std::vector<LayerWeights>& layers) {
    const auto shapes = spec.layers();
    if (layers.size() != shapes.size()) {
        throw ContractError("pack: spec has " + std::to_string(shapes.size()) + " layers, got " +
                            std::to_string(layers.size()));
    }
    WeightVector theta;
    theta.values.reserve(spec.param_count());
    for (std::size_t l = 0; l < shapes.size(); ++l) {
        const LayerWeights& w = layers[l];
        if (w.weight.shape() != Shape{shapes[l].in, shapes[l].out} ||
            w.bias.size() != shapes[l].out) {
            throw ContractError("pack: layer " + std::to_string(l) + " has weight " +
                                to_string(w.weight.shape()) + " and bias " +
                                to_string(w.bias.shape()));
        }
        theta.values.insert(theta.values.end(), w.weight.data().begin(), w.weight.data().end());
        theta.values.insert(theta.values.end(), w.bias.data().begin(), w.bias.data().end());
    }
    return theta;
}

std::vector<LayerWeights> unpack(const MappingNetSpec& spec, const WeightVector& theta) {
    if (theta.size() != spec.param_count()) {
        throw ContractError("unpack: theta has " + std::to_string(theta.size()) +
                            " values, spec needs " + std::to_string(spec.param_count()));
    }
    std::vector<LayerWeights> out;
    auto it = theta.values.begin();
    for (const LayerShape& l : spec.layers()) {
        std::vector<double> w(it, it + static_cast<std::ptrdiff_t>(l.in * l.out));
        it += static_cast<std::ptrdiff_t>(l.in * l.out);
        std::vector<double> b(it, it + static_cast<std::ptrdiff_t>(l.out));
        it += static_cast<std::ptrdiff_t>(l.out);
        out.push_back({Tensor({l.in, l.out}, std::move(w)), Tensor({l.out}, std::move(b))});
    }
    return out;
}

// --- tangent planes ---------------------------------------------------------

bool TangentPlane::degenerate() const noexcept { return !(v.norm() >= kDegenerateDirection); }

Vec3 TangentPlane::normal() const {
    if (degenerate()) throw DomainError("tangent plane direction is degenerate");
    return v / v.norm();
}

MappingOutput mapping_forward(const MappingNetSpec& spec, ad::Var theta, ad::Var x) {
    const std::size_t expected = spec.param_count();
    if (theta.value().size() != expected) {
        throw ContractError("theta has " + std::to_string(theta.value().size()) +
                            " values, mapping net needs " + std::to_string(expected));
    }
    if (x.value().rank() != 2 || x.value().dim(1) != spec.input_dim) {
        throw DimensionError("mapping input must be [n x " + std::to_string(spec.input_dim) +
                             "], got " + to_string(x.value().shape()));
    }
    const auto shapes = spec.layers();
    ad::Var h = x;
    std::size_t offset = 0;
    for (std::size_t l = 0; l < shapes.size(); ++l) {
        const auto [in, out] = shapes[l];
        ad::Var w = ad::reshape(ad::slice(theta, offset, in * out), {in, out});
        offset += in * out;
        ad::Var b = ad::slice(theta, offset, out);
        offset += out;
        h = ad::add_bias(ad::matmul(h, w), b);
        if (l + 1 < shapes.size()) h = ad::relu(h);
    }
    MappingOutput result{h, {}, {}};
    if (spec.output_dim == 6) {
        result.position = ad::columns(h, 0, 3);
        result.direction = ad::columns(h, 3, 6);
    }
    return result;
}

std::vector<TangentPlane> to_tangent_planes(const MappingOutput& out) {
    const Tensor& raw = out.raw.value();
    if (raw.rank() != 2 || raw.dim(1) != 6) {
        throw DimensionError("tangent planes need [n x 6] output, got " + to_string(raw.shape()));
    }
    std::vector<TangentPlane> planes(raw.dim(0));
    for (std::size_t i = 0; i < planes.size(); ++i) {
        planes[i].p = Vec3(raw.at(i, 0), raw.at(i, 1), raw.at(i, 2));
        planes[i].v = Vec3(raw.at(i, 3), raw.at(i, 4), raw.at(i, 5));
    }
    return planes;
}

std::vector<TangentPlane> map_sphere_points(const MappingNetSpec& spec, const WeightVector& theta,
                                            std::span<const Vec3> points) {
    if (theta.size() != spec.param_count()) {
        throw ContractError("theta has " + std::to_string(theta.size()) +
                            " values, mapping net needs " + std::to_string(spec.param_count()));
    }
    if (points.empty()) return {};
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (std::fabs(points[i].norm() - 1.0) > 1e-9) {
            throw ContractError("sphere input " + std::to_string(i) + " is not unit length");
        }
    }
    ad::Tape tape;
    ad::Var t = tape.constant(Tensor({theta.size()}, theta.values));
    ad::Var x = tape.constant(PointCloud{{points.begin(), points.end()}}.to_tensor());
    return to_tangent_planes(mapping_forward(spec, t, x));
}

Reconstruction reconstruct_surface(const MappingNetSpec& spec, const WeightVector& theta,
                                   std::size_t n, std::uint64_t seed) {
    Reconstruction r;
    r.planes = map_sphere_points(spec, theta, sample_sphere_uniform(n, seed));
    for (const TangentPlane& plane : r.planes) {
        if (plane.degenerate()) {
            ++r.degenerate;
            continue;
        }
        r.cloud.points.push_back(plane.p);
        r.cloud.normals.push_back(plane.normal());
    }
    return r;
}

namespace {

void fill_normal(Tensor& t, double stddev, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, stddev);
    for (double& v : t.data()) v = dist(rng);
}

} // namespace

WeightVector init_mapping_weights(const MappingNetSpec& spec, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<LayerWeights> layers;
    for (const LayerShape& l : spec.layers()) {
        LayerWeights w{Tensor({l.in, l.out}), Tensor({l.out})};
        fill_normal(w.weight, std::sqrt(2.0 / static_cast<double>(l.in)), rng);
        layers.push_back(std::move(w));
    }
    return pack(spec, layers);
}

// --- InputImage -------------------------------------------------------------

InputImage InputImage::blank(std::size_t height, std::size_t width, std::size_t channels) {
    InputImage img;
    img.height = height;
    img.width = width;
    img.channels = channels;
    img.pixels.assign(height * width * channels, 0.0);
    return img;
}

void InputImage::validate() const {
    if (height == 0 || width == 0 || channels == 0 ||
        pixels.size() != height * width * channels) {
        throw DomainError("image buffer does not match its " + std::to_string(height) + "x" +
                          std::to_string(width) + "x" + std::to_string(channels) + " size");
    }
    for (double p : pixels) {
        if (!(p >= 0.0 && p <= 1.0)) throw DomainError("image pixel outside [0, 1]");
    }
}

Tensor InputImage::to_chw() const {
    validate();
    Tensor t({channels, height, width});
    for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t y = 0; y < height; ++y) {
            for (std::size_t x = 0; x < width; ++x) t[(c * height + y) * width + x] = at(y, x, c);
        }
    }
    return t;
}

// --- EncoderSpec / HofModel -------------------------------------------------

void EncoderSpec::validate() const {
    if (head_hidden == 0) throw DomainError("head_hidden must be positive");
    if (mode == EncoderMode::LearnedCode) {
        if (code_dim == 0 || object_count == 0) {
            throw DomainError("learned-code mode needs code_dim and object_count >= 1");
        }
    } else {
        if (image_size == 0 || channels == 0 || growth == 0 || conv_widths.size() != 3) {
            throw DomainError("conv encoder needs a positive image size, channels, growth and "
                              "exactly three conv widths");
        }
        for (std::size_t w : conv_widths) {
            if (w == 0) throw DomainError("conv width must be positive");
        }
    }
}

namespace {

std::size_t conv_output_extent(std::size_t extent) { return (extent + 2 - 3) / 2 + 1; }

} // namespace

std::vector<NamedTensor> HofModel::layout(const MappingNetSpec& mapping,
                                          const EncoderSpec& encoder) {
    mapping.validate();
    encoder.validate();
    const std::size_t P = mapping.param_count();
    const std::size_t H = encoder.head_hidden;
    std::vector<NamedTensor> out;
    if (encoder.mode == EncoderMode::LearnedCode) {
        out.push_back({"codes", Tensor({encoder.object_count, encoder.code_dim})});
        out.push_back({"head.weight", Tensor({encoder.code_dim, H})});
        out.push_back({"head.bias", Tensor({H})});
    } else {
        std::size_t channels = encoder.channels;
        std::size_t extent = encoder.image_size;
        for (std::size_t i = 0; i < 3; ++i) {
            const std::size_t w = encoder.conv_widths[i];
            const std::string idx = std::to_string(i);
            out.push_back({"conv" + idx + ".weight", Tensor({w, channels, 3, 3})});
            out.push_back({"conv" + idx + ".bias", Tensor({w})});
            out.push_back({"dense" + idx + ".weight", Tensor({encoder.growth, w, 3, 3})});
            out.push_back({"dense" + idx + ".bias", Tensor({encoder.growth})});
            channels = w + encoder.growth;
            extent = conv_output_extent(extent);
        }
        out.push_back({"fc.weight", Tensor({channels * extent * extent, H})});
        out.push_back({"fc.bias", Tensor({H})});
    }
    out.push_back({"emit.weight", Tensor({H, P})});
    out.push_back({"emit.bias", Tensor({P})});
    return out;
}

HofModel::HofModel(MappingNetSpec mapping, EncoderSpec encoder)
    : mapping_(std::move(mapping)), encoder_(std::move(encoder)),
      params_(layout(mapping_, encoder_)) {}

HofModel HofModel::initialize(MappingNetSpec mapping, EncoderSpec encoder, std::uint64_t seed) {
    HofModel model(std::move(mapping), std::move(encoder));
    std::mt19937_64 rng(seed);
    for (NamedTensor& p : model.params_) {
        const Shape& s = p.value.shape();
        if (p.name == "codes") {
            fill_normal(p.value, 1.0, rng);
        } else if (p.name == "emit.weight") {
            fill_normal(p.value, model.encoder_.emission_std, rng);
        } else if (p.name == "emit.bias") {
            const WeightVector theta = init_mapping_weights(model.mapping_, derive_seed(seed, 1));
            std::copy(theta.values.begin(), theta.values.end(), p.value.data().begin());
        } else if (s.size() >= 2) {
            // He init; fan-in is everything except the output axis.
            const std::size_t fan_in =
                s.size() == 2 ? s[0] : p.value.size() / s[0];
            fill_normal(p.value, std::sqrt(2.0 / static_cast<double>(fan_in)), rng);
        }
    }
    return model;
}

Tensor& HofModel::parameter(const std::string& name) {
    for (NamedTensor& p : params_) {
        if (p.name == name) return p.value;
    }
    throw ContractError("no parameter named " + name);
}

const Tensor& HofModel::parameter(const std::string& name) const {
    return const_cast<HofModel*>(this)->parameter(name);
}

std::size_t HofModel::parameter_count() const {
    std::size_t n = 0;
    for (const NamedTensor& p : params_) n += p.value.size();
    return n;
}

std::vector<ad::Var> bind_parameters(ad::Tape& tape, const HofModel& model, bool trainable) {
    std::vector<ad::Var> vars;
    vars.reserve(model.parameters().size());
    for (const NamedTensor& p : model.parameters()) {
        vars.push_back(trainable ? tape.leaf(p.value) : tape.constant(p.value));
    }
    return vars;
}

ad::Var hof_forward(const HofModel& model, std::span<const ad::Var> params,
                    const HofInput& input) {
    const auto& names = model.parameters();
    if (params.size() != names.size()) {
        throw ContractError("hof_forward: expected " + std::to_string(names.size()) +
                            " parameter nodes, got " + std::to_string(params.size()));
    }
    auto param = [&](const std::string& name) {
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (names[i].name == name) return params[i];
        }
        throw ContractError("no parameter named " + name);
    };
    const EncoderSpec& enc = model.encoder();
    ad::Var hidden;
    if (enc.mode == EncoderMode::LearnedCode) {
        const auto* code = std::get_if<ObjectCode>(&input);
        if (!code) throw ContractError("learned-code model needs an object index, got an image");
        if (code->index >= enc.object_count) {
            throw ContractError("object index " + std::to_string(code->index) + " out of range (" +
                                std::to_string(enc.object_count) + " codes)");
        }
        const std::size_t row[] = {code->index};
        ad::Var z = ad::gather_rows(param("codes"), row);
        hidden = ad::relu(ad::add_bias(ad::matmul(z, param("head.weight")), param("head.bias")));
    } else {
        const auto* image = std::get_if<InputImage>(&input);
        if (!image) throw ContractError("conv model needs an image, got an object index");
        if (image->height != enc.image_size || image->width != enc.image_size ||
            image->channels != enc.channels) {
            throw DimensionError("image is " + std::to_string(image->height) + "x" +
                                 std::to_string(image->width) + "x" +
                                 std::to_string(image->channels) + ", encoder expects " +
                                 std::to_string(enc.image_size) + "x" +
                                 std::to_string(enc.image_size) + "x" +
                                 std::to_string(enc.channels));
        }
        ad::Tape& tape = params[0].tape();
        ad::Var x = tape.constant(image->to_chw());
        for (std::size_t i = 0; i < 3; ++i) {
            const std::string idx = std::to_string(i);
            x = ad::relu(ad::conv2d(x, param("conv" + idx + ".weight"),
                                    param("conv" + idx + ".bias"), {2, 1}));
            ad::Var grown = ad::relu(ad::conv2d(x, param("dense" + idx + ".weight"),
                                                param("dense" + idx + ".bias"), {1, 1}));
            x = ad::concat(x, grown);
        }
        ad::Var flat = ad::reshape(x, {1, x.value().size()});
        hidden = ad::relu(ad::add_bias(ad::matmul(flat, param("fc.weight")), param("fc.bias")));
    }
    return ad::add_bias(ad::matmul(hidden, param("emit.weight")), param("emit.bias"));
}

WeightVector hof_weights(const HofModel& model, const HofInput& input) {
    ad::Tape tape;
    const auto params = bind_parameters(tape, model, false);
    ad::Var theta = hof_forward(model, params, input);
    const auto data = theta.value().data();
    return WeightVector{{data.begin(), data.end()}};
}

} // namespace hofsurf
