#include "hofsurf/checkpoint.hpp"

#include "byte_io.hpp"
#include "hofsurf/error.hpp"
#include "hofsurf/io.hpp"

namespace hofsurf {

namespace {

enum Section : std::uint32_t { kParams = 1, kTheta = 2, kTraining = 4 };

std::uint32_t narrow(std::size_t v, const char* what) {
    if (v > 0xffffffffu) throw ContractError(std::string(what) + " does not fit in 32 bits");
    return static_cast<std::uint32_t>(v);
}

void put_tensor_data(detail::ByteWriter& w, const Tensor& t) {
    for (double x : t.data()) w.f64(x);
}

Tensor get_tensor_data(detail::ByteReader& r, const Shape& shape, const char* what) {
    std::vector<double> values(element_count(shape));
    for (double& x : values) x = r.f64(what);
    try {
        return Tensor(shape, std::move(values));
    } catch (const NumericalError&) {
        r.fail(std::string("non-finite value in ") + what);
    }
}

} // namespace

std::string encode_checkpoint(const Checkpoint& ckpt) {
    const HofModel& model = ckpt.model;
    const MappingNetSpec& ms = model.mapping();
    const EncoderSpec& es = model.encoder();
    detail::ByteWriter w;
    w.bytes("HOFS");
    w.u32(kCheckpointVersion);

    std::vector<std::size_t> dims{ms.input_dim};
    dims.insert(dims.end(), ms.hidden_dims.begin(), ms.hidden_dims.end());
    dims.push_back(ms.output_dim);
    w.u32(narrow(dims.size(), "mapping depth"));
    for (std::size_t d : dims) w.u32(narrow(d, "mapping width"));

    w.u32(static_cast<std::uint32_t>(es.mode));
    std::vector<std::size_t> desc{es.code_dim, es.object_count, es.image_size, es.channels,
                                  es.growth,   es.head_hidden,  es.conv_widths.size()};
    desc.insert(desc.end(), es.conv_widths.begin(), es.conv_widths.end());
    w.u32(narrow(desc.size(), "encoder descriptor"));
    for (std::size_t d : desc) w.u32(narrow(d, "encoder value"));
    w.f64(es.emission_std);

    std::uint32_t flags = kParams;
    if (ckpt.theta) flags |= kTheta;
    if (ckpt.training) flags |= kTraining;
    w.u32(flags);

    const auto& params = model.parameters();
    w.u32(narrow(params.size(), "tensor count"));
    for (const NamedTensor& p : params) {
        w.u32(narrow(p.value.rank(), "rank"));
        for (std::size_t e : p.value.shape()) w.u32(narrow(e, "extent"));
        put_tensor_data(w, p.value);
    }
    if (ckpt.theta) {
        if (ckpt.theta->size() != ms.param_count()) {
            throw ContractError("checkpoint theta has " + std::to_string(ckpt.theta->size()) +
                                " values but the mapping spec needs " +
                                std::to_string(ms.param_count()));
        }
        w.u64(ckpt.theta->size());
        for (double x : ckpt.theta->values) w.f64(x);
    }
    if (ckpt.training) {
        const TrainState& ts = *ckpt.training;
        if (ts.adam.m.size() != params.size() || ts.adam.v.size() != params.size()) {
            throw ContractError("optimizer state does not match the model parameters");
        }
        w.u64(ts.iteration);
        w.u64(ts.seed);
        w.u64(ts.adam.step);
        for (std::size_t i = 0; i < params.size(); ++i) {
            if (ts.adam.m[i].shape() != params[i].value.shape() ||
                ts.adam.v[i].shape() != params[i].value.shape()) {
                throw ContractError("optimizer moment shape mismatch for " + params[i].name);
            }
            put_tensor_data(w, ts.adam.m[i]);
            put_tensor_data(w, ts.adam.v[i]);
        }
    }
    return std::move(w.str());
}

Checkpoint parse_checkpoint(std::string_view bytes, const std::string& source) {
    detail::ByteReader r(bytes, source);
    if (r.take(4, "magic") != "HOFS") r.fail("not a checkpoint (bad magic)");
    const std::uint32_t version = r.u32("version");
    if (version != kCheckpointVersion) {
        r.fail("unsupported checkpoint version " + std::to_string(version));
    }

    const std::uint32_t depth = r.u32("mapping depth");
    if (depth < 2 || depth > 1024) r.fail("implausible mapping depth " + std::to_string(depth));
    std::vector<std::size_t> dims(depth);
    for (auto& d : dims) d = r.u32("mapping width");
    MappingNetSpec ms;
    ms.input_dim = dims.front();
    ms.output_dim = dims.back();
    ms.hidden_dims.assign(dims.begin() + 1, dims.end() - 1);

    EncoderSpec es;
    const std::uint32_t mode = r.u32("encoder mode");
    if (mode > 1) r.fail("unknown encoder mode " + std::to_string(mode));
    es.mode = static_cast<EncoderMode>(mode);
    const std::uint32_t n_desc = r.u32("encoder descriptor length");
    if (n_desc < 7 || n_desc > 1024) r.fail("bad encoder descriptor length");
    std::vector<std::size_t> desc(n_desc);
    for (auto& d : desc) d = r.u32("encoder value");
    es.code_dim = desc[0];
    es.object_count = desc[1];
    es.image_size = desc[2];
    es.channels = desc[3];
    es.growth = desc[4];
    es.head_hidden = desc[5];
    if (desc[6] != n_desc - 7) r.fail("encoder descriptor length does not match its conv widths");
    es.conv_widths.assign(desc.begin() + 7, desc.end());
    es.emission_std = r.f64("emission std");

    std::vector<NamedTensor> layout;
    try {
        layout = HofModel::layout(ms, es);
    } catch (const Error& e) {
        r.fail(std::string("invalid model description: ") + e.what());
    }
    Checkpoint ckpt{HofModel(ms, es), std::nullopt, std::nullopt};

    const std::uint32_t flags = r.u32("section flags");
    if ((flags & kParams) == 0 || (flags & ~std::uint32_t{7}) != 0) r.fail("bad section flags");

    const std::uint32_t count = r.u32("tensor count");
    if (count != layout.size()) {
        r.fail("checkpoint has " + std::to_string(count) + " parameter tensors, the model needs " +
               std::to_string(layout.size()));
    }
    for (NamedTensor& p : ckpt.model.parameters()) {
        const std::uint32_t rank = r.u32("rank");
        Shape shape(rank);
        for (auto& e : shape) e = r.u32("extent");
        if (shape != p.value.shape()) {
            r.fail("tensor " + p.name + " has shape " + to_string(shape) + ", expected " +
                   to_string(p.value.shape()));
        }
        p.value = get_tensor_data(r, shape, p.name.c_str());
    }
    if (flags & kTheta) {
        const std::uint64_t n = r.u64("theta length");
        if (n != ms.param_count()) {
            r.fail("theta has " + std::to_string(n) + " values but the mapping spec needs " +
                   std::to_string(ms.param_count()));
        }
        WeightVector theta;
        theta.values = get_tensor_data(r, {static_cast<std::size_t>(n)}, "theta").values();
        ckpt.theta = std::move(theta);
    }
    if (flags & kTraining) {
        TrainState ts;
        ts.iteration = r.u64("iteration");
        ts.seed = r.u64("seed");
        ts.adam.step = r.u64("adam step");
        for (const NamedTensor& p : ckpt.model.parameters()) {
            ts.adam.m.push_back(get_tensor_data(r, p.value.shape(), "first moment"));
            ts.adam.v.push_back(get_tensor_data(r, p.value.shape(), "second moment"));
        }
        ckpt.training = std::move(ts);
    }
    if (!r.done()) r.fail("trailing bytes after checkpoint data");
    return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    write_file_atomic(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::string& path) {
    return parse_checkpoint(read_file(path), path);
}

} // namespace hofsurf
