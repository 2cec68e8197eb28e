#include "hofsurf/checks.hpp"

#include "hofsurf/autodiff.hpp"
#include "hofsurf/error.hpp"
#include "hofsurf/io.hpp"
#include "hofsurf/losses.hpp"
#include "hofsurf/normals.hpp"
#include "hofsurf/numeric.hpp"
#include "hofsurf/sampling.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace hofsurf::checks {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// --- finite differences -----------------------------------------------------

using Function = std::function<ad::Var(ad::Tape&, const std::vector<ad::Var>&)>;

constexpr double kStep = 1e-5;

double evaluate(const Function& f, const std::vector<Tensor>& inputs) {
    ad::Tape tape;
    std::vector<ad::Var> vars;
    for (const Tensor& t : inputs) vars.push_back(tape.constant(t));
    return f(tape, vars).value().item();
}

// ||analytic - numeric|| / max(||analytic||, ||numeric||, 1) over all inputs.
double gradient_error(const Function& f, std::vector<Tensor> inputs) {
    ad::Tape tape;
    std::vector<ad::Var> vars;
    for (const Tensor& t : inputs) vars.push_back(tape.leaf(t));
    tape.backward(f(tape, vars));

    double diff = 0.0, na = 0.0, nn = 0.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const Tensor analytic = tape.grad(vars[i]);
        for (std::size_t j = 0; j < inputs[i].size(); ++j) {
            const double orig = inputs[i][j];
            inputs[i][j] = orig + kStep;
            const double up = evaluate(f, inputs);
            inputs[i][j] = orig - kStep;
            const double down = evaluate(f, inputs);
            inputs[i][j] = orig;
            const double numeric = (up - down) / (2.0 * kStep);
            diff += (analytic[j] - numeric) * (analytic[j] - numeric);
            na += analytic[j] * analytic[j];
            nn += numeric * numeric;
        }
    }
    return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nn), 1.0});
}

Tensor random_tensor(const Shape& shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Tensor t(shape);
    for (double& x : t.data()) x = dist(rng);
    return t;
}

// Entries with magnitude in [0.1, 1] and random sign, clear of kinks at 0.
Tensor away_from_zero(const Shape& shape, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> mag(0.1, 1.0);
    std::bernoulli_distribution sign(0.5);
    Tensor t(shape);
    for (double& x : t.data()) x = sign(rng) ? mag(rng) : -mag(rng);
    return t;
}

// Weighted sum so every output entry reaches the gradient with its own factor.
ad::Var contract(ad::Var out, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    ad::Var w = out.tape().constant(random_tensor(out.shape(), rng));
    return ad::sum(ad::mul(out, w));
}

struct OpCase {
    std::string name;
    std::function<std::vector<Tensor>(std::mt19937_64&)> inputs;
    std::function<ad::Var(const std::vector<ad::Var>&)> op;
};

std::vector<OpCase> op_cases() {
    using V = const std::vector<ad::Var>&;
    auto rt = [](Shape s) {
        return [s](std::mt19937_64& rng) { return std::vector<Tensor>{random_tensor(s, rng)}; };
    };
    auto rt2 = [](Shape a, Shape b) {
        return [a, b](std::mt19937_64& rng) {
            return std::vector<Tensor>{random_tensor(a, rng), random_tensor(b, rng)};
        };
    };
    std::vector<OpCase> c;
    c.push_back({"matmul", rt2({5, 4}, {4, 3}), [](V v) { return ad::matmul(v[0], v[1]); }});
    c.push_back({"add_bias", rt2({4, 3}, {3}), [](V v) { return ad::add_bias(v[0], v[1]); }});
    c.push_back({"add", rt2({3, 4}, {3, 4}), [](V v) { return ad::add(v[0], v[1]); }});
    c.push_back({"add scalar", rt2({3, 4}, {1}), [](V v) { return ad::add(v[0], v[1]); }});
    c.push_back({"sub", rt2({3, 4}, {3, 4}), [](V v) { return ad::sub(v[0], v[1]); }});
    c.push_back({"sub scalar", rt2({1}, {2, 3}), [](V v) { return ad::sub(v[0], v[1]); }});
    c.push_back({"mul", rt2({3, 4}, {3, 4}), [](V v) { return ad::mul(v[0], v[1]); }});
    c.push_back({"mul scalar", rt2({2, 5}, {1}), [](V v) { return ad::mul(v[0], v[1]); }});
    c.push_back({"scale", rt({3, 4}), [](V v) { return ad::scale(v[0], -1.7); }});
    c.push_back({"add_scalar", rt({3, 4}), [](V v) { return ad::add_scalar(v[0], 0.3); }});
    c.push_back({"relu",
                 [](std::mt19937_64& rng) { return std::vector<Tensor>{away_from_zero({4, 5}, rng)}; },
                 [](V v) { return ad::relu(v[0]); }});
    c.push_back({"abs",
                 [](std::mt19937_64& rng) { return std::vector<Tensor>{away_from_zero({4, 5}, rng)}; },
                 [](V v) { return ad::abs(v[0]); }});
    c.push_back({"clamp",
                 [](std::mt19937_64& rng) {
                     Tensor t = away_from_zero({4, 5}, rng);
                     for (double& x : t.data()) {
                         if (std::fabs(std::fabs(x) - 0.5) < 0.05) x *= 1.2;
                     }
                     return std::vector<Tensor>{t};
                 },
                 [](V v) { return ad::clamp(v[0], -0.5, 0.5); }});
    c.push_back({"sqrt",
                 [](std::mt19937_64& rng) { return std::vector<Tensor>{random_tensor({3, 4}, rng, 0.5, 2.0)}; },
                 [](V v) { return ad::sqrt(v[0]); }});
    c.push_back({"sum", rt({3, 4}), [](V v) { return ad::sum(v[0]); }});
    c.push_back({"mean", rt({3, 4}), [](V v) { return ad::mean(v[0]); }});
    c.push_back({"min_reduce",
                 [](std::mt19937_64& rng) {
                     // Distinct values spaced well beyond the finite-difference step.
                     std::vector<double> vals(7);
                     std::iota(vals.begin(), vals.end(), 0.0);
                     std::shuffle(vals.begin(), vals.end(), rng);
                     Tensor t({7});
                     for (std::size_t i = 0; i < 7; ++i) t[i] = 0.1 * vals[i] + 0.01;
                     return std::vector<Tensor>{t};
                 },
                 [](V v) { return ad::min_reduce(v[0]).value; }});
    c.push_back({"reshape", rt({3, 4}), [](V v) { return ad::reshape(v[0], {2, 6}); }});
    c.push_back({"slice", rt({3, 4}), [](V v) { return ad::slice(v[0], 2, 7); }});
    c.push_back({"columns", rt({4, 6}), [](V v) { return ad::columns(v[0], 1, 4); }});
    c.push_back({"gather_rows", rt({4, 3}), [](V v) {
                     const std::size_t rows[] = {3, 0, 3, 1};
                     return ad::gather_rows(v[0], rows);
                 }});
    c.push_back({"concat", rt2({2, 3}, {4, 3}), [](V v) { return ad::concat(v[0], v[1]); }});
    c.push_back({"row_norm", rt({6, 3}), [](V v) { return ad::row_norm(v[0]); }});
    c.push_back({"row_dot", rt2({6, 3}, {6, 3}), [](V v) { return ad::row_dot(v[0], v[1]); }});
    c.push_back({"normalize_rows", rt({6, 3}), [](V v) { return ad::normalize_rows(v[0]); }});
    c.push_back({"conv2d stride 1",
                 [](std::mt19937_64& rng) {
                     return std::vector<Tensor>{random_tensor({2, 5, 5}, rng),
                                                random_tensor({3, 2, 3, 3}, rng),
                                                random_tensor({3}, rng)};
                 },
                 [](V v) { return ad::conv2d(v[0], v[1], v[2], {1, 0}); }});
    c.push_back({"conv2d stride 2 padded",
                 [](std::mt19937_64& rng) {
                     return std::vector<Tensor>{random_tensor({2, 6, 6}, rng),
                                                random_tensor({3, 2, 3, 3}, rng),
                                                random_tensor({3}, rng)};
                 },
                 [](V v) { return ad::conv2d(v[0], v[1], v[2], {2, 1}); }});
    return c;
}

// Tiny learned-code model whose total loss is differentiated end to end.
struct TinyProblem {
    HofModel model;
    OrientedPointCloud gt;
    Tensor sphere;
};

TinyProblem tiny_problem(std::uint64_t seed) {
    MappingNetSpec ms;
    ms.hidden_dims = {8, 8};
    EncoderSpec es;
    es.code_dim = 16;
    es.head_hidden = 16;
    es.emission_std = 0.1;
    TinyProblem p{HofModel::initialize(ms, es, seed), {}, {}};
    std::mt19937_64 rng(derive_seed(seed, 1));
    std::normal_distribution<double> normal(0.0, 0.5);
    for (int i = 0; i < 10; ++i) {
        p.gt.points.emplace_back(normal(rng), normal(rng), normal(rng));
        Vec3 n(normal(rng), normal(rng), normal(rng));
        p.gt.normals.push_back(n.normalized());
    }
    p.sphere = sphere_samples_tensor(sample_sphere_uniform(10, derive_seed(seed, 2)));
    return p;
}

// Gap between the nearest and second-nearest squared distance, minimized over
// all queries. Nearest-neighbour matching is piecewise constant, so finite
// differences are only meaningful when no match can flip within the step.
double matching_margin(const std::vector<Vec3>& queries, const std::vector<Vec3>& pts) {
    double margin = std::numeric_limits<double>::infinity();
    if (pts.size() < 2) return margin;
    for (const Vec3& q : queries) {
        double a = std::numeric_limits<double>::infinity(), b = a;
        for (const Vec3& p : pts) {
            const double d = squared_distance(q, p);
            if (d < a) {
                b = a;
                a = d;
            } else if (d < b) {
                b = d;
            }
        }
        margin = std::min(margin, b - a);
    }
    return margin;
}

bool well_separated(const TinyProblem& p) {
    const WeightVector theta = hof_weights(p.model, ObjectCode{0});
    std::vector<Vec3> sphere;
    for (std::size_t i = 0; i < p.sphere.rows(); ++i) {
        sphere.emplace_back(p.sphere.at(i, 0), p.sphere.at(i, 1), p.sphere.at(i, 2));
    }
    std::vector<Vec3> pred;
    for (const TangentPlane& t : map_sphere_points(p.model.mapping(), theta, sphere)) {
        if (t.degenerate()) return false;
        pred.push_back(t.p);
    }
    constexpr double kMargin = 1e-3;
    return matching_margin(pred, p.gt.points) > kMargin && matching_margin(p.gt.points, pred) > kMargin;
}

} // namespace

std::string format_result(const CheckResult& r) {
    std::ostringstream os;
    os << (r.passed ? "PASS  " : "FAIL  ") << r.name << "  " << r.detail << "  ("
       << fmt("%.2f", r.seconds) << " s)";
    return os.str();
}

CheckResult gradient_fidelity(std::size_t trials, std::uint64_t seed) {
    const auto start = Clock::now();
    CheckResult r{"gradient fidelity", true, "", 0.0};
    double worst_op = 0.0;
    std::string worst_name;
    std::vector<std::string> failing;
    std::uint64_t case_seed = seed;
    for (const OpCase& op : op_cases()) {
        double worst = 0.0;
        for (std::size_t t = 0; t < trials; ++t) {
            std::mt19937_64 rng(derive_seed(case_seed, t));
            const std::uint64_t wseed = derive_seed(case_seed, t + 100000);
            Function f = [&op, wseed](ad::Tape&, const std::vector<ad::Var>& v) {
                return contract(op.op(v), wseed);
            };
            worst = std::max(worst, gradient_error(f, op.inputs(rng)));
        }
        ++case_seed;
        if (!(worst < 1e-6)) failing.push_back(op.name + "=" + fmt("%.2e", worst));
        if (worst > worst_op || worst_name.empty()) {
            worst_op = worst;
            worst_name = op.name;
        }
    }

    double worst_e2e = 0.0;
    std::size_t rejected = 0;
    for (std::size_t t = 0, draw = 0; t < trials; ++t) {
        TinyProblem p = tiny_problem(derive_seed(seed, 7000 + draw++));
        while (!well_separated(p)) {
            ++rejected;
            p = tiny_problem(derive_seed(seed, 7000 + draw++));
        }
        std::vector<Tensor> inputs;
        for (const NamedTensor& nt : p.model.parameters()) inputs.push_back(nt.value);
        Function f = [&p](ad::Tape& tape, const std::vector<ad::Var>& v) {
            const ad::Var theta = hof_forward(p.model, v, ObjectCode{0});
            const MappingOutput out = mapping_forward(p.model.mapping(), theta, tape.constant(p.sphere));
            return total_loss(p.gt, out, LossWeights{}).value;
        };
        worst_e2e = std::max(worst_e2e, gradient_error(f, inputs));
    }
    if (!(worst_e2e < 1e-4)) failing.push_back("total_loss=" + fmt("%.2e", worst_e2e));

    r.seconds = since(start);
    if (r.seconds >= 30.0) failing.push_back("runtime " + fmt("%.1f", r.seconds) + " s >= 30 s");
    r.passed = failing.empty();
    r.detail = std::to_string(op_cases().size()) + " ops x " + std::to_string(trials) +
               " trials, worst op rel err " + fmt("%.2e", worst_op) + " (" + worst_name +
               ", limit 1e-6); total_loss rel err " + fmt("%.2e", worst_e2e) + " (limit 1e-4, " + std::to_string(rejected) + " draws with near-tied matches skipped)";
    for (const std::string& s : failing) r.detail += "; FAILED " + s;
    return r;
}

namespace {

std::size_t brute_nearest(const Vec3& q, const std::vector<Vec3>& pts) {
    std::size_t best = 0;
    double best_d = squared_distance(q, pts[0]);
    for (std::size_t i = 1; i < pts.size(); ++i) {
        const double d = squared_distance(q, pts[i]);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

double brute_eval_chamfer(const std::vector<Vec3>& x, const std::vector<Vec3>& y) {
    std::vector<double> terms;
    for (const Vec3& p : x) terms.push_back(squared_distance(p, y[brute_nearest(p, y)]));
    return exact_sum(terms) / static_cast<double>(x.size());
}

double brute_norm_mean(const std::vector<Vec3>& x, const std::vector<Vec3>& y) {
    std::vector<double> terms;
    for (const Vec3& p : x) terms.push_back(std::sqrt(squared_distance(p, y[brute_nearest(p, y)])));
    return exact_sum(terms) / static_cast<double>(x.size());
}

std::vector<Vec3> random_points(std::size_t n, std::mt19937_64& rng, bool lattice) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::uniform_int_distribution<int> cell(-3, 3);
    std::vector<Vec3> pts(n);
    for (Vec3& p : pts) {
        p = lattice ? Vec3(cell(rng), cell(rng), cell(rng)) : Vec3(dist(rng), dist(rng), dist(rng));
    }
    return pts;
}

double loss_value(const std::vector<Vec3>& x, const std::vector<Vec3>& y) {
    ad::Tape tape;
    return chamfer_loss(tape.constant(PointCloud{x}.to_tensor()), tape.constant(PointCloud{y}.to_tensor()))
        .value()
        .item();
}

} // namespace

CheckResult chamfer_oracle(std::size_t pairs, std::size_t max_points, std::uint64_t seed) {
    const auto start = Clock::now();
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> size(1, max_points);
    std::size_t mismatches = 0;
    for (std::size_t i = 0; i < pairs; ++i) {
        // Every tenth pair sits on a small integer lattice to force exact ties.
        const bool lattice = i % 10 == 0;
        const auto x = random_points(size(rng), rng, lattice);
        const auto y = random_points(size(rng), rng, lattice);
        const double eval = eval_chamfer(PointCloud{x}, PointCloud{y});
        const double loss = loss_value(x, y);
        const double brute_loss = brute_norm_mean(x, y) + brute_norm_mean(y, x);
        if (eval != brute_eval_chamfer(x, y) || loss != brute_loss) ++mismatches;
    }
    CheckResult r{"chamfer oracle", mismatches == 0, "", since(start)};
    if (r.seconds >= 60.0) r.passed = false;
    r.detail = std::to_string(pairs) + " random pairs (n <= " + std::to_string(max_points) +
               "), mismatches vs O(n^2) scan: " + std::to_string(mismatches) + " (eval_chamfer and chamfer_loss, exact)";
    return r;
}

namespace {

OrientedPointCloud random_oriented(std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    OrientedPointCloud c;
    for (std::size_t i = 0; i < n; ++i) {
        c.points.emplace_back(normal(rng), normal(rng), normal(rng));
        c.normals.push_back(Vec3(normal(rng), normal(rng), normal(rng)).normalized());
    }
    return c;
}

double cosine_value(const OrientedPointCloud& gt, const std::vector<Vec3>& pos,
                    const std::vector<Vec3>& dir) {
    ad::Tape tape;
    return cosine_surface_loss(gt, tape.constant(PointCloud{pos}.to_tensor()),
                               tape.constant(PointCloud{dir}.to_tensor()))
        .value.value()
        .item();
}

// Small learned-code setup shared by the training-level checks.
struct TinyRun {
    HofModel model;
    std::vector<TrainObject> data;
    TrainConfig cfg;
};

TinyRun tiny_run(std::uint64_t seed, std::size_t iterations) {
    MappingNetSpec ms;
    ms.hidden_dims = {32, 32};
    EncoderSpec es;
    es.code_dim = 8;
    es.head_hidden = 32;
    es.object_count = 2;
    TinyRun t{HofModel::initialize(ms, es, seed), {}, {}};
    t.data.push_back({"torus", make_torus(0.3, 0.1, 24, 12), ObjectCode{0}});
    t.data.push_back({"cube", make_cube(0.4), ObjectCode{1}});
    t.cfg.learning_rate = 1e-3;
    t.cfg.epochs = 1;
    t.cfg.iterations_per_object = iterations;
    t.cfg.samples_per_iter = 200;
    t.cfg.gt_samples = 500;
    t.cfg.seed = seed;
    return t;
}

} // namespace

CheckResult loss_identities(std::uint64_t seed) {
    const auto start = Clock::now();
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> size(1, 120);
    std::vector<std::string> failing;
    std::size_t trials = 0;
    for (std::size_t i = 0; i < 200; ++i, ++trials) {
        auto x = random_points(size(rng), rng, i % 4 == 0);
        auto y = random_points(size(rng), rng, i % 4 == 0);
        const double xy = loss_value(x, y);
        if (xy != loss_value(y, x)) failing.push_back("symmetry");
        std::shuffle(x.begin(), x.end(), rng);
        std::shuffle(y.begin(), y.end(), rng);
        if (xy != loss_value(x, y)) failing.push_back("permutation");

        const OrientedPointCloud gt = random_oriented(size(rng), rng);
        const OrientedPointCloud pred = random_oriented(size(rng), rng);
        std::vector<Vec3> flipped;
        for (const Vec3& n : pred.normals) flipped.push_back(-n);
        const double c = cosine_value(gt, pred.points, pred.normals);
        if (c != cosine_value(gt, pred.points, flipped)) failing.push_back("cosine flip");
        if (!(c >= 0.0 && c <= 1.0)) failing.push_back("cosine range");
    }
    // Perfect, flipped and orthogonal normals hit the ends of the range.
    OrientedPointCloud axis;
    axis.points = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    axis.normals = {{0, 0, 1}, {0, 1, 0}, {1, 0, 0}};
    std::vector<Vec3> neg, ortho;
    for (const Vec3& n : axis.normals) {
        neg.push_back(-n);
        ortho.push_back(Vec3(n.y(), n.z(), n.x()));
    }
    if (cosine_value(axis, axis.points, axis.normals) != 0.0 ||
        cosine_value(axis, axis.points, neg) != 0.0 || cosine_value(axis, axis.points, ortho) != 1.0) {
        failing.push_back("cosine anchors");
    }

    std::size_t steps = 0;
    for (const LossWeights w : {LossWeights{}, LossWeights{0.7, 0.3}, LossWeights{1.0, 0.0}}) {
        TinyRun run = tiny_run(derive_seed(seed, steps), 10);
        run.cfg.loss_weights = w;
        Trainer trainer(std::move(run.model), std::move(run.data), run.cfg);
        while (!trainer.done()) {
            const TrainRecord rec = trainer.step();
            ++steps;
            if (rec.loss.total != w.lambda_cd * rec.loss.chamfer + w.lambda_cos * rec.loss.cosine) {
                failing.push_back("total at step " + std::to_string(rec.iteration));
            }
        }
    }
    std::sort(failing.begin(), failing.end());
    failing.erase(std::unique(failing.begin(), failing.end()), failing.end());
    CheckResult r{"loss identities", failing.empty(), "", since(start)};
    r.detail = std::to_string(trials) + " random cases, " + std::to_string(steps) +
               " logged training steps; exact equality required";
    for (const std::string& s : failing) r.detail += "; FAILED " + s;
    return r;
}

CheckResult sampler_statistics(std::uint64_t seed) {
    const auto start = Clock::now();
    const auto sphere = sample_sphere_uniform(100000, seed);
    Vec3 mean = Vec3::Zero();
    std::size_t upper = 0;
    for (const Vec3& p : sphere) {
        mean += p;
        upper += p.z() > 0.0 ? 1 : 0;
    }
    mean /= static_cast<double>(sphere.size());
    const double max_mean = mean.cwiseAbs().maxCoeff();
    const double hemi = static_cast<double>(upper) / static_cast<double>(sphere.size());

    std::vector<std::size_t> faces;
    sample_mesh_uniform(make_cube(), 60000, derive_seed(seed, 1), &faces);
    std::array<double, 6> side{};
    for (std::size_t f : faces) side[f / 2] += 1.0;
    double worst_side = 0.0;
    for (double& s : side) {
        s /= static_cast<double>(faces.size());
        worst_side = std::max(worst_side, std::fabs(s - 1.0 / 6.0));
    }
    CheckResult r{"sampler statistics", max_mean < 0.02 && std::fabs(hemi - 0.5) < 0.01 && worst_side < 0.01,
                  "", since(start)};
    r.detail = "sphere n=100000: max |axis mean| " + fmt("%.4f", max_mean) + " (< 0.02), z>0 fraction " +
               fmt("%.4f", hemi) + " (0.5 +- 0.01); cube n=60000: max |side fraction - 1/6| " +
               fmt("%.4f", worst_side) + " (< 0.01)";
    return r;
}

CheckResult pca_oracle(std::uint64_t seed) {
    const auto start = Clock::now();
    const PointCloud cloud{sample_sphere_uniform(5000, seed)};
    const OrientedPointCloud est = estimate_normals_pca(cloud, 30);
    std::size_t radial = 0;
    for (std::size_t i = 0; i < est.size(); ++i) {
        radial += std::fabs(est.normals[i].dot(cloud.points[i].normalized())) > 0.99 ? 1 : 0;
    }
    const double frac = static_cast<double>(radial) / static_cast<double>(est.size());
    CheckResult r{"PCA baseline oracle", frac >= 0.99, "", since(start)};
    r.detail = "5000 sphere points, k=30: fraction with |n.p| > 0.99 = " + fmt("%.4f", frac) + " (>= 0.99)";
    return r;
}

CheckResult metric_anchors(std::uint64_t seed) {
    const auto start = Clock::now();
    std::vector<std::string> failing;

    EvalConfig cfg;
    const TriangleMesh torus = make_torus(0.3, 0.12, 32, 16);
    const OrientedPointCloud self = sample_mesh_uniform(torus, cfg.n_gt_samples, seed);
    const EvalReport e = evaluate(self, torus, cfg, seed);
    if (e.chamfer_sym != 0.0 || e.chamfer_pred_to_gt != 0.0 || e.chamfer_gt_to_pred != 0.0) {
        failing.push_back("self chamfer");
    }
    if (e.fscore_tau != 100.0 || e.fscore_2tau != 100.0) failing.push_back("self fscore");
    if (e.cosine_similarity != 1.0) failing.push_back("self cosine");

    std::mt19937_64 rng(derive_seed(seed, 1));
    for (int t = 0; t < 20; ++t) {
        const PointCloud a{random_points(300, rng, false)};
        const PointCloud b{random_points(400, rng, false)};
        double prev = -1.0;
        for (double tau = 1e-5; tau < 10.0; tau *= 1.5) {
            const double f = eval_fscore(a, b, tau);
            if (f < prev) failing.push_back("fscore monotonicity");
            prev = f;
        }
    }

    const std::vector<Vec3> origin{{0, 0, 0}};
    if (loss_value(origin, {{1, 0, 0}}) != 2.0) failing.push_back("norm loss single pair");
    if (eval_chamfer(PointCloud{origin}, PointCloud{{{3, 4, 0}}}) != 25.0) {
        failing.push_back("eval chamfer single pair");
    }
    std::sort(failing.begin(), failing.end());
    failing.erase(std::unique(failing.begin(), failing.end()), failing.end());
    CheckResult r{"metric anchors", failing.empty(), "", since(start)};
    r.detail = "self-eval chamfer " + fmt("%g", e.chamfer_sym) + ", F@tau " + fmt("%g", e.fscore_tau) +
               ", cosine " + fmt("%.17g", e.cosine_similarity) +
               "; F monotone in tau; single-pair loss 2 and eval chamfer 25";
    for (const std::string& s : failing) r.detail += "; FAILED " + s;
    return r;
}

namespace {

std::string log_text(const std::vector<TrainRecord>& records) {
    std::string out = train_log_header();
    for (TrainRecord rec : records) {
        rec.seconds = 0.0;
        out += train_log_row(rec);
    }
    return out;
}

bool same_losses(const TrainRecord& a, const TrainRecord& b) {
    return a.iteration == b.iteration && a.loss.chamfer == b.loss.chamfer &&
           a.loss.cosine == b.loss.cosine && a.loss.total == b.loss.total &&
           a.loss.degenerate_count == b.loss.degenerate_count;
}

} // namespace

CheckResult determinism_persistence(std::uint64_t seed) {
    const auto start = Clock::now();
    std::vector<std::string> failing;
    constexpr std::size_t kPerObject = 12;

    auto full_run = [&] {
        TinyRun run = tiny_run(seed, kPerObject);
        Trainer trainer(std::move(run.model), std::move(run.data), run.cfg);
        auto records = train(trainer);
        return std::make_pair(std::move(records), trainer.checkpoint());
    };
    const auto [records_a, ckpt_a] = full_run();
    const auto [records_b, ckpt_b] = full_run();
    if (log_text(records_a) != log_text(records_b)) failing.push_back("training logs differ");

    const auto ply = [&](const Checkpoint& c, bool binary) {
        return encode_oriented_cloud(reconstruct_surface(c.model.mapping(), *c.theta, 500, seed).cloud, binary);
    };
    if (ply(ckpt_a, true) != ply(ckpt_b, true) || ply(ckpt_a, false) != ply(ckpt_b, false)) {
        failing.push_back("PLY bytes differ");
    }

    // Interrupt halfway, persist through a file, resume.
    TinyRun run = tiny_run(seed, kPerObject);
    Trainer first(std::move(run.model), run.data, run.cfg);
    std::vector<TrainRecord> records_c;
    while (first.iteration() < first.total_iterations() / 2) records_c.push_back(first.step());
    const auto path = (std::filesystem::temp_directory_path() /
                       ("hofsurf-selftest-" + std::to_string(seed) + ".ckpt")).string();
    save_checkpoint(first.checkpoint(), path);
    Checkpoint loaded = load_checkpoint(path);
    std::filesystem::remove(path);
    if (encode_checkpoint(loaded) != encode_checkpoint(first.checkpoint())) {
        failing.push_back("checkpoint round trip");
    }
    Trainer resumed = Trainer::resume(std::move(loaded), run.data, run.cfg);
    while (!resumed.done()) records_c.push_back(resumed.step());
    if (records_c.size() != records_a.size() ||
        !std::equal(records_c.begin(), records_c.end(), records_a.begin(), same_losses)) {
        failing.push_back("resumed trajectory differs");
    }
    if (encode_checkpoint(resumed.checkpoint()) != encode_checkpoint(ckpt_a)) {
        failing.push_back("resumed final state differs");
    }

    // The final checkpoint reproduces the final loss.
    const Trainer reloaded = Trainer::resume(parse_checkpoint(encode_checkpoint(ckpt_a), "memory"),
                                             run.data, run.cfg);
    const LossReport again = reloaded.probe(0, 0);
    const LossReport direct = resumed.probe(0, 0);
    if (std::fabs(again.total - direct.total) > 1e-12) failing.push_back("reloaded loss");

    CheckResult r{"determinism and persistence", failing.empty(), "", since(start)};
    r.detail = std::to_string(records_a.size()) + "-step runs: logs, PLY bytes (ascii and binary), "
               "checkpoint bytes and resumed trajectory compared bit for bit";
    for (const std::string& s : failing) r.detail += "; FAILED " + s;
    return r;
}

CheckResult parameter_count_anchor() {
    const auto start = Clock::now();
    const MappingNetSpec spec;
    std::mt19937_64 rng(17);
    WeightVector theta;
    theta.values.resize(spec.param_count());
    for (double& v : theta.values) v = std::uniform_real_distribution<double>(-1, 1)(rng);
    const bool round_trip = pack(spec, unpack(spec, theta)) == theta;
    const std::size_t emitted = HofModel(spec, EncoderSpec{}).parameter("emit.bias").size();
    CheckResult r{"parameter count anchor",
                  spec.param_count() == 17798 && round_trip && emitted == 17798, "", since(start)};
    r.detail = "default spec param_count " + std::to_string(spec.param_count()) +
               " (expected 17798), emission width " + std::to_string(emitted) +
               ", pack/unpack round trip " + (round_trip ? "exact" : "BROKEN");
    return r;
}

// --- torus overfit ----------------------------------------------------------

TorusRun run_torus_overfit(const TorusRunConfig& cfg) {
    const auto start = Clock::now();
    TorusRun run;
    run.config = cfg;
    run.mesh = make_torus(cfg.major, cfg.minor, cfg.ring_segments, cfg.tube_segments);

    EncoderSpec es;
    es.code_dim = cfg.code_dim;
    es.head_hidden = cfg.head_hidden;
    TrainConfig tc;
    tc.learning_rate = cfg.learning_rate;
    tc.epochs = 1;
    tc.iterations_per_object = cfg.iterations;
    tc.samples_per_iter = cfg.samples_per_iter;
    tc.gt_samples = cfg.gt_samples;
    tc.seed = cfg.seed;
    Trainer trainer(HofModel::initialize(MappingNetSpec{}, es, derive_seed(cfg.seed, 0x4d4f44)),
                    {{"torus", run.mesh, ObjectCode{0}}}, tc);
    run.records = train(trainer);
    run.checkpoint = trainer.checkpoint();

    const std::uint64_t recon_seed = derive_seed(cfg.seed, 0x5245);
    const std::uint64_t eval_seed = derive_seed(cfg.seed, 0x4556);
    run.coarse = reconstruct_surface(MappingNetSpec{}, *run.checkpoint->theta, 1000, recon_seed);
    run.fine = reconstruct_surface(MappingNetSpec{}, *run.checkpoint->theta, 10000, recon_seed);
    EvalConfig ec;
    run.coarse_eval = evaluate(run.coarse.cloud, run.mesh, ec, eval_seed);
    run.fine_eval = evaluate(run.fine.cloud, run.mesh, ec, eval_seed);
    run.seconds = since(start);
    return run;
}

CheckResult figure1_workflow(const TorusRun& run) {
    const double c = run.coarse_eval.chamfer_sym;
    const double f = run.fine_eval.chamfer_sym;
    const double gap = std::fabs(c - f) / std::min(c, f);
    const bool coverage = run.fine_eval.chamfer_gt_to_pred <= run.coarse_eval.chamfer_gt_to_pred;
    CheckResult r{"figure-1 resolution independence", gap <= 0.25 && coverage, "", run.seconds};
    r.detail = "one checkpoint, " + std::to_string(run.records.size()) +
               " iterations: sym Chamfer x1000 at 1000 samples " + fmt("%.4f", 1000 * c) +
               ", at 10000 samples " + fmt("%.4f", 1000 * f) + ", relative gap " + fmt("%.3f", gap) +
               " (<= 0.25); gt->pred x1000 " + fmt("%.4f", 1000 * run.coarse_eval.chamfer_gt_to_pred) +
               " -> " + fmt("%.4f", 1000 * run.fine_eval.chamfer_gt_to_pred) + " (must not increase)";
    return r;
}

CheckResult desk_convergence(const TorusRun& run) {
    CheckResult r{"desk-scale convergence", false, "", run.seconds};
    if (run.records.size() < 10) {
        r.detail = "run shorter than 10 iterations";
        return r;
    }
    const double early = run.records[9].loss.chamfer;
    const double late = run.records.back().loss.chamfer;
    const double ratio = late / early;
    const double cosine = run.fine_eval.cosine_similarity;
    r.passed = ratio < 0.25 && cosine > 0.80;
    r.detail = "training Chamfer " + fmt("%.5f", early) + " at iteration 10 -> " + fmt("%.5f", late) +
               " at " + std::to_string(run.records.size()) + ", ratio " + fmt("%.3f", ratio) +
               " (< 0.25); eval cosine " + fmt("%.4f", cosine) + " (> 0.80)";
    return r;
}

std::vector<CheckResult> run_selftest() {
    return {gradient_fidelity(),   chamfer_oracle(),  loss_identities(),
            sampler_statistics(),  pca_oracle(),      metric_anchors(),
            determinism_persistence(), parameter_count_anchor()};
}

} // namespace hofsurf::checks
