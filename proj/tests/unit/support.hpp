#pragma once

// Oracles shared by the unit tests: central differences and exhaustive
// nearest-neighbour scans written without the library's search code.

#include "hofsurf/autodiff.hpp"
#include "hofsurf/geometry.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

namespace testsupport {

using hofsurf::Tensor;
using hofsurf::Vec3;
namespace ad = hofsurf::ad;

using ScalarFn = std::function<ad::Var(ad::Tape&, ad::Var)>;

inline double evaluate(const ScalarFn& f, const Tensor& x) {
    ad::Tape tape;
    return f(tape, tape.constant(x)).value().item();
}

inline Tensor analytic_gradient(const ScalarFn& f, const Tensor& x) {
    ad::Tape tape;
    ad::Var leaf = tape.leaf(x);
    tape.backward(f(tape, leaf));
    return tape.grad(leaf);
}

inline Tensor numeric_gradient(const ScalarFn& f, const Tensor& x, double h = 1e-5) {
    Tensor g(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        Tensor plus = x;
        Tensor minus = x;
        plus[i] += h;
        minus[i] -= h;
        g[i] = (evaluate(f, plus) - evaluate(f, minus)) / (2.0 * h);
    }
    return g;
}

// |a - n| / max(|a|, |n|, 1)
inline double relative_error(const Tensor& a, const Tensor& n) {
    double diff = 0.0, na = 0.0, nn = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff += (a[i] - n[i]) * (a[i] - n[i]);
        na += a[i] * a[i];
        nn += n[i] * n[i];
    }
    return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nn), 1.0});
}

inline double gradient_error(const ScalarFn& f, const Tensor& x) {
    return relative_error(analytic_gradient(f, x), numeric_gradient(f, x));
}

inline Tensor random_tensor(hofsurf::Shape shape, std::mt19937_64& rng, double lo = -1.0,
                            double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = u(rng);
    return t;
}

inline std::vector<Vec3> random_points(std::size_t n, std::mt19937_64& rng, double extent = 1.0) {
    std::uniform_real_distribution<double> u(-extent, extent);
    std::vector<Vec3> pts(n);
    for (auto& p : pts) p = Vec3(u(rng), u(rng), u(rng));
    return pts;
}

struct Nearest {
    std::size_t index = 0;
    double d2 = std::numeric_limits<double>::infinity();
};

inline Nearest brute_nearest(const std::vector<Vec3>& pts, const Vec3& q) {
    Nearest best;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const Vec3 d = pts[i] - q;
        const double d2 = d.x() * d.x() + d.y() * d.y() + d.z() * d.z();
        if (d2 < best.d2) best = {i, d2};
    }
    return best;
}

// min over y of |x_i - y|^2 for every x_i.
inline std::vector<double> brute_min_sq(const std::vector<Vec3>& x, const std::vector<Vec3>& y) {
    std::vector<double> terms;
    terms.reserve(x.size());
    for (const auto& p : x) terms.push_back(brute_nearest(y, p).d2);
    return terms;
}

} // namespace testsupport
