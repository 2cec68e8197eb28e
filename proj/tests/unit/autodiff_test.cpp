#include "support.hpp"

#include "hofsurf/error.hpp"
#include "hofsurf/numeric.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

using namespace hofsurf;
using namespace testsupport;

namespace {

Tensor row(std::initializer_list<double> v) { return Tensor({v.size()}, std::vector<double>(v)); }

// Weighted sum so every output element gets a distinct upstream gradient.
ad::Var weighted_sum(ad::Tape& t, ad::Var v, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Tensor w = random_tensor(v.shape(), rng);
    return ad::sum(ad::mul(v, t.constant(w)));
}

} // namespace

TEST(Matmul, IdentityTimesIdentity) {
    ad::Tape t;
    const Tensor eye = Tensor::from_rows({{1, 0}, {0, 1}});
    EXPECT_EQ(ad::matmul(t.constant(eye), t.constant(eye)).value(), eye);
}

TEST(Matmul, HandArithmetic) {
    ad::Tape t;
    auto c = ad::matmul(t.constant(Tensor::from_rows({{1, 2}, {3, 4}})),
                        t.constant(Tensor::from_rows({{0}, {1}})));
    EXPECT_EQ(c.value(), Tensor::from_rows({{2}, {4}}));
}

TEST(Matmul, GradientMatchesFiniteDifferences) {
    std::mt19937_64 rng(10);
    for (int trial = 0; trial < 10; ++trial) {
        const Tensor a = random_tensor({5, 4}, rng);
        const Tensor b = random_tensor({4, 3}, rng);
        EXPECT_LT(gradient_error([&](ad::Tape& t, ad::Var x) {
                      return weighted_sum(t, ad::matmul(x, t.constant(b)), 1);
                  }, a), 1e-6);
        EXPECT_LT(gradient_error([&](ad::Tape& t, ad::Var x) {
                      return weighted_sum(t, ad::matmul(t.constant(a), x), 2);
                  }, b), 1e-6);
    }
}

TEST(Matmul, RejectsInnerDimensionMismatch) {
    ad::Tape t;
    EXPECT_THROW(ad::matmul(t.constant(Tensor({2, 3})), t.constant(Tensor({2, 3}))), DimensionError);
}

TEST(Matmul, InjectedFaultIsVisibleToFiniteDifferences) {
    std::mt19937_64 rng(11);
    const Tensor a = random_tensor({5, 4}, rng);
    const Tensor b = random_tensor({4, 3}, rng);
    auto f = [&](ad::Tape& t, ad::Var x) { return weighted_sum(t, ad::matmul(x, t.constant(b)), 3); };
    ad::testing::set_gradient_fault(true);
    const double err = gradient_error(f, a);
    ad::testing::set_gradient_fault(false);
    EXPECT_GT(err, 1e-6);
    EXPECT_LT(gradient_error(f, a), 1e-6);
}

TEST(Relu, Definition) {
    ad::Tape t;
    EXPECT_EQ(ad::relu(t.constant(row({-1, 0, 2}))).value(), row({0, 0, 2}));
}

TEST(Relu, DeadRegionHasZeroGradient) {
    const Tensor x = row({-3, -2, -0.5});
    auto f = [](ad::Tape&, ad::Var v) { return ad::sum(ad::relu(v)); };
    EXPECT_EQ(evaluate(f, x), 0.0);
    const Tensor g = analytic_gradient(f, x);
    for (double v : g.values()) EXPECT_EQ(v, 0.0);
}

TEST(Relu, GradientAwayFromKink) {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 10; ++trial) {
        Tensor x = random_tensor({6, 5}, rng);
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (std::fabs(x[i]) < 0.05) x[i] = 0.5;
        }
        EXPECT_LT(gradient_error([](ad::Tape& t, ad::Var v) { return weighted_sum(t, ad::relu(v), 4); }, x),
                  1e-6);
    }
}

TEST(Reductions, SumMeanAndMin) {
    ad::Tape t;
    EXPECT_EQ(ad::sum(t.constant(row({1, 2, 3}))).value().item(), 6.0);
    EXPECT_EQ(ad::mean(t.constant(row({1, 2, 3}))).value().item(), 2.0);
    const auto m = ad::min_reduce(t.constant(row({3, 1, 1})));
    EXPECT_EQ(m.value.value().item(), 1.0);
    EXPECT_EQ(m.index, 1u);
}

TEST(Reductions, MinGradientGoesToSelectedElement) {
    const Tensor g = analytic_gradient([](ad::Tape&, ad::Var v) { return ad::min_reduce(v).value; },
                                       row({3, 1, 1}));
    EXPECT_EQ(g, row({0, 1, 0}));
}

TEST(Reductions, SumIsOrderIndependent) {
    std::mt19937_64 rng(13);
    std::vector<double> v(1000);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (auto& x : v) x = u(rng) * std::pow(10.0, static_cast<int>(u(rng)) % 8);
    const double reference = exact_sum(v);
    for (int k = 0; k < 5; ++k) {
        std::shuffle(v.begin(), v.end(), rng);
        EXPECT_EQ(exact_sum(v), reference);
    }
}

TEST(Reductions, ExactSumKnownValues) {
    EXPECT_EQ(exact_sum(std::vector<double>{1e100, 1.0, -1e100}), 1.0);
    EXPECT_EQ(exact_sum(std::vector<double>(10, 0.1)), 1.0);
    EXPECT_EQ(exact_sum(std::vector<double>{}), 0.0);
    // Integers below 2^53 add exactly in any order.
    std::vector<double> ints;
    for (int i = 1; i <= 1000; ++i) ints.push_back(i);
    EXPECT_EQ(exact_sum(ints), 500500.0);
}

TEST(Elementwise, SqrtGradientAtFour) {
    auto f = [](ad::Tape&, ad::Var v) { return ad::sum(ad::sqrt(v)); };
    EXPECT_DOUBLE_EQ(analytic_gradient(f, row({4}))[0], 0.25);
    EXPECT_NEAR(numeric_gradient(f, row({4}))[0], 0.25, 1e-9);
}

TEST(Elementwise, ClampPassesGradientInsideOnly) {
    const Tensor g = analytic_gradient([](ad::Tape&, ad::Var v) { return ad::sum(ad::clamp(v, 0.0, 1.0)); },
                                       row({-0.5, 0.25, 0.75, 1.5}));
    EXPECT_EQ(g, row({0, 1, 1, 0}));
}

TEST(Elementwise, BinaryOpsAgainstFiniteDifferences) {
    std::mt19937_64 rng(14);
    const Tensor other = random_tensor({4, 3}, rng);
    const std::vector<ScalarFn> fns = {
        [&](ad::Tape& t, ad::Var v) { return weighted_sum(t, ad::add(v, t.constant(other)), 5); },
        [&](ad::Tape& t, ad::Var v) { return weighted_sum(t, ad::sub(t.constant(other), v), 6); },
        [&](ad::Tape& t, ad::Var v) { return weighted_sum(t, ad::mul(v, v), 7); },
        [&](ad::Tape& t, ad::Var v) { return weighted_sum(t, ad::scale(v, -2.5), 8); },
        [&](ad::Tape& t, ad::Var v) { return weighted_sum(t, ad::add_scalar(v, 3.0), 9); },
        [&](ad::Tape& t, ad::Var v) { return weighted_sum(t, ad::abs(v), 10); },
        [&](ad::Tape&, ad::Var v) { return ad::mean(ad::mul(v, v)); },
    };
    for (int trial = 0; trial < 10; ++trial) {
        Tensor x = random_tensor({4, 3}, rng);
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (std::fabs(x[i]) < 0.05) x[i] = -0.3;
        }
        for (const auto& f : fns) EXPECT_LT(gradient_error(f, x), 1e-6);
    }
}

TEST(RowOps, AgainstFiniteDifferences) {
    std::mt19937_64 rng(15);
    const Tensor other = random_tensor({6, 3}, rng);
    const Tensor bias = random_tensor({3}, rng);
    const std::vector<std::size_t> picks{4, 0, 0, 5, 2};
    const std::vector<ScalarFn> fns = {
        [&](ad::Tape& t, ad::Var v) { return weighted_sum(t, ad::row_norm(v), 11); },
        [&](ad::Tape& t, ad::Var v) { return weighted_sum(t, ad::normalize_rows(v), 12); },
        [&](ad::Tape& t, ad::Var v) { return weighted_sum(t, ad::row_dot(v, t.constant(other)), 13); },
        [&](ad::Tape& t, ad::Var v) { return weighted_sum(t, ad::gather_rows(v, picks), 14); },
        [&](ad::Tape& t, ad::Var v) { return weighted_sum(t, ad::columns(v, 1, 3), 15); },
        [&](ad::Tape& t, ad::Var v) { return weighted_sum(t, ad::concat(v, t.constant(other)), 16); },
        [&](ad::Tape& t, ad::Var v) { return weighted_sum(t, ad::add_bias(v, t.constant(bias)), 17); },
        [&](ad::Tape& t, ad::Var v) { return weighted_sum(t, ad::reshape(v, {3, 6}), 18); },
        [&](ad::Tape& t, ad::Var v) { return weighted_sum(t, ad::slice(v, 2, 7), 19); },
    };
    for (int trial = 0; trial < 10; ++trial) {
        const Tensor x = random_tensor({6, 3}, rng);
        for (const auto& f : fns) EXPECT_LT(gradient_error(f, x), 1e-6);
    }
}

TEST(Conv2d, AgainstFiniteDifferences) {
    std::mt19937_64 rng(16);
    const Tensor img = random_tensor({2, 7, 7}, rng);
    const Tensor w = random_tensor({3, 2, 3, 3}, rng);
    const Tensor b = random_tensor({3}, rng);
    const ad::Conv2dParams p{2, 1};
    EXPECT_LT(gradient_error([&](ad::Tape& t, ad::Var v) {
                  return weighted_sum(t, ad::conv2d(v, t.constant(w), t.constant(b), p), 20);
              }, img), 1e-6);
    EXPECT_LT(gradient_error([&](ad::Tape& t, ad::Var v) {
                  return weighted_sum(t, ad::conv2d(t.constant(img), v, t.constant(b), p), 21);
              }, w), 1e-6);
    EXPECT_LT(gradient_error([&](ad::Tape& t, ad::Var v) {
                  return weighted_sum(t, ad::conv2d(t.constant(img), t.constant(w), v, p), 22);
              }, b), 1e-6);
}

TEST(Conv2d, SingleTapKernelCopiesInput) {
    ad::Tape t;
    const Tensor img({1, 2, 2}, {1, 2, 3, 4});
    auto out = ad::conv2d(t.constant(img), t.constant(Tensor({1, 1, 1, 1}, {1})), t.constant(Tensor({1})), {});
    EXPECT_EQ(out.value(), img);
}

TEST(Backward, SumGivesOnes) {
    const Tensor g = analytic_gradient([](ad::Tape&, ad::Var v) { return ad::sum(v); }, Tensor({2, 3, 4}));
    for (double v : g.values()) EXPECT_EQ(v, 1.0);
}

TEST(Backward, MeanOfSquares) {
    const Tensor x = row({1, -2, 3, 0.5});
    const Tensor g = analytic_gradient([](ad::Tape&, ad::Var v) { return ad::mean(ad::mul(v, v)); }, x);
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_DOUBLE_EQ(g[i], 2.0 * x[i] / 4.0);
}

TEST(Backward, LeafGradientsAccumulateUntilCleared) {
    ad::Tape t;
    auto x = t.leaf(row({1, 2}));
    auto loss = ad::sum(ad::scale(x, 3.0));
    t.backward(loss);
    t.backward(loss);
    EXPECT_EQ(t.grad(x), row({6, 6}));
    t.zero_grad();
    t.backward(loss);
    EXPECT_EQ(t.grad(x), row({3, 3}));
}

TEST(Backward, ConstantsReceiveNothing) {
    ad::Tape t;
    auto c = t.constant(row({1, 2}));
    auto x = t.leaf(row({3, 4}));
    t.backward(ad::sum(ad::mul(c, x)));
    EXPECT_FALSE(t.requires_grad(c));
    EXPECT_EQ(t.grad(c), row({0, 0}));
    EXPECT_EQ(t.grad(x), row({1, 2}));
}

TEST(Backward, RequiresScalarLoss) {
    ad::Tape t;
    auto x = t.leaf(row({1, 2}));
    EXPECT_THROW(t.backward(x), ContractError);
}

TEST(TensorType, RejectsNonFiniteAndBadLengths) {
    EXPECT_THROW(Tensor({2}, {1.0, std::numeric_limits<double>::quiet_NaN()}), NumericalError);
    EXPECT_THROW(Tensor({1}, {std::numeric_limits<double>::infinity()}), NumericalError);
    EXPECT_THROW(Tensor({2, 2}, {1.0, 2.0}), DimensionError);
}

TEST(TensorType, ShapeMismatchIsRejected) {
    ad::Tape t;
    EXPECT_THROW(ad::add(t.constant(Tensor({2, 3})), t.constant(Tensor({3, 2}))), DimensionError);
}

TEST(TensorType, NormalizeRejectsZeroRow) {
    ad::Tape t;
    EXPECT_THROW(ad::normalize_rows(t.constant(Tensor({2, 3}))), DomainError);
}
