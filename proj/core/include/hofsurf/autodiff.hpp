#pragma once

#include "hofsurf/tensor.hpp"

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

// Reverse-mode automatic differentiation over dense double tensors.
//
// A Tape records every operation as a node holding its forward value and a
// closure that pushes the node's gradient back to its inputs. Nodes are only
// ever appended, so ids are a topological order and backward() is a single
// reverse sweep that visits each node once.
//
// Broadcasting is deliberately narrow: binary elementwise ops accept two
// tensors of equal shape or one operand with a single element. The only
// other broadcast is add_bias(), which adds a row vector to every row.
//
// A Tape is not thread-safe. Independent tapes can be used concurrently.

namespace hofsurf::ad {

class Tape;

// Lightweight handle to a node on a tape. Valid as long as the tape lives.
class Var {
public:
    Var() = default;

    Tape& tape() const { return *tape_; }
    std::size_t id() const noexcept { return id_; }
    bool valid() const noexcept { return tape_ != nullptr; }

    const Tensor& value() const;
    const Shape& shape() const { return value().shape(); }

private:
    friend class Tape;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

class Tape {
public:
    // Receives the gradient of the recorded node and accumulates into the
    // gradient buffers of its inputs via Tape::grad_buffer().
    using BackwardFn = std::function<void(Tape&, std::span<const double> out_grad)>;

    Tape();
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // Trainable input; receives a gradient on backward().
    Var leaf(Tensor value);
    // Input that never receives a gradient.
    Var constant(Tensor value);

    const Tensor& value(Var v) const;
    // Accumulated gradient of `v`, zeros if nothing reached it.
    Tensor grad(Var v) const;
    bool requires_grad(Var v) const;

    // Reverse sweep from a one-element node. Leaf gradients accumulate across
    // calls until zero_grad(); interior gradients are recomputed each call.
    void backward(Var loss);
    void zero_grad();

    std::size_t size() const noexcept { return nodes_.size(); }

    // When enabled, every recorded op output is checked for NaN/Inf.
    // Defaults to on in debug builds and off otherwise.
    bool check_finite() const noexcept { return check_finite_; }
    void set_check_finite(bool enabled) noexcept { check_finite_ = enabled; }

    // --- op authoring -----------------------------------------------------
    Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward);
    // Gradient buffer of node `id`, zero-allocated on first use.
    std::span<double> grad_buffer(std::size_t id);

private:
    struct Node {
        Tensor value;
        std::vector<double> grad;
        BackwardFn backward;
        bool requires_grad = false;
        bool is_leaf = false;
    };

    Var push(Node node);

    std::vector<Node> nodes_;
    bool check_finite_;
};

// --- linear algebra ---------------------------------------------------------

// [m x k] * [k x n] -> [m x n]
Var matmul(Var a, Var b);
// Adds a length-n bias (shape {n} or {1,n}) to every row of an [m x n] tensor.
Var add_bias(Var a, Var bias);

// --- elementwise ------------------------------------------------------------

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
Var add_scalar(Var a, double offset);
// max(0, x); the subgradient at 0 is 0.
Var relu(Var a);
// Defined for x >= 0; the gradient at exactly 0 is taken as 0.
Var sqrt(Var a);
Var abs(Var a);
// Values limited to [lo, hi]; the gradient is zero wherever a bound applies.
Var clamp(Var a, double lo, double hi);

// --- reductions -------------------------------------------------------------

// Both use a correctly rounded sum, so the result does not depend on the
// order of the elements.
Var sum(Var a);
Var mean(Var a);

struct MinReduce {
    Var value;
    std::size_t index;
};
// Smallest element and its flat index; ties go to the lowest index. The
// gradient flows to the selected element only.
MinReduce min_reduce(Var a);

// --- shape and indexing -----------------------------------------------------

Var reshape(Var a, Shape shape);
// Flat slice [offset, offset + count) as a rank-1 tensor.
Var slice(Var a, std::size_t offset, std::size_t count);
// Columns [begin, end) of a rank-2 tensor.
Var columns(Var a, std::size_t begin, std::size_t end);
// Rows of a rank-2 tensor picked by index (repeats allowed).
Var gather_rows(Var a, std::span<const std::size_t> rows);
// Concatenation along axis 0.
Var concat(Var a, Var b);

// --- row-wise geometry on [n x k] tensors -----------------------------------

// Euclidean norm of each row -> [n x 1]. Rows whose norm is below `zero_guard`
// pass no gradient.
Var row_norm(Var a, double zero_guard = 1e-12);
// Dot product of matching rows -> [n x 1].
Var row_dot(Var a, Var b);
// Each row divided by its norm; throws DomainError for a row with norm < 1e-12.
Var normalize_rows(Var a);

// --- convolution ------------------------------------------------------------

struct Conv2dParams {
    std::size_t stride = 1;
    std::size_t padding = 0;
};
// Direct 2-D convolution of a single image. x: [C, H, W], w: [O, C, kh, kw],
// b: [O] -> [O, H', W'].
Var conv2d(Var x, Var w, Var b, Conv2dParams params);

namespace testing {
// Fault injection for the self-test sensitivity check: when enabled, matmul
// returns a slightly wrong gradient for its left operand.
void set_gradient_fault(bool enabled) noexcept;
bool gradient_fault() noexcept;
} // namespace testing

} // namespace hofsurf::ad
