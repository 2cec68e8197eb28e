#include "hofsurf/autodiff.hpp"

#include "hofsurf/error.hpp"
#include "hofsurf/numeric.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>

namespace hofsurf::ad {

namespace {

std::atomic<bool> g_gradient_fault{false};

// Gradient target of an input, or an empty span when it needs none.
std::span<double> target(Tape& tape, Var v) {
    if (!tape.requires_grad(v)) return {};
    return tape.grad_buffer(v.id());
}

void check_same_tape(Var a, Var b) {
    if (&a.tape() != &b.tape()) throw ContractError("operands recorded on different tapes");
}

std::size_t rows_of(const Tensor& t, const char* op) {
    if (t.rank() != 2) {
        throw DimensionError(std::string(op) + " needs a rank-2 tensor, got " +
                             to_string(t.shape()));
    }
    return t.dim(0);
}

enum class BinaryKind { Add, Sub, Mul };

Var binary(Var a, Var b, BinaryKind kind, const char* name) {
    check_same_tape(a, b);
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    const bool same = av.shape() == bv.shape();
    const bool a_scalar = av.size() == 1;
    const bool b_scalar = bv.size() == 1;
    if (!same && !a_scalar && !b_scalar) {
        throw DimensionError(std::string(name) + ": shapes " + to_string(av.shape()) + " and " +
                             to_string(bv.shape()) + " are not compatible");
    }
    const Shape out_shape = same ? av.shape() : (a_scalar ? bv.shape() : av.shape());
    Tensor out(out_shape);
    const std::size_t n = out.size();
    const auto ad = av.data();
    const auto bd = bv.data();
    auto od = out.data();
    for (std::size_t i = 0; i < n; ++i) {
        const double x = ad[av.size() == 1 ? 0 : i];
        const double y = bd[bv.size() == 1 ? 0 : i];
        switch (kind) {
        case BinaryKind::Add: od[i] = x + y; break;
        case BinaryKind::Sub: od[i] = x - y; break;
        case BinaryKind::Mul: od[i] = x * y; break;
        }
    }
    return a.tape().record(std::move(out), {a, b}, [a, b, kind](Tape& tape, auto g) {
        const Tensor& av = a.value();
        const Tensor& bv = b.value();
        const bool a_bcast = av.size() == 1 && g.size() != 1;
        const bool b_bcast = bv.size() == 1 && g.size() != 1;
        auto ga = target(tape, a);
        auto gb = target(tape, b);
        for (std::size_t i = 0; i < g.size(); ++i) {
            double da = 0.0;
            double db = 0.0;
            switch (kind) {
            case BinaryKind::Add: da = g[i]; db = g[i]; break;
            case BinaryKind::Sub: da = g[i]; db = -g[i]; break;
            case BinaryKind::Mul:
                da = g[i] * bv[b_bcast ? 0 : i];
                db = g[i] * av[a_bcast ? 0 : i];
                break;
            }
            if (!ga.empty()) ga[a_bcast ? 0 : i] += da;
            if (!gb.empty()) gb[b_bcast ? 0 : i] += db;
        }
    });
}

template <class Forward, class Derivative>
Var unary(Var a, Forward forward, Derivative derivative) {
    const Tensor& av = a.value();
    Tensor out(av.shape());
    for (std::size_t i = 0; i < av.size(); ++i) out[i] = forward(av[i]);
    return a.tape().record(std::move(out), {a}, [a, derivative](Tape& tape, auto g) {
        auto ga = target(tape, a);
        const Tensor& av = a.value();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * derivative(av[i]);
    });
}

} // namespace

// --- Var / Tape -------------------------------------------------------------

const Tensor& Var::value() const {
    if (!tape_) throw ContractError("use of an unbound Var");
    return tape_->value(*this);
}

Tape::Tape() {
#ifdef NDEBUG
    check_finite_ = false;
#else
    check_finite_ = true;
#endif
}

Var Tape::push(Node node) {
    nodes_.push_back(std::move(node));
    return Var(this, nodes_.size() - 1);
}

Var Tape::leaf(Tensor value) {
    Node node;
    node.value = std::move(value);
    node.requires_grad = true;
    node.is_leaf = true;
    return push(std::move(node));
}

Var Tape::constant(Tensor value) {
    Node node;
    node.value = std::move(value);
    node.is_leaf = true;
    return push(std::move(node));
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward) {
    if (check_finite_ && !value.all_finite()) {
        throw NumericalError("op " + std::to_string(nodes_.size()) +
                             " produced a non-finite value");
    }
    Node node;
    node.value = std::move(value);
    for (Var in : inputs) {
        if (&in.tape() != this) throw ContractError("op input belongs to another tape");
        node.requires_grad = node.requires_grad || nodes_[in.id()].requires_grad;
    }
    if (node.requires_grad) node.backward = std::move(backward);
    return push(std::move(node));
}

const Tensor& Tape::value(Var v) const {
    if (v.tape_ != this || v.id_ >= nodes_.size()) throw ContractError("Var not on this tape");
    return nodes_[v.id_].value;
}

Tensor Tape::grad(Var v) const {
    const Node& node = nodes_.at(v.id());
    if (node.grad.empty()) return Tensor(node.value.shape());
    return Tensor(node.value.shape(), node.grad);
}

bool Tape::requires_grad(Var v) const { return nodes_.at(v.id()).requires_grad; }

std::span<double> Tape::grad_buffer(std::size_t id) {
    Node& node = nodes_.at(id);
    if (node.grad.empty()) node.grad.assign(node.value.size(), 0.0);
    return node.grad;
}

void Tape::backward(Var loss) {
    if (loss.tape_ != this) throw ContractError("backward: loss is not on this tape");
    const Node& loss_node = nodes_.at(loss.id());
    if (loss_node.value.size() != 1) {
        throw ContractError("backward needs a scalar loss, got shape " +
                            to_string(loss_node.value.shape()));
    }
    for (Node& node : nodes_) {
        if (!node.is_leaf) node.grad.clear();
    }
    if (!loss_node.requires_grad) return;
    grad_buffer(loss.id())[0] += 1.0;
    for (std::size_t id = loss.id() + 1; id-- > 0;) {
        Node& node = nodes_[id];
        if (!node.backward || node.grad.empty()) continue;
        node.backward(*this, node.grad);
    }
}

void Tape::zero_grad() {
    for (Node& node : nodes_) node.grad.clear();
}

// --- linear algebra ---------------------------------------------------------

Var matmul(Var a, Var b) {
    check_same_tape(a, b);
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (av.rank() != 2 || bv.rank() != 2 || av.dim(1) != bv.dim(0)) {
        throw DimensionError("matmul: cannot multiply " + to_string(av.shape()) + " by " +
                             to_string(bv.shape()));
    }
    const std::size_t m = av.dim(0), k = av.dim(1), n = bv.dim(1);
    Tensor out({m, n});
    const double* A = av.data().data();
    const double* B = bv.data().data();
    double* C = out.data().data();
    // i-k-j order: each output element accumulates over k in sequence, so a
    // row's result does not depend on how many other rows are in the batch.
    for (std::size_t i = 0; i < m; ++i) {
        double* c_row = C + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double a_ip = A[i * k + p];
            const double* b_row = B + p * n;
            for (std::size_t j = 0; j < n; ++j) c_row[j] += a_ip * b_row[j];
        }
    }
    return a.tape().record(std::move(out), {a, b}, [a, b, m, k, n](Tape& tape, auto g) {
        const double* A = a.value().data().data();
        const double* B = b.value().data().data();
        const double* G = g.data();
        if (auto ga = target(tape, a); !ga.empty()) {
            // dA = G * B^T
            const double fault = testing::gradient_fault() ? 1.001 : 1.0;
            // Through B^T so the inner loop runs over contiguous memory.
            std::vector<double> bt(k * n);
            for (std::size_t p = 0; p < k; ++p) {
                for (std::size_t j = 0; j < n; ++j) bt[j * k + p] = B[p * n + j];
            }
            std::vector<double> acc(k);
            for (std::size_t i = 0; i < m; ++i) {
                std::fill(acc.begin(), acc.end(), 0.0);
                const double* g_row = G + i * n;
                for (std::size_t j = 0; j < n; ++j) {
                    const double g_ij = g_row[j];
                    const double* bt_row = bt.data() + j * k;
                    for (std::size_t p = 0; p < k; ++p) acc[p] += g_ij * bt_row[p];
                }
                for (std::size_t p = 0; p < k; ++p) ga[i * k + p] += acc[p] * fault;
            }
        }
        if (auto gb = target(tape, b); !gb.empty()) {
            // dB = A^T * G
            for (std::size_t i = 0; i < m; ++i) {
                const double* g_row = G + i * n;
                for (std::size_t p = 0; p < k; ++p) {
                    const double a_ip = A[i * k + p];
                    if (a_ip == 0.0) continue;
                    double* gb_row = gb.data() + p * n;
                    for (std::size_t j = 0; j < n; ++j) gb_row[j] += a_ip * g_row[j];
                }
            }
        }
    });
}

Var add_bias(Var a, Var bias) {
    check_same_tape(a, bias);
    const Tensor& av = a.value();
    const Tensor& bv = bias.value();
    const std::size_t m = rows_of(av, "add_bias");
    const std::size_t n = av.dim(1);
    const bool bias_ok = (bv.rank() == 1 && bv.dim(0) == n) ||
                         (bv.rank() == 2 && bv.dim(0) == 1 && bv.dim(1) == n);
    if (!bias_ok) {
        throw DimensionError("add_bias: bias " + to_string(bv.shape()) + " does not match " +
                             to_string(av.shape()));
    }
    Tensor out = av;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] += bv[j];
    }
    return a.tape().record(std::move(out), {a, bias}, [a, bias, m, n](Tape& tape, auto g) {
        if (auto ga = target(tape, a); !ga.empty()) {
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        if (auto gb = target(tape, bias); !gb.empty()) {
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t j = 0; j < n; ++j) gb[j] += g[i * n + j];
            }
        }
    });
}

// --- elementwise ------------------------------------------------------------

Var add(Var a, Var b) { return binary(a, b, BinaryKind::Add, "add"); }
Var sub(Var a, Var b) { return binary(a, b, BinaryKind::Sub, "sub"); }
Var mul(Var a, Var b) { return binary(a, b, BinaryKind::Mul, "mul"); }

Var scale(Var a, double factor) {
    return unary(a, [factor](double x) { return x * factor; },
                 [factor](double) { return factor; });
}

Var add_scalar(Var a, double offset) {
    return unary(a, [offset](double x) { return x + offset; }, [](double) { return 1.0; });
}

Var relu(Var a) {
    return unary(a, [](double x) { return x > 0.0 ? x : 0.0; },
                 [](double x) { return x > 0.0 ? 1.0 : 0.0; });
}

Var sqrt(Var a) {
    for (double x : a.value().data()) {
        if (x < 0.0) throw DomainError("sqrt of a negative value");
    }
    return unary(a, [](double x) { return std::sqrt(x); },
                 [](double x) { return x > 0.0 ? 0.5 / std::sqrt(x) : 0.0; });
}

Var abs(Var a) {
    return unary(a, [](double x) { return std::fabs(x); },
                 [](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Var clamp(Var a, double lo, double hi) {
    if (!(lo <= hi)) throw DomainError("clamp: lower bound exceeds upper bound");
    return unary(a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
                 [lo, hi](double x) { return x > lo && x < hi ? 1.0 : 0.0; });
}

// --- reductions -------------------------------------------------------------

Var sum(Var a) {
    const Tensor& av = a.value();
    if (av.size() == 0) throw DomainError("sum of an empty tensor");
    const double total = exact_sum(av.data());
    return a.tape().record(Tensor::scalar(total), {a}, [a](Tape& tape, auto g) {
        auto ga = target(tape, a);
        for (double& x : ga) x += g[0];
    });
}

Var mean(Var a) {
    const Tensor& av = a.value();
    if (av.size() == 0) throw DomainError("mean of an empty tensor");
    const double total = exact_sum(av.data());
    const double n = static_cast<double>(av.size());
    return a.tape().record(Tensor::scalar(total / n), {a}, [a, n](Tape& tape, auto g) {
        auto ga = target(tape, a);
        const double share = g[0] / n;
        for (double& x : ga) x += share;
    });
}

MinReduce min_reduce(Var a) {
    const Tensor& av = a.value();
    if (av.size() == 0) throw DomainError("min_reduce of an empty tensor");
    std::size_t best = 0;
    for (std::size_t i = 1; i < av.size(); ++i) {
        if (av[i] < av[best]) best = i;
    }
    Var out = a.tape().record(Tensor::scalar(av[best]), {a}, [a, best](Tape& tape, auto g) {
        target(tape, a)[best] += g[0];
    });
    return {out, best};
}

// --- shape and indexing -----------------------------------------------------

Var reshape(Var a, Shape shape) {
    Tensor out = a.value().reshaped(std::move(shape));
    return a.tape().record(std::move(out), {a}, [a](Tape& tape, auto g) {
        auto ga = target(tape, a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    });
}

Var slice(Var a, std::size_t offset, std::size_t count) {
    const Tensor& av = a.value();
    if (count == 0 || offset + count > av.size()) {
        throw DimensionError("slice [" + std::to_string(offset) + ", " +
                             std::to_string(offset + count) + ") out of range for " +
                             to_string(av.shape()));
    }
    Tensor out({count});
    std::copy_n(av.data().begin() + offset, count, out.data().begin());
    return a.tape().record(std::move(out), {a}, [a, offset](Tape& tape, auto g) {
        auto ga = target(tape, a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[offset + i] += g[i];
    });
}

Var columns(Var a, std::size_t begin, std::size_t end) {
    const Tensor& av = a.value();
    const std::size_t m = rows_of(av, "columns");
    const std::size_t n = av.dim(1);
    if (begin >= end || end > n) {
        throw DimensionError("columns [" + std::to_string(begin) + ", " + std::to_string(end) +
                             ") out of range for " + to_string(av.shape()));
    }
    const std::size_t w = end - begin;
    Tensor out({m, w});
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < w; ++j) out[i * w + j] = av[i * n + begin + j];
    }
    return a.tape().record(std::move(out), {a}, [a, begin, n, w](Tape& tape, auto g) {
        auto ga = target(tape, a);
        const std::size_t m = g.size() / w;
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < w; ++j) ga[i * n + begin + j] += g[i * w + j];
        }
    });
}

Var gather_rows(Var a, std::span<const std::size_t> rows) {
    const Tensor& av = a.value();
    const std::size_t m = rows_of(av, "gather_rows");
    const std::size_t n = av.dim(1);
    if (rows.empty()) throw DomainError("gather_rows with no indices");
    Tensor out({rows.size(), n});
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r] >= m) {
            throw DimensionError("gather_rows: index " + std::to_string(rows[r]) +
                                 " out of range for " + to_string(av.shape()));
        }
        for (std::size_t j = 0; j < n; ++j) out[r * n + j] = av[rows[r] * n + j];
    }
    std::vector<std::size_t> picked(rows.begin(), rows.end());
    return a.tape().record(std::move(out), {a},
                           [a, n, picked = std::move(picked)](Tape& tape, auto g) {
                               auto ga = target(tape, a);
                               for (std::size_t r = 0; r < picked.size(); ++r) {
                                   for (std::size_t j = 0; j < n; ++j) {
                                       ga[picked[r] * n + j] += g[r * n + j];
                                   }
                               }
                           });
}

Var concat(Var a, Var b) {
    check_same_tape(a, b);
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (av.rank() != bv.rank() ||
        !std::equal(av.shape().begin() + 1, av.shape().end(), bv.shape().begin() + 1)) {
        throw DimensionError("concat: " + to_string(av.shape()) + " and " +
                             to_string(bv.shape()) + " differ beyond axis 0");
    }
    Shape shape = av.shape();
    shape[0] += bv.dim(0);
    Tensor out(shape);
    std::copy(av.data().begin(), av.data().end(), out.data().begin());
    std::copy(bv.data().begin(), bv.data().end(), out.data().begin() + av.size());
    const std::size_t split = av.size();
    return a.tape().record(std::move(out), {a, b}, [a, b, split](Tape& tape, auto g) {
        if (auto ga = target(tape, a); !ga.empty()) {
            for (std::size_t i = 0; i < split; ++i) ga[i] += g[i];
        }
        if (auto gb = target(tape, b); !gb.empty()) {
            for (std::size_t i = split; i < g.size(); ++i) gb[i - split] += g[i];
        }
    });
}

// --- row-wise geometry ------------------------------------------------------

Var row_norm(Var a, double zero_guard) {
    const Tensor& av = a.value();
    const std::size_t m = rows_of(av, "row_norm");
    const std::size_t n = av.dim(1);
    Tensor out({m, 1});
    for (std::size_t i = 0; i < m; ++i) {
        double ss = 0.0;
        for (std::size_t j = 0; j < n; ++j) ss += av[i * n + j] * av[i * n + j];
        out[i] = std::sqrt(ss);
    }
    std::vector<double> norms(out.data().begin(), out.data().end());
    return a.tape().record(
        std::move(out), {a}, [a, n, zero_guard, norms = std::move(norms)](Tape& tape, auto g) {
            auto ga = target(tape, a);
            const Tensor& av = a.value();
            for (std::size_t i = 0; i < g.size(); ++i) {
                if (norms[i] < zero_guard) continue;
                const double s = g[i] / norms[i];
                for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += s * av[i * n + j];
            }
        });
}

Var row_dot(Var a, Var b) {
    check_same_tape(a, b);
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (av.shape() != bv.shape()) {
        throw DimensionError("row_dot: shapes " + to_string(av.shape()) + " and " +
                             to_string(bv.shape()) + " differ");
    }
    const std::size_t m = rows_of(av, "row_dot");
    const std::size_t n = av.dim(1);
    Tensor out({m, 1});
    for (std::size_t i = 0; i < m; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += av[i * n + j] * bv[i * n + j];
        out[i] = acc;
    }
    return a.tape().record(std::move(out), {a, b}, [a, b, n](Tape& tape, auto g) {
        const Tensor& av = a.value();
        const Tensor& bv = b.value();
        auto ga = target(tape, a);
        auto gb = target(tape, b);
        for (std::size_t i = 0; i < g.size(); ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (!ga.empty()) ga[i * n + j] += g[i] * bv[i * n + j];
                if (!gb.empty()) gb[i * n + j] += g[i] * av[i * n + j];
            }
        }
    });
}

Var normalize_rows(Var a) {
    const Tensor& av = a.value();
    const std::size_t m = rows_of(av, "normalize_rows");
    const std::size_t n = av.dim(1);
    Tensor out({m, n});
    std::vector<double> norms(m);
    for (std::size_t i = 0; i < m; ++i) {
        double ss = 0.0;
        for (std::size_t j = 0; j < n; ++j) ss += av[i * n + j] * av[i * n + j];
        norms[i] = std::sqrt(ss);
        if (norms[i] < 1e-12) {
            throw DomainError("normalize_rows: row " + std::to_string(i) + " has zero length");
        }
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] = av[i * n + j] / norms[i];
    }
    Tensor unit = out;
    return a.tape().record(
        std::move(out), {a},
        [a, n, norms = std::move(norms), unit = std::move(unit)](Tape& tape, auto g) {
            // d(u)/d(v) = (I - u u^T) / |v|
            auto ga = target(tape, a);
            for (std::size_t i = 0; i < norms.size(); ++i) {
                const double* u = unit.data().data() + i * n;
                const double* gi = g.data() + i * n;
                double ug = 0.0;
                for (std::size_t j = 0; j < n; ++j) ug += u[j] * gi[j];
                for (std::size_t j = 0; j < n; ++j) {
                    ga[i * n + j] += (gi[j] - ug * u[j]) / norms[i];
                }
            }
        });
}

// --- convolution ------------------------------------------------------------

Var conv2d(Var x, Var w, Var b, Conv2dParams params) {
    check_same_tape(x, w);
    check_same_tape(x, b);
    const Tensor& xv = x.value();
    const Tensor& wv = w.value();
    const Tensor& bv = b.value();
    if (xv.rank() != 3 || wv.rank() != 4 || wv.dim(1) != xv.dim(0) || bv.size() != wv.dim(0)) {
        throw DimensionError("conv2d: input " + to_string(xv.shape()) + ", kernel " +
                             to_string(wv.shape()) + ", bias " + to_string(bv.shape()));
    }
    if (params.stride == 0) throw DomainError("conv2d: stride must be positive");
    const std::size_t C = xv.dim(0), H = xv.dim(1), W = xv.dim(2);
    const std::size_t O = wv.dim(0), KH = wv.dim(2), KW = wv.dim(3);
    const std::size_t pad = params.padding, stride = params.stride;
    if (H + 2 * pad < KH || W + 2 * pad < KW) {
        throw DimensionError("conv2d: kernel larger than padded input");
    }
    const std::size_t OH = (H + 2 * pad - KH) / stride + 1;
    const std::size_t OW = (W + 2 * pad - KW) / stride + 1;

    // Visits every (output, input, kernel tap) triple inside the image.
    auto for_each_tap = [=](auto&& fn) {
        for (std::size_t o = 0; o < O; ++o) {
            for (std::size_t oy = 0; oy < OH; ++oy) {
                for (std::size_t ox = 0; ox < OW; ++ox) {
                    const std::size_t out_idx = (o * OH + oy) * OW + ox;
                    for (std::size_t c = 0; c < C; ++c) {
                        for (std::size_t ky = 0; ky < KH; ++ky) {
                            const long iy = static_cast<long>(oy * stride + ky) -
                                            static_cast<long>(pad);
                            if (iy < 0 || iy >= static_cast<long>(H)) continue;
                            for (std::size_t kx = 0; kx < KW; ++kx) {
                                const long ix = static_cast<long>(ox * stride + kx) -
                                                static_cast<long>(pad);
                                if (ix < 0 || ix >= static_cast<long>(W)) continue;
                                const std::size_t in_idx =
                                    (c * H + static_cast<std::size_t>(iy)) * W +
                                    static_cast<std::size_t>(ix);
                                const std::size_t w_idx = ((o * C + c) * KH + ky) * KW + kx;
                                fn(out_idx, in_idx, w_idx);
                            }
                        }
                    }
                }
            }
        }
    };

    Tensor out({O, OH, OW});
    for (std::size_t o = 0; o < O; ++o) {
        for (std::size_t i = 0; i < OH * OW; ++i) out[o * OH * OW + i] = bv[o];
    }
    for_each_tap([&](std::size_t oi, std::size_t ii, std::size_t wi) { out[oi] += xv[ii] * wv[wi]; });

    return x.tape().record(std::move(out), {x, w, b},
                           [x, w, b, for_each_tap, O, OH, OW](Tape& tape, auto g) {
                               const Tensor& xv = x.value();
                               const Tensor& wv = w.value();
                               auto gx = target(tape, x);
                               auto gw = target(tape, w);
                               auto gb = target(tape, b);
                               for_each_tap([&](std::size_t oi, std::size_t ii, std::size_t wi) {
                                   if (!gx.empty()) gx[ii] += g[oi] * wv[wi];
                                   if (!gw.empty()) gw[wi] += g[oi] * xv[ii];
                               });
                               if (!gb.empty()) {
                                   for (std::size_t o = 0; o < O; ++o) {
                                       for (std::size_t i = 0; i < OH * OW; ++i) {
                                           gb[o] += g[o * OH * OW + i];
                                       }
                                   }
                               }
                           });
}

namespace testing {
void set_gradient_fault(bool enabled) noexcept { g_gradient_fault.store(enabled); }
bool gradient_fault() noexcept { return g_gradient_fault.load(std::memory_order_relaxed); }
} // namespace testing

} // namespace hofsurf::ad
