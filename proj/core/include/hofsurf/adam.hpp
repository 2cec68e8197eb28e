#pragma once

#include "hofsurf/tensor.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace hofsurf {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const;
};

// First and second moments for each parameter tensor, plus the number of
// updates taken so far.
struct AdamState {
    std::uint64_t step = 0;
    std::vector<Tensor> m;
    std::vector<Tensor> v;

    // Zero moments shaped like `params`.
    static AdamState zeros_like(std::span<const Tensor> params);
    friend bool operator==(const AdamState&, const AdamState&) = default;
};

// One bias-corrected Adam update of every tensor in `params`:
//
//   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2
//   p <- p - lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
//
// Throws ContractError when the grads or moments do not match the params.
void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads, AdamState& state,
               double lr, const AdamConfig& cfg = {});

} // namespace hofsurf
