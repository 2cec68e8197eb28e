#include "hofsurf/adam.hpp"

#include "hofsurf/error.hpp"

#include <cmath>

namespace hofsurf {

void AdamConfig::validate() const {
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw DomainError("Adam betas must lie in [0, 1)");
    }
    if (!(epsilon > 0.0)) throw DomainError("Adam epsilon must be positive");
}

AdamState AdamState::zeros_like(std::span<const Tensor> params) {
    AdamState s;
    for (const Tensor& p : params) {
        s.m.emplace_back(p.shape());
        s.v.emplace_back(p.shape());
    }
    return s;
}

void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads, AdamState& state,
               double lr, const AdamConfig& cfg) {
    if (grads.size() != params.size() || state.m.size() != params.size() ||
        state.v.size() != params.size()) {
        throw ContractError("adam_step: " + std::to_string(params.size()) + " parameters but " +
                            std::to_string(grads.size()) + " gradients and " +
                            std::to_string(state.m.size()) + " moment tensors");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        const Shape& s = params[i]->shape();
        if (grads[i].shape() != s || state.m[i].shape() != s || state.v[i].shape() != s) {
            throw ContractError("adam_step: shape mismatch for parameter " + std::to_string(i) +
                                ": param " + to_string(s) + ", grad " + to_string(grads[i].shape()));
        }
    }
    if (!(lr >= 0.0)) throw DomainError("learning rate must be non-negative");
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(cfg.beta1, t);
    const double c2 = 1.0 - std::pow(cfg.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto p = params[i]->data();
        auto g = grads[i].data();
        auto m = state.m[i].data();
        auto v = state.v[i].data();
        for (std::size_t j = 0; j < p.size(); ++j) {
            m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g[j];
            v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g[j] * g[j];
            p[j] -= lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + cfg.epsilon);
        }
    }
}

} // namespace hofsurf
