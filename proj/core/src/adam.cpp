#include "eo2sar/nn/adam.hpp"

#include <cmath>

#include "eo2sar/errors.hpp"

namespace eo2sar::nn {

namespace {

bool name_is_frozen(const std::string& name, const std::vector<std::string>& frozen) {
    for (const auto& prefix : frozen) {
        if (name.rfind(prefix, 0) == 0) return true;
    }
    return false;
}

}  // namespace

template <typename T>
AdamState<T> init_adam(const ModelParams<T>& params, const AdamConfig& config) {
    AdamState<T> state;
    state.config = config;
    state.m = zero_grads(params);
    state.v = zero_grads(params);
    state.t = 0;
    return state;
}

template <typename T>
void adam_step(ModelParams<T>& params, const ModelGrads<T>& grads, AdamState<T>& state,
               const std::vector<std::string>& frozen) {
    auto p_named = params.named();
    auto g_named = grads.named();
    auto m_named = state.m.named();
    auto v_named = state.v.named();

    for (size_t i = 0; i < p_named.size(); ++i) {
        if (!g_named[i].second->same_shape(*p_named[i].second)) {
            throw DimensionError("adam_step: gradient for " + p_named[i].first + " has shape " +
                                 shape_str(g_named[i].second->shape()) + ", parameter has " +
                                 shape_str(p_named[i].second->shape()));
        }
        if (!name_is_frozen(p_named[i].first, frozen) && !g_named[i].second->all_finite()) {
            throw NumericError("adam_step: non-finite gradient in " + p_named[i].first);
        }
    }

    state.t += 1;
    const double c1 = 1.0 - std::pow(state.config.beta1, static_cast<double>(state.t));
    const double c2 = 1.0 - std::pow(state.config.beta2, static_cast<double>(state.t));

    for (size_t i = 0; i < p_named.size(); ++i) {
        if (name_is_frozen(p_named[i].first, frozen)) continue;
        Tensor<T>& p = *p_named[i].second;
        const Tensor<T>& g = *g_named[i].second;
        Tensor<T>& m = *m_named[i].second;
        Tensor<T>& v = *v_named[i].second;
        for (int64_t j = 0; j < p.size(); ++j) {
            const double gj = static_cast<double>(g[j]);
            const double mj = state.config.beta1 * m[j] + (1.0 - state.config.beta1) * gj;
            const double vj = state.config.beta2 * v[j] + (1.0 - state.config.beta2) * gj * gj;
            m[j] = static_cast<T>(mj);
            v[j] = static_cast<T>(vj);
            const double m_hat = mj / c1;
            const double v_hat = vj / c2;
            p[j] = static_cast<T>(p[j] - state.config.learning_rate * m_hat /
                                             (std::sqrt(v_hat) + state.config.epsilon));
        }
    }
}

template AdamState<float> init_adam<float>(const ModelParams<float>&, const AdamConfig&);
template AdamState<double> init_adam<double>(const ModelParams<double>&, const AdamConfig&);
template void adam_step<float>(ModelParams<float>&, const ModelGrads<float>&, AdamState<float>&,
                               const std::vector<std::string>&);
template void adam_step<double>(ModelParams<double>&, const ModelGrads<double>&,
                                AdamState<double>&, const std::vector<std::string>&);

}  // namespace eo2sar::nn
