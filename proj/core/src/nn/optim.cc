#include "gforge/nn/optim.h"

#include <cmath>

#include "gforge/error.h"

namespace gforge::nn {

template <typename T>
Adam<T>::Adam(ParameterStore<T>& store, const AdamConfig& config) : params_(store.all()), config_(config) {
  if (!(config.lr > 0.0) || config.beta1 < 0.0 || config.beta1 >= 1.0 || config.beta2 < 0.0 || config.beta2 >= 1.0) {
    fail_invalid("invalid Adam hyperparameters");
  }
  for (Parameter<T>* p : params_) {
    m_.emplace_back(p->value.shape(), T(0));
    v_.emplace_back(p->value.shape(), T(0));
  }
}

template <typename T>
void Adam<T>::step() {
  ++t_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Parameter<T>& p = *params_[k];
    if (p.grad.empty()) continue;
    Tensor<T>& m = m_[k];
    Tensor<T>& v = v_[k];
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      const double mi = b1 * m[i] + (1.0 - b1) * g;
      const double vi = b2 * v[i] + (1.0 - b2) * g * g;
      m[i] = static_cast<T>(mi);
      v[i] = static_cast<T>(vi);
      p.value[i] = static_cast<T>(p.value[i] - config_.lr * (mi / c1) / (std::sqrt(vi / c2) + config_.eps));
    }
  }
}

template <typename T>
void ema_update(Tensor<T>& shadow, const Tensor<T>& live, double decay) {
  if (shadow.shape() != live.shape()) fail_invalid("EMA shadow shape differs from live shape");
  for (std::size_t i = 0; i < live.size(); ++i) {
    shadow[i] = static_cast<T>(decay * shadow[i] + (1.0 - decay) * live[i]);
  }
}

template <typename T>
void ema_update(ParameterStore<T>& store, double decay) {
  for (Parameter<T>* p : store.all()) ema_update(p->shadow, p->value, decay);
}

template class Adam<float>;
template class Adam<double>;
template void ema_update<float>(Tensor<float>&, const Tensor<float>&, double);
template void ema_update<double>(Tensor<double>&, const Tensor<double>&, double);
template void ema_update<float>(ParameterStore<float>&, double);
template void ema_update<double>(ParameterStore<double>&, double);

}  // namespace gforge::nn
