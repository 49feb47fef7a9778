#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "egad/errors.hpp"
#include "egad/matrix.hpp"

namespace egad {

class TrainingDivergedError : public Error {
 public:
  using Error::Error;
};

/// Moment accumulators for a fixed list of parameter tensors.
struct AdamState {
  static constexpr double beta1 = 0.9;
  static constexpr double beta2 = 0.999;
  static constexpr double epsilon = 1e-8;

  std::vector<Matrix> m;
  std::vector<Matrix> v;
  std::uint64_t step = 0;

  AdamState() = default;
  explicit AdamState(const std::vector<Matrix*>& params) {
    for (const Matrix* p : params) {
      m.emplace_back(p->rows(), p->cols());
      v.emplace_back(p->rows(), p->cols());
    }
  }
};

/// One bias-corrected Adam update. Parameters are left untouched when any
/// gradient entry is NaN.
inline void adam_step(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads, AdamState& state,
                      double lr) {
  if (!(lr > 0.0)) throw ConfigError("adam_step: learning rate must be positive");
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw ShapeError("adam_step: parameter/gradient/state count mismatch");
  }
  for (std::size_t p = 0; p < params.size(); ++p) {
    require_same_shape(*params[p], grads[p], "adam_step");
    require_same_shape(*params[p], state.m[p], "adam_step");
    for (double g : grads[p].data()) {
      if (std::isnan(g)) throw TrainingDivergedError("adam_step: NaN gradient in tensor " + std::to_string(p));
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(AdamState::beta1, t);
  const double c2 = 1.0 - std::pow(AdamState::beta2, t);
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto w = params[p]->data();
    auto g = grads[p].data();
    auto m = state.m[p].data();
    auto v = state.v[p].data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = AdamState::beta1 * m[i] + (1.0 - AdamState::beta1) * g[i];
      v[i] = AdamState::beta2 * v[i] + (1.0 - AdamState::beta2) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      w[i] -= lr * mhat / (std::sqrt(vhat) + AdamState::epsilon);
    }
  }
}

}  // namespace egad
