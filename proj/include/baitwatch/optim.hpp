#pragma once

// Adam with bias correction, global-norm clipping and finite-difference
// gradient checking.

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "baitwatch/autodiff.hpp"

namespace baitwatch::ad {

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename T>
struct NamedParameter {
  std::string name;
  Parameter<T>* param;
};

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename T>
struct OptimizerState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<Tensor<T>> first_moment;
  std::vector<Tensor<T>> second_moment;
};

// Global L2 norm of the gradients of `params`; parameters without a gradient
// count as zero.
template <typename T>
double gradient_norm(std::span<const NamedParameter<T>> params, const Gradients<T>& grads);

// Rescales the gradients so their global norm is at most max_norm. Returns
// the norm before clipping.
template <typename T>
double clip_gradients(std::span<const NamedParameter<T>> params, Gradients<T>& grads, double max_norm);

// One bias-corrected Adam update. Moments are created on the first call.
// Throws DivergenceError on a non-finite gradient, leaving params untouched.
template <typename T>
void adam_step(OptimizerState<T>& state, std::span<const NamedParameter<T>> params, const Gradients<T>& grads);

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-6;
  // Entries compared per tensor; 0 compares all. Sampled tensors use at least
  // 200 entries.
  std::size_t max_entries_per_tensor = 0;
  std::uint64_t seed = 0;
  // Denominator floor of the relative error: below it the comparison is
  // effectively absolute.
  double relative_floor = 1e-6;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t entries_checked = 0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  bool passed = true;
};

// Compares analytic gradients from one backward pass against central
// differences of `loss_fn`. The function must rebuild its graph from the
// current parameter values on every call.
using LossFn = std::function<Var<double>(Graph<double>&)>;
GradCheckReport check_gradients(const LossFn& loss_fn, std::span<const NamedParameter<double>> params,
                                const GradCheckOptions& options = {});

}  // namespace baitwatch::ad
