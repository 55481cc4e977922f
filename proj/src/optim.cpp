#include "baitwatch/optim.hpp"

#include <algorithm>
#include <cmath>

#include "baitwatch/random.hpp"

namespace baitwatch::ad {

template <typename T>
double gradient_norm(std::span<const NamedParameter<T>> params, const Gradients<T>& grads) {
  double total = 0.0;
  for (const auto& p : params) {
    if (const auto* g = grads.find(*p.param)) {
      for (T x : g->data) total += static_cast<double>(x) * static_cast<double>(x);
    }
  }
  return std::sqrt(total);
}

template <typename T>
double clip_gradients(std::span<const NamedParameter<T>> params, Gradients<T>& grads, double max_norm) {
  const double norm = gradient_norm(params, grads);
  if (std::isfinite(norm) && norm > max_norm) {
    const T scale = static_cast<T>(max_norm / norm);
    for (const auto& p : params) {
      if (grads.find(*p.param)) {
        for (auto& x : grads.of(*p.param).data) x *= scale;
      }
    }
  }
  return norm;
}

template <typename T>
void adam_step(OptimizerState<T>& state, std::span<const NamedParameter<T>> params, const Gradients<T>& grads) {
  if (state.first_moment.empty()) {
    for (const auto& p : params) {
      state.first_moment.emplace_back(p.param->value.shape);
      state.second_moment.emplace_back(p.param->value.shape);
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw std::invalid_argument("adam_step: optimizer state tracks " + std::to_string(state.first_moment.size()) +
                                " parameters, got " + std::to_string(params.size()));
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto& value = params[k].param->value;
    if (state.first_moment[k].shape != value.shape) {
      throw ShapeError("adam_step: moment shape " + shape_string(state.first_moment[k].shape) + " does not match " +
                       params[k].name + " " + shape_string(value.shape));
    }
    if (const auto* g = grads.find(*params[k].param)) {
      if (g->shape != value.shape) {
        throw ShapeError("adam_step: gradient shape " + shape_string(g->shape) + " does not match " + params[k].name);
      }
      for (T x : g->data) {
        if (!std::isfinite(x)) {
          throw DivergenceError("divergence: non-finite gradient for " + params[k].name +
                                "; try lowering the learning rate");
        }
      }
    }
  }

  ++state.step;
  const auto& c = state.config;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  const T b1 = static_cast<T>(c.beta1);
  const T b2 = static_cast<T>(c.beta2);
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto* g = grads.find(*params[k].param);
    auto& value = params[k].param->value.data;
    auto& m = state.first_moment[k].data;
    auto& v = state.second_moment[k].data;
    for (std::size_t i = 0; i < value.size(); ++i) {
      const T gi = g ? g->data[i] : T(0);
      m[i] = b1 * m[i] + (T(1) - b1) * gi;
      v[i] = b2 * v[i] + (T(1) - b2) * gi * gi;
      const double m_hat = static_cast<double>(m[i]) / correction1;
      const double v_hat = static_cast<double>(v[i]) / correction2;
      value[i] -= static_cast<T>(c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon));
    }
    if (params[k].param->frozen_row0) {
      const auto d = params[k].param->value.cols();
      std::fill(value.begin(), value.begin() + static_cast<std::ptrdiff_t>(d), T(0));
    }
  }
}

GradCheckReport check_gradients(const LossFn& loss_fn, std::span<const NamedParameter<double>> params,
                                const GradCheckOptions& options) {
  GradCheckReport report;
  Graph<double> graph;
  Gradients<double> analytic;
  {
    auto loss = loss_fn(graph);
    graph.backward(loss, analytic);
  }

  auto evaluate = [&] {
    graph.clear();
    return loss_fn(graph).item();
  };

  Rng rng(options.seed);
  for (const auto& np : params) {
    auto& value = np.param->value.data;
    const auto* grad = analytic.find(*np.param);
    std::vector<std::size_t> entries(value.size());
    for (std::size_t i = 0; i < entries.size(); ++i) entries[i] = i;
    if (options.max_entries_per_tensor > 0) {
      const auto keep = std::max<std::size_t>(options.max_entries_per_tensor, 200);
      if (entries.size() > keep) {
        rng.shuffle(std::span(entries));
        entries.resize(keep);
        std::sort(entries.begin(), entries.end());
      }
    }
    for (auto i : entries) {
      if (np.param->frozen_row0 && i < np.param->value.cols()) continue;
      const double original = value[i];
      value[i] = original + options.step;
      const double plus = evaluate();
      value[i] = original - options.step;
      const double minus = evaluate();
      value[i] = original;

      const double numeric = (plus - minus) / (2.0 * options.step);
      const double exact = grad ? grad->data[i] : 0.0;
      const double denom = std::max({std::abs(numeric), std::abs(exact), options.relative_floor});
      const double rel = std::abs(numeric - exact) / denom;
      ++report.entries_checked;
      if (!(rel <= report.max_relative_error)) {
        report.max_relative_error = rel;
        report.worst_parameter = np.name;
        report.worst_index = i;
        report.worst_analytic = exact;
        report.worst_numeric = numeric;
      }
    }
  }
  report.passed = report.max_relative_error <= options.tolerance;
  return report;
}

#define BAITWATCH_INSTANTIATE(T)                                                                              \
  template double gradient_norm<T>(std::span<const NamedParameter<T>>, const Gradients<T>&);                 \
  template double clip_gradients<T>(std::span<const NamedParameter<T>>, Gradients<T>&, double);             \
  template void adam_step<T>(OptimizerState<T>&, std::span<const NamedParameter<T>>, const Gradients<T>&);

BAITWATCH_INSTANTIATE(float)
BAITWATCH_INSTANTIATE(double)

#undef BAITWATCH_INSTANTIATE

}  // namespace baitwatch::ad
