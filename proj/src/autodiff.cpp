#include "baitwatch/autodiff.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace baitwatch::ad {

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

namespace {

std::size_t element_count(const Shape& s) {
  return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
}

[[noreturn]] void shape_error(const char* op, const Shape& a) {
  throw ShapeError(std::string(op) + ": unsupported shape " + shape_string(a));
}

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_string(a) + " and " + shape_string(b));
}

}  // namespace

// ---------------------------------------------------------------------------
// Tensor

template <typename T>
Tensor<T>::Tensor(Shape s, T fill) : shape(std::move(s)), data(element_count(shape), fill) {}

template <typename T>
Tensor<T>::Tensor(Shape s, std::vector<T> values) : shape(std::move(s)), data(std::move(values)) {
  if (data.size() != element_count(shape)) {
    throw ShapeError("tensor: " + std::to_string(data.size()) + " values for shape " + shape_string(shape));
  }
}

template <typename T>
Tensor<T> Tensor<T>::vector(std::vector<T> values) {
  const auto n = values.size();
  return Tensor({n}, std::move(values));
}

template <typename T>
Tensor<T> Tensor<T>::matrix(std::size_t rows, std::size_t cols, std::vector<T> values) {
  return Tensor({rows, cols}, std::move(values));
}

// ---------------------------------------------------------------------------
// Gradients

template <typename T>
Tensor<T>& Gradients<T>::of(const Parameter<T>& p) {
  auto it = grads_.find(&p);
  if (it == grads_.end()) it = grads_.emplace(&p, Tensor<T>(p.value.shape)).first;
  return it->second;
}

template <typename T>
const Tensor<T>* Gradients<T>::find(const Parameter<T>& p) const {
  auto it = grads_.find(&p);
  return it == grads_.end() ? nullptr : &it->second;
}

template <typename T>
void Gradients<T>::zero() {
  for (auto& [p, g] : grads_) std::fill(g.data.begin(), g.data.end(), T(0));
}

// ---------------------------------------------------------------------------
// Graph bookkeeping

template <typename T>
const Tensor<T>& Var<T>::value() const {
  return graph->value(id);
}

template <typename T>
T Var<T>::item() const {
  const auto& v = value();
  if (v.size() != 1) throw ShapeError("item: tensor has shape " + shape_string(v.shape));
  return v.data[0];
}

template <typename T>
const Tensor<T>& Graph<T>::value(std::uint32_t id) const {
  const Node& n = nodes_[id];
  return n.op == Op::param ? n.param->value : n.value;
}

template <typename T>
typename Graph<T>::Node& Graph<T>::next_node(Op op) {
  if (count_ == nodes_.size()) nodes_.emplace_back();
  Node& n = nodes_[count_++];
  n.op = op;
  n.inputs.clear();
  n.param = nullptr;
  n.aux0 = n.aux1 = 0;
  n.label = T(0);
  n.requires_grad = false;
  return n;
}

template <typename T>
void Graph<T>::clear() {
  count_ = 0;
  param_nodes_.clear();
}

template <typename T>
Var<T> Graph<T>::constant(Tensor<T> value) {
  Node& n = next_node(Op::constant);
  n.value = std::move(value);
  return {this, static_cast<std::uint32_t>(count_ - 1)};
}

template <typename T>
Var<T> Graph<T>::param(const Parameter<T>& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return {this, it->second};
  Node& n = next_node(Op::param);
  n.param = &p;
  n.requires_grad = true;
  const auto id = static_cast<std::uint32_t>(count_ - 1);
  param_nodes_.emplace(&p, id);
  return {this, id};
}

template <typename T>
Var<T> Graph<T>::embedding(const Parameter<T>& table, std::uint32_t id) {
  const auto& t = table.value;
  if (t.rank() != 2 || id >= t.rows()) {
    throw ShapeError("embedding: id " + std::to_string(id) + " outside table " + shape_string(t.shape));
  }
  Node& n = next_node(Op::embedding);
  n.param = &table;
  n.aux0 = id;
  n.requires_grad = true;
  const auto d = t.cols();
  n.value.shape.assign({d});
  n.value.data.assign(t.data.begin() + static_cast<std::ptrdiff_t>(id * d),
                      t.data.begin() + static_cast<std::ptrdiff_t>((id + 1) * d));
  return {this, static_cast<std::uint32_t>(count_ - 1)};
}

template <typename T>
Var<T> Graph<T>::record(Op op, std::initializer_list<std::uint32_t> inputs, Shape shape) {
  Node& n = next_node(op);
  n.inputs.assign(inputs.begin(), inputs.end());
  for (auto i : n.inputs) n.requires_grad = n.requires_grad || nodes_[i].requires_grad;
  n.value.data.assign(element_count(shape), T(0));
  n.value.shape = std::move(shape);
  return {this, static_cast<std::uint32_t>(count_ - 1)};
}

template <typename T>
Var<T> Graph<T>::record(Op op, std::span<const Var<T>> inputs, Shape shape) {
  Node& n = next_node(op);
  for (const auto& v : inputs) {
    n.inputs.push_back(v.id);
    n.requires_grad = n.requires_grad || nodes_[v.id].requires_grad;
  }
  n.value.data.assign(element_count(shape), T(0));
  n.value.shape = std::move(shape);
  return {this, static_cast<std::uint32_t>(count_ - 1)};
}

template <typename T>
void Graph<T>::set_aux(Var<T> v, std::size_t a, std::size_t b) {
  nodes_[v.id].aux0 = a;
  nodes_[v.id].aux1 = b;
}

// ---------------------------------------------------------------------------
// Backward

template <typename T>
void Graph<T>::backward(Var<T> loss, Gradients<T>& sink) {
  if (loss.graph != this) throw std::invalid_argument("backward: loss belongs to another graph");
  if (value(loss.id).size() != 1) {
    throw ShapeError("backward: loss must be a scalar, got " + shape_string(value(loss.id).shape));
  }
  for (std::size_t i = 0; i <= loss.id; ++i) {
    Node& n = nodes_[i];
    if (!n.requires_grad) continue;
    const auto& v = value(static_cast<std::uint32_t>(i));
    n.grad.shape = v.shape;
    n.grad.data.assign(v.size(), T(0));
  }
  if (!nodes_[loss.id].requires_grad) return;
  nodes_[loss.id].grad.data[0] = T(1);
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.requires_grad) backprop(n, sink);
  }
}

template <typename T>
void Graph<T>::backprop(Node& node, Gradients<T>& sink) {
  const auto& g = node.grad.data;
  const auto& y = node.value.data;
  auto in = [&](std::size_t k) -> Node& { return nodes_[node.inputs[k]]; };
  auto in_value = [&](std::size_t k) -> const Tensor<T>& { return value(node.inputs[k]); };

  switch (node.op) {
    case Op::constant:
      break;
    case Op::param: {
      auto& dst = sink.of(*node.param).data;
      for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
      if (node.param->frozen_row0) {
        const auto d = node.param->value.cols();
        std::fill(dst.begin(), dst.begin() + static_cast<std::ptrdiff_t>(d), T(0));
      }
      break;
    }
    case Op::embedding: {
      if (node.aux0 == 0 && node.param->frozen_row0) break;
      auto& dst = sink.of(*node.param).data;
      const auto d = g.size();
      for (std::size_t i = 0; i < d; ++i) dst[node.aux0 * d + i] += g[i];
      break;
    }
    case Op::matmul: {
      Node& na = in(0);
      Node& nb = in(1);
      const auto& a = in_value(0);
      const auto& b = in_value(1);
      const auto m = a.rows();
      const auto n = a.cols();
      if (b.rank() == 1) {
        if (na.requires_grad) {
          auto& ga = na.grad.data;
          for (std::size_t i = 0; i < m; ++i) {
            const T gi = g[i];
            T* row = ga.data() + i * n;
            for (std::size_t j = 0; j < n; ++j) row[j] += gi * b.data[j];
          }
        }
        if (nb.requires_grad) {
          auto& gb = nb.grad.data;
          for (std::size_t i = 0; i < m; ++i) {
            const T gi = g[i];
            const T* row = a.data.data() + i * n;
            for (std::size_t j = 0; j < n; ++j) gb[j] += row[j] * gi;
          }
        }
      } else {
        const auto p = b.cols();
        if (na.requires_grad) {
          auto& ga = na.grad.data;
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) {
              T acc = 0;
              for (std::size_t k = 0; k < p; ++k) acc += g[i * p + k] * b.data[j * p + k];
              ga[i * n + j] += acc;
            }
        }
        if (nb.requires_grad) {
          auto& gb = nb.grad.data;
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) {
              const T aij = a.data[i * n + j];
              for (std::size_t k = 0; k < p; ++k) gb[j * p + k] += aij * g[i * p + k];
            }
        }
      }
      break;
    }
    case Op::add:
    case Op::sub: {
      const T sign = node.op == Op::add ? T(1) : T(-1);
      for (std::size_t k = 0; k < 2; ++k) {
        Node& ni = in(k);
        if (!ni.requires_grad) continue;
        const T s = k == 0 ? T(1) : sign;
        auto& gi = ni.grad.data;
        if (gi.size() == g.size()) {
          for (std::size_t i = 0; i < g.size(); ++i) gi[i] += s * g[i];
        } else {
          T acc = 0;
          for (T x : g) acc += x;
          gi[0] += s * acc;
        }
      }
      break;
    }
    case Op::mul: {
      const auto& a = in_value(0);
      const auto& b = in_value(1);
      for (std::size_t k = 0; k < 2; ++k) {
        Node& ni = in(k);
        if (!ni.requires_grad) continue;
        const auto& other = k == 0 ? b : a;
        auto& gi = ni.grad.data;
        if (gi.size() == g.size()) {
          if (other.size() == g.size()) {
            for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i] * other.data[i];
          } else {
            for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i] * other.data[0];
          }
        } else {
          T acc = 0;
          for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * other.data[i];
          gi[0] += acc;
        }
      }
      break;
    }
    case Op::dot: {
      const auto& a = in_value(0);
      const auto& b = in_value(1);
      if (in(0).requires_grad) {
        auto& ga = in(0).grad.data;
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[0] * b.data[i];
      }
      if (in(1).requires_grad) {
        auto& gb = in(1).grad.data;
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[0] * a.data[i];
      }
      break;
    }
    case Op::concat: {
      std::size_t offset = 0;
      for (std::size_t k = 0; k < node.inputs.size(); ++k) {
        Node& ni = in(k);
        const auto len = value(node.inputs[k]).size();
        if (ni.requires_grad) {
          for (std::size_t i = 0; i < len; ++i) ni.grad.data[i] += g[offset + i];
        }
        offset += len;
      }
      break;
    }
    case Op::stack: {
      const auto d = node.value.cols();
      for (std::size_t k = 0; k < node.inputs.size(); ++k) {
        Node& ni = in(k);
        if (!ni.requires_grad) continue;
        for (std::size_t i = 0; i < d; ++i) ni.grad.data[i] += g[k * d + i];
      }
      break;
    }
    case Op::slice: {
      auto& ga = in(0).grad.data;
      for (std::size_t i = 0; i < g.size(); ++i) ga[node.aux0 + i] += g[i];
      break;
    }
    case Op::sigmoid: {
      auto& ga = in(0).grad.data;
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (T(1) - y[i]);
      break;
    }
    case Op::tanh: {
      auto& ga = in(0).grad.data;
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (T(1) - y[i] * y[i]);
      break;
    }
    case Op::softmax: {
      T inner = 0;
      for (std::size_t i = 0; i < g.size(); ++i) inner += g[i] * y[i];
      auto& ga = in(0).grad.data;
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += y[i] * (g[i] - inner);
      break;
    }
    case Op::sum:
    case Op::mean: {
      auto& ga = in(0).grad.data;
      const T scale = node.op == Op::sum ? g[0] : g[0] / static_cast<T>(ga.size());
      for (auto& x : ga) x += scale;
      break;
    }
    case Op::max:
      in(0).grad.data[node.aux0] += g[0];
      break;
    case Op::sum_rows:
    case Op::mean_rows: {
      auto& ga = in(0).grad.data;
      const auto c = g.size();
      const auto r = ga.size() / c;
      const T scale = node.op == Op::sum_rows ? T(1) : T(1) / static_cast<T>(r);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += scale * g[j];
      break;
    }
    case Op::max_rows: {
      auto& ga = in(0).grad.data;
      const auto c = g.size();
      for (std::size_t j = 0; j < c; ++j) ga[node.argmax[j] * c + j] += g[j];
      break;
    }
    case Op::bce_with_logits: {
      const T x = in_value(0).data[0];
      in(0).grad.data[0] += g[0] * (stable_sigmoid(x) - node.label);
      break;
    }
  }
}

// ---------------------------------------------------------------------------
// Operations

namespace {

template <typename T>
Graph<T>& same_graph(const char* op, Var<T> a, Var<T> b) {
  if (a.graph == nullptr || a.graph != b.graph) throw std::invalid_argument(std::string(op) + ": operands from different graphs");
  return *a.graph;
}

template <typename T>
Var<T> elementwise(Op op, const char* name, Var<T> a, Var<T> b) {
  Graph<T>& g = same_graph(name, a, b);
  const auto& av = a.value();
  const auto& bv = b.value();
  Shape shape;
  if (av.shape == bv.shape) {
    shape = av.shape;
  } else if (bv.size() == 1) {
    shape = av.shape;
  } else if (av.size() == 1) {
    shape = bv.shape;
  } else {
    shape_error(name, av.shape, bv.shape);
  }
  Var<T> out = g.record(op, {a.id, b.id}, std::move(shape));
  auto& o = g.mutable_value(out).data;
  const auto n = o.size();
  const bool sa = av.size() == 1 && n != 1;
  const bool sb = bv.size() == 1 && n != 1;
  for (std::size_t i = 0; i < n; ++i) {
    const T x = av.data[sa ? 0 : i];
    const T z = bv.data[sb ? 0 : i];
    o[i] = op == Op::add ? x + z : op == Op::sub ? x - z : x * z;
  }
  return out;
}

template <typename T>
Var<T> unary(Op op, Var<T> a, Shape shape) {
  return a.graph->record(op, {a.id}, std::move(shape));
}

template <typename T>
void require_vector(const char* op, Var<T> a) {
  if (a.value().rank() != 1) shape_error(op, a.value().shape);
}

template <typename T>
void require_matrix(const char* op, Var<T> a) {
  if (a.value().rank() != 2) shape_error(op, a.value().shape);
}

}  // namespace

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b) {
  Graph<T>& g = same_graph("matmul", a, b);
  const auto& av = a.value();
  const auto& bv = b.value();
  if (av.rank() != 2 || bv.rank() < 1 || bv.rank() > 2 || av.cols() != bv.shape[0]) {
    shape_error("matmul", av.shape, bv.shape);
  }
  const auto m = av.rows();
  const auto n = av.cols();
  if (bv.rank() == 1) {
    Var<T> out = g.record(Op::matmul, {a.id, b.id}, {m});
    auto& o = g.mutable_value(out).data;
    for (std::size_t i = 0; i < m; ++i) {
      const T* row = av.data.data() + i * n;
      T acc = 0;
      for (std::size_t j = 0; j < n; ++j) acc += row[j] * bv.data[j];
      o[i] = acc;
    }
    return out;
  }
  const auto p = bv.cols();
  Var<T> out = g.record(Op::matmul, {a.id, b.id}, {m, p});
  auto& o = g.mutable_value(out).data;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const T aij = av.data[i * n + j];
      for (std::size_t k = 0; k < p; ++k) o[i * p + k] += aij * bv.data[j * p + k];
    }
  return out;
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  return elementwise(Op::add, "add", a, b);
}

template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
  return elementwise(Op::sub, "sub", a, b);
}

template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
  return elementwise(Op::mul, "mul", a, b);
}

template <typename T>
Var<T> dot(Var<T> a, Var<T> b) {
  Graph<T>& g = same_graph("dot", a, b);
  const auto& av = a.value();
  const auto& bv = b.value();
  if (av.size() != bv.size()) shape_error("dot", av.shape, bv.shape);
  Var<T> out = g.record(Op::dot, {a.id, b.id}, {1});
  T acc = 0;
  for (std::size_t i = 0; i < av.size(); ++i) acc += av.data[i] * bv.data[i];
  g.mutable_value(out).data[0] = acc;
  return out;
}

template <typename T>
Var<T> concat(std::span<const Var<T>> parts) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  Graph<T>& g = *parts.front().graph;
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.graph != &g) throw std::invalid_argument("concat: operands from different graphs");
    require_vector("concat", p);
    total += p.size();
  }
  Var<T> out = g.record(Op::concat, parts, {total});
  auto& o = g.mutable_value(out).data;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const auto& v = p.value().data;
    std::copy(v.begin(), v.end(), o.begin() + static_cast<std::ptrdiff_t>(offset));
    offset += v.size();
  }
  return out;
}

template <typename T>
Var<T> stack(std::span<const Var<T>> rows) {
  if (rows.empty()) throw ShapeError("stack: no inputs");
  Graph<T>& g = *rows.front().graph;
  const auto d = rows.front().size();
  for (const auto& r : rows) {
    if (r.graph != &g) throw std::invalid_argument("stack: operands from different graphs");
    require_vector("stack", r);
    if (r.size() != d) shape_error("stack", rows.front().shape(), r.shape());
  }
  Var<T> out = g.record(Op::stack, rows, {rows.size(), d});
  auto& o = g.mutable_value(out).data;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& v = rows[k].value().data;
    std::copy(v.begin(), v.end(), o.begin() + static_cast<std::ptrdiff_t>(k * d));
  }
  return out;
}

template <typename T>
Var<T> slice(Var<T> a, std::size_t begin, std::size_t length) {
  require_vector("slice", a);
  if (begin + length > a.size() || length == 0) {
    throw ShapeError("slice: range [" + std::to_string(begin) + ", " + std::to_string(begin + length) +
                     ") outside " + shape_string(a.shape()));
  }
  Var<T> out = unary(Op::slice, a, {length});
  a.graph->set_aux(out, begin);
  const auto& v = a.value().data;
  std::copy(v.begin() + static_cast<std::ptrdiff_t>(begin), v.begin() + static_cast<std::ptrdiff_t>(begin + length),
            a.graph->mutable_value(out).data.begin());
  return out;
}

template <typename T>
Var<T> sigmoid(Var<T> a) {
  Var<T> out = unary(Op::sigmoid, a, a.shape());
  const auto& x = a.value().data;
  auto& o = a.graph->mutable_value(out).data;
  for (std::size_t i = 0; i < x.size(); ++i) o[i] = stable_sigmoid(x[i]);
  return out;
}

template <typename T>
Var<T> tanh(Var<T> a) {
  Var<T> out = unary(Op::tanh, a, a.shape());
  const auto& x = a.value().data;
  auto& o = a.graph->mutable_value(out).data;
  for (std::size_t i = 0; i < x.size(); ++i) o[i] = std::tanh(x[i]);
  return out;
}

template <typename T>
Var<T> softmax(Var<T> a) {
  require_vector("softmax", a);
  if (a.size() == 0) throw ShapeError("softmax: empty input");
  Var<T> out = unary(Op::softmax, a, a.shape());
  const auto& x = a.value().data;
  auto& o = a.graph->mutable_value(out).data;
  const T hi = *std::max_element(x.begin(), x.end());
  T total = 0;
  for (std::size_t i = 0; i < x.size(); ++i) total += (o[i] = std::exp(x[i] - hi));
  for (auto& v : o) v /= total;
  return out;
}

template <typename T>
Var<T> sum(Var<T> a) {
  Var<T> out = unary(Op::sum, a, {1});
  T acc = 0;
  for (T x : a.value().data) acc += x;
  a.graph->mutable_value(out).data[0] = acc;
  return out;
}

template <typename T>
Var<T> mean(Var<T> a) {
  if (a.size() == 0) throw ShapeError("mean: empty input");
  Var<T> out = unary(Op::mean, a, {1});
  T acc = 0;
  for (T x : a.value().data) acc += x;
  a.graph->mutable_value(out).data[0] = acc / static_cast<T>(a.size());
  return out;
}

template <typename T>
Var<T> max(Var<T> a) {
  if (a.size() == 0) throw ShapeError("max: empty input");
  Var<T> out = unary(Op::max, a, {1});
  const auto& x = a.value().data;
  const auto idx = static_cast<std::size_t>(std::max_element(x.begin(), x.end()) - x.begin());
  a.graph->set_aux(out, idx);
  a.graph->mutable_value(out).data[0] = x[idx];
  return out;
}

template <typename T>
Var<T> sum_rows(Var<T> a) {
  require_matrix("sum_rows", a);
  const auto r = a.value().rows();
  const auto c = a.value().cols();
  Var<T> out = unary(Op::sum_rows, a, {c});
  const auto& x = a.value().data;
  auto& o = a.graph->mutable_value(out).data;
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) o[j] += x[i * c + j];
  return out;
}

template <typename T>
Var<T> mean_rows(Var<T> a) {
  require_matrix("mean_rows", a);
  const auto r = a.value().rows();
  if (r == 0) throw ShapeError("mean_rows: no rows");
  const auto c = a.value().cols();
  Var<T> out = unary(Op::mean_rows, a, {c});
  const auto& x = a.value().data;
  auto& o = a.graph->mutable_value(out).data;
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) o[j] += x[i * c + j];
  for (auto& v : o) v /= static_cast<T>(r);
  return out;
}

template <typename T>
Var<T> max_rows(Var<T> a) {
  require_matrix("max_rows", a);
  const auto r = a.value().rows();
  if (r == 0) throw ShapeError("max_rows: no rows");
  const auto c = a.value().cols();
  Var<T> out = unary(Op::max_rows, a, {c});
  const auto& x = a.value().data;
  auto& o = a.graph->mutable_value(out).data;
  auto& arg = a.graph->argmax(out);
  arg.assign(c, 0);
  for (std::size_t j = 0; j < c; ++j) {
    o[j] = x[j];
    for (std::size_t i = 1; i < r; ++i) {
      if (x[i * c + j] > o[j]) {
        o[j] = x[i * c + j];
        arg[j] = static_cast<std::uint32_t>(i);
      }
    }
  }
  return out;
}

template <typename T>
Var<T> bce_with_logits(Var<T> logit, T label) {
  if (logit.size() != 1) shape_error("bce_with_logits", logit.shape());
  Var<T> out = unary(Op::bce_with_logits, logit, {1});
  logit.graph->set_label(out, label);
  const T x = logit.value().data[0];
  const T loss = std::max(x, T(0)) - x * label + std::log1p(std::exp(-std::abs(x)));
  logit.graph->mutable_value(out).data[0] = loss;
  return out;
}

#define BAITWATCH_INSTANTIATE(T)                                   \
  template struct Tensor<T>;                                       \
  template class Gradients<T>;                                     \
  template struct Var<T>;                                          \
  template class Graph<T>;                                         \
  template Var<T> matmul<T>(Var<T>, Var<T>);                       \
  template Var<T> add<T>(Var<T>, Var<T>);                          \
  template Var<T> sub<T>(Var<T>, Var<T>);                          \
  template Var<T> mul<T>(Var<T>, Var<T>);                          \
  template Var<T> dot<T>(Var<T>, Var<T>);                          \
  template Var<T> concat<T>(std::span<const Var<T>>);              \
  template Var<T> stack<T>(std::span<const Var<T>>);               \
  template Var<T> slice<T>(Var<T>, std::size_t, std::size_t);      \
  template Var<T> sigmoid<T>(Var<T>);                              \
  template Var<T> tanh<T>(Var<T>);                                 \
  template Var<T> softmax<T>(Var<T>);                              \
  template Var<T> sum<T>(Var<T>);                                  \
  template Var<T> mean<T>(Var<T>);                                 \
  template Var<T> max<T>(Var<T>);                                  \
  template Var<T> sum_rows<T>(Var<T>);                             \
  template Var<T> mean_rows<T>(Var<T>);                            \
  template Var<T> max_rows<T>(Var<T>);                             \
  template Var<T> bce_with_logits<T>(Var<T>, T);

BAITWATCH_INSTANTIATE(float)
BAITWATCH_INSTANTIATE(double)

#undef BAITWATCH_INSTANTIATE

}  // namespace baitwatch::ad
