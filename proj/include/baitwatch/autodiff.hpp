#pragma once

// Dense tensors with a reverse-mode differentiation tape.
//
// A Graph records operations in creation order, which is already a
// topological order, so backward() is a single reverse sweep. Nodes and their
// buffers are recycled by clear(), so one graph can be reused per training
// example without reallocating.
//
// Instantiated for float (training) and double (gradient checks).

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace baitwatch::ad {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

template <typename T>
struct Tensor {
  Shape shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(Shape s, T fill = T(0));
  Tensor(Shape s, std::vector<T> values);

  static Tensor vector(std::vector<T> values);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<T> values);

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t rows() const { return shape.at(0); }
  std::size_t cols() const { return shape.at(1); }

  T& operator[](std::size_t i) { return data[i]; }
  T operator[](std::size_t i) const { return data[i]; }
  T& at(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }
  T at(std::size_t r, std::size_t c) const { return data[r * shape[1] + c]; }

  bool operator==(const Tensor&) const = default;
};

// A trainable tensor. Gradients live outside the parameter (see Gradients),
// so a model can be read concurrently while another copy trains.
template <typename T>
struct Parameter {
  Tensor<T> value;
  // Row 0 is the padding embedding: always zero, never updated.
  bool frozen_row0 = false;
};

// Accumulated dL/dparam keyed by parameter identity.
template <typename T>
class Gradients {
 public:
  Tensor<T>& of(const Parameter<T>& p);
  const Tensor<T>* find(const Parameter<T>& p) const;
  void zero();
  void clear() { grads_.clear(); }

 private:
  std::unordered_map<const Parameter<T>*, Tensor<T>> grads_;
};

template <typename T>
class Graph;

template <typename T>
struct Var {
  Graph<T>* graph = nullptr;
  std::uint32_t id = 0;

  const Tensor<T>& value() const;
  const Shape& shape() const { return value().shape; }
  std::size_t size() const { return value().size(); }
  T item() const;  // value of a single-element tensor
};

enum class Op : std::uint8_t {
  constant,
  param,
  embedding,
  matmul,
  add,
  sub,
  mul,
  dot,
  concat,
  stack,
  slice,
  sigmoid,
  tanh,
  softmax,
  sum,
  mean,
  max,
  sum_rows,
  mean_rows,
  max_rows,
  bce_with_logits,
};

template <typename T>
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var<T> constant(Tensor<T> value);
  Var<T> scalar(T x) { return constant(Tensor<T>({1}, x)); }
  // Leaf reading the parameter in place; repeated calls return the same node.
  Var<T> param(const Parameter<T>& p);
  // Row `id` of an embedding table. Row 0 never receives gradient.
  Var<T> embedding(const Parameter<T>& table, std::uint32_t id);

  // Reverse sweep from a single-element loss. Parameter gradients are added
  // into `sink`; intermediate node gradients are available via grad().
  void backward(Var<T> loss, Gradients<T>& sink);

  const Tensor<T>& value(std::uint32_t id) const;
  const Tensor<T>& grad(Var<T> v) const { return nodes_[v.id].grad; }
  std::size_t size() const { return count_; }

  // Forget all nodes but keep their storage for reuse.
  void clear();

  // Used by the op functions below.
  Var<T> record(Op op, std::initializer_list<std::uint32_t> inputs, Shape shape);
  Var<T> record(Op op, std::span<const Var<T>> inputs, Shape shape);
  Tensor<T>& mutable_value(Var<T> v) { return nodes_[v.id].value; }
  std::vector<std::uint32_t>& argmax(Var<T> v) { return nodes_[v.id].argmax; }
  void set_aux(Var<T> v, std::size_t a, std::size_t b = 0);
  void set_label(Var<T> v, T label) { nodes_[v.id].label = label; }

 private:
  struct Node {
    Op op = Op::constant;
    std::vector<std::uint32_t> inputs;
    Tensor<T> value;
    Tensor<T> grad;
    const Parameter<T>* param = nullptr;
    std::size_t aux0 = 0;
    std::size_t aux1 = 0;
    std::vector<std::uint32_t> argmax;
    T label = T(0);
    bool requires_grad = false;
  };

  Node& next_node(Op op);
  void backprop(Node& node, Gradients<T>& sink);

  std::deque<Node> nodes_;
  std::size_t count_ = 0;
  std::unordered_map<const Parameter<T>*, std::uint32_t> param_nodes_;
};

// Operations. Inputs must belong to the same graph; shape violations throw
// ShapeError naming the operation and the offending shapes.

// [m x n] by [n] -> [m], or [m x n] by [n x p] -> [m x p].
template <typename T> Var<T> matmul(Var<T> a, Var<T> b);
// Elementwise; either side may also be a single element (broadcast).
template <typename T> Var<T> add(Var<T> a, Var<T> b);
template <typename T> Var<T> sub(Var<T> a, Var<T> b);
template <typename T> Var<T> mul(Var<T> a, Var<T> b);
template <typename T> Var<T> dot(Var<T> a, Var<T> b);
// Concatenation of vectors.
template <typename T> Var<T> concat(std::span<const Var<T>> parts);
// Vectors of equal length as the rows of a matrix.
template <typename T> Var<T> stack(std::span<const Var<T>> rows);
template <typename T> Var<T> slice(Var<T> a, std::size_t begin, std::size_t length);
template <typename T> Var<T> sigmoid(Var<T> a);
template <typename T> Var<T> tanh(Var<T> a);
// Vector softmax with max subtraction.
template <typename T> Var<T> softmax(Var<T> a);
// Full reductions to a single element.
template <typename T> Var<T> sum(Var<T> a);
template <typename T> Var<T> mean(Var<T> a);
template <typename T> Var<T> max(Var<T> a);
// Reductions over the rows of a matrix, one result per column.
template <typename T> Var<T> sum_rows(Var<T> a);
template <typename T> Var<T> mean_rows(Var<T> a);
template <typename T> Var<T> max_rows(Var<T> a);
// Numerically stable -[y log s(x) + (1-y) log(1-s(x))] for a single logit.
template <typename T> Var<T> bce_with_logits(Var<T> logit, T label);

template <typename T> Var<T> operator+(Var<T> a, Var<T> b) { return add(a, b); }
template <typename T> Var<T> operator-(Var<T> a, Var<T> b) { return sub(a, b); }
template <typename T> Var<T> operator*(Var<T> a, Var<T> b) { return mul(a, b); }

template <typename T>
inline T stable_sigmoid(T x) {
  if (x >= T(0)) {
    const T e = std::exp(-x);
    return T(1) / (T(1) + e);
  }
  const T e = std::exp(x);
  return e / (T(1) + e);
}

}  // namespace baitwatch::ad
