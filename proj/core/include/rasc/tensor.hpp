#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "rasc/error.hpp"

namespace rasc {

// Storage precision of a tensor. Values are always computed in double; an
// f32 tensor has every stored value rounded to the nearest float, which is
// what a float buffer would hold.
enum class Precision : std::uint8_t { kF32 = 0, kF64 = 1 };

using Shape = std::vector<std::int64_t>;

std::int64_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

// Lowest precision wins when inputs are mixed.
inline Precision promote(Precision a, Precision b) {
  return (a == Precision::kF32 || b == Precision::kF32) ? Precision::kF32
                                                        : Precision::kF64;
}

namespace detail {
struct Node;
}

// Immutable n-dimensional array with an optional recorded history for
// reverse-mode differentiation. Copies share the underlying node.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, Precision precision = Precision::kF64);
  static Tensor full(Shape shape, double value,
                     Precision precision = Precision::kF64);
  static Tensor from(Shape shape, std::vector<double> values,
                     Precision precision = Precision::kF64);
  static Tensor scalar(double value, Precision precision = Precision::kF64);
  // A named leaf that accumulates gradients.
  static Tensor parameter(std::string name, Shape shape,
                          std::vector<double> values, Precision precision);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  int rank() const { return static_cast<int>(shape().size()); }
  std::int64_t dim(int axis) const;
  std::int64_t numel() const;
  Precision precision() const;

  std::span<const double> values() const;
  double item() const;
  double operator()(std::int64_t i, std::int64_t j) const;

  bool requires_grad() const;
  const std::string& name() const;
  // Zero-filled when backprop never touched this tensor.
  std::span<const double> grad() const;

  // Same values, no history.
  Tensor detach() const;

  // Leaf-only mutation used by optimizers and checkpoint loading.
  void assign(std::span<const double> values);
  void zero_grad();
  std::span<double> mutable_grad();

  detail::Node* node() const { return node_.get(); }
  const std::shared_ptr<detail::Node>& node_ptr() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node> node_;

  friend Tensor wrap_node(std::shared_ptr<detail::Node> node);
};

Tensor wrap_node(std::shared_ptr<detail::Node> node);

// Everything a backward closure may touch.
class BackwardContext {
 public:
  BackwardContext(const detail::Node& self) : self_(self) {}

  std::span<const double> grad() const;
  std::span<const double> output() const;
  std::span<const double> input(std::size_t i) const;
  const Shape& input_shape(std::size_t i) const;
  // nullptr when input i does not need a gradient.
  double* input_grad(std::size_t i) const;

 private:
  const detail::Node& self_;
};

using BackwardFn = std::function<void(const BackwardContext&)>;

// Creates the result of an op. Rounds to the promoted precision, rejects
// non-finite values (naming `op`), and records history when gradients are
// enabled and any input requires one.
Tensor make_result(const char* op, Shape shape, std::vector<double> values,
                   std::vector<Tensor> inputs, BackwardFn backward);

// Disables history recording on this thread for the guard's lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

// Writes d(output)/d(p) into p.grad for every p in `parameters`. Parameters
// with no path to `output` end up with an all-zero gradient.
void backprop(const Tensor& output, std::span<const Tensor> parameters);

namespace detail {

struct Node {
  Shape shape;
  Precision precision = Precision::kF64;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  bool leaf = true;
  std::string name;
  std::vector<std::shared_ptr<Node>> inputs;
  BackwardFn backward;

  std::vector<double>& grad_buffer() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    return grad;
  }
};

double round_to(Precision precision, double v);

}  // namespace detail

}  // namespace rasc
