#include "rasc/tensor.hpp"

#include <cmath>
#include <sstream>
#include <unordered_set>

namespace rasc {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid argument";
    case ErrorKind::kShape: return "shape error";
    case ErrorKind::kNumeric: return "numeric error";
    case ErrorKind::kIo: return "i/o error";
    case ErrorKind::kUnsupportedFormat: return "unsupported format";
    case ErrorKind::kModelLoad: return "model load failure";
    case ErrorKind::kBitstream: return "bitstream error";
    case ErrorKind::kDecode: return "decode failure";
    case ErrorKind::kTraining: return "training failure";
  }
  return "unknown";
}

std::int64_t numel(const Shape& shape) {
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace detail {

double round_to(Precision precision, double v) {
  return precision == Precision::kF32 ? static_cast<double>(static_cast<float>(v))
                                      : v;
}

}  // namespace detail

namespace {

thread_local bool g_grad_enabled = true;

void check_shape(const Shape& shape) {
  for (auto d : shape) {
    require(d > 0, ErrorKind::kShape,
            "tensor dims must be positive, got " + shape_str(shape));
  }
}

std::shared_ptr<detail::Node> make_leaf(Shape shape, std::vector<double> values,
                                        Precision precision) {
  check_shape(shape);
  require(static_cast<std::int64_t>(values.size()) == numel(shape),
          ErrorKind::kShape,
          "buffer length " + std::to_string(values.size()) +
              " does not match shape " + shape_str(shape));
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->precision = precision;
  for (auto& v : values) {
    require(std::isfinite(v), ErrorKind::kNumeric, "non-finite tensor value");
    v = detail::round_to(precision, v);
  }
  node->value = std::move(values);
  return node;
}

}  // namespace

Tensor wrap_node(std::shared_ptr<detail::Node> node) { return Tensor(std::move(node)); }

Tensor Tensor::zeros(Shape shape, Precision precision) {
  auto n = rasc::numel(shape);
  return Tensor(make_leaf(std::move(shape), std::vector<double>(n, 0.0), precision));
}

Tensor Tensor::full(Shape shape, double value, Precision precision) {
  auto n = rasc::numel(shape);
  return Tensor(make_leaf(std::move(shape), std::vector<double>(n, value), precision));
}

Tensor Tensor::from(Shape shape, std::vector<double> values, Precision precision) {
  return Tensor(make_leaf(std::move(shape), std::move(values), precision));
}

Tensor Tensor::scalar(double value, Precision precision) {
  return Tensor(make_leaf({}, {value}, precision));
}

Tensor Tensor::parameter(std::string name, Shape shape, std::vector<double> values,
                         Precision precision) {
  auto node = make_leaf(std::move(shape), std::move(values), precision);
  node->requires_grad = true;
  node->name = std::move(name);
  node->grad.assign(node->value.size(), 0.0);
  return Tensor(std::move(node));
}

const Shape& Tensor::shape() const { return node_->shape; }

std::int64_t Tensor::dim(int axis) const {
  require(axis >= 0 && axis < rank(), ErrorKind::kShape,
          "axis " + std::to_string(axis) + " out of range for " + shape_str(shape()));
  return node_->shape[axis];
}

std::int64_t Tensor::numel() const { return static_cast<std::int64_t>(node_->value.size()); }

Precision Tensor::precision() const { return node_->precision; }

std::span<const double> Tensor::values() const { return node_->value; }

double Tensor::item() const {
  require(node_->value.size() == 1, ErrorKind::kShape,
          "item() on tensor of shape " + shape_str(shape()));
  return node_->value[0];
}

double Tensor::operator()(std::int64_t i, std::int64_t j) const {
  return node_->value[i * node_->shape[1] + j];
}

bool Tensor::requires_grad() const { return node_->requires_grad; }

const std::string& Tensor::name() const { return node_->name; }

std::span<const double> Tensor::grad() const { return node_->grad_buffer(); }

Tensor Tensor::detach() const {
  return Tensor(make_leaf(node_->shape, node_->value, node_->precision));
}

void Tensor::assign(std::span<const double> values) {
  require(node_->leaf, ErrorKind::kInvalidArgument, "assign() on a non-leaf tensor");
  require(values.size() == node_->value.size(), ErrorKind::kShape,
          "assign() size mismatch for " + node_->name);
  for (std::size_t i = 0; i < values.size(); ++i) {
    require(std::isfinite(values[i]), ErrorKind::kNumeric,
            "non-finite value assigned to " + node_->name);
    node_->value[i] = detail::round_to(node_->precision, values[i]);
  }
}

void Tensor::zero_grad() { node_->grad.assign(node_->value.size(), 0.0); }

std::span<double> Tensor::mutable_grad() { return node_->grad_buffer(); }

std::span<const double> BackwardContext::grad() const { return self_.grad; }
std::span<const double> BackwardContext::output() const { return self_.value; }
std::span<const double> BackwardContext::input(std::size_t i) const {
  return self_.inputs[i]->value;
}
const Shape& BackwardContext::input_shape(std::size_t i) const {
  return self_.inputs[i]->shape;
}
double* BackwardContext::input_grad(std::size_t i) const {
  auto& in = *self_.inputs[i];
  if (!in.requires_grad) return nullptr;
  return in.grad_buffer().data();
}

Tensor make_result(const char* op, Shape shape, std::vector<double> values,
                   std::vector<Tensor> inputs, BackwardFn backward) {
  Precision precision = Precision::kF64;
  bool needs_grad = false;
  for (const auto& in : inputs) {
    precision = promote(precision, in.precision());
    needs_grad = needs_grad || in.requires_grad();
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->precision = precision;
  for (auto& v : values) {
    if (!std::isfinite(v)) {
      fail(ErrorKind::kNumeric,
           std::string(op) + " produced a non-finite value (shape " +
               shape_str(node->shape) + ")");
    }
    v = detail::round_to(precision, v);
  }
  node->value = std::move(values);
  if (needs_grad && g_grad_enabled && backward) {
    node->requires_grad = true;
    node->leaf = false;
    node->inputs.reserve(inputs.size());
    for (auto& in : inputs) node->inputs.push_back(in.node_ptr());
    node->backward = std::move(backward);
  }
  return wrap_node(std::move(node));
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_enabled() { return g_grad_enabled; }

void backprop(const Tensor& output, std::span<const Tensor> parameters) {
  require(output.defined() && output.numel() == 1 && output.rank() == 0,
          ErrorKind::kShape,
          "backprop needs a scalar output, got " +
              (output.defined() ? shape_str(output.shape()) : std::string("undefined")));
  for (auto p : parameters) p.zero_grad();
  if (!output.requires_grad()) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> visited;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(output.node(), 0);
  visited.insert(output.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      detail::Node* child = node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) {
        stack.emplace_back(child, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  for (auto* node : order) {
    if (!node->leaf) node->grad.assign(node->value.size(), 0.0);
  }
  output.node()->grad.assign(1, 1.0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* node = *it;
    if (node->leaf || !node->backward) continue;
    node->backward(BackwardContext(*node));
  }
}

}  // namespace rasc
