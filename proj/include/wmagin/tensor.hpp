#ifndef WMAGIN_TENSOR_HPP
#define WMAGIN_TENSOR_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace wmagin {

using Shape = std::vector<std::size_t>;

/// Per-row or per-column validity flags (1 = real, 0 = padding).
using Mask = std::vector<std::uint8_t>;

/// Thrown when operand shapes are incompatible.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

std::string shape_to_string(const Shape& shape);
std::size_t shape_size(const Shape& shape);

enum class OpKind {
    Leaf,
    MatMul,
    Transpose,
    Add,
    Sub,
    Mul,
    Div,
    Scale,
    Sigmoid,
    Tanh,
    Relu,
    Exp,
    SoftmaxRows,
    ReduceSum,
    ReduceMean,
    CrossEntropy,
    Concat,
    GatherRows,
    Custom,
};

struct TensorNode;
using NodePtr = std::shared_ptr<TensorNode>;

/// Backward callback: reads `self.grad` and accumulates into the inputs.
using BackwardFn = std::function<void(TensorNode& self)>;

/// One value in the computation graph. Leaves (parameters, constants) have
/// no inputs; every op result holds its inputs and a backward callback.
struct TensorNode {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad;  // empty until first touched by backward
    bool requires_grad = false;
    OpKind op = OpKind::Leaf;
    std::vector<NodePtr> inputs;
    BackwardFn backward;

    bool is_leaf() const { return inputs.empty(); }
    /// Grad buffer of this node, allocated (zero-filled) on first use.
    std::span<double> grad_buffer();
};

/// Dense row-major float64 tensor of rank 0, 1 or 2 with reverse-mode
/// autodiff. A Tensor is a cheap handle; copies share the same node.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(NodePtr node) : node_(std::move(node)) {}

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double value, bool requires_grad = false);
    static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    bool defined() const { return static_cast<bool>(node_); }
    const Shape& shape() const;
    std::size_t rank() const { return shape().size(); }
    std::size_t size() const;
    std::size_t rows() const;
    std::size_t cols() const;

    std::span<const double> data() const;
    /// Direct write access, used by optimizers and tests on leaf tensors.
    std::span<double> mutable_data();
    double item() const;
    double at(std::size_t i) const;
    double at(std::size_t r, std::size_t c) const;

    bool requires_grad() const;
    void set_requires_grad(bool value);
    bool has_grad() const;
    /// Gradient values; all zeros if backward never reached this tensor.
    std::vector<double> grad() const;
    void zero_grad();

    OpKind op() const;
    const NodePtr& node() const { return node_; }

    /// Copy of the values as a fresh leaf without history.
    Tensor detach() const;

private:
    NodePtr node_;
};

/// Creates an op result. `inputs` are recorded only if at least one of them
/// requires grad, in which case `backward` is attached as well.
Tensor make_op(OpKind op, Shape shape, std::vector<double> data,
               std::vector<Tensor> inputs, BackwardFn backward);

/// While alive, ops on this thread record no history (evaluation mode).
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

    static bool grad_enabled();

private:
    bool previous_;
};

// ---------------------------------------------------------------------------
// Primitive ops

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

enum class Elementwise { Add, Sub, Mul, Div };

/// `b` must match `a`'s shape, be a row vector of length a.cols() (broadcast
/// along the leading axis), or hold a single element (scalar broadcast).
Tensor elementwise(const Tensor& a, const Tensor& b, Elementwise kind);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);

enum class Activation { Sigmoid, Tanh, Relu, Exp };

Tensor activation(const Tensor& a, Activation kind);
inline Tensor sigmoid(const Tensor& a) { return activation(a, Activation::Sigmoid); }
inline Tensor tanh(const Tensor& a) { return activation(a, Activation::Tanh); }
inline Tensor relu(const Tensor& a) { return activation(a, Activation::Relu); }
inline Tensor exp(const Tensor& a) { return activation(a, Activation::Exp); }

/// Row-wise softmax with max subtraction. When `column_mask` is non-empty it
/// must have a.cols() entries; false columns get probability exactly 0.
Tensor softmax_rows(const Tensor& a, std::span<const std::uint8_t> column_mask = {});

enum class Reduction { Sum, Mean };

/// Reduces one axis. Rank-2 inputs give a rank-1 result; rank-1 inputs give
/// a scalar.
Tensor reduce(const Tensor& a, std::size_t axis, Reduction kind);
Tensor sum_all(const Tensor& a);

/// Mean over the batch of -log softmax(logits)[label].
Tensor cross_entropy_logits(const Tensor& logits, std::span<const int> labels);

Tensor concat(const Tensor& a, const Tensor& b, std::size_t axis);
Tensor concat(std::span<const Tensor> parts, std::size_t axis);

/// Selects rows of a rank-2 tensor; repeated indices accumulate in backward.
Tensor gather_rows(const Tensor& a, std::span<const std::size_t> indices);
Tensor slice_rows(const Tensor& a, std::size_t start, std::size_t count);

// ---------------------------------------------------------------------------
// Reverse pass

/// Nodes reachable from a loss in an order where each node's inputs precede
/// it. Only nodes that require grad are kept.
class Tape {
public:
    explicit Tape(const Tensor& loss);

    std::span<TensorNode* const> nodes() const { return nodes_; }
    /// Runs the reverse sweep with d(loss)/d(loss) = 1. Intermediate grads are
    /// reset first; leaf grads accumulate across calls.
    void backward();

private:
    NodePtr root_;
    std::vector<TensorNode*> nodes_;
};

/// Equivalent to Tape(loss).backward(). `loss` must hold exactly one value.
void backward(const Tensor& loss);

}  // namespace wmagin

#endif  // WMAGIN_TENSOR_HPP
