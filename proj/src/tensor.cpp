#include "wmagin/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_set>

namespace wmagin {

std::string shape_to_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

std::size_t shape_size(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::span<double> TensorNode::grad_buffer() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
    return grad;
}

namespace {

NodePtr new_leaf(Shape shape, std::vector<double> values, bool requires_grad) {
    if (shape.size() > 2) {
        throw DimensionError("tensors of rank > 2 are not supported: " + shape_to_string(shape));
    }
    if (shape_size(shape) != values.size()) {
        throw DimensionError("shape " + shape_to_string(shape) + " does not match " +
                             std::to_string(values.size()) + " values");
    }
    auto node = std::make_shared<TensorNode>();
    node->shape = std::move(shape);
    node->data = std::move(values);
    node->requires_grad = requires_grad;
    return node;
}

// Grad sink for input `k` of a node, or an empty span if it needs no grad.
std::span<double> sink(TensorNode& self, std::size_t k) {
    TensorNode& in = *self.inputs[k];
    if (!in.requires_grad) return {};
    return in.grad_buffer();
}

const std::vector<double>& in_data(const TensorNode& self, std::size_t k) {
    return self.inputs[k]->data;
}

void require_rank2(const Tensor& t, const char* what) {
    if (t.rank() != 2) {
        throw DimensionError(std::string(what) + " expects a rank-2 tensor, got " +
                             shape_to_string(t.shape()));
    }
}

// C(m x n) += A(m x k) * B(k x n)
void gemm_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
              std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        const double* arow = a + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) continue;
            const double* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// C(m x n) += A(m x k) * B(n x k)^T
void gemm_acc_bt(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                 std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        for (std::size_t j = 0; j < n; ++j) {
            const double* brow = b + j * k;
            double s = 0.0;
            for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
            c[i * n + j] += s;
        }
    }
}

// C(k x n) += A(m x k)^T * B(m x n)
void gemm_acc_at(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                 std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        const double* brow = b + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) continue;
            double* crow = c + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

enum class Broadcast { Same, Row, Scalar };

Broadcast classify(const Tensor& a, const Tensor& b) {
    if (a.shape() == b.shape()) return Broadcast::Same;
    if (b.size() == 1) return Broadcast::Scalar;
    if (a.rank() == 2 && b.rank() == 1 && b.size() == a.cols()) return Broadcast::Row;
    throw DimensionError("cannot broadcast " + shape_to_string(b.shape()) + " onto " +
                         shape_to_string(a.shape()));
}

}  // namespace

// ---------------------------------------------------------------------------
// Tensor

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
    const std::size_t n = shape_size(shape);
    return Tensor(new_leaf(std::move(shape), std::vector<double>(n, value), requires_grad));
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
    return Tensor(new_leaf(std::move(shape), std::move(values), requires_grad));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return Tensor(new_leaf({}, {value}, requires_grad));
}

const Shape& Tensor::shape() const { return node_->shape; }
std::size_t Tensor::size() const { return node_->data.size(); }

std::size_t Tensor::rows() const {
    if (rank() == 0) return 1;
    return shape()[0];
}

std::size_t Tensor::cols() const {
    if (rank() < 2) return rank() == 0 ? 1 : shape()[0];
    return shape()[1];
}

std::span<const double> Tensor::data() const { return node_->data; }
std::span<double> Tensor::mutable_data() { return node_->data; }

double Tensor::item() const {
    if (size() != 1) {
        throw DimensionError("item() on tensor of shape " + shape_to_string(shape()));
    }
    return node_->data[0];
}

double Tensor::at(std::size_t i) const { return node_->data.at(i); }
double Tensor::at(std::size_t r, std::size_t c) const { return node_->data.at(r * cols() + c); }

bool Tensor::requires_grad() const { return node_->requires_grad; }
void Tensor::set_requires_grad(bool value) { node_->requires_grad = value; }
bool Tensor::has_grad() const { return node_->grad.size() == node_->data.size(); }

std::vector<double> Tensor::grad() const {
    if (!has_grad()) return std::vector<double>(size(), 0.0);
    return node_->grad;
}

void Tensor::zero_grad() {
    if (has_grad()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

OpKind Tensor::op() const { return node_->op; }

Tensor Tensor::detach() const { return from(shape(), node_->data, false); }

namespace {
thread_local bool g_grad_enabled = true;
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool NoGradGuard::grad_enabled() { return g_grad_enabled; }

Tensor make_op(OpKind op, Shape shape, std::vector<double> data, std::vector<Tensor> inputs,
               BackwardFn backward) {
    auto node = new_leaf(std::move(shape), std::move(data), false);
    node->op = op;
    const bool any = g_grad_enabled && std::any_of(inputs.begin(), inputs.end(),
                                 [](const Tensor& t) { return t.requires_grad(); });
    if (any) {
        node->requires_grad = true;
        node->inputs.reserve(inputs.size());
        for (auto& t : inputs) node->inputs.push_back(t.node());
        node->backward = std::move(backward);
    }
    return Tensor(std::move(node));
}

// ---------------------------------------------------------------------------
// Ops

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_rank2(a, "matmul");
    require_rank2(b, "matmul");
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    if (b.rows() != k) {
        throw DimensionError("matmul inner dimensions disagree: " + shape_to_string(a.shape()) +
                             " vs " + shape_to_string(b.shape()));
    }
    std::vector<double> out(m * n, 0.0);
    gemm_acc(a.data().data(), b.data().data(), out.data(), m, k, n);
    return make_op(OpKind::MatMul, {m, n}, std::move(out), {a, b}, [m, k, n](TensorNode& self) {
        const double* g = self.grad.data();
        if (auto ga = sink(self, 0); !ga.empty()) {
            gemm_acc_bt(g, in_data(self, 1).data(), ga.data(), m, n, k);
        }
        if (auto gb = sink(self, 1); !gb.empty()) {
            gemm_acc_at(in_data(self, 0).data(), g, gb.data(), m, k, n);
        }
    });
}

Tensor transpose(const Tensor& a) {
    require_rank2(a, "transpose");
    const std::size_t m = a.rows(), n = a.cols();
    std::vector<double> out(m * n);
    const auto src = a.data();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[j * m + i] = src[i * n + j];
    return make_op(OpKind::Transpose, {n, m}, std::move(out), {a}, [m, n](TensorNode& self) {
        auto ga = sink(self, 0);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += self.grad[j * m + i];
    });
}

Tensor elementwise(const Tensor& a, const Tensor& b, Elementwise kind) {
    const Broadcast bc = classify(a, b);
    const std::size_t total = a.size();
    const std::size_t width = bc == Broadcast::Row ? b.size() : 0;
    auto b_index = [bc, width](std::size_t i) -> std::size_t {
        switch (bc) {
            case Broadcast::Same: return i;
            case Broadcast::Row: return i % width;
            case Broadcast::Scalar: return 0;
        }
        return i;
    };
    const auto ad = a.data();
    const auto bd = b.data();
    std::vector<double> out(total);
    for (std::size_t i = 0; i < total; ++i) {
        const double x = ad[i], y = bd[b_index(i)];
        switch (kind) {
            case Elementwise::Add: out[i] = x + y; break;
            case Elementwise::Sub: out[i] = x - y; break;
            case Elementwise::Mul: out[i] = x * y; break;
            case Elementwise::Div: out[i] = x / y; break;
        }
    }
    const OpKind op = kind == Elementwise::Add   ? OpKind::Add
                      : kind == Elementwise::Sub ? OpKind::Sub
                      : kind == Elementwise::Mul ? OpKind::Mul
                                                 : OpKind::Div;
    return make_op(op, a.shape(), std::move(out), {a, b},
                   [kind, total, b_index](TensorNode& self) {
                       const auto& x = in_data(self, 0);
                       const auto& y = in_data(self, 1);
                       auto ga = sink(self, 0);
                       auto gb = sink(self, 1);
                       for (std::size_t i = 0; i < total; ++i) {
                           const double g = self.grad[i];
                           const std::size_t j = b_index(i);
                           switch (kind) {
                               case Elementwise::Add:
                                   if (!ga.empty()) ga[i] += g;
                                   if (!gb.empty()) gb[j] += g;
                                   break;
                               case Elementwise::Sub:
                                   if (!ga.empty()) ga[i] += g;
                                   if (!gb.empty()) gb[j] -= g;
                                   break;
                               case Elementwise::Mul:
                                   if (!ga.empty()) ga[i] += g * y[j];
                                   if (!gb.empty()) gb[j] += g * x[i];
                                   break;
                               case Elementwise::Div:
                                   if (!ga.empty()) ga[i] += g / y[j];
                                   if (!gb.empty()) gb[j] -= g * x[i] / (y[j] * y[j]);
                                   break;
                           }
                       }
                   });
}

Tensor add(const Tensor& a, const Tensor& b) { return elementwise(a, b, Elementwise::Add); }
Tensor sub(const Tensor& a, const Tensor& b) { return elementwise(a, b, Elementwise::Sub); }
Tensor mul(const Tensor& a, const Tensor& b) { return elementwise(a, b, Elementwise::Mul); }
Tensor div(const Tensor& a, const Tensor& b) { return elementwise(a, b, Elementwise::Div); }

Tensor scale(const Tensor& a, double factor) {
    std::vector<double> out(a.data().begin(), a.data().end());
    for (double& v : out) v *= factor;
    return make_op(OpKind::Scale, a.shape(), std::move(out), {a}, [factor](TensorNode& self) {
        auto ga = sink(self, 0);
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += factor * self.grad[i];
    });
}

Tensor activation(const Tensor& a, Activation kind) {
    std::vector<double> out(a.size());
    const auto x = a.data();
    for (std::size_t i = 0; i < out.size(); ++i) {
        switch (kind) {
            case Activation::Sigmoid: out[i] = 1.0 / (1.0 + std::exp(-x[i])); break;
            case Activation::Tanh: out[i] = std::tanh(x[i]); break;
            case Activation::Relu: out[i] = x[i] > 0.0 ? x[i] : 0.0; break;
            case Activation::Exp: out[i] = std::exp(x[i]); break;
        }
    }
    const OpKind op = kind == Activation::Sigmoid ? OpKind::Sigmoid
                      : kind == Activation::Tanh  ? OpKind::Tanh
                      : kind == Activation::Relu  ? OpKind::Relu
                                                  : OpKind::Exp;
    return make_op(op, a.shape(), std::move(out), {a}, [kind](TensorNode& self) {
        auto ga = sink(self, 0);
        const auto& x = in_data(self, 0);
        const auto& y = self.data;
        for (std::size_t i = 0; i < ga.size(); ++i) {
            double d = 0.0;
            switch (kind) {
                case Activation::Sigmoid: d = y[i] * (1.0 - y[i]); break;
                case Activation::Tanh: d = 1.0 - y[i] * y[i]; break;
                case Activation::Relu: d = x[i] > 0.0 ? 1.0 : 0.0; break;
                case Activation::Exp: d = y[i]; break;
            }
            ga[i] += self.grad[i] * d;
        }
    });
}

Tensor softmax_rows(const Tensor& a, std::span<const std::uint8_t> column_mask) {
    require_rank2(a, "softmax_rows");
    const std::size_t m = a.rows(), n = a.cols();
    Mask mask(n, 1);
    if (!column_mask.empty()) {
        if (column_mask.size() != n) {
            throw DimensionError("softmax_rows mask has " + std::to_string(column_mask.size()) +
                                 " entries for " + std::to_string(n) + " columns");
        }
        std::copy(column_mask.begin(), column_mask.end(), mask.begin());
        if (std::none_of(mask.begin(), mask.end(), [](std::uint8_t b) { return b != 0; })) {
            throw std::invalid_argument("softmax_rows mask excludes every column");
        }
    }
    const auto x = a.data();
    std::vector<double> out(m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j)
            if (mask[j]) mx = std::max(mx, x[i * n + j]);
        double denom = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (!mask[j]) continue;
            out[i * n + j] = std::exp(x[i * n + j] - mx);
            denom += out[i * n + j];
        }
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] /= denom;
    }
    return make_op(OpKind::SoftmaxRows, {m, n}, std::move(out), {a}, [m, n](TensorNode& self) {
        auto ga = sink(self, 0);
        const auto& y = self.data;
        const auto& g = self.grad;
        for (std::size_t i = 0; i < m; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < n; ++j) dot += g[i * n + j] * y[i * n + j];
            for (std::size_t j = 0; j < n; ++j)
                ga[i * n + j] += y[i * n + j] * (g[i * n + j] - dot);
        }
    });
}

Tensor reduce(const Tensor& a, std::size_t axis, Reduction kind) {
    if (axis >= a.rank()) {
        throw DimensionError("reduce axis " + std::to_string(axis) + " out of range for " +
                             shape_to_string(a.shape()));
    }
    const OpKind op = kind == Reduction::Sum ? OpKind::ReduceSum : OpKind::ReduceMean;
    const auto x = a.data();
    if (a.rank() == 1) {
        const std::size_t n = a.size();
        const double div = kind == Reduction::Mean ? static_cast<double>(n) : 1.0;
        double s = 0.0;
        for (double v : x) s += v;
        return make_op(op, {}, {s / div}, {a}, [div](TensorNode& self) {
            auto ga = sink(self, 0);
            for (double& v : ga) v += self.grad[0] / div;
        });
    }
    const std::size_t m = a.rows(), n = a.cols();
    const std::size_t len = axis == 0 ? m : n;
    const double div = kind == Reduction::Mean ? static_cast<double>(len) : 1.0;
    std::vector<double> out(axis == 0 ? n : m, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[axis == 0 ? j : i] += x[i * n + j];
    for (double& v : out) v /= div;
    const std::size_t len_out = out.size();
    return make_op(op, {len_out}, std::move(out), {a}, [m, n, axis, div](TensorNode& self) {
        auto ga = sink(self, 0);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j)
                ga[i * n + j] += self.grad[axis == 0 ? j : i] / div;
    });
}

Tensor sum_all(const Tensor& a) {
    const std::size_t n = a.size();
    double s = 0.0;
    for (double v : a.data()) s += v;
    return make_op(OpKind::ReduceSum, {}, {s}, {a}, [n](TensorNode& self) {
        auto ga = sink(self, 0);
        for (std::size_t i = 0; i < n; ++i) ga[i] += self.grad[0];
    });
}

Tensor cross_entropy_logits(const Tensor& logits, std::span<const int> labels) {
    require_rank2(logits, "cross_entropy_logits");
    const std::size_t b = logits.rows(), c = logits.cols();
    if (labels.size() != b) {
        throw DimensionError("cross_entropy_logits: " + std::to_string(labels.size()) +
                             " labels for " + std::to_string(b) + " rows");
    }
    for (int label : labels) {
        if (label < 0 || static_cast<std::size_t>(label) >= c) {
            throw std::out_of_range("label " + std::to_string(label) + " outside [0, " +
                                    std::to_string(c) + ")");
        }
    }
    const auto x = logits.data();
    std::vector<double> probs(b * c);
    double loss = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
        const double* row = x.data() + i * c;
        const double mx = *std::max_element(row, row + c);
        double denom = 0.0;
        for (std::size_t j = 0; j < c; ++j) denom += std::exp(row[j] - mx);
        const double lse = mx + std::log(denom);
        for (std::size_t j = 0; j < c; ++j) probs[i * c + j] = std::exp(row[j] - lse);
        loss += lse - row[labels[i]];
    }
    loss /= static_cast<double>(b);
    std::vector<int> lab(labels.begin(), labels.end());
    return make_op(OpKind::CrossEntropy, {}, {loss}, {logits},
                   [b, c, probs = std::move(probs), lab = std::move(lab)](TensorNode& self) {
                       auto ga = sink(self, 0);
                       const double g = self.grad[0] / static_cast<double>(b);
                       for (std::size_t i = 0; i < b; ++i) {
                           for (std::size_t j = 0; j < c; ++j) {
                               const double onehot =
                                   static_cast<std::size_t>(lab[i]) == j ? 1.0 : 0.0;
                               ga[i * c + j] += g * (probs[i * c + j] - onehot);
                           }
                       }
                   });
}

Tensor concat(const Tensor& a, const Tensor& b, std::size_t axis) {
    const Tensor parts[] = {a, b};
    return concat(std::span<const Tensor>(parts), axis);
}

Tensor concat(std::span<const Tensor> parts, std::size_t axis) {
    if (parts.empty()) throw std::invalid_argument("concat of zero tensors");
    const std::size_t rank = parts[0].rank();
    if (rank == 0 || axis >= rank) {
        throw DimensionError("concat axis " + std::to_string(axis) + " invalid for " +
                             shape_to_string(parts[0].shape()));
    }
    for (const auto& p : parts) {
        bool ok = p.rank() == rank;
        if (ok && rank == 2) ok = axis == 0 ? p.cols() == parts[0].cols() : p.rows() == parts[0].rows();
        if (!ok) {
            throw DimensionError("concat shape mismatch: " + shape_to_string(parts[0].shape()) +
                                 " vs " + shape_to_string(p.shape()));
        }
    }
    // Rank-1 and axis-0 concatenation are plain appends of the row-major data.
    if (rank == 1 || axis == 0) {
        std::vector<double> out;
        std::vector<std::size_t> offsets;
        std::size_t lead = 0;
        for (const auto& p : parts) {
            offsets.push_back(out.size());
            out.insert(out.end(), p.data().begin(), p.data().end());
            lead += rank == 1 ? p.size() : p.rows();
        }
        Shape shape = rank == 1 ? Shape{lead} : Shape{lead, parts[0].cols()};
        return make_op(OpKind::Concat, std::move(shape), std::move(out),
                       std::vector<Tensor>(parts.begin(), parts.end()),
                       [offsets](TensorNode& self) {
                           for (std::size_t k = 0; k < self.inputs.size(); ++k) {
                               auto gk = sink(self, k);
                               for (std::size_t i = 0; i < gk.size(); ++i)
                                   gk[i] += self.grad[offsets[k] + i];
                           }
                       });
    }
    const std::size_t m = parts[0].rows();
    std::vector<std::size_t> col_offsets;
    std::size_t width = 0;
    for (const auto& p : parts) {
        col_offsets.push_back(width);
        width += p.cols();
    }
    std::vector<double> out(m * width);
    for (std::size_t k = 0; k < parts.size(); ++k) {
        const std::size_t w = parts[k].cols();
        const auto src = parts[k].data();
        for (std::size_t i = 0; i < m; ++i)
            std::copy_n(src.data() + i * w, w, out.data() + i * width + col_offsets[k]);
    }
    return make_op(OpKind::Concat, {m, width}, std::move(out),
                   std::vector<Tensor>(parts.begin(), parts.end()),
                   [m, width, col_offsets](TensorNode& self) {
                       for (std::size_t k = 0; k < self.inputs.size(); ++k) {
                           auto gk = sink(self, k);
                           if (gk.empty()) continue;
                           const std::size_t w = self.inputs[k]->shape[1];
                           for (std::size_t i = 0; i < m; ++i)
                               for (std::size_t j = 0; j < w; ++j)
                                   gk[i * w + j] += self.grad[i * width + col_offsets[k] + j];
                       }
                   });
}

Tensor gather_rows(const Tensor& a, std::span<const std::size_t> indices) {
    require_rank2(a, "gather_rows");
    const std::size_t n = a.cols(), m = a.rows();
    std::vector<double> out(indices.size() * n);
    const auto src = a.data();
    for (std::size_t r = 0; r < indices.size(); ++r) {
        if (indices[r] >= m) {
            throw std::out_of_range("gather_rows index " + std::to_string(indices[r]) +
                                    " for " + std::to_string(m) + " rows");
        }
        std::copy_n(src.data() + indices[r] * n, n, out.data() + r * n);
    }
    std::vector<std::size_t> idx(indices.begin(), indices.end());
    return make_op(OpKind::GatherRows, {indices.size(), n}, std::move(out), {a},
                   [n, idx = std::move(idx)](TensorNode& self) {
                       auto ga = sink(self, 0);
                       for (std::size_t r = 0; r < idx.size(); ++r)
                           for (std::size_t j = 0; j < n; ++j)
                               ga[idx[r] * n + j] += self.grad[r * n + j];
                   });
}

Tensor slice_rows(const Tensor& a, std::size_t start, std::size_t count) {
    std::vector<std::size_t> idx(count);
    std::iota(idx.begin(), idx.end(), start);
    return gather_rows(a, idx);
}

// ---------------------------------------------------------------------------
// Reverse pass

Tape::Tape(const Tensor& loss) : root_(loss.node()) {
    if (!root_ || !root_->requires_grad) return;
    // Iterative post-order DFS; inputs are pushed before the node itself.
    std::unordered_set<const TensorNode*> seen;
    std::vector<std::pair<TensorNode*, std::size_t>> stack;
    stack.emplace_back(root_.get(), 0);
    seen.insert(root_.get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->inputs.size()) {
            TensorNode* child = node->inputs[next++].get();
            if (child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
            continue;
        }
        nodes_.push_back(node);
        stack.pop_back();
    }
}

void Tape::backward() {
    if (!root_) throw std::invalid_argument("backward on an undefined tensor");
    if (root_->data.size() != 1) {
        throw DimensionError("backward expects a scalar loss, got " + shape_to_string(root_->shape));
    }
    if (!root_->requires_grad) return;
    for (TensorNode* node : nodes_) {
        if (!node->is_leaf()) node->grad.assign(node->data.size(), 0.0);
    }
    root_->grad_buffer()[0] += 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        TensorNode* node = *it;
        if (!node->is_leaf() && node->backward) node->backward(*node);
    }
}

void backward(const Tensor& loss) { Tape(loss).backward(); }

}  // namespace wmagin
