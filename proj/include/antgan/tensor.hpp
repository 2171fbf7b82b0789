// Reverse-mode autodiff tensor core. Tensors are handles onto shared dense
// storage (Eigen arrays); differentiable free functions record backward steps
// onto an explicit Tape. A tape is single-threaded; disjoint tapes are
// independent. Scalar type is a template parameter: float for training,
// double for gradient checking.
#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <limits>
#include <memory>
#include <utility>
#include <vector>

#include "antgan/common.hpp"

namespace antgan {

template <typename S>
using ArrayX = Eigen::Array<S, Eigen::Dynamic, 1>;

template <typename S>
class Tape;

template <typename S>
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false) {
        Tensor t;
        t.node_ = std::make_shared<Node>();
        t.node_->shape = std::move(shape);
        t.node_->value = ArrayX<S>::Zero(numel(t.node_->shape));
        if (requires_grad) t.set_requires_grad(true);
        return t;
    }

    static Tensor full(Shape shape, S value) {
        Tensor t = zeros(std::move(shape));
        t.array() = value;
        return t;
    }

    static Tensor from(Shape shape, std::vector<S> values) {
        if (numel(shape) != static_cast<std::int64_t>(values.size()))
            throw DimensionError("tensor data length " + std::to_string(values.size()) +
                                 " does not match shape " + shape_str(shape));
        Tensor t = zeros(std::move(shape));
        for (std::int64_t i = 0; i < t.size(); ++i) t.data()[i] = values[static_cast<std::size_t>(i)];
        return t;
    }

    static Tensor scalar(S value) { return full({1}, value); }

    bool valid() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    std::int64_t size() const { return node_->value.size(); }
    std::int64_t dim(std::size_t i) const { return node_->shape[i]; }
    std::size_t rank() const { return node_->shape.size(); }

    S* data() const { return node_->value.data(); }
    Eigen::Map<ArrayX<S>> array() const { return {node_->value.data(), node_->value.size()}; }
    Eigen::Map<const ArrayX<S>> carray() const { return {node_->value.data(), node_->value.size()}; }

    S item() const {
        if (size() != 1) throw UsageError("item() requires a scalar tensor, got " + shape_str(shape()));
        return node_->value[0];
    }

    // Leaf flag: parameters and explicitly-marked inputs.
    bool requires_grad() const { return node_->requires_grad; }
    void set_requires_grad(bool on) const {
        node_->requires_grad = on;
        node_->tracked = on;
        if (on && node_->grad.size() != node_->value.size())
            node_->grad = ArrayX<S>::Zero(node_->value.size());
    }

    // True when a grad buffer exists and backward will reach this tensor,
    // either as a leaf or as an op output recorded on a tape.
    bool tracked() const { return node_->tracked; }

    // Marks an op output as participating in backward (grad buffer allocated).
    void mark_tracked() const {
        node_->tracked = true;
        if (node_->grad.size() != node_->value.size())
            node_->grad = ArrayX<S>::Zero(node_->value.size());
    }

    S* grad_data() const { return node_->grad.data(); }
    Eigen::Map<ArrayX<S>> grad() const {
        if (node_->grad.size() != node_->value.size())
            throw UsageError("tensor has no gradient buffer");
        return {node_->grad.data(), node_->grad.size()};
    }

    void zero_grad() const {
        if (node_->grad.size() == node_->value.size()) node_->grad.setZero();
    }

    // Deep copy of the values, detached from any tape, no grad.
    Tensor detach() const {
        Tensor t = zeros(shape());
        t.array() = carray();
        return t;
    }

    // Detached deep copy with a new shape of equal element count.
    Tensor reshaped(Shape new_shape) const {
        if (numel(new_shape) != size())
            throw DimensionError("reshaped: " + shape_str(shape()) + " has " +
                                 std::to_string(size()) + " elements, target " +
                                 shape_str(new_shape) + " has " + std::to_string(numel(new_shape)));
        Tensor t = zeros(std::move(new_shape));
        t.array() = carray();
        return t;
    }

    bool all_finite() const { return node_->value.allFinite(); }

    // Identity of the underlying storage (two handles may alias one node).
    const void* id() const { return node_.get(); }

private:
    struct Node {
        Shape shape;
        ArrayX<S> value;
        ArrayX<S> grad;
        bool requires_grad = false;
        bool tracked = false;
    };
    std::shared_ptr<Node> node_;
};

// Ordered record of differentiable ops. Execution order is the topological
// order; backward replays the records once, in reverse.
template <typename S>
class Tape {
public:
    void record(Tensor<S> output, std::function<void()> step) {
        records_.push_back({std::move(output), std::move(step)});
    }

    std::size_t num_records() const { return records_.size(); }
    void clear() { records_.clear(); }

    // Seeds d loss / d loss = 1 and replays the tape. Gradients of leaf
    // tensors accumulate across calls; intermediate grads are reset first.
    void backward(const Tensor<S>& loss) const {
        if (loss.size() != 1)
            throw UsageError("backward() requires a scalar loss, got " + shape_str(loss.shape()));
        if (!loss.tracked())
            throw UsageError("backward() on a loss that does not require grad");
        for (const auto& r : records_)
            if (!r.output.requires_grad()) r.output.zero_grad();
        loss.grad_data()[0] += S(1);
        for (auto it = records_.rbegin(); it != records_.rend(); ++it) it->step();
    }

private:
    struct Record {
        Tensor<S> output;
        std::function<void()> step;
    };
    std::vector<Record> records_;
};

namespace detail {

template <typename S>
inline bool any_tracked(std::initializer_list<const Tensor<S>*> inputs) {
    for (const auto* t : inputs)
        if (t->tracked()) return true;
    return false;
}

template <typename S>
inline void check_same_shape(const char* op, const Tensor<S>& a, const Tensor<S>& b) {
    if (a.shape() != b.shape())
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                             " vs " + shape_str(b.shape()));
}

}  // namespace detail

// ---- elementwise binary ops ----

template <typename S>
Tensor<S> add(Tape<S>* tape, const Tensor<S>& a, const Tensor<S>& b) {
    detail::check_same_shape("add", a, b);
    Tensor<S> out = Tensor<S>::zeros(a.shape());
    out.array() = a.carray() + b.carray();
    if (tape && detail::any_tracked<S>({&a, &b})) {
        out.mark_tracked();
        tape->record(out, [a, b, out] {
            if (a.tracked()) a.grad() += out.grad();
            if (b.tracked()) b.grad() += out.grad();
        });
    }
    return out;
}

template <typename S>
Tensor<S> sub(Tape<S>* tape, const Tensor<S>& a, const Tensor<S>& b) {
    detail::check_same_shape("sub", a, b);
    Tensor<S> out = Tensor<S>::zeros(a.shape());
    out.array() = a.carray() - b.carray();
    if (tape && detail::any_tracked<S>({&a, &b})) {
        out.mark_tracked();
        tape->record(out, [a, b, out] {
            if (a.tracked()) a.grad() += out.grad();
            if (b.tracked()) b.grad() -= out.grad();
        });
    }
    return out;
}

template <typename S>
Tensor<S> mul(Tape<S>* tape, const Tensor<S>& a, const Tensor<S>& b) {
    detail::check_same_shape("mul", a, b);
    Tensor<S> out = Tensor<S>::zeros(a.shape());
    out.array() = a.carray() * b.carray();
    if (tape && detail::any_tracked<S>({&a, &b})) {
        out.mark_tracked();
        tape->record(out, [a, b, out] {
            if (a.tracked()) a.grad() += out.grad() * b.carray();
            if (b.tracked()) b.grad() += out.grad() * a.carray();
        });
    }
    return out;
}

// ---- scalar ops ----

template <typename S>
Tensor<S> add_scalar(Tape<S>* tape, const Tensor<S>& a, S c) {
    Tensor<S> out = Tensor<S>::zeros(a.shape());
    out.array() = a.carray() + c;
    if (tape && a.tracked()) {
        out.mark_tracked();
        tape->record(out, [a, out] { a.grad() += out.grad(); });
    }
    return out;
}

template <typename S>
Tensor<S> mul_scalar(Tape<S>* tape, const Tensor<S>& a, S c) {
    Tensor<S> out = Tensor<S>::zeros(a.shape());
    out.array() = a.carray() * c;
    if (tape && a.tracked()) {
        out.mark_tracked();
        tape->record(out, [a, out, c] { a.grad() += out.grad() * c; });
    }
    return out;
}

// ---- activations and pointwise maps ----

template <typename S>
Tensor<S> relu(Tape<S>* tape, const Tensor<S>& x) {
    Tensor<S> out = Tensor<S>::zeros(x.shape());
    out.array() = x.carray().max(S(0));
    if (tape && x.tracked()) {
        out.mark_tracked();
        tape->record(out, [x, out] {
            x.grad() += out.grad() * (x.carray() > S(0)).template cast<S>();
        });
    }
    return out;
}

template <typename S>
Tensor<S> leaky_relu(Tape<S>* tape, const Tensor<S>& x, S slope = S(0.2)) {
    Tensor<S> out = Tensor<S>::zeros(x.shape());
    out.array() = (x.carray() > S(0)).select(x.carray(), x.carray() * slope);
    if (tape && x.tracked()) {
        out.mark_tracked();
        tape->record(out, [x, out, slope] {
            x.grad() += out.grad() * (x.carray() > S(0)).select(ArrayX<S>::Ones(x.size()),
                                                                ArrayX<S>::Constant(x.size(), slope));
        });
    }
    return out;
}

template <typename S>
Tensor<S> tanh(Tape<S>* tape, const Tensor<S>& x) {
    Tensor<S> out = Tensor<S>::zeros(x.shape());
    // Keep the output strictly inside (-1,1): for large |x| the library tanh
    // rounds to exactly +-1 in finite precision.
    const S lim = std::nextafter(S(1), S(0));
    out.array() = x.carray().tanh().min(lim).max(-lim);
    if (tape && x.tracked()) {
        out.mark_tracked();
        tape->record(out, [x, out] {
            x.grad() += out.grad() * (S(1) - out.carray().square());
        });
    }
    return out;
}

template <typename S>
Tensor<S> abs(Tape<S>* tape, const Tensor<S>& x) {
    Tensor<S> out = Tensor<S>::zeros(x.shape());
    out.array() = x.carray().abs();
    if (tape && x.tracked()) {
        out.mark_tracked();
        tape->record(out, [x, out] {
            x.grad() += out.grad() * x.carray().sign();
        });
    }
    return out;
}

template <typename S>
Tensor<S> softplus(Tape<S>* tape, const Tensor<S>& x) {
    Tensor<S> out = Tensor<S>::zeros(x.shape());
    // log(1+e^x) in overflow-safe form: max(x,0) + log1p(exp(-|x|)).
    out.array() = x.carray().max(S(0)) +
                  (-x.carray().abs()).exp().unaryExpr([](S v) { return std::log1p(v); });
    if (tape && x.tracked()) {
        out.mark_tracked();
        tape->record(out, [x, out] {
            x.grad() += out.grad() * (S(1) / (S(1) + (-x.carray()).exp()));
        });
    }
    return out;
}

// ---- reductions (explicit left-to-right accumulation, double accumulator) ----

namespace detail {
template <typename S>
S serial_sum(const Tensor<S>& x) {
    double acc = 0.0;
    const S* p = x.data();
    for (std::int64_t i = 0; i < x.size(); ++i) acc += static_cast<double>(p[i]);
    return static_cast<S>(acc);
}
}  // namespace detail

template <typename S>
Tensor<S> sum(Tape<S>* tape, const Tensor<S>& x) {
    Tensor<S> out = Tensor<S>::scalar(detail::serial_sum(x));
    if (tape && x.tracked()) {
        out.mark_tracked();
        tape->record(out, [x, out] { x.grad() += out.grad_data()[0]; });
    }
    return out;
}

template <typename S>
Tensor<S> mean(Tape<S>* tape, const Tensor<S>& x) {
    const S inv_n = S(1) / static_cast<S>(x.size());
    Tensor<S> out = Tensor<S>::scalar(detail::serial_sum(x) * inv_n);
    if (tape && x.tracked()) {
        out.mark_tracked();
        tape->record(out, [x, out, inv_n] { x.grad() += out.grad_data()[0] * inv_n; });
    }
    return out;
}

}  // namespace antgan
