#pragma once

// Dense row-major tensors with shared storage. Values are immutable by
// convention once an op has produced them; gradient buffers are allocated
// lazily and accumulate during backward passes.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace tracedit {

using Shape = std::vector<int>;

// All tensor storage is 64-byte aligned. Eigen's vectorized kernels pick
// their scalar prologue from the pointer alignment, so unaligned buffers
// would make reduction order (and thus low-order bits) depend on heap
// addresses; fixed alignment keeps every run bitwise reproducible.
template <typename T>
using AlignedVec = std::vector<T, Eigen::aligned_allocator<T>>;

inline int64_t numel(const Shape& shape) {
    int64_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw std::invalid_argument("tensor: non-positive dimension");
        n *= d;
    }
    return n;
}

inline std::string shape_str(const Shape& shape) {
    std::string s = "[";
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

template <typename T>
struct TensorData {
    Shape shape;
    AlignedVec<T> value;
    AlignedVec<T> grad;           // empty until first requested
    bool requires_grad = false;   // leaf parameter: accumulate gradient
    bool tracked = false;         // participates in the current backward graph
};

template <typename T>
using MatMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <typename T>
using ConstMatMap = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <typename T>
using VecMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>>;
template <typename T>
using ConstVecMap = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>;

template <typename T>
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false) {
        Tensor t;
        t.d_ = std::make_shared<TensorData<T>>();
        t.d_->shape = std::move(shape);
        t.d_->value.assign(static_cast<size_t>(numel(t.d_->shape)), T(0));
        t.d_->requires_grad = requires_grad;
        t.d_->tracked = requires_grad;
        return t;
    }

    static Tensor scalar(T v) {
        Tensor t = zeros({1});
        t.d_->value[0] = v;
        return t;
    }

    static Tensor from_vector(Shape shape, const std::vector<T>& values, bool requires_grad = false) {
        if (static_cast<int64_t>(values.size()) != numel(shape))
            throw std::invalid_argument("tensor: element count does not match shape " + shape_str(shape));
        Tensor t;
        t.d_ = std::make_shared<TensorData<T>>();
        t.d_->shape = std::move(shape);
        t.d_->value.assign(values.begin(), values.end());
        t.d_->requires_grad = requires_grad;
        t.d_->tracked = requires_grad;
        return t;
    }

    bool defined() const { return static_cast<bool>(d_); }
    const Shape& shape() const { return d_->shape; }
    int64_t size() const { return static_cast<int64_t>(d_->value.size()); }
    int dim(int i) const { return d_->shape.at(static_cast<size_t>(i)); }
    int rows() const { return require_2d().first; }
    int cols() const { return require_2d().second; }

    T* data() { return d_->value.data(); }
    const T* data() const { return d_->value.data(); }
    T item() const {
        if (size() != 1) throw std::invalid_argument("tensor: item() on non-scalar " + shape_str(shape()));
        return d_->value[0];
    }

    bool requires_grad() const { return d_->requires_grad; }
    bool tracked() const { return d_->tracked; }
    void set_requires_grad(bool rg) {
        d_->requires_grad = rg;
        d_->tracked = rg;
    }
    void mark_tracked() { d_->tracked = true; }

    bool has_grad() const { return !d_->grad.empty(); }
    // Gradient buffer, zero-initialized on first access.
    T* grad() {
        if (d_->grad.empty()) d_->grad.assign(d_->value.size(), T(0));
        return d_->grad.data();
    }
    const AlignedVec<T>& grad_vector() {
        if (d_->grad.empty()) d_->grad.assign(d_->value.size(), T(0));
        return d_->grad;
    }
    void zero_grad() {
        if (!d_->grad.empty()) std::fill(d_->grad.begin(), d_->grad.end(), T(0));
    }

    Tensor clone() const {
        Tensor t;
        t.d_ = std::make_shared<TensorData<T>>();
        t.d_->shape = d_->shape;
        t.d_->value = d_->value;
        t.d_->requires_grad = d_->requires_grad;
        t.d_->tracked = d_->tracked;
        return t;
    }

    bool same_storage(const Tensor& other) const { return d_ == other.d_; }

    // 2-D Eigen views over the row-major buffer.
    MatMap<T> mat() {
        auto [r, c] = require_2d();
        return MatMap<T>(data(), r, c);
    }
    ConstMatMap<T> mat() const {
        auto [r, c] = require_2d();
        return ConstMatMap<T>(data(), r, c);
    }
    MatMap<T> grad_mat() {
        auto [r, c] = require_2d();
        return MatMap<T>(grad(), r, c);
    }
    VecMap<T> vec() { return VecMap<T>(data(), size()); }
    ConstVecMap<T> vec() const { return ConstVecMap<T>(data(), size()); }
    VecMap<T> grad_vec() { return VecMap<T>(grad(), size()); }

    bool all_finite() const {
        for (T v : d_->value)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

private:
    std::pair<int, int> require_2d() const {
        if (d_->shape.size() == 1) return {1, d_->shape[0]};
        if (d_->shape.size() != 2)
            throw std::invalid_argument("tensor: 2-D view of shape " + shape_str(d_->shape));
        return {d_->shape[0], d_->shape[1]};
    }

    std::shared_ptr<TensorData<T>> d_;
};

template <typename T>
inline bool same_shape(const Tensor<T>& a, const Tensor<T>& b) {
    return a.shape() == b.shape();
}

}  // namespace tracedit
