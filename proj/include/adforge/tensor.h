#pragma once

#include <cstdint>
#include <initializer_list>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "adforge/real.h"

ADFORGE_NAMESPACE_BEGIN

using Shape = std::vector<int64_t>;

std::string ShapeToString(const Shape &shape);
int64_t NumElements(const Shape &shape);

// Dense row-major array of rank 1..3.
//
// Trainable tensors lazily acquire a gradient buffer the first time a backward
// pass reaches them; frozen tensors never own one.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, bool trainable = false);
    Tensor(Shape shape, std::vector<Real> data, bool trainable = false);
    // Without this overload a one-element brace list binds to `trainable`.
    Tensor(Shape shape, std::initializer_list<Real> data, bool trainable = false)
        : Tensor(std::move(shape), std::vector<Real>(data), trainable) {}

    static Tensor Zeros(Shape shape, bool trainable = false);
    static Tensor Filled(Shape shape, Real value, bool trainable = false);
    static Tensor Gaussian(Shape shape, Real stddev, std::mt19937_64 &rng, bool trainable = false);

    const Shape &shape() const { return shape_; }
    int64_t rank() const { return static_cast<int64_t>(shape_.size()); }
    int64_t dim(int64_t i) const { return shape_.at(static_cast<size_t>(i)); }
    int64_t numel() const { return static_cast<int64_t>(data_.size()); }
    bool empty() const { return data_.empty(); }

    // Rank-2 view helpers; rank-1 tensors are treated as a single row.
    int64_t rows() const;
    int64_t cols() const;

    std::span<Real> data() { return data_; }
    std::span<const Real> data() const { return data_; }
    Real *raw() { return data_.data(); }
    const Real *raw() const { return data_.data(); }

    Real &at(int64_t i, int64_t j) { return data_[static_cast<size_t>(i * cols() + j)]; }
    Real at(int64_t i, int64_t j) const { return data_[static_cast<size_t>(i * cols() + j)]; }
    Real &operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
    Real operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

    bool trainable() const { return trainable_; }
    void set_trainable(bool trainable);

    bool has_grad() const { return grad_.has_value(); }
    std::span<const Real> grad() const;
    // Allocates a zeroed buffer on first use. Throws for frozen tensors.
    std::span<Real> mutable_grad();
    void clear_grad() { grad_.reset(); }
    // Adds into the grad buffer, allocating it on first use. The buffer is
    // bookkeeping rather than value state, so this is callable on const
    // tensors registered with a tape.
    void AccumulateGrad(std::span<const Real> delta) const;

    // Throws NonFiniteError naming `context` when any element is NaN/Inf.
    void CheckFinite(const std::string &context) const;

    bool BitwiseEquals(const Tensor &other) const;

private:
    Shape shape_;
    std::vector<Real> data_;
    bool trainable_ = false;
    mutable std::optional<std::vector<Real>> grad_;
};

ADFORGE_NAMESPACE_END
