#include "adforge/tensor.h"

#include <cmath>
#include <cstring>
#include <sstream>

#include "adforge/error.h"

ADFORGE_NAMESPACE_BEGIN

std::string ShapeToString(const Shape &shape) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) {
            os << "x";
        }
        os << shape[i];
    }
    os << "]";
    return os.str();
}

int64_t NumElements(const Shape &shape) {
    int64_t n = 1;
    for (auto d : shape) {
        n *= d;
    }
    return n;
}

namespace {

void ValidateShape(const Shape &shape) {
    if (shape.empty() || shape.size() > 3) {
        throw ShapeError("tensor rank must be 1..3, got shape " + ShapeToString(shape));
    }
    for (auto d : shape) {
        if (d <= 0) {
            throw ShapeError("tensor dimensions must be positive, got shape " + ShapeToString(shape));
        }
    }
}

} // namespace

Tensor::Tensor(Shape shape, bool trainable) : shape_(std::move(shape)), trainable_(trainable) {
    ValidateShape(shape_);
    data_.assign(static_cast<size_t>(NumElements(shape_)), Real(0));
}

Tensor::Tensor(Shape shape, std::vector<Real> data, bool trainable)
    : shape_(std::move(shape)), data_(std::move(data)), trainable_(trainable) {
    ValidateShape(shape_);
    if (static_cast<int64_t>(data_.size()) != NumElements(shape_)) {
        throw ShapeError("data length " + std::to_string(data_.size()) + " does not match shape "
                         + ShapeToString(shape_));
    }
}

Tensor Tensor::Zeros(Shape shape, bool trainable) { return Tensor(std::move(shape), trainable); }

Tensor Tensor::Filled(Shape shape, Real value, bool trainable) {
    Tensor t(std::move(shape), trainable);
    std::fill(t.data_.begin(), t.data_.end(), value);
    return t;
}

Tensor Tensor::Gaussian(Shape shape, Real stddev, std::mt19937_64 &rng, bool trainable) {
    Tensor t(std::move(shape), trainable);
    std::normal_distribution<double> dist(0.0, static_cast<double>(stddev));
    for (auto &v : t.data_) {
        v = static_cast<Real>(dist(rng));
    }
    return t;
}

int64_t Tensor::rows() const {
    if (shape_.empty()) {
        return 0;
    }
    return shape_.size() == 1 ? 1 : numel() / shape_.back();
}

int64_t Tensor::cols() const { return shape_.empty() ? 0 : shape_.back(); }

void Tensor::set_trainable(bool trainable) {
    trainable_ = trainable;
    if (!trainable_) {
        grad_.reset();
    }
}

std::span<const Real> Tensor::grad() const {
    if (!grad_) {
        return {};
    }
    return *grad_;
}

std::span<Real> Tensor::mutable_grad() {
    if (!trainable_) {
        throw TapeError("frozen tensor " + ShapeToString(shape_) + " cannot hold a gradient");
    }
    if (!grad_) {
        grad_.emplace(data_.size(), Real(0));
    }
    return *grad_;
}

void Tensor::AccumulateGrad(std::span<const Real> delta) const {
    if (!trainable_) {
        throw TapeError("frozen tensor " + ShapeToString(shape_) + " cannot hold a gradient");
    }
    if (delta.size() != data_.size()) {
        throw ShapeError("gradient of " + std::to_string(delta.size()) + " elements for tensor "
                         + ShapeToString(shape_));
    }
    if (!grad_) {
        grad_.emplace(data_.size(), Real(0));
    }
    for (size_t i = 0; i < delta.size(); ++i) {
        (*grad_)[i] += delta[i];
    }
}

void Tensor::CheckFinite(const std::string &context) const {
    // x - x is NaN exactly for NaN and Inf; the sum screens the whole buffer
    // in one vectorizable pass.
    Real probe = 0;
    for (Real v : data_) {
        probe += v - v;
    }
    if (probe == 0) {
        return;
    }
    for (size_t i = 0; i < data_.size(); ++i) {
        if (!std::isfinite(data_[i])) {
            throw NonFiniteError(context + ": non-finite value at element " + std::to_string(i));
        }
    }
}

bool Tensor::BitwiseEquals(const Tensor &other) const {
    return shape_ == other.shape_ && data_.size() == other.data_.size()
        && std::memcmp(data_.data(), other.data_.data(), data_.size() * sizeof(Real)) == 0;
}

ADFORGE_NAMESPACE_END
