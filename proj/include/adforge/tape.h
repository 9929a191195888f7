#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "adforge/tensor.h"

ADFORGE_NAMESPACE_BEGIN

// Handle to a node recorded on a Tape. Only meaningful for the tape that
// issued it.
struct VarId {
    int32_t index = -1;

    bool valid() const { return index >= 0; }
    friend bool operator==(VarId a, VarId b) { return a.index == b.index; }
};

enum class OpKind {
    kParam,
    kConstant,
    kMatmul,
    kLinear,
    kAdd,
    kScale,
    kSoftmax,
    kLayerNorm,
    kGelu,
    kEmbedding,
    kConcatRows,
    kSelectRows,
    kAttention,
    kCrossEntropy,
    kSum,
};

const char *OpKindName(OpKind kind);

// Linear record of a computation with restricted reverse-mode differentiation.
//
// A node requires a gradient only when it is a trainable parameter or depends
// on one; backward rules and saved activations are kept for those nodes alone,
// so frozen weights never see a gradient buffer. Nodes are appended in
// creation order and Backward() visits them once, in reverse.
class Tape {
public:
    // Receives the gradient of the node's output and accumulates into the
    // adjoints of its inputs through Tape::Adjoint().
    using BackwardFn = std::function<void(Tape &, std::span<const Real> out_grad)>;

    explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

    Tape(const Tape &) = delete;
    Tape &operator=(const Tape &) = delete;
    Tape(Tape &&) = default;
    Tape &operator=(Tape &&) = default;

    // Leaf referencing a tensor owned elsewhere; the tensor must outlive the
    // tape. Gradients reach it only when it is trainable.
    VarId Param(const Tensor &tensor);
    VarId Constant(Tensor value);

    VarId Record(OpKind kind, Tensor value, std::vector<VarId> inputs, BackwardFn backward);

    const Tensor &value(VarId id) const;
    bool requires_grad(VarId id) const;
    OpKind kind(VarId id) const;

    // Gradient accumulator of a node. Valid only for nodes that require grad.
    std::span<Real> Adjoint(VarId id);

    size_t size() const { return nodes_.size(); }
    // Number of non-leaf nodes.
    size_t CountOps() const;
    bool grad_enabled() const { return grad_enabled_; }

    // Propagates d(loss)/d(node) back to every trainable Param leaf. Every
    // trainable leaf on the tape ends up with a grad buffer, zero if the loss
    // does not depend on it. May run once per tape.
    void Backward(VarId loss);
    bool backward_done() const { return backward_done_; }

private:
    struct Node {
        OpKind kind;
        Tensor owned;
        const Tensor *external = nullptr;
        std::vector<VarId> inputs;
        bool requires_grad = false;
        std::vector<Real> adjoint;
        BackwardFn backward;
    };

    const Node &node(VarId id) const;
    Node &node(VarId id);

    std::vector<Node> nodes_;
    bool grad_enabled_ = true;
    bool backward_done_ = false;
};

ADFORGE_NAMESPACE_END
