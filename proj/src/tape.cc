#include "adforge/tape.h"

#include <string>

#include "adforge/error.h"

ADFORGE_NAMESPACE_BEGIN

const char *OpKindName(OpKind kind) {
    switch (kind) {
    case OpKind::kParam:
        return "param";
    case OpKind::kConstant:
        return "constant";
    case OpKind::kMatmul:
        return "matmul";
    case OpKind::kLinear:
        return "linear";
    case OpKind::kAdd:
        return "add";
    case OpKind::kScale:
        return "scale";
    case OpKind::kSoftmax:
        return "softmax";
    case OpKind::kLayerNorm:
        return "layer_norm";
    case OpKind::kGelu:
        return "gelu";
    case OpKind::kEmbedding:
        return "embedding";
    case OpKind::kConcatRows:
        return "concat_rows";
    case OpKind::kSelectRows:
        return "select_rows";
    case OpKind::kAttention:
        return "attention";
    case OpKind::kCrossEntropy:
        return "cross_entropy";
    case OpKind::kSum:
        return "sum";
    }
    return "unknown";
}

VarId Tape::Param(const Tensor &tensor) {
    if (backward_done_) {
        throw TapeError("cannot record on a tape after backward");
    }
    Node n;
    n.kind = OpKind::kParam;
    n.external = &tensor;
    n.requires_grad = grad_enabled_ && tensor.trainable();
    nodes_.push_back(std::move(n));
    return VarId{static_cast<int32_t>(nodes_.size() - 1)};
}

VarId Tape::Constant(Tensor value) {
    if (backward_done_) {
        throw TapeError("cannot record on a tape after backward");
    }
    Node n;
    n.kind = OpKind::kConstant;
    n.owned = std::move(value);
    nodes_.push_back(std::move(n));
    return VarId{static_cast<int32_t>(nodes_.size() - 1)};
}

VarId Tape::Record(OpKind kind, Tensor value, std::vector<VarId> inputs, BackwardFn backward) {
    if (backward_done_) {
        throw TapeError("cannot record on a tape after backward");
    }
    value.CheckFinite(OpKindName(kind));
    Node n;
    n.kind = kind;
    n.owned = std::move(value);
    for (auto in : inputs) {
        n.requires_grad = n.requires_grad || node(in).requires_grad;
    }
    n.inputs = std::move(inputs);
    if (n.requires_grad) {
        n.backward = std::move(backward);
    }
    nodes_.push_back(std::move(n));
    return VarId{static_cast<int32_t>(nodes_.size() - 1)};
}

const Tape::Node &Tape::node(VarId id) const {
    if (id.index < 0 || static_cast<size_t>(id.index) >= nodes_.size()) {
        throw TapeError("var id " + std::to_string(id.index) + " is not on this tape");
    }
    return nodes_[static_cast<size_t>(id.index)];
}

Tape::Node &Tape::node(VarId id) {
    return const_cast<Node &>(static_cast<const Tape *>(this)->node(id));
}

const Tensor &Tape::value(VarId id) const {
    const auto &n = node(id);
    return n.external ? *n.external : n.owned;
}

bool Tape::requires_grad(VarId id) const { return node(id).requires_grad; }

OpKind Tape::kind(VarId id) const { return node(id).kind; }

std::span<Real> Tape::Adjoint(VarId id) {
    auto &n = node(id);
    if (!n.requires_grad) {
        throw TapeError("node " + std::to_string(id.index) + " does not require grad");
    }
    if (n.adjoint.empty()) {
        n.adjoint.assign(static_cast<size_t>(value(id).numel()), Real(0));
    }
    return n.adjoint;
}

size_t Tape::CountOps() const {
    size_t count = 0;
    for (const auto &n : nodes_) {
        if (n.kind != OpKind::kParam && n.kind != OpKind::kConstant) {
            ++count;
        }
    }
    return count;
}

void Tape::Backward(VarId loss) {
    if (backward_done_) {
        throw TapeError("backward already ran on this tape");
    }
    if (value(loss).numel() != 1) {
        throw TapeError("backward needs a scalar loss, got shape " + ShapeToString(value(loss).shape()));
    }
    backward_done_ = true;

    if (node(loss).requires_grad) {
        Adjoint(loss)[0] = Real(1);
        for (int32_t i = loss.index; i >= 0; --i) {
            auto &n = nodes_[static_cast<size_t>(i)];
            if (!n.requires_grad || n.adjoint.empty() || !n.backward) {
                continue;
            }
            // Move the adjoint out so the rule may freely touch other nodes.
            std::vector<Real> grad = std::move(n.adjoint);
            n.backward(*this, grad);
            nodes_[static_cast<size_t>(i)].adjoint = std::move(grad);
        }
    }

    for (auto &n : nodes_) {
        if (n.kind != OpKind::kParam || !n.requires_grad) {
            continue;
        }
        if (n.adjoint.empty()) {
            n.adjoint.assign(static_cast<size_t>(n.external->numel()), Real(0));
        }
        n.external->AccumulateGrad(n.adjoint);
    }
}

ADFORGE_NAMESPACE_END
