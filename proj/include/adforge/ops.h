#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "adforge/tape.h"

ADFORGE_NAMESPACE_BEGIN

namespace ops {

inline constexpr Real kLayerNormEps = Real(1e-5);

// a[m×k] · b[k×n].
VarId Matmul(Tape &tape, VarId a, VarId b);

// x[m×k] · w[n×k]ᵀ, i.e. a dense layer with weights stored [out×in].
VarId Linear(Tape &tape, VarId x, VarId w);

VarId Add(Tape &tape, VarId a, VarId b);
VarId Scale(Tape &tape, VarId a, Real factor);
VarId Sum(Tape &tape, VarId a);

// Max-shifted softmax over the last dimension.
VarId SoftmaxLastDim(Tape &tape, VarId x);

// Normalizes each last-dim slice, then applies gain and bias of that length.
VarId LayerNorm(Tape &tape, VarId x, VarId gain, VarId bias, Real eps = kLayerNormEps);

// tanh-approximated GELU.
VarId Gelu(Tape &tape, VarId x);

// Gathers rows of `table` by id.
VarId Embedding(Tape &tape, VarId table, std::span<const int> ids);

VarId ConcatRows(Tape &tape, VarId top, VarId bottom);
VarId SelectRows(Tape &tape, VarId x, std::vector<int64_t> rows);

// Multi-head attention of q[T×d] over k, v[(P+T)×d]. The first `n_prefix`
// key rows are visible to every query; the remaining T rows are causally
// masked (query t sees sequence keys 0..t).
VarId CausalAttention(Tape &tape, VarId q, VarId k, VarId v, int n_heads, int64_t n_prefix);

// Mean negative log-likelihood of targets[t] under softmax(logits[t]) over
// the positions where mask[t] is set. Returns a [1] tensor.
VarId CrossEntropyMasked(Tape &tape, VarId logits, std::span<const int> targets, const std::vector<bool> &mask);

// Row-wise softmax kernel shared with attention; exposed for tests.
void SoftmaxRows(Real *data, int64_t rows, int64_t cols);

} // namespace ops

ADFORGE_NAMESPACE_END
