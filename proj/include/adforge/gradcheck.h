#pragma once

#include <functional>

#include "adforge/tape.h"

ADFORGE_NAMESPACE_BEGIN

// Builds a scalar loss on the given tape. Must be deterministic and must
// register the checked tensor through Tape::Param.
using LossBuilder = std::function<VarId(Tape &)>;

struct GradCheckResult {
    double max_rel_error = 0;
    int64_t worst_index = -1;
    double analytic_at_worst = 0;
    double numeric_at_worst = 0;
};

// Compares the tape gradient of `tensor` against central differences
// (f(t + h·e) − f(t − h·e)) / 2h, element by element. Relative error uses the
// denominator max(|analytic|, |numeric|, 1e-8). Leaves `tensor` unchanged
// apart from its grad buffer.
GradCheckResult FiniteDiffCheck(const LossBuilder &loss, Tensor &tensor, double h = 1e-3);

ADFORGE_NAMESPACE_END
