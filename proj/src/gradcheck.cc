#include "adforge/gradcheck.h"

#include <algorithm>
#include <cmath>

#include "adforge/error.h"

ADFORGE_NAMESPACE_BEGIN

namespace {

double Evaluate(const LossBuilder &loss) {
    Tape tape(/*grad_enabled=*/false);
    return static_cast<double>(tape.value(loss(tape))[0]);
}

} // namespace

GradCheckResult FiniteDiffCheck(const LossBuilder &loss, Tensor &tensor, double h) {
    if (!tensor.trainable()) {
        throw TapeError("gradient check needs a trainable tensor");
    }
    tensor.clear_grad();
    {
        Tape tape;
        tape.Backward(loss(tape));
    }
    std::vector<Real> analytic(tensor.grad().begin(), tensor.grad().end());
    if (analytic.empty()) {
        throw TapeError("loss builder never registered the checked tensor");
    }

    GradCheckResult result;
    auto data = tensor.data();
    for (size_t i = 0; i < data.size(); ++i) {
        const Real saved = data[i];
        data[i] = static_cast<Real>(saved + h);
        const double plus = Evaluate(loss);
        data[i] = static_cast<Real>(saved - h);
        const double minus = Evaluate(loss);
        data[i] = saved;

        const double numeric = (plus - minus) / (2 * h);
        const double a = static_cast<double>(analytic[i]);
        const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
        const double rel = std::abs(a - numeric) / denom;
        if (rel > result.max_rel_error || result.worst_index < 0) {
            result.max_rel_error = rel;
            result.worst_index = static_cast<int64_t>(i);
            result.analytic_at_worst = a;
            result.numeric_at_worst = numeric;
        }
    }
    return result;
}

ADFORGE_NAMESPACE_END
