#include "adforge/ops.h"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Core>

#include "adforge/error.h"

ADFORGE_NAMESPACE_BEGIN

namespace ops {

namespace {

using Matrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<Matrix>;
using ConstMatMap = Eigen::Map<const Matrix>;

ConstMatMap View(const Tensor &t) { return ConstMatMap(t.raw(), t.rows(), t.cols()); }
ConstMatMap View(std::span<const Real> s, int64_t rows, int64_t cols) { return ConstMatMap(s.data(), rows, cols); }
MatMap View(std::span<Real> s, int64_t rows, int64_t cols) { return MatMap(s.data(), rows, cols); }

void RequireRank2(const Tensor &t, const char *op, const char *arg) {
    if (t.rank() != 2) {
        throw ShapeError(std::string(op) + ": " + arg + " must be rank 2, got " + ShapeToString(t.shape()));
    }
}

void Accumulate(std::span<Real> dst, std::span<const Real> src) {
    for (size_t i = 0; i < dst.size(); ++i) {
        dst[i] += src[i];
    }
}

} // namespace

void SoftmaxRows(Real *data, int64_t rows, int64_t cols) {
    for (int64_t r = 0; r < rows; ++r) {
        Real *row = data + r * cols;
        Real mx = *std::max_element(row, row + cols);
        Real total = 0;
        for (int64_t c = 0; c < cols; ++c) {
            row[c] = std::exp(row[c] - mx);
            total += row[c];
        }
        Real inv = Real(1) / total;
        for (int64_t c = 0; c < cols; ++c) {
            row[c] *= inv;
        }
    }
}

VarId Matmul(Tape &tape, VarId a, VarId b) {
    const auto &ta = tape.value(a);
    const auto &tb = tape.value(b);
    RequireRank2(ta, "matmul", "lhs");
    RequireRank2(tb, "matmul", "rhs");
    if (ta.dim(1) != tb.dim(0)) {
        throw ShapeError("matmul: inner dimensions differ: " + ShapeToString(ta.shape()) + " vs "
                         + ShapeToString(tb.shape()));
    }
    const int64_t m = ta.dim(0), k = ta.dim(1), n = tb.dim(1);
    Tensor out({m, n});
    View(out.data(), m, n).noalias() = View(ta) * View(tb);
    return tape.Record(OpKind::kMatmul, std::move(out), {a, b}, [a, b, m, k, n](Tape &t, std::span<const Real> g) {
        auto dc = View(g, m, n);
        if (t.requires_grad(a)) {
            View(t.Adjoint(a), m, k).noalias() += dc * View(t.value(b)).transpose();
        }
        if (t.requires_grad(b)) {
            View(t.Adjoint(b), k, n).noalias() += View(t.value(a)).transpose() * dc;
        }
    });
}

VarId Linear(Tape &tape, VarId x, VarId w) {
    const auto &tx = tape.value(x);
    const auto &tw = tape.value(w);
    RequireRank2(tx, "linear", "input");
    RequireRank2(tw, "linear", "weight");
    if (tx.dim(1) != tw.dim(1)) {
        throw ShapeError("linear: input " + ShapeToString(tx.shape()) + " does not match weight "
                         + ShapeToString(tw.shape()));
    }
    const int64_t m = tx.dim(0), k = tx.dim(1), n = tw.dim(0);
    Tensor out({m, n});
    View(out.data(), m, n).noalias() = View(tx) * View(tw).transpose();
    return tape.Record(OpKind::kLinear, std::move(out), {x, w}, [x, w, m, k, n](Tape &t, std::span<const Real> g) {
        auto dy = View(g, m, n);
        if (t.requires_grad(x)) {
            View(t.Adjoint(x), m, k).noalias() += dy * View(t.value(w));
        }
        if (t.requires_grad(w)) {
            View(t.Adjoint(w), n, k).noalias() += dy.transpose() * View(t.value(x));
        }
    });
}

VarId Add(Tape &tape, VarId a, VarId b) {
    const auto &ta = tape.value(a);
    const auto &tb = tape.value(b);
    if (ta.shape() != tb.shape()) {
        throw ShapeError("add: shape mismatch " + ShapeToString(ta.shape()) + " vs " + ShapeToString(tb.shape()));
    }
    Tensor out(ta.shape());
    for (int64_t i = 0; i < out.numel(); ++i) {
        out[i] = ta[i] + tb[i];
    }
    return tape.Record(OpKind::kAdd, std::move(out), {a, b}, [a, b](Tape &t, std::span<const Real> g) {
        if (t.requires_grad(a)) {
            Accumulate(t.Adjoint(a), g);
        }
        if (t.requires_grad(b)) {
            Accumulate(t.Adjoint(b), g);
        }
    });
}

VarId Scale(Tape &tape, VarId a, Real factor) {
    const auto &ta = tape.value(a);
    Tensor out(ta.shape());
    for (int64_t i = 0; i < out.numel(); ++i) {
        out[i] = ta[i] * factor;
    }
    return tape.Record(OpKind::kScale, std::move(out), {a}, [a, factor](Tape &t, std::span<const Real> g) {
        auto da = t.Adjoint(a);
        for (size_t i = 0; i < da.size(); ++i) {
            da[i] += g[i] * factor;
        }
    });
}

VarId Sum(Tape &tape, VarId a) {
    const auto &ta = tape.value(a);
    double total = 0;
    for (auto v : ta.data()) {
        total += v;
    }
    Tensor out({1}, {static_cast<Real>(total)});
    return tape.Record(OpKind::kSum, std::move(out), {a}, [a](Tape &t, std::span<const Real> g) {
        for (auto &v : t.Adjoint(a)) {
            v += g[0];
        }
    });
}

VarId SoftmaxLastDim(Tape &tape, VarId x) {
    const auto &tx = tape.value(x);
    Tensor out = tx;
    out.set_trainable(false);
    const int64_t rows = tx.rows(), cols = tx.cols();
    SoftmaxRows(out.raw(), rows, cols);
    const VarId self{static_cast<int32_t>(tape.size())};
    return tape.Record(OpKind::kSoftmax, std::move(out), {x}, [x, self, rows, cols](Tape &t, std::span<const Real> g) {
        const auto &y = t.value(self);
        auto dx = t.Adjoint(x);
        for (int64_t r = 0; r < rows; ++r) {
            Real dot = 0;
            for (int64_t c = 0; c < cols; ++c) {
                dot += g[static_cast<size_t>(r * cols + c)] * y[r * cols + c];
            }
            for (int64_t c = 0; c < cols; ++c) {
                const auto i = r * cols + c;
                dx[static_cast<size_t>(i)] += y[i] * (g[static_cast<size_t>(i)] - dot);
            }
        }
    });
}

VarId LayerNorm(Tape &tape, VarId x, VarId gain, VarId bias, Real eps) {
    const auto &tx = tape.value(x);
    const auto &tg = tape.value(gain);
    const auto &tb = tape.value(bias);
    const int64_t rows = tx.rows(), cols = tx.cols();
    if (tg.numel() != cols || tb.numel() != cols) {
        throw ShapeError("layer_norm: gain " + ShapeToString(tg.shape()) + " / bias " + ShapeToString(tb.shape())
                         + " do not match last dimension of " + ShapeToString(tx.shape()));
    }
    Tensor out(tx.shape());
    std::vector<Real> xhat(static_cast<size_t>(rows * cols));
    std::vector<Real> inv_std(static_cast<size_t>(rows));
    for (int64_t r = 0; r < rows; ++r) {
        const Real *row = tx.raw() + r * cols;
        Real mean = 0;
        for (int64_t c = 0; c < cols; ++c) {
            mean += row[c];
        }
        mean /= static_cast<Real>(cols);
        Real var = 0;
        for (int64_t c = 0; c < cols; ++c) {
            var += (row[c] - mean) * (row[c] - mean);
        }
        var /= static_cast<Real>(cols);
        const Real inv = Real(1) / std::sqrt(var + eps);
        inv_std[static_cast<size_t>(r)] = inv;
        for (int64_t c = 0; c < cols; ++c) {
            const auto i = static_cast<size_t>(r * cols + c);
            xhat[i] = (row[c] - mean) * inv;
            out[r * cols + c] = tg[c] * xhat[i] + tb[c];
        }
    }
    return tape.Record(OpKind::kLayerNorm, std::move(out), {x, gain, bias},
                       [x, gain, bias, rows, cols, xhat = std::move(xhat),
                        inv_std = std::move(inv_std)](Tape &t, std::span<const Real> g) {
                           const auto &tg = t.value(gain);
                           if (t.requires_grad(gain) || t.requires_grad(bias)) {
                               std::vector<Real> dg(static_cast<size_t>(cols), 0), db(static_cast<size_t>(cols), 0);
                               for (int64_t r = 0; r < rows; ++r) {
                                   for (int64_t c = 0; c < cols; ++c) {
                                       const auto i = static_cast<size_t>(r * cols + c);
                                       dg[static_cast<size_t>(c)] += g[i] * xhat[i];
                                       db[static_cast<size_t>(c)] += g[i];
                                   }
                               }
                               if (t.requires_grad(gain)) {
                                   Accumulate(t.Adjoint(gain), dg);
                               }
                               if (t.requires_grad(bias)) {
                                   Accumulate(t.Adjoint(bias), db);
                               }
                           }
                           if (!t.requires_grad(x)) {
                               return;
                           }
                           auto dx = t.Adjoint(x);
                           const Real n = static_cast<Real>(cols);
                           for (int64_t r = 0; r < rows; ++r) {
                               Real mean_d = 0, mean_dx = 0;
                               for (int64_t c = 0; c < cols; ++c) {
                                   const auto i = static_cast<size_t>(r * cols + c);
                                   const Real d = g[i] * tg[c];
                                   mean_d += d;
                                   mean_dx += d * xhat[i];
                               }
                               mean_d /= n;
                               mean_dx /= n;
                               const Real inv = inv_std[static_cast<size_t>(r)];
                               for (int64_t c = 0; c < cols; ++c) {
                                   const auto i = static_cast<size_t>(r * cols + c);
                                   dx[i] += inv * (g[i] * tg[c] - mean_d - xhat[i] * mean_dx);
                               }
                           }
                       });
}

namespace {
constexpr Real kGeluAlpha = Real(0.7978845608028654); // sqrt(2/pi)
constexpr Real kGeluBeta = Real(0.044715);
} // namespace

VarId Gelu(Tape &tape, VarId x) {
    using Array = Eigen::Array<Real, Eigen::Dynamic, 1>;
    const auto &tx = tape.value(x);
    const auto v = Eigen::Map<const Array>(tx.raw(), tx.numel());
    // tanh(inner) is kept for the backward pass.
    Array th = (kGeluAlpha * (v + kGeluBeta * v.cube())).tanh();
    Tensor out(tx.shape());
    Eigen::Map<Array>(out.raw(), out.numel()) = Real(0.5) * v * (Real(1) + th);
    return tape.Record(OpKind::kGelu, std::move(out), {x}, [x, th = std::move(th)](Tape &t, std::span<const Real> g) {
        const auto &tx = t.value(x);
        const auto v = Eigen::Map<const Array>(tx.raw(), tx.numel());
        const auto go = Eigen::Map<const Array>(g.data(), static_cast<Eigen::Index>(g.size()));
        auto dx = t.Adjoint(x);
        Eigen::Map<Array>(dx.data(), static_cast<Eigen::Index>(dx.size()))
            += go
             * (Real(0.5) * (Real(1) + th)
                + Real(0.5) * v * (Real(1) - th.square()) * kGeluAlpha * (Real(1) + Real(3) * kGeluBeta * v.square()));
    });
}

VarId Embedding(Tape &tape, VarId table, std::span<const int> ids) {
    const auto &tt = tape.value(table);
    RequireRank2(tt, "embedding", "table");
    const int64_t vocab = tt.dim(0), d = tt.dim(1);
    if (ids.empty()) {
        throw ShapeError("embedding: empty id sequence");
    }
    Tensor out({static_cast<int64_t>(ids.size()), d});
    for (size_t r = 0; r < ids.size(); ++r) {
        if (ids[r] < 0 || ids[r] >= vocab) {
            throw ShapeError("embedding: id " + std::to_string(ids[r]) + " outside vocabulary of "
                             + std::to_string(vocab));
        }
        std::copy_n(tt.raw() + ids[r] * d, d, out.raw() + static_cast<int64_t>(r) * d);
    }
    std::vector<int> saved(ids.begin(), ids.end());
    return tape.Record(OpKind::kEmbedding, std::move(out), {table},
                       [table, d, saved = std::move(saved)](Tape &t, std::span<const Real> g) {
                           auto dt = t.Adjoint(table);
                           for (size_t r = 0; r < saved.size(); ++r) {
                               for (int64_t c = 0; c < d; ++c) {
                                   dt[static_cast<size_t>(saved[r] * d + c)] += g[r * static_cast<size_t>(d)
                                                                                    + static_cast<size_t>(c)];
                               }
                           }
                       });
}

VarId ConcatRows(Tape &tape, VarId top, VarId bottom) {
    const auto &ta = tape.value(top);
    const auto &tb = tape.value(bottom);
    RequireRank2(ta, "concat_rows", "top");
    RequireRank2(tb, "concat_rows", "bottom");
    if (ta.dim(1) != tb.dim(1)) {
        throw ShapeError("concat_rows: column mismatch " + ShapeToString(ta.shape()) + " vs "
                         + ShapeToString(tb.shape()));
    }
    Tensor out({ta.dim(0) + tb.dim(0), ta.dim(1)});
    std::copy(ta.data().begin(), ta.data().end(), out.data().begin());
    std::copy(tb.data().begin(), tb.data().end(), out.data().begin() + ta.numel());
    const auto split = static_cast<size_t>(ta.numel());
    return tape.Record(OpKind::kConcatRows, std::move(out), {top, bottom},
                       [top, bottom, split](Tape &t, std::span<const Real> g) {
                           if (t.requires_grad(top)) {
                               Accumulate(t.Adjoint(top), g.subspan(0, split));
                           }
                           if (t.requires_grad(bottom)) {
                               Accumulate(t.Adjoint(bottom), g.subspan(split));
                           }
                       });
}

VarId SelectRows(Tape &tape, VarId x, std::vector<int64_t> rows) {
    const auto &tx = tape.value(x);
    RequireRank2(tx, "select_rows", "input");
    const int64_t d = tx.dim(1);
    if (rows.empty()) {
        throw ShapeError("select_rows: no rows selected");
    }
    Tensor out({static_cast<int64_t>(rows.size()), d});
    for (size_t r = 0; r < rows.size(); ++r) {
        if (rows[r] < 0 || rows[r] >= tx.dim(0)) {
            throw ShapeError("select_rows: row " + std::to_string(rows[r]) + " outside " + ShapeToString(tx.shape()));
        }
        std::copy_n(tx.raw() + rows[r] * d, d, out.raw() + static_cast<int64_t>(r) * d);
    }
    return tape.Record(OpKind::kSelectRows, std::move(out), {x},
                       [x, d, rows = std::move(rows)](Tape &t, std::span<const Real> g) {
                           auto dx = t.Adjoint(x);
                           for (size_t r = 0; r < rows.size(); ++r) {
                               for (int64_t c = 0; c < d; ++c) {
                                   dx[static_cast<size_t>(rows[r] * d + c)] +=
                                       g[r * static_cast<size_t>(d) + static_cast<size_t>(c)];
                               }
                           }
                       });
}

VarId CausalAttention(Tape &tape, VarId q, VarId k, VarId v, int n_heads, int64_t n_prefix) {
    const auto &tq = tape.value(q);
    const auto &tk = tape.value(k);
    const auto &tv = tape.value(v);
    RequireRank2(tq, "attention", "q");
    RequireRank2(tk, "attention", "k");
    RequireRank2(tv, "attention", "v");
    const int64_t seq = tq.dim(0), d = tq.dim(1), keys = tk.dim(0);
    if (n_heads <= 0 || d % n_heads != 0) {
        throw ShapeError("attention: width " + std::to_string(d) + " not divisible by " + std::to_string(n_heads)
                         + " heads");
    }
    if (tk.shape() != tv.shape() || tk.dim(1) != d || keys != n_prefix + seq) {
        throw ShapeError("attention: q " + ShapeToString(tq.shape()) + ", k " + ShapeToString(tk.shape()) + ", v "
                         + ShapeToString(tv.shape()) + " with prefix " + std::to_string(n_prefix));
    }
    const int64_t dh = d / n_heads;
    const Real scale = Real(1) / std::sqrt(static_cast<Real>(dh));

    // probs[h] is a [seq × keys] row-stochastic matrix with zeros where masked.
    std::vector<Real> probs(static_cast<size_t>(n_heads * seq * keys), Real(0));
    Tensor out({seq, d});
    auto Q = View(tq), K = View(tk), V = View(tv);
    auto O = View(out.data(), seq, d);
    Matrix scores(seq, keys);
    for (int h = 0; h < n_heads; ++h) {
        scores.noalias() = Q.middleCols(h * dh, dh) * K.middleCols(h * dh, dh).transpose();
        MatMap P(probs.data() + h * seq * keys, seq, keys);
        for (int64_t t = 0; t < seq; ++t) {
            const int64_t visible = n_prefix + t + 1;
            for (int64_t j = 0; j < visible; ++j) {
                P(t, j) = scores(t, j) * scale;
            }
            SoftmaxRows(&P(t, 0), 1, visible);
        }
        O.middleCols(h * dh, dh).noalias() = P * V.middleCols(h * dh, dh);
    }

    return tape.Record(
        OpKind::kAttention, std::move(out), {q, k, v},
        [q, k, v, n_heads, seq, d, keys, dh, scale, probs = std::move(probs)](Tape &t, std::span<const Real> g) {
            auto Q = View(t.value(q)), K = View(t.value(k)), V = View(t.value(v));
            auto dO = View(g, seq, d);
            const bool need_q = t.requires_grad(q), need_k = t.requires_grad(k), need_v = t.requires_grad(v);
            Matrix dP(seq, keys);
            for (int h = 0; h < n_heads; ++h) {
                ConstMatMap P(probs.data() + h * seq * keys, seq, keys);
                auto dOh = dO.middleCols(h * dh, dh);
                if (need_v) {
                    View(t.Adjoint(v), keys, d).middleCols(h * dh, dh).noalias() += P.transpose() * dOh;
                }
                if (!need_q && !need_k) {
                    continue;
                }
                dP.noalias() = dOh * V.middleCols(h * dh, dh).transpose();
                // Softmax backward; masked entries have P == 0 and drop out.
                for (int64_t r = 0; r < seq; ++r) {
                    const Real dot = P.row(r).dot(dP.row(r));
                    dP.row(r) = (P.row(r).array() * (dP.row(r).array() - dot)).matrix() * scale;
                }
                if (need_q) {
                    View(t.Adjoint(q), seq, d).middleCols(h * dh, dh).noalias() += dP * K.middleCols(h * dh, dh);
                }
                if (need_k) {
                    View(t.Adjoint(k), keys, d).middleCols(h * dh, dh).noalias() +=
                        dP.transpose() * Q.middleCols(h * dh, dh);
                }
            }
        });
}

VarId CrossEntropyMasked(Tape &tape, VarId logits, std::span<const int> targets, const std::vector<bool> &mask) {
    const auto &tl = tape.value(logits);
    RequireRank2(tl, "cross_entropy", "logits");
    const int64_t rows = tl.dim(0), vocab = tl.dim(1);
    if (static_cast<int64_t>(targets.size()) != rows || static_cast<int64_t>(mask.size()) != rows) {
        throw ShapeError("cross_entropy: " + std::to_string(targets.size()) + " targets and " + std::to_string(mask.size())
                         + " mask bits for logits " + ShapeToString(tl.shape()));
    }
    std::vector<int64_t> active;
    for (int64_t r = 0; r < rows; ++r) {
        if (!mask[static_cast<size_t>(r)]) {
            continue;
        }
        if (targets[static_cast<size_t>(r)] < 0 || targets[static_cast<size_t>(r)] >= vocab) {
            throw ShapeError("cross_entropy: target " + std::to_string(targets[static_cast<size_t>(r)])
                             + " outside vocabulary of " + std::to_string(vocab));
        }
        active.push_back(r);
    }
    if (active.empty()) {
        throw ShapeError("cross_entropy: no supervised positions");
    }

    std::vector<Real> probs(active.size() * static_cast<size_t>(vocab));
    double total = 0;
    for (size_t a = 0; a < active.size(); ++a) {
        Real *p = probs.data() + a * static_cast<size_t>(vocab);
        std::copy_n(tl.raw() + active[a] * vocab, vocab, p);
        const Real mx = *std::max_element(p, p + vocab);
        double z = 0;
        for (int64_t c = 0; c < vocab; ++c) {
            z += std::exp(static_cast<double>(p[c] - mx));
        }
        const int target = targets[static_cast<size_t>(active[a])];
        total += std::log(z) - static_cast<double>(p[target] - mx);
        SoftmaxRows(p, 1, vocab);
    }
    const auto n = static_cast<Real>(active.size());
    Tensor out({1}, {static_cast<Real>(total / static_cast<double>(active.size()))});
    std::vector<int> saved_targets;
    for (auto r : active) {
        saved_targets.push_back(targets[static_cast<size_t>(r)]);
    }
    return tape.Record(OpKind::kCrossEntropy, std::move(out), {logits},
                       [logits, vocab, n, active = std::move(active), saved_targets = std::move(saved_targets),
                        probs = std::move(probs)](Tape &t, std::span<const Real> g) {
                           auto dl = t.Adjoint(logits);
                           const Real w = g[0] / n;
                           for (size_t a = 0; a < active.size(); ++a) {
                               const Real *p = probs.data() + a * static_cast<size_t>(vocab);
                               Real *row = dl.data() + active[a] * vocab;
                               for (int64_t c = 0; c < vocab; ++c) {
                                   row[c] += w * p[c];
                               }
                               row[saved_targets[a]] -= w;
                           }
                       });
}

} // namespace ops

ADFORGE_NAMESPACE_END
