#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"

#include "adforge/error.h"
#include "adforge/model.h"
#include "adforge/ops.h"

using namespace adforge;

namespace {

using Mat = std::vector<std::vector<double>>;

ModelConfig SmallConfig(int layers = 2, int heads = 2, int64_t d = 16, int64_t ff = 32, int64_t max_seq = 48) {
    ModelConfig c;
    c.n_layers = layers;
    c.n_heads = heads;
    c.d_model = d;
    c.d_ff = ff;
    c.max_seq = max_seq;
    c.seed = 11;
    return c;
}

Mat ToMat(const Tensor &t) {
    Mat m(static_cast<size_t>(t.rows()), std::vector<double>(static_cast<size_t>(t.cols())));
    for (int64_t i = 0; i < t.rows(); ++i) {
        for (int64_t j = 0; j < t.cols(); ++j) {
            m[static_cast<size_t>(i)][static_cast<size_t>(j)] = t.at(i, j);
        }
    }
    return m;
}

// x · wᵀ with w stored [out × in].
Mat MulT(const Mat &x, const Mat &w) {
    Mat out(x.size(), std::vector<double>(w.size(), 0.0));
    for (size_t i = 0; i < x.size(); ++i) {
        for (size_t o = 0; o < w.size(); ++o) {
            for (size_t k = 0; k < w[o].size(); ++k) {
                out[i][o] += x[i][k] * w[o][k];
            }
        }
    }
    return out;
}

Mat Norm(const Mat &x, const Tensor &gain, const Tensor &bias) {
    Mat out = x;
    for (auto &row : out) {
        double mean = 0, var = 0;
        for (double v : row) {
            mean += v;
        }
        mean /= static_cast<double>(row.size());
        for (double v : row) {
            var += (v - mean) * (v - mean);
        }
        var /= static_cast<double>(row.size());
        for (size_t j = 0; j < row.size(); ++j) {
            row[j] = (row[j] - mean) / std::sqrt(var + 1e-5) * gain[static_cast<int64_t>(j)]
                     + bias[static_cast<int64_t>(j)];
        }
    }
    return out;
}

void AddInto(Mat &a, const Mat &b) {
    for (size_t i = 0; i < a.size(); ++i) {
        for (size_t j = 0; j < a[i].size(); ++j) {
            a[i][j] += b[i][j];
        }
    }
}

// Straight-line forward of a single-head decoder, written without the tape.
// Prefix rows (possibly empty) are prepended to every layer's keys/values.
Mat OracleLogits(const ModelConfig &c, const BaseWeights &w, const std::vector<int> &ids,
                 const std::vector<std::pair<Mat, Mat>> &prefix) {
    const size_t T = ids.size();
    const auto d = static_cast<size_t>(c.d_model);
    Mat x(T, std::vector<double>(d));
    for (size_t t = 0; t < T; ++t) {
        for (size_t i = 0; i < d; ++i) {
            const double freq = std::pow(10000.0, -2.0 * static_cast<double>(i / 2) / static_cast<double>(d));
            const double pos = 0.02 * (i % 2 == 0 ? std::sin(static_cast<double>(t) * freq)
                                                  : std::cos(static_cast<double>(t) * freq));
            x[t][i] = w.token_embedding.at(ids[t], static_cast<int64_t>(i)) + pos;
        }
    }
    for (size_t l = 0; l < w.layers.size(); ++l) {
        const auto &L = w.layers[l];
        const Mat h = Norm(x, L.ln1_gain, L.ln1_bias);
        const Mat q = MulT(h, ToMat(L.wq));
        Mat k = MulT(h, ToMat(L.wk));
        Mat v = MulT(h, ToMat(L.wv));
        size_t p = 0;
        if (!prefix.empty()) {
            p = prefix[l].first.size();
            k.insert(k.begin(), prefix[l].first.begin(), prefix[l].first.end());
            v.insert(v.begin(), prefix[l].second.begin(), prefix[l].second.end());
        }
        Mat attn(T, std::vector<double>(d, 0.0));
        for (size_t t = 0; t < T; ++t) {
            const size_t visible = p + t + 1;
            std::vector<double> s(visible);
            double mx = -1e300;
            for (size_t j = 0; j < visible; ++j) {
                s[j] = 0;
                for (size_t i = 0; i < d; ++i) {
                    s[j] += q[t][i] * k[j][i];
                }
                s[j] /= std::sqrt(static_cast<double>(d));
                mx = std::max(mx, s[j]);
            }
            double z = 0;
            for (auto &e : s) {
                e = std::exp(e - mx);
                z += e;
            }
            for (size_t j = 0; j < visible; ++j) {
                for (size_t i = 0; i < d; ++i) {
                    attn[t][i] += s[j] / z * v[j][i];
                }
            }
        }
        AddInto(x, MulT(attn, ToMat(L.wo)));
        Mat f = MulT(Norm(x, L.ln2_gain, L.ln2_bias), ToMat(L.ff_in));
        for (auto &row : f) {
            for (auto &u : row) {
                u = 0.5 * u * (1 + std::tanh(std::sqrt(2 / M_PI) * (u + 0.044715 * u * u * u)));
            }
        }
        AddInto(x, MulT(f, ToMat(L.ff_out)));
    }
    return MulT(Norm(x, w.final_gain, w.final_bias), ToMat(w.token_embedding));
}

double MaxAbsDiff(const Tensor &a, const Mat &b) {
    double worst = 0;
    for (int64_t i = 0; i < a.rows(); ++i) {
        for (int64_t j = 0; j < a.cols(); ++j) {
            worst = std::max(worst, std::abs(a.at(i, j) - b[static_cast<size_t>(i)][static_cast<size_t>(j)]));
        }
    }
    return worst;
}

// Scales every base matrix so that activations are O(1) and the oracle
// comparison is not trivially dominated by tiny values.
BaseWeights Loud(const ModelConfig &c) {
    BaseWeights w = BaseWeights::Initialize(c);
    for (auto &[name, t] : w.Named()) {
        if (t->rank() == 2) {
            for (auto &v : t->data()) {
                v *= 20;
            }
        }
    }
    return w;
}

TokenSeq RandomTokens(std::mt19937_64 &rng, int n) {
    std::uniform_int_distribution<int> byte(0, 255);
    TokenSeq s;
    s.ids.push_back(kBosToken);
    for (int i = 0; i < n; ++i) {
        s.ids.push_back(byte(rng));
    }
    return s;
}

void Randomize(Tensor &t, std::mt19937_64 &rng, double scale) {
    std::normal_distribution<double> n(0, scale);
    for (auto &v : t.data()) {
        v = static_cast<Real>(n(rng));
    }
}

} // namespace

TEST_SUITE("tokenizer") {
    TEST_CASE("empty text is just BOS") { CHECK(Tokenize("").ids == std::vector<int>{kBosToken}); }

    TEST_CASE("ASCII bytes map to their code points") {
        CHECK(Tokenize("Hi").ids == std::vector<int>{kBosToken, 72, 105});
    }

    TEST_CASE("multi-byte UTF-8 round-trips") {
        const std::string s = "情感 ünïcödé ✓";
        CHECK(Detokenize(Tokenize(s)) == s);
        CHECK(Tokenize(s).size() == s.size() + 1);
    }

    TEST_CASE("specials are dropped on detokenize") {
        CHECK(Detokenize(std::vector<int>{kBosToken, 104, kPadToken, 105, kEosToken}) == "hi");
    }

    TEST_CASE("over-long input names the limit") {
        CHECK_THROWS_WITH_AS(Tokenize(std::string(10, 'a'), 8), doctest::Contains("8"), SequenceLengthError);
        CHECK_NOTHROW(Tokenize(std::string(7, 'a'), 8));
    }
}

TEST_SUITE("model") {
    TEST_CASE("presets") {
        const auto toy8 = ModelConfigPreset("toy8");
        CHECK(toy8.n_layers == 8);
        CHECK(toy8.d_model == 256);
        CHECK(ModelConfigPreset("toy") == ModelConfig{});
        CHECK_THROWS_AS(ModelConfigPreset("huge"), ConfigError);
    }

    TEST_CASE("config validation names the field") {
        ModelConfig c = SmallConfig();
        c.n_heads = 3;
        CHECK_THROWS_WITH_AS(c.Validate(), doctest::Contains("n_heads"), ConfigError);
        c = SmallConfig();
        c.d_ff = 0;
        CHECK_THROWS_WITH_AS(c.Validate(), doctest::Contains("d_ff"), ConfigError);
    }

    TEST_CASE("base weights are frozen and the closed-form count matches") {
        const auto c = SmallConfig();
        const auto w = BaseWeights::Initialize(c);
        int64_t n = 0;
        for (const auto &[name, t] : w.Named()) {
            CHECK_FALSE(t->trainable());
            n += t->numel();
        }
        CHECK(n == BaseParameterCount(c));
        CHECK(w.Checksum() == BaseWeights::Initialize(c).Checksum());
    }

    TEST_CASE("unadapted forward is deterministic") {
        const Model m = Model::Initialize(SmallConfig());
        std::mt19937_64 rng(1);
        const auto toks = RandomTokens(rng, 12);
        CHECK(m.ForwardLogits(toks, nullptr).BitwiseEquals(m.ForwardLogits(toks, nullptr)));
    }

    TEST_CASE("1-layer 1-head model matches a straight-line oracle") {
        const auto c = SmallConfig(1, 1, 8, 16);
        const BaseWeights w = Loud(c);
        const Model m(c, w);
        const std::vector<int> ids{kBosToken, 72, 105};
        const Tensor logits = m.ForwardLogits(TokenSeq{ids}, nullptr);
        CHECK(logits.rows() == 3);
        CHECK(logits.cols() == kVocabSize);
        CHECK(MaxAbsDiff(logits, OracleLogits(c, w, ids, {})) < 1e-5);
    }

    TEST_CASE("causality: perturbing token t only changes logits at positions >= t") {
        const Model m(SmallConfig(), Loud(SmallConfig()));
        std::mt19937_64 rng(2);
        for (int trial = 0; trial < 10; ++trial) {
            TokenSeq a = RandomTokens(rng, 15);
            TokenSeq b = a;
            const auto t = static_cast<size_t>(1 + static_cast<int>(rng() % 15));
            b.ids[t] = (b.ids[t] + 1) % 256;
            const Tensor la = m.ForwardLogits(a, nullptr);
            const Tensor lb = m.ForwardLogits(b, nullptr);
            for (int64_t row = 0; row < la.rows(); ++row) {
                bool same = true;
                for (int64_t j = 0; j < la.cols(); ++j) {
                    same = same && la.at(row, j) == lb.at(row, j);
                }
                if (row < static_cast<int64_t>(t)) {
                    CHECK(same);
                } else if (row == static_cast<int64_t>(t)) {
                    CHECK_FALSE(same);
                }
            }
        }
    }

    TEST_CASE("all-zero weights give uniform logits and score ln(1/259)") {
        const auto c = SmallConfig();
        const Model m(c, BaseWeights::Zeros(c));
        const std::vector<int> cont{1, 2, 3};
        const double score = m.ScoreContinuation(Tokenize("prompt"), cont, nullptr);
        CHECK(score == doctest::Approx(std::log(1.0 / 259.0)).epsilon(1e-6));
        const double raw = m.ScoreContinuation(Tokenize("prompt"), cont, nullptr, /*normalize=*/false);
        CHECK(raw == doctest::Approx(4 * score).epsilon(1e-9));
    }

    TEST_CASE("identical candidates score identically") {
        const Model m = Model::Initialize(SmallConfig());
        const std::vector<int> cont = TokenizeBytes("Positive");
        CHECK(m.ScoreContinuation(Tokenize("x: y"), cont, nullptr)
              == m.ScoreContinuation(Tokenize("x: y"), cont, nullptr));
        CHECK_THROWS(m.ScoreContinuation(Tokenize("x"), std::vector<int>{}, nullptr));
    }

    TEST_CASE("a model whose argmax is always EOS generates the empty string") {
        const auto c = SmallConfig();
        BaseWeights w = BaseWeights::Zeros(c);
        // Final bias aligned with the EOS embedding row makes EOS the argmax
        // everywhere.
        w.token_embedding.at(kEosToken, 0) = 1;
        w.final_bias[0] = 1;
        const Model m(c, std::move(w));
        CHECK(m.GenerateGreedy(Tokenize("anything"), 5, nullptr).empty());
        CHECK_THROWS(m.GenerateGreedy(Tokenize("anything"), 0, nullptr));
    }

    TEST_CASE("greedy generation is deterministic") {
        const Model m(SmallConfig(), Loud(SmallConfig()));
        const auto a = m.GenerateGreedy(Tokenize("abc"), 6, nullptr);
        CHECK(a == m.GenerateGreedy(Tokenize("abc"), 6, nullptr));
    }

    TEST_CASE("sequence length errors") {
        const auto c = SmallConfig(2, 2, 16, 32, 10);
        const Model m = Model::Initialize(c);
        CHECK_NOTHROW(m.ForwardLogits(TokenSeq{std::vector<int>(10, 65)}, nullptr));
        CHECK_THROWS_AS(m.ForwardLogits(TokenSeq{std::vector<int>(11, 65)}, nullptr), SequenceLengthError);
        AdapterSpec spec;
        spec.kind = AdapterKind::kPrefix;
        spec.prefix.prompt_len = 4;
        const auto ad = AdapterSet::Initialize(c, spec, 1);
        CHECK(m.MaxTokens(&ad) == 6);
        CHECK_THROWS_WITH_AS(m.ForwardLogits(TokenSeq{std::vector<int>(7, 65)}, &ad),
                             doctest::Contains("prefix length 4"), SequenceLengthError);
    }
}

TEST_SUITE("adapters") {
    TEST_CASE("lora_apply equals the dense (W + s·B·A)·x") {
        std::mt19937_64 rng(3);
        for (int trial = 0; trial < 20; ++trial) {
            Tensor x({3, 4}), w({4, 4}), a({2, 4}, true), b({4, 2}, true);
            Randomize(x, rng, 1);
            Randomize(w, rng, 1);
            Randomize(a, rng, 1);
            Randomize(b, rng, 1);
            const Real alpha = 3;
            Tape tape;
            const Tensor &out = tape.value(
                LoraApply(tape, tape.Constant(x), tape.Param(w), tape.Param(a), tape.Param(b), alpha, 2));
            for (int i = 0; i < 3; ++i) {
                for (int o = 0; o < 4; ++o) {
                    double ref = 0;
                    for (int k = 0; k < 4; ++k) {
                        double dense = w.at(o, k);
                        for (int r = 0; r < 2; ++r) {
                            dense += alpha / 2 * b.at(o, r) * a.at(r, k);
                        }
                        ref += dense * x.at(i, k);
                    }
                    CHECK(std::abs(out.at(i, o) - ref) < 1e-5);
                }
            }
        }
    }

    TEST_CASE("lora_apply with B = 0 or alpha = 0 returns W·x exactly") {
        std::mt19937_64 rng(4);
        Tensor x({2, 4}), w({4, 4}), a({2, 4}, true), b = Tensor::Zeros({4, 2}, true);
        Randomize(x, rng, 1);
        Randomize(w, rng, 1);
        Randomize(a, rng, 1);
        Tape tape;
        const VarId xv = tape.Constant(x), wv = tape.Param(w);
        const Tensor plain = tape.value(ops::Linear(tape, xv, wv));
        CHECK(tape.value(LoraApply(tape, xv, wv, tape.Param(a), tape.Param(b), 16, 2)).BitwiseEquals(plain));
        Randomize(b, rng, 1);
        CHECK(tape.value(LoraApply(tape, xv, wv, tape.Param(a), tape.Param(b), 0, 2)).BitwiseEquals(plain));
        CHECK_THROWS_AS(LoraApply(tape, xv, wv, tape.Param(a), tape.Param(b), 16, 3), ShapeError);
    }

    TEST_CASE("fresh LoRA adapter is bitwise neutral") {
        const Model m(SmallConfig(), Loud(SmallConfig()));
        AdapterSpec spec;
        const auto ad = AdapterSet::Initialize(m.config(), spec, 9);
        std::mt19937_64 rng(5);
        for (int trial = 0; trial < 10; ++trial) {
            const auto toks = RandomTokens(rng, 20);
            CHECK(m.ForwardLogits(toks, &ad).BitwiseEquals(m.ForwardLogits(toks, nullptr)));
        }
    }

    TEST_CASE("only adapter tensors receive gradients") {
        const Model m = Model::Initialize(SmallConfig());
        for (auto kind : {AdapterKind::kLora, AdapterKind::kPrefix}) {
            AdapterSpec spec;
            spec.kind = kind;
            auto ad = AdapterSet::Initialize(m.config(), spec, 2);
            Tape tape;
            const std::vector<int> ids{kBosToken, 1, 2, 3};
            tape.Backward(ops::Sum(tape, m.Forward(tape, ids, &ad)));
            for (const auto &[name, t] : ad.Named()) {
                CHECK_MESSAGE(t->has_grad(), name);
            }
            for (const auto &[name, t] : m.weights().Named()) {
                CHECK_MESSAGE(!t->has_grad(), name);
            }
        }
    }

    TEST_CASE("merged weights reproduce the adapter path") {
        const auto c = SmallConfig();
        const Model m(c, Loud(c));
        AdapterSpec spec;
        auto ad = AdapterSet::Initialize(c, spec, 6);
        std::mt19937_64 rng(6);
        for (auto &[name, t] : ad.Named()) {
            Randomize(*t, rng, 0.3);
        }
        const Model merged(c, LoraMerge(m.weights(), c, *ad.lora()));
        for (int trial = 0; trial < 10; ++trial) {
            const auto toks = RandomTokens(rng, 16);
            const Tensor a = m.ForwardLogits(toks, &ad);
            const Tensor b = merged.ForwardLogits(toks, nullptr);
            double worst = 0;
            for (int64_t i = 0; i < a.numel(); ++i) {
                worst = std::max(worst, static_cast<double>(std::abs(a[i] - b[i])));
            }
            CHECK(worst <= 1e-4);
        }
        // Forward op count of the merged model equals the unadapted one.
        Tape t1(false), t2(false);
        const std::vector<int> ids{kBosToken, 5, 6};
        merged.Forward(t1, ids, nullptr);
        m.Forward(t2, ids, nullptr);
        CHECK(t1.CountOps() == t2.CountOps());
    }

    TEST_CASE("merging a fresh adapter is bitwise the base, and merging twice is refused") {
        const auto c = SmallConfig();
        const auto base = BaseWeights::Initialize(c);
        AdapterSpec spec;
        const auto ad = AdapterSet::Initialize(c, spec, 1);
        const auto merged = LoraMerge(base, c, *ad.lora());
        CHECK(merged.Checksum() == base.Checksum());
        CHECK(merged.lora_merged);
        CHECK_THROWS_AS(LoraMerge(merged, c, *ad.lora()), ConfigError);
    }

    TEST_CASE("merge with a mismatched config names the dimension") {
        const auto c = SmallConfig();
        AdapterSpec spec;
        const auto ad = AdapterSet::Initialize(SmallConfig(2, 2, 32, 32), spec, 1);
        CHECK_THROWS_WITH_AS(LoraMerge(BaseWeights::Initialize(c), c, *ad.lora()), doctest::Contains("d_model"),
                             ConfigError);
        const auto deep = AdapterSet::Initialize(SmallConfig(3), spec, 1);
        CHECK_THROWS_WITH_AS(LoraMerge(BaseWeights::Initialize(c), c, *deep.lora()), doctest::Contains("n_layers"),
                             ConfigError);
    }

    TEST_CASE("1-layer prefix model matches the straight-line oracle") {
        const auto c = SmallConfig(1, 1, 8, 16);
        const BaseWeights w = Loud(c);
        const Model m(c, w);
        AdapterSpec spec;
        spec.kind = AdapterKind::kPrefix;
        spec.prefix.prompt_len = 3;
        auto ad = AdapterSet::Initialize(c, spec, 4);
        std::mt19937_64 rng(7);
        for (auto &[name, t] : ad.Named()) {
            Randomize(*t, rng, 1);
        }
        const auto &layer = ad.prefix()->layers[0];
        const std::vector<int> ids{kBosToken, 72, 105, 33};
        const Tensor logits = m.ForwardLogits(TokenSeq{ids}, &ad);
        CHECK(logits.rows() == 4);
        CHECK(MaxAbsDiff(logits, OracleLogits(c, w, ids, {{ToMat(layer.keys), ToMat(layer.values)}})) < 1e-5);
    }

    TEST_CASE("p = 0 prefix adapter leaves the output unchanged") {
        const Model m(SmallConfig(), Loud(SmallConfig()));
        AdapterSpec spec;
        spec.kind = AdapterKind::kPrefix;
        spec.prefix.prompt_len = 0;
        const auto ad = AdapterSet::Initialize(m.config(), spec, 1);
        CHECK(ad.ParameterCount() == 0);
        const auto toks = Tokenize("prefix free");
        CHECK(m.ForwardLogits(toks, &ad).BitwiseEquals(m.ForwardLogits(toks, nullptr)));
    }

    TEST_CASE("prefix positions are visible to the first query") {
        // With a prefix, even position 0 sees p + 1 keys, so its output moves
        // when a prefix value changes.
        const Model m(SmallConfig(), Loud(SmallConfig()));
        AdapterSpec spec;
        spec.kind = AdapterKind::kPrefix;
        spec.prefix.prompt_len = 2;
        auto ad = AdapterSet::Initialize(m.config(), spec, 1);
        const auto toks = Tokenize("ab");
        const Tensor before = m.ForwardLogits(toks, &ad);
        ad.prefix()->layers[0].values[0] += 1;
        const Tensor after = m.ForwardLogits(toks, &ad);
        bool row0_changed = false;
        for (int64_t j = 0; j < before.cols(); ++j) {
            row0_changed = row0_changed || before.at(0, j) != after.at(0, j);
        }
        CHECK(row0_changed);
    }

    TEST_CASE("closed-form trainable counts") {
        const auto toy8 = ModelConfigPreset("toy8");
        AdapterSpec prefix;
        prefix.kind = AdapterKind::kPrefix;
        const auto pc = CountTrainable(toy8, prefix);
        CHECK(pc.trainable == 131072);
        CHECK(pc.trainable == 8 * 2 * 32 * 256);
        CHECK(pc.ratio == doctest::Approx(131072.0 / (131072.0 + static_cast<double>(pc.base))));
        AdapterSpec lora;
        const auto lc = CountTrainable(toy8, lora);
        CHECK(lc.trainable == 65536);
        CHECK(lc.base == BaseParameterCount(toy8));
        prefix.prefix.prompt_len = 0;
        CHECK(CountTrainable(toy8, prefix).trainable == 0);
        CHECK(CountTrainable(toy8, prefix).ratio == 0);
        // Closed form agrees with the materialized adapter.
        for (auto spec : {lora, AdapterSpec{AdapterKind::kPrefix, {}, {}}}) {
            const auto tiny = ModelConfigPreset("tiny");
            CHECK(CountTrainable(tiny, spec).trainable == AdapterSet::Initialize(tiny, spec, 0).ParameterCount());
        }
    }

    TEST_CASE("trainable ratio falls as d_model or d_ff grows") {
        for (auto kind : {AdapterKind::kLora, AdapterKind::kPrefix}) {
            AdapterSpec spec;
            spec.kind = kind;
            double last = 1;
            for (int64_t d : {64, 128, 256, 512}) {
                ModelConfig c = SmallConfig(4, 4, d, 512);
                const double r = CountTrainable(c, spec).ratio;
                CHECK(r < last);
                last = r;
            }
            last = 1;
            for (int64_t ff : {128, 256, 512, 1024}) {
                const double r = CountTrainable(SmallConfig(4, 4, 128, ff), spec).ratio;
                CHECK(r < last);
                last = r;
            }
            // The embedding table does not scale with depth, so more layers
            // raise the ratio.
            last = 0;
            for (int layers : {1, 2, 4, 8}) {
                const double r = CountTrainable(SmallConfig(layers, 4, 128, 512), spec).ratio;
                CHECK(r > last);
                last = r;
            }
        }
    }

    TEST_CASE("adapter spec validation") {
        const auto c = SmallConfig();
        AdapterSpec spec;
        spec.lora.rank = 17;
        CHECK_THROWS_AS(AdapterSet::Initialize(c, spec, 0), ConfigError);
        spec.lora.rank = 8;
        spec.lora.layers = {5};
        CHECK_THROWS_AS(AdapterSet::Initialize(c, spec, 0), ConfigError);
        CHECK_THROWS_AS(ParseAdapterKind("adapterfusion"), ConfigError);
        AdapterSpec prefix;
        prefix.kind = AdapterKind::kPrefix;
        prefix.prefix.prompt_len = static_cast<int>(c.max_seq);
        CHECK_THROWS_AS(AdapterSet::Initialize(c, prefix, 0), ConfigError);
    }

    TEST_CASE("LoRA init: B zero, A gaussian of the documented scale") {
        AdapterSpec spec;
        const auto ad = AdapterSet::Initialize(ModelConfigPreset("toy"), spec, 3);
        double sq = 0;
        int64_t n = 0;
        for (const auto &[name, t] : ad.Named()) {
            if (name.ends_with(".b")) {
                for (auto v : t->data()) {
                    CHECK(v == 0);
                }
            } else {
                for (auto v : t->data()) {
                    sq += static_cast<double>(v) * v;
                    ++n;
                }
            }
            CHECK(t->trainable());
        }
        CHECK(std::sqrt(sq / static_cast<double>(n)) == doctest::Approx(0.02).epsilon(0.05));
    }
}
