#include <filesystem>
#include <sstream>

#include "doctest.h"

#include "adforge/cli.h"

using namespace adforge;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run Cli(std::vector<std::string> args) {
    args.insert(args.begin(), "adforge");
    std::ostringstream out, err;
    const int code = RunCli(args, out, err);
    return {code, out.str(), err.str()};
}

bool Has(const std::string &haystack, const std::string &needle) {
    return haystack.find(needle) != std::string::npos;
}

struct TempDir {
    std::filesystem::path path;
    TempDir() : path(std::filesystem::temp_directory_path() / "adforge_cli_test") {
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string operator/(const std::string &name) const { return (path / name).string(); }
};

} // namespace

TEST_CASE("thousands separators") {
    CHECK(WithThousands(0) == "0");
    CHECK(WithThousands(999) == "999");
    CHECK(WithThousands(131072) == "131,072");
    CHECK(WithThousands(6366464) == "6,366,464");
    CHECK(WithThousands(-1234) == "-1,234");
}

TEST_CASE("params prints counts and the ratio") {
    const auto lora = Cli({"params", "--config", "toy8", "--adapter", "lora"});
    REQUIRE(lora.code == 0);
    CHECK(Has(lora.out, "trainable 65,536"));
    CHECK(Has(lora.out, "ratio 1.0189%"));
    const auto prefix = Cli({"params", "--config", "toy8", "--adapter", "prefix"});
    REQUIRE(prefix.code == 0);
    CHECK(Has(prefix.out, "trainable 131,072"));
    CHECK(Has(prefix.out, "base 6,366,464"));
    CHECK(Has(prefix.out, "ratio 2.0173%"));
    const auto toy = Cli({"params"});
    REQUIRE(toy.code == 0);
    CHECK(Has(toy.out, "%"));
}

TEST_CASE("usage errors exit 2, help exits 0") {
    CHECK(Cli({"params", "--bogus"}).code == 2);
    CHECK(Has(Cli({"params", "--bogus"}).err, "error:"));
    CHECK(Cli({"train", "--schema", "mosi3"}).code == 2);
    CHECK(Cli({"params", "--adapter", "adapterfusion"}).code == 2);
    const auto help = Cli({"--help"});
    CHECK(help.code == 0);
    CHECK(Has(help.out, "train"));
}

TEST_CASE("module errors exit 1 with a message") {
    TempDir dir;
    const auto missing = Cli({"eval", "--data", dir / "none.jsonl", "--schema", "mosi3", "--config", "tiny"});
    CHECK(missing.code == 1);
    CHECK(Has(missing.err, "none.jsonl"));
    CHECK(Cli({"params", "--config", "huge"}).code == 1);
    CHECK(Cli({"predict", "--text", "x", "--schema", "imdb", "--config", "tiny"}).code == 1);
}

TEST_CASE("synth, train, eval, merge and predict end to end") {
    TempDir dir;
    REQUIRE(Cli({"synth", "--count", "24", "--test", "6", "--seed", "5", "--train-out", dir / "train.jsonl", "--test-out",
                 dir / "test.jsonl"})
                .code
            == 0);

    const auto base_eval = Cli({"eval", "--data", dir / "test.jsonl", "--schema", "mosi3", "--config", "tiny"});
    REQUIRE(base_eval.code == 0);
    CHECK(Has(base_eval.out, "| Base | mosi3 |"));

    for (const std::string kind : {"lora", "prefix"}) {
        const auto t = Cli({"train", "--data", dir / "train.jsonl", "--schema", "mosi3", "--adapter", kind, "--config",
                            "tiny", "--steps", "3", "--batch", "2", "--prompt-len", "4", "--out", dir / (kind + ".ckpt")});
        REQUIRE_MESSAGE(t.code == 0, t.err);
        CHECK(std::filesystem::exists(dir / (kind + ".ckpt")));
    }

    const auto ev = Cli({"eval", "--data", dir / "test.jsonl", "--schema", "mosi3", "--ckpt", dir / "lora.ckpt", "--ckpt",
                         dir / "prefix.ckpt", "--baseline", "--format", "csv", "--report", dir / "r.csv"});
    REQUIRE_MESSAGE(ev.code == 0, ev.err);
    CHECK(Has(ev.out, "Base (LoRA)"));
    CHECK(Has(ev.out, "Base (P-Tuning)"));
    CHECK(std::filesystem::exists(dir / "r.csv"));

    const auto bad_merge = Cli({"merge", "--ckpt", dir / "prefix.ckpt", "--out", dir / "m.ckpt"});
    CHECK(bad_merge.code == 1);
    CHECK(Has(bad_merge.err, "not mergeable"));

    REQUIRE(Cli({"merge", "--ckpt", dir / "lora.ckpt", "--out", dir / "merged.ckpt"}).code == 0);
    const auto adapted = Cli({"predict", "--text", "great cast.", "--schema", "mosi3", "--ckpt", dir / "lora.ckpt"});
    const auto merged = Cli({"predict", "--text", "great cast.", "--schema", "mosi3", "--ckpt", dir / "merged.ckpt"});
    REQUIRE(adapted.code == 0);
    REQUIRE(merged.code == 0);
    // Same decision from the adapter and its merged form.
    CHECK(adapted.out.substr(0, adapted.out.find('\t')) == merged.out.substr(0, merged.out.find('\t')));

    const auto wrong_schema = Cli({"eval", "--data", dir / "test.jsonl", "--schema", "mosi2", "--ckpt", dir / "lora.ckpt"});
    CHECK(wrong_schema.code == 1);
}
