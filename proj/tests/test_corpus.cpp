#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <set>

#include "termcast/corpus.hpp"
#include "termcast/minilang.hpp"

using namespace termcast;
using corpus::Corpus;
using corpus::Label;

TEST_CASE("countdown template has the documented shape") {
  const std::string src = corpus::generate("countdown", {{"n", 5}}, 42);
  auto ast = minilang::parse(src);
  CHECK(src.find(":= 5") != std::string::npos);
  CHECK(src.find("while") != std::string::npos);
  CHECK(src.find("- 1") != std::string::npos);
  auto out = minilang::interpret(ast, 10000);
  REQUIRE(out.halted());
}

TEST_CASE("missing_decrement never updates the loop variable") {
  const std::string countdown = corpus::generate("countdown", {{"n", 5}}, 9);
  const std::string missing = corpus::generate("missing_decrement", {{"n", 5}}, 9);
  CHECK(countdown != missing);
  CHECK(minilang::interpret(minilang::parse(missing), 5000).exhausted());
}

TEST_CASE("matched seeds produce twins differing only around the loop") {
  for (std::uint64_t seed : {3u, 17u, 255u}) {
    const std::string t = corpus::generate("countdown", {{"n", 7}}, seed);
    const std::string nt = corpus::generate("wrong_direction", {{"n", 7}}, seed);
    // Same length, same decorations; only the update operator differs.
    REQUIRE(t.size() == nt.size());
    int diffs = 0;
    for (std::size_t i = 0; i < t.size(); ++i) diffs += t[i] != nt[i];
    CHECK(diffs == 1);
  }
}

TEST_CASE("nested_loops halts within a generous budget") {
  const std::string src = corpus::generate("nested_loops", {{"n", 3}, {"m", 2}}, 5);
  auto out = minilang::interpret(minilang::parse(src), 10000);
  REQUIRE(out.halted());
}

TEST_CASE("unknown template is rejected") {
  CHECK_THROWS_AS(corpus::generate("fibonacci", {}, 0), UnknownTemplateError);
}

TEST_CASE("non-positive size parameters clamp to one") {
  // A zero-trip count would let a non-terminating template halt.
  for (const char* name : {"missing_decrement", "wrong_direction"}) {
    const std::string src = corpus::generate(name, {{"n", 0}}, 4);
    CHECK(minilang::interpret(minilang::parse(src), 2000).exhausted());
  }
  const std::string down = corpus::generate("countdown", {{"n", -5}}, 4);
  CHECK(minilang::interpret(minilang::parse(down), 2000).halted());
}

TEST_CASE("template truthfulness over many seeds") {
  // Non-terminating templates always exhaust; the sampled terminating
  // templates always halt. Budget kept small to bound runtime.
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    CHECK(minilang::interpret(minilang::parse(corpus::generate("constant_guard", {}, seed)), 600)
              .exhausted());
    CHECK(minilang::interpret(minilang::parse(corpus::generate("missing_decrement", {}, seed)),
                              600)
              .exhausted());
    CHECK(minilang::interpret(minilang::parse(corpus::generate("countdown", {}, seed)), 10000)
              .halted());
    CHECK(
        minilang::interpret(minilang::parse(corpus::generate("bounded_count_up", {}, seed)), 10000)
            .halted());
  }
}

TEST_CASE("build_corpus hits the requested ratio") {
  Corpus c = corpus::build_corpus(100, 0.02, 10000, 7);
  CHECK(c.n1 == 2);
  CHECK(c.n0 == 98);
  CHECK(c.items.size() == 100);
  long long n1 = 0;
  for (const auto& item : c.items) n1 += item.label == Label::NonTerminating;
  CHECK(n1 == c.n1);
}

TEST_CASE("build_corpus is deterministic") {
  Corpus a = corpus::build_corpus(100, 0.02, 10000, 7);
  Corpus b = corpus::build_corpus(100, 0.02, 10000, 7);
  CHECK(corpus::to_jsonl(a) == corpus::to_jsonl(b));
}

TEST_CASE("labels are reproducible from the interpreter") {
  Corpus c = corpus::build_corpus(60, 0.05, 10000, 11);
  for (const auto& item : c.items) {
    auto out = minilang::interpret(minilang::parse(item.source), c.budget);
    CHECK((item.label == Label::NonTerminating) == out.exhausted());
    if (out.halted()) {
      REQUIRE(item.steps.has_value());
      CHECK(*item.steps == out.steps);
    } else {
      CHECK_FALSE(item.steps.has_value());
    }
  }
}

TEST_CASE("impossible budget raises GenerationMismatch") {
  CHECK_THROWS_AS(corpus::build_corpus(10, 0.1, 1, 3), GenerationMismatchError);
}

TEST_CASE("invalid corpus parameters are rejected") {
  CHECK_THROWS_AS(corpus::build_corpus(5, 0.1, 1000, 0), Error);
  CHECK_THROWS_AS(corpus::build_corpus(100, 0.6, 1000, 0), Error);
  CHECK_THROWS_AS(corpus::build_corpus(100, 0.0, 1000, 0), Error);
}

TEST_CASE("split is stratified on the 98/2 corpus") {
  Corpus c = corpus::build_corpus(100, 0.02, 10000, 7);
  auto pair = corpus::split(c, 0.8, 21);
  CHECK(pair.train.items.size() + pair.test.items.size() == 100);
  CHECK(pair.train.n0 >= 78);
  CHECK(pair.train.n0 <= 79);
  CHECK(pair.train.n1 >= 1);
  CHECK(pair.test.n1 >= 1);
  CHECK(pair.train.n1 + pair.test.n1 == 2);
}

TEST_CASE("split allocation for an 8/2 corpus") {
  // Stratified allocation: clamp(round(0.8*2)) leaves one minority item on
  // each side; majority takes round(0.8*8) = 6.
  Corpus c = corpus::build_corpus(10, 0.2, 10000, 13);
  REQUIRE(c.n0 == 8);
  REQUIRE(c.n1 == 2);
  auto pair = corpus::split(c, 0.8, 5);
  CHECK(pair.train.n1 == 1);
  CHECK(pair.test.n1 == 1);
  CHECK(pair.train.n0 >= 6);
  CHECK(pair.train.n0 <= 7);
}

TEST_CASE("split determinism and disjointness") {
  Corpus c = corpus::build_corpus(80, 0.1, 10000, 19);
  auto a = corpus::split(c, 0.8, 4);
  auto b = corpus::split(c, 0.8, 4);
  CHECK(corpus::to_jsonl(a.train) == corpus::to_jsonl(b.train));
  CHECK(corpus::to_jsonl(a.test) == corpus::to_jsonl(b.test));

  std::multiset<std::string> combined;
  for (const auto& item : a.train.items) combined.insert(item.source);
  for (const auto& item : a.test.items) combined.insert(item.source);
  std::multiset<std::string> original;
  for (const auto& item : c.items) original.insert(item.source);
  CHECK(combined == original);
}

TEST_CASE("split rejects starved classes") {
  Corpus c = corpus::build_corpus(50, 0.02, 10000, 2);
  REQUIRE(c.n1 == 1);
  CHECK_THROWS_AS(corpus::split(c, 0.8, 0), TooFewMinorityError);
}

TEST_CASE("stratification property over sizes") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Corpus c = corpus::build_corpus(120 + static_cast<int>(seed) * 17, 0.05 + 0.02 * seed,
                                    10000, seed);
    auto pair = corpus::split(c, 0.8, seed);
    const double total_frac =
        static_cast<double>(c.n1) / static_cast<double>(c.items.size());
    const double train_frac =
        static_cast<double>(pair.train.n1) / static_cast<double>(pair.train.items.size());
    CHECK(std::abs(train_frac - total_frac) <=
          1.0 / static_cast<double>(pair.train.items.size()) + 1e-12);
  }
}

TEST_CASE("jsonl round trip preserves everything") {
  Corpus c = corpus::build_corpus(40, 0.1, 5000, 23);
  const std::string text = corpus::to_jsonl(c);
  CHECK(text.back() == '\n');
  CHECK(text.find("\r\n") == std::string::npos);
  Corpus back = corpus::from_jsonl(text);
  CHECK(corpus::to_jsonl(back) == text);
  CHECK(back.budget == c.budget);
  CHECK(back.master_seed == c.master_seed);
  CHECK(back.n0 == c.n0);
  CHECK(back.n1 == c.n1);

  const std::string path = "corpus_roundtrip_test.jsonl";
  corpus::save_jsonl(c, path);
  Corpus loaded = corpus::load_jsonl(path);
  CHECK(corpus::to_jsonl(loaded) == text);
  std::remove(path.c_str());
}

TEST_CASE("corrupt header counts are rejected") {
  Corpus c = corpus::build_corpus(20, 0.1, 5000, 29);
  std::string text = corpus::to_jsonl(c);
  const auto pos = text.find("\"n0\":18");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 7, "\"n0\":17");
  CHECK_THROWS_AS(corpus::from_jsonl(text), IoError);
}
