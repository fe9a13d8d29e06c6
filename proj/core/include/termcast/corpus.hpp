#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "termcast/errors.hpp"

namespace termcast::corpus {

enum class Label : int { Terminating = 0, NonTerminating = 1 };

inline int label_value(Label label) { return static_cast<int>(label); }

struct LabeledProgram {
  std::string source;
  Label label = Label::Terminating;
  std::string template_name;
  std::uint64_t seed = 0;
  // Steps to halt; empty when the labeling run exhausted its budget.
  std::optional<long long> steps;
};

struct Corpus {
  std::vector<LabeledProgram> items;
  long long budget = 10000;
  std::uint64_t master_seed = 0;
  long long n0 = 0;  // terminating
  long long n1 = 0;  // non-terminating

  std::vector<int> labels() const;
};

// Program generators with controlled termination behaviour. Sources are
// deterministic in (template, params, seed); the seed also fixes variable
// names and decorative statements, and that stream is shared across
// templates so matched seeds yield twin programs differing only in the
// loop guard or update.
//
// Templates: countdown, bounded_count_up, nested_loops, guarded_if_loop
// (terminating); missing_decrement, wrong_direction, constant_guard
// (non-terminating).
std::string generate(const std::string& template_name,
                     const std::map<std::string, long long>& params,
                     std::uint64_t seed);

const std::vector<std::string>& template_names();
bool template_is_terminating(const std::string& template_name);

// Seeded corpus with the requested minority (non-terminating) ratio, every
// label verified by interpreting the program under `budget`. Items whose
// observed behaviour contradicts the template's intent are regenerated
// with a fresh seed; after 100 retries GenerationMismatchError is thrown.
Corpus build_corpus(int size, double minority_ratio, long long budget,
                    std::uint64_t seed);

struct SplitPair {
  Corpus train;
  Corpus test;
};

// Stratified split: each class is shuffled (deterministically in seed) and
// divided so train holds ~train_fraction of it, with at least one item of
// every class on each side. Throws TooFewMinorityError when a class has
// fewer than 2 items.
SplitPair split(const Corpus& corpus, double train_fraction, std::uint64_t seed);

// JSON-lines format: a header object {budget, master_seed, n0, n1}
// followed by one object per item {source, label, template, seed, steps};
// steps is null for budget-exhausted items. UTF-8, LF line endings.
std::string to_jsonl(const Corpus& corpus);
Corpus from_jsonl(const std::string& text);
void save_jsonl(const Corpus& corpus, const std::string& path);
Corpus load_jsonl(const std::string& path);

}  // namespace termcast::corpus
