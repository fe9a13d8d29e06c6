#include "termcast/corpus.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "termcast/minilang.hpp"
#include "termcast/rng.hpp"

namespace termcast::corpus {

namespace {

using json = nlohmann::json;

const std::vector<std::string> kTemplates = {
    "countdown",     "bounded_count_up", "nested_loops",   "guarded_if_loop",
    "missing_decrement", "wrong_direction",  "constant_guard",
};

const std::vector<std::string> kTerminating = {"countdown", "bounded_count_up",
                                               "nested_loops", "guarded_if_loop"};
const std::vector<std::string> kNonTerminating = {"missing_decrement", "wrong_direction",
                                                  "constant_guard"};

const std::vector<std::string> kVarPool = {"x", "y", "z", "i", "j", "k",
                                           "n", "m", "a", "b", "c", "t"};

long long param_or(const std::map<std::string, long long>& params, const std::string& key,
                   long long fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

struct TemplateContext {
  std::string loop_var;
  std::string aux_var;
  std::vector<std::string> pre;
  std::vector<std::string> post;
  Rng rng;
};

// Draw order is identical for every template so that matched seeds
// produce twin programs.
TemplateContext make_context(std::uint64_t seed) {
  TemplateContext ctx{.loop_var = {}, .aux_var = {}, .pre = {}, .post = {}, .rng = Rng(seed)};
  Rng& rng = ctx.rng;
  const std::size_t loop_pick = static_cast<std::size_t>(rng.below(kVarPool.size()));
  std::size_t aux_pick = static_cast<std::size_t>(rng.below(kVarPool.size() - 1));
  if (aux_pick >= loop_pick) ++aux_pick;
  ctx.loop_var = kVarPool[loop_pick];
  ctx.aux_var = kVarPool[aux_pick];

  auto decor_stmt = [&]() {
    std::size_t pick = static_cast<std::size_t>(rng.below(kVarPool.size() - 2));
    for (std::size_t skip : {std::min(loop_pick, aux_pick), std::max(loop_pick, aux_pick)}) {
      if (pick >= skip) ++pick;
    }
    const std::string& v = kVarPool[pick];
    const long long c = rng.range(1, 9);
    switch (rng.below(3)) {
      case 0: return v + " := " + std::to_string(c);
      case 1: return v + " := " + v + " + " + std::to_string(c);
      default: return v + " := " + v + " - " + std::to_string(c);
    }
  };
  // Decorations go after the loop only, so the discriminative region sits
  // at a stable offset; a compact absolute-position model can then learn
  // the guard/update patterns from few minority examples.
  const int n_post = static_cast<int>(rng.below(3));
  for (int i = 0; i < n_post; ++i) ctx.post.push_back(decor_stmt());
  return ctx;
}

std::string assemble(const TemplateContext& ctx, const std::string& core) {
  std::ostringstream out;
  for (const auto& s : ctx.pre) out << s << "; ";
  out << core;
  for (const auto& s : ctx.post) out << "; " << s;
  return out.str();
}

}  // namespace

std::vector<int> Corpus::labels() const {
  std::vector<int> out;
  out.reserve(items.size());
  for (const auto& item : items) out.push_back(label_value(item.label));
  return out;
}

const std::vector<std::string>& template_names() { return kTemplates; }

bool template_is_terminating(const std::string& template_name) {
  if (std::find(kTerminating.begin(), kTerminating.end(), template_name) !=
      kTerminating.end()) {
    return true;
  }
  if (std::find(kNonTerminating.begin(), kNonTerminating.end(), template_name) !=
      kNonTerminating.end()) {
    return false;
  }
  throw UnknownTemplateError("unknown template: " + template_name);
}

std::string generate(const std::string& template_name,
                     const std::map<std::string, long long>& params, std::uint64_t seed) {
  TemplateContext ctx = make_context(seed);
  const std::string& lv = ctx.loop_var;
  const std::string& av = ctx.aux_var;
  // Drawn even when a param overrides it, to keep streams aligned.
  const long long drawn_n = ctx.rng.range(1, 40);
  const long long n = std::max<long long>(1, param_or(params, "n", drawn_n));

  std::string core;
  if (template_name == "countdown") {
    core = lv + " := " + std::to_string(n) + "; while " + lv + " > 0 { " + lv + " := " + lv +
           " - 1 }";
  } else if (template_name == "wrong_direction") {
    core = lv + " := " + std::to_string(n) + "; while " + lv + " > 0 { " + lv + " := " + lv +
           " + 1 }";
  } else if (template_name == "missing_decrement") {
    core = lv + " := " + std::to_string(n) + "; while " + lv + " > 0 { " + av + " := " + av +
           " + 1 }";
  } else if (template_name == "constant_guard") {
    core = lv + " := " + std::to_string(n) + "; while 1 > 0 { " + lv + " := " + lv + " - 1 }";
  } else if (template_name == "bounded_count_up") {
    core = lv + " := 0; while " + lv + " < " + std::to_string(n) + " { " + lv + " := " + lv +
           " + 1 }";
  } else if (template_name == "nested_loops") {
    const long long m = std::max<long long>(
        1, param_or(params, "m", ctx.rng.range(1, 12)));
    const long long outer = std::min<long long>(n, 12);
    core = lv + " := " + std::to_string(outer) + "; while " + lv + " > 0 { " + av + " := " +
           std::to_string(m) + "; while " + av + " > 0 { " + av + " := " + av + " - 1 }; " +
           lv + " := " + lv + " - 1 }";
  } else if (template_name == "guarded_if_loop") {
    const long long k = std::max<long long>(
        1, param_or(params, "k", std::max<long long>(1, n / 2)));
    core = lv + " := " + std::to_string(n) + "; while " + lv + " > 0 { if " + lv + " > " +
           std::to_string(k) + " { " + lv + " := " + lv + " - 2 } else { " + lv + " := " + lv +
           " - 1 } }";
  } else {
    throw UnknownTemplateError("unknown template: " + template_name);
  }
  return assemble(ctx, core);
}

Corpus build_corpus(int size, double minority_ratio, long long budget, std::uint64_t seed) {
  if (size < 10) throw Error("corpus size must be >= 10");
  if (!(minority_ratio > 0.0) || !(minority_ratio < 0.5)) {
    throw Error("minority_ratio must lie in (0, 0.5)");
  }
  if (budget < 1) throw Error("budget must be >= 1");

  const long long n1 = std::max<long long>(1, std::llround(size * minority_ratio));
  const long long n0 = size - n1;

  // Which positions hold minority items, deterministic in the master seed.
  std::vector<int> positions(static_cast<std::size_t>(size));
  for (int i = 0; i < size; ++i) positions[static_cast<std::size_t>(i)] = i;
  Rng pos_rng(Rng::mix(seed, 0x9d2c5681ULL));
  pos_rng.shuffle(positions);
  std::vector<bool> is_minority(static_cast<std::size_t>(size), false);
  for (long long i = 0; i < n1; ++i) {
    is_minority[static_cast<std::size_t>(positions[static_cast<std::size_t>(i)])] = true;
  }

  Corpus corpus;
  corpus.budget = budget;
  corpus.master_seed = seed;
  corpus.n0 = n0;
  corpus.n1 = n1;
  corpus.items.reserve(static_cast<std::size_t>(size));

  for (int i = 0; i < size; ++i) {
    const bool want_nonterm = is_minority[static_cast<std::size_t>(i)];
    const auto& pool = want_nonterm ? kNonTerminating : kTerminating;
    const std::uint64_t item_seed = Rng::mix(seed, 0x517cc1b7ULL + static_cast<std::uint64_t>(i));

    bool accepted = false;
    for (int attempt = 0; attempt < 100 && !accepted; ++attempt) {
      const std::uint64_t attempt_seed = Rng::mix(item_seed, static_cast<std::uint64_t>(attempt));
      Rng pick(Rng::mix(attempt_seed, 0x2545f491ULL));
      const std::string& tmpl = pool[static_cast<std::size_t>(pick.below(pool.size()))];
      std::string source = generate(tmpl, {}, attempt_seed);
      const auto outcome = minilang::interpret(minilang::parse(source), budget);
      if (outcome.kind == minilang::ExecutionOutcome::Kind::RuntimeFault) continue;
      if (outcome.exhausted() != want_nonterm) continue;
      LabeledProgram item;
      item.source = std::move(source);
      item.label = want_nonterm ? Label::NonTerminating : Label::Terminating;
      item.template_name = tmpl;
      item.seed = attempt_seed;
      if (outcome.halted()) item.steps = outcome.steps;
      corpus.items.push_back(std::move(item));
      accepted = true;
    }
    if (!accepted) {
      throw GenerationMismatchError(
          "could not generate a " + std::string(want_nonterm ? "non-terminating" : "terminating") +
          " item within 100 retries at budget " + std::to_string(budget));
    }
  }
  return corpus;
}

SplitPair split(const Corpus& corpus, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0) || !(train_fraction < 1.0)) {
    throw Error("train_fraction must lie in (0, 1)");
  }
  std::vector<int> class_idx[2];
  for (std::size_t i = 0; i < corpus.items.size(); ++i) {
    class_idx[label_value(corpus.items[i].label)].push_back(static_cast<int>(i));
  }
  for (int c = 0; c < 2; ++c) {
    if (class_idx[c].size() < 2) {
      throw TooFewMinorityError("class " + std::to_string(c) +
                                " has fewer than 2 items; cannot split");
    }
  }

  std::vector<bool> in_train(corpus.items.size(), false);
  for (int c = 0; c < 2; ++c) {
    auto& idx = class_idx[c];
    Rng rng(Rng::mix(seed, 0xabcdef12ULL + static_cast<std::uint64_t>(c)));
    rng.shuffle(idx);
    const long long want = std::llround(train_fraction * static_cast<double>(idx.size()));
    const long long take = std::clamp<long long>(want, 1,
                                                 static_cast<long long>(idx.size()) - 1);
    for (long long i = 0; i < take; ++i) {
      in_train[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])] = true;
    }
  }

  SplitPair pair;
  for (Corpus* side : {&pair.train, &pair.test}) {
    side->budget = corpus.budget;
    side->master_seed = corpus.master_seed;
  }
  for (std::size_t i = 0; i < corpus.items.size(); ++i) {
    Corpus& side = in_train[i] ? pair.train : pair.test;
    side.items.push_back(corpus.items[i]);
    if (corpus.items[i].label == Label::Terminating) ++side.n0;
    else ++side.n1;
  }
  return pair;
}

std::string to_jsonl(const Corpus& corpus) {
  std::ostringstream out;
  out << json{{"budget", corpus.budget},
              {"master_seed", corpus.master_seed},
              {"n0", corpus.n0},
              {"n1", corpus.n1}}
             .dump()
      << '\n';
  for (const auto& item : corpus.items) {
    json j{{"source", item.source},
           {"label", label_value(item.label)},
           {"template", item.template_name},
           {"seed", item.seed},
           {"steps", item.steps ? json(*item.steps) : json(nullptr)}};
    out << j.dump() << '\n';
  }
  return out.str();
}

Corpus from_jsonl(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw IoError("corpus file is empty");
  json header = json::parse(line);
  Corpus corpus;
  corpus.budget = header.at("budget").get<long long>();
  corpus.master_seed = header.at("master_seed").get<std::uint64_t>();
  const long long n0 = header.at("n0").get<long long>();
  const long long n1 = header.at("n1").get<long long>();

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    LabeledProgram item;
    item.source = j.at("source").get<std::string>();
    const int label = j.at("label").get<int>();
    if (label != 0 && label != 1) throw IoError("corpus label must be 0 or 1");
    item.label = static_cast<Label>(label);
    item.template_name = j.at("template").get<std::string>();
    item.seed = j.at("seed").get<std::uint64_t>();
    if (!j.at("steps").is_null()) item.steps = j.at("steps").get<long long>();
    if (item.label == Label::Terminating) ++corpus.n0;
    else ++corpus.n1;
    corpus.items.push_back(std::move(item));
  }
  if (corpus.n0 != n0 || corpus.n1 != n1) {
    throw IoError("corpus header counts disagree with items");
  }
  return corpus;
}

void save_jsonl(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write corpus: " + path);
  out << to_jsonl(corpus);
}

Corpus load_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read corpus: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_jsonl(text);
}

}  // namespace termcast::corpus
