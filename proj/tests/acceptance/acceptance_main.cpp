// Acceptance suite: ten verifiable properties of the complete pipeline,
// from gradient fidelity through the directional ensemble trend and
// attribution localization. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>
#include <vector>

#include "termcast/attribution.hpp"
#include "termcast/corpus.hpp"
#include "termcast/imbalance.hpp"
#include "termcast/metrics.hpp"
#include "termcast/minilang.hpp"
#include "termcast/model.hpp"
#include "termcast/rng.hpp"
#include "termcast/training.hpp"

using namespace termcast;
using LK = imbalance::LossKind;

namespace {

struct Check {
  bool pass = true;
  std::ostringstream detail;

  void expect(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (detail.tellp() > 0) detail << "; ";
      detail << what;
    }
  }
  void note(const std::string& text) {
    if (detail.tellp() > 0) detail << "; ";
    detail << text;
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

// Two-worker pool for the training-heavy criteria.
template <class Job>
void run_parallel(std::vector<Job>& jobs) {
  std::size_t next = 0;
  std::mutex mu;
  auto worker = [&] {
    for (;;) {
      std::size_t mine;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (next >= jobs.size()) return;
        mine = next++;
      }
      jobs[mine]();
    }
  };
  std::thread a(worker), b(worker);
  a.join();
  b.join();
}

// ---------------------------------------------------------------------
// Criterion 1: gradient fidelity against central finite differences.

void criterion_gradient_fidelity(Check& check) {
  model::ModelConfig cfg;
  cfg.d_model = 16;
  cfg.n_heads = 2;
  cfg.n_layers = 2;
  cfg.d_ff = 24;
  cfg.seed = 11;
  const model::Model m = model::init_model(cfg);
  const auto seq = model::tokenize("x := 7; while x > 0 { x := x - 2 }");
  const Eigen::Vector2d dlogits(0.8, -0.5);
  const auto grads = model::backward(m, seq.ids, dlogits);

  std::vector<double*> data;
  std::vector<Eigen::Index> sizes;
  std::vector<std::string> names;
  model::Model probe = m;
  model::visit_params(probe.params, [&](const std::string& name, auto& p) {
    names.push_back(name);
    data.push_back(p.data());
    sizes.push_back(p.size());
  });
  std::vector<const double*> gdata;
  model::visit_params(grads.params, [&](const std::string&, const auto& g) {
    gdata.push_back(g.data());
  });

  const double eps = 1e-4;
  double worst = 0.0;
  std::string worst_at;
  Rng rng(20240601);
  for (int trial = 0; trial < 100; ++trial) {
    const auto k = static_cast<std::size_t>(rng.below(data.size()));
    const auto i =
        static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(sizes[k])));
    const double saved = data[k][i];
    data[k][i] = saved + eps;
    const double up = dlogits.dot(model::forward(probe, seq.ids).logits);
    data[k][i] = saved - eps;
    const double down = dlogits.dot(model::forward(probe, seq.ids).logits);
    data[k][i] = saved;
    const double fd = (up - down) / (2.0 * eps);
    const double an = gdata[k][i];
    const double rel = std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-6});
    if (rel > worst) {
      worst = rel;
      worst_at = names[k];
    }
  }
  check.expect(worst < 1e-3, "max rel err " + fmt(worst) + " at " + worst_at);
  check.note("max rel err " + fmt(worst) + " over 100 coordinates");
}

// ---------------------------------------------------------------------
// Criterion 2: loss reductions to cross entropy.

void criterion_loss_reductions(Check& check) {
  Rng rng(77);
  double worst_focal = 0.0, worst_ldam = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Eigen::Vector2d z(rng.uniform(-8.0, 8.0), rng.uniform(-8.0, 8.0));
    const int y = static_cast<int>(rng.below(2));
    const auto ce = imbalance::loss_ce(z, y);
    const auto focal = imbalance::loss_focal(z, y, 0.0);
    const auto ldam = imbalance::loss_ldam(z, y, {0.0, 0.0}, 1.0);
    worst_focal = std::max({worst_focal, std::abs(focal.loss - ce.loss),
                            (focal.dlogits - ce.dlogits).cwiseAbs().maxCoeff()});
    worst_ldam = std::max({worst_ldam, std::abs(ldam.loss - ce.loss),
                           (ldam.dlogits - ce.dlogits).cwiseAbs().maxCoeff()});
  }
  check.expect(worst_focal < 1e-12, "focal(0) vs CE diff " + fmt(worst_focal));
  check.expect(worst_ldam < 1e-12, "LDAM(0,1) vs CE diff " + fmt(worst_ldam));

  const auto weights = imbalance::effective_number_weights({100, 5}, 0.0);
  check.expect(weights.first == 1.0 && weights.second == 1.0,
               "effnum(beta=0) = (" + fmt(weights.first) + ", " + fmt(weights.second) + ")");
  check.note("focal diff " + fmt(worst_focal) + ", ldam diff " + fmt(worst_ldam));
}

// ---------------------------------------------------------------------
// Criteria 3 and 4: Shapley estimator equivalence and axioms.

attribution::Scorer random_model_scorer(std::uint64_t seed, std::vector<int>& ids_out,
                                        std::size_t n) {
  model::ModelConfig cfg;
  cfg.d_model = 16;
  cfg.n_heads = 2;
  cfg.n_layers = 1;
  cfg.d_ff = 24;
  cfg.seed = seed;
  model::Model m = model::init_model(cfg);
  Rng rng(Rng::mix(seed, 31));
  ids_out.resize(n);
  for (auto& id : ids_out) {
    id = 2 + static_cast<int>(rng.below(model::kVocabSize - 2));
  }
  return attribution::model_scorer(m);
}

void criterion_shapley_oracle(Check& check) {
  // Exhaustive permutation walk equals exact enumeration for n <= 5.
  double worst_small = 0.0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    for (std::size_t n = 1; n <= 5; ++n) {
      std::vector<int> ids;
      const auto scorer = random_model_scorer(seed * 17 + n, ids, n);
      const auto exact = attribution::shapley_exact(scorer, ids, {});
      const auto walked = attribution::shapley_sampled(scorer, ids, {}, 0, 0, true);
      for (std::size_t i = 0; i < n; ++i) {
        worst_small = std::max(worst_small, std::abs(exact.phi[i] - walked.phi[i]));
      }
    }
  }
  check.expect(worst_small < 1e-12, "exhaustive vs exact diff " + fmt(worst_small));

  // 2000 sampled permutations on 8 tokens across 10 random models.
  double worst_large = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::vector<int> ids;
    const auto scorer = random_model_scorer(900 + seed, ids, 8);
    const auto exact = attribution::shapley_exact(scorer, ids, {});
    const auto sampled = attribution::shapley_sampled(scorer, ids, {}, 2000, 123 + seed);
    for (std::size_t i = 0; i < 8; ++i) {
      worst_large = std::max(worst_large, std::abs(exact.phi[i] - sampled.phi[i]));
    }
  }
  check.expect(worst_large < 0.02, "sampled vs exact max-abs " + fmt(worst_large));
  check.note("exhaustive diff " + fmt(worst_small) + ", sampled max-abs " + fmt(worst_large));
}

void criterion_shapley_axioms(Check& check) {
  // Efficiency on exact runs with model scorers.
  double worst_eff = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::vector<int> ids;
    const auto scorer = random_model_scorer(40 + seed, ids, 7);
    const auto attr = attribution::shapley_exact(scorer, ids, {});
    const double total = std::accumulate(attr.phi.begin(), attr.phi.end(), 0.0);
    worst_eff = std::max(worst_eff, std::abs(total - (attr.full_value - attr.base_value)));
  }
  check.expect(worst_eff < 1e-9, "efficiency residual " + fmt(worst_eff));

  // Dummy player: the scorer ignores positions 0 and 3.
  auto dummy_scorer = [](const std::vector<int>& ids) {
    double v = 0.2;
    if (ids[1] != model::kMaskId) v += 0.25;
    if (ids[2] != model::kMaskId) v += 0.15;
    return v;
  };
  std::vector<int> ids{30, 31, 32, 33};
  const auto dummy_attr = attribution::shapley_exact(dummy_scorer, ids, {});
  check.expect(dummy_attr.phi[0] == 0.0 && dummy_attr.phi[3] == 0.0,
               "dummy phi = " + fmt(dummy_attr.phi[0]) + ", " + fmt(dummy_attr.phi[3]));

  // Symmetry: positions 0 and 2 are interchangeable.
  auto symmetric_scorer = [](const std::vector<int>& ids) {
    const int pair = (ids[0] != model::kMaskId) + (ids[2] != model::kMaskId);
    return 0.1 + 0.2 * pair + (ids[1] != model::kMaskId ? 0.1 : 0.0) * pair;
  };
  std::vector<int> sym_ids{30, 31, 30};
  const auto sym = attribution::shapley_exact(symmetric_scorer, sym_ids, {});
  check.expect(std::abs(sym.phi[0] - sym.phi[2]) < 1e-12,
               "symmetry diff " + fmt(std::abs(sym.phi[0] - sym.phi[2])));
  check.note("efficiency " + fmt(worst_eff));
}

// ---------------------------------------------------------------------
// Criterion 5: metric oracles.

double brute_force_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  double wins = 0.0;
  long long pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      ++pairs;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / static_cast<double>(pairs);
}

double brute_force_ap(const std::vector<double>& scores, const std::vector<int>& labels,
                      int positive) {
  auto outranks = [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b] || (scores[a] == scores[b] && a <= b);
  };
  double sum = 0.0;
  long long positives = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != positive) continue;
    ++positives;
    long long rank = 0, hits = 0;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (outranks(j, i)) {
        ++rank;
        hits += labels[j] == positive;
      }
    }
    sum += static_cast<double>(hits) / static_cast<double>(rank);
  }
  return sum / static_cast<double>(positives);
}

void criterion_metric_oracles(Check& check) {
  Rng rng(321);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 5 + static_cast<int>(rng.below(196));
    std::vector<double> scores(static_cast<std::size_t>(n));
    std::vector<int> labels(static_cast<std::size_t>(n));
    const bool tie_heavy = trial % 2 == 0;
    for (int i = 0; i < n; ++i) {
      scores[static_cast<std::size_t>(i)] =
          tie_heavy ? 0.2 * static_cast<double>(rng.below(6)) : rng.next_double();
      labels[static_cast<std::size_t>(i)] = rng.chance(0.35) ? 1 : 0;
    }
    labels[0] = 1;
    labels[static_cast<std::size_t>(n - 1)] = 0;
    worst = std::max(worst,
                     std::abs(metrics::roc_auc(scores, labels) - brute_force_auc(scores, labels)));
    worst = std::max(worst, std::abs(metrics::average_precision(scores, labels, 1) -
                                     brute_force_ap(scores, labels, 1)));
    worst = std::max(worst, std::abs(metrics::average_precision(scores, labels, 0) -
                                     brute_force_ap(scores, labels, 0)));
  }
  check.expect(worst < 1e-12, "oracle deviation " + fmt(worst));

  const double auc_case = metrics::roc_auc(std::vector<double>{0.8, 0.6, 0.4, 0.2},
                                           std::vector<int>{1, 0, 1, 0});
  check.expect(std::abs(auc_case - 0.75) < 1e-15, "hand AUC case = " + fmt(auc_case));
  const double ap_case = metrics::average_precision(std::vector<double>{0.9, 0.8, 0.7},
                                                    std::vector<int>{1, 0, 1}, 1);
  check.expect(std::abs(ap_case - 5.0 / 6.0) < 1e-15, "hand AP case = " + fmt(ap_case));
  check.note("max oracle deviation " + fmt(worst));
}

// ---------------------------------------------------------------------
// Criterion 6: class-aware sampling guarantee.

void criterion_cas_guarantee(Check& check) {
  Rng rng(888);
  int violations = 0;
  for (int trial = 0; trial < 100 && violations == 0; ++trial) {
    const int n = 100 + static_cast<int>(rng.below(901));
    const double ratio = 0.01 + 0.02 * rng.next_double();  // 1-3% minority
    std::vector<int> labels(static_cast<std::size_t>(n), 0);
    int minority = std::max(1, static_cast<int>(std::llround(ratio * n)));
    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    rng.shuffle(idx);
    for (int i = 0; i < minority; ++i) labels[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])] = 1;

    const int batch_size = 8 + static_cast<int>(rng.below(57));
    const int min_minority = 1 + static_cast<int>(rng.below(3));
    const auto plan = imbalance::class_aware_batches(labels, batch_size, min_minority,
                                                     rng.next_u64());

    std::vector<int> majority_seen;
    for (const auto& batch : plan.batches) {
      int in_batch = 0;
      for (int i : batch) {
        if (labels[static_cast<std::size_t>(i)] == 1) ++in_batch;
        else majority_seen.push_back(i);
      }
      if (in_batch < min_minority) ++violations;
    }
    std::sort(majority_seen.begin(), majority_seen.end());
    std::vector<int> expected;
    for (int i = 0; i < n; ++i) {
      if (labels[static_cast<std::size_t>(i)] == 0) expected.push_back(i);
    }
    if (majority_seen != expected) ++violations;  // partition must be exact
  }
  check.expect(violations == 0, std::to_string(violations) + " violations");
  check.note("100 corpora, quota and majority partition verified");
}

// ---------------------------------------------------------------------
// Criterion 7: training protocol conformance.

void criterion_training_protocol(Check& check) {
  corpus::Corpus toy;
  toy.budget = 100;
  for (int i = 0; i < 16; ++i) {
    toy.items.push_back({"x := " + std::to_string(i % 5) + "; skip",
                         corpus::Label::Terminating, "hand", 0, 2});
    ++toy.n0;
  }
  for (int i = 0; i < 4; ++i) {
    toy.items.push_back({"while 1 > 0 { y := y + " + std::to_string(1 + i) + " }",
                         corpus::Label::NonTerminating, "hand", 0, std::nullopt});
    ++toy.n1;
  }

  model::ModelConfig mc;
  mc.d_model = 16;
  mc.n_heads = 2;
  mc.n_layers = 1;
  mc.d_ff = 24;
  mc.seed = 5;

  // Forced sequence: improvements at checks 1 and 2, then flat. With the
  // default patience of ten the run must stop after check 12 and return
  // the model snapshotted at check 2.
  {
    training::TrainConfig tc;
    tc.batch_size = 10;
    tc.max_epochs = 50;
    tc.checks_per_epoch = 2;
    tc.lr = 1e-4;
    tc.seed = 3;
    int calls = 0;
    std::vector<std::string> snapshots;
    auto validator = [&](const model::Model& m) {
      snapshots.push_back(model::checkpoint_to_json(m));
      ++calls;
      if (calls == 1) return 0.5;
      if (calls == 2) return 0.7;
      return 0.7;  // never beats the strict-improvement threshold again
    };
    auto [best, report] =
        training::train_with_validator(model::init_model(mc), toy, tc, validator);
    check.expect(report.stopped_early, "no early stop");
    check.expect(report.history.size() == 12,
                 "stopped after " + std::to_string(report.history.size()) + " checks");
    check.expect(report.best_check == 1,
                 "best_check = " + std::to_string(report.best_check));
    check.expect(model::checkpoint_to_json(best) == snapshots[1],
                 "returned model is not the best checkpoint");
  }

  // Defaults: seven epochs, two checks each, patience never fires when the
  // metric keeps improving, and the epoch bound holds exactly.
  {
    training::TrainConfig tc;
    tc.batch_size = 10;
    tc.seed = 4;
    int calls = 0;
    auto validator = [&](const model::Model&) { return 0.01 * ++calls; };
    auto [best, report] =
        training::train_with_validator(model::init_model(mc), toy, tc, validator);
    check.expect(!report.stopped_early, "unexpected early stop under defaults");
    check.expect(report.history.size() == 14,
                 "expected 7 epochs x 2 checks, saw " + std::to_string(report.history.size()));
  }
  check.note("patience, best-restore and the 7-epoch bound verified");
}

// ---------------------------------------------------------------------
// Criteria 8 and 9 share trained ensembles over 5 seeds.

struct TrendSeedResult {
  corpus::Corpus test;
  corpus::Corpus inner_train;
  std::vector<model::Model> ce_members;
  std::vector<model::Model> e3_members;
  double e1_ap = 0.0, e3_ap = 0.0, best_ce_ap = 0.0;
};

// Desk-scale experiment configuration: library defaults except where the
// from-scratch setting needs the sweepable knobs (lr, batch size, model
// width) set so that all arms converge inside the seven-epoch protocol.
model::ModelConfig trend_model_config(std::uint64_t seed) {
  model::ModelConfig cfg;
  cfg.d_model = 24;
  cfg.d_ff = 48;
  cfg.seed = seed;
  return cfg;
}

training::TrainConfig trend_train_config(LK kind, bool cas, std::uint64_t seed) {
  training::TrainConfig tc;
  tc.loss.kind = kind;
  tc.use_cas = cas;
  tc.lr = 3e-3;
  tc.batch_size = 4;
  tc.checks_per_epoch = 1;
  tc.seed = seed;
  return tc;
}

std::vector<TrendSeedResult> g_trend;  // filled by criterion 8

void criterion_directional_trend(Check& check) {
  constexpr int kSeeds = 5;
  g_trend.assign(kSeeds, {});

  struct TrainJob {
    corpus::Corpus* train;
    corpus::Corpus* val;
    LK kind;
    bool cas;
    std::uint64_t seed;
    model::Model* out;
    void operator()() const {
      auto [m, report] = training::train(
          model::init_model(trend_model_config(seed)), *train, *val,
          trend_train_config(kind, cas, seed));
      *out = std::move(m);
    }
  };

  std::vector<corpus::Corpus> inner_vals(kSeeds);
  std::vector<TrainJob> jobs;
  for (int s = 0; s < kSeeds; ++s) {
    const std::uint64_t corpus_seed = 42 + static_cast<std::uint64_t>(s);
    const auto full = corpus::build_corpus(2000, 0.02, 10000, corpus_seed);
    auto outer = corpus::split(full, 0.8, corpus_seed + 1);
    auto inner = corpus::split(outer.train, 0.8, corpus_seed + 2);
    auto& slot = g_trend[static_cast<std::size_t>(s)];
    slot.test = std::move(outer.test);
    slot.inner_train = std::move(inner.train);
    inner_vals[static_cast<std::size_t>(s)] = std::move(inner.test);
    slot.ce_members.resize(3);
    slot.e3_members.resize(3);
  }
  for (int s = 0; s < kSeeds; ++s) {
    auto& slot = g_trend[static_cast<std::size_t>(s)];
    auto* val = &inner_vals[static_cast<std::size_t>(s)];
    const std::uint64_t base = (42 + static_cast<std::uint64_t>(s)) * 100;
    const LK imbalanced[3] = {LK::BCE_EFFNUM, LK::FOCAL, LK::LDAM};
    for (int k = 0; k < 3; ++k) {
      jobs.push_back(TrainJob{&slot.inner_train, val, LK::CE, false,
                              base + static_cast<std::uint64_t>(k) + 1,
                              &slot.ce_members[static_cast<std::size_t>(k)]});
      jobs.push_back(TrainJob{&slot.inner_train, val, imbalanced[k], true,
                              base + static_cast<std::uint64_t>(k) + 4,
                              &slot.e3_members[static_cast<std::size_t>(k)]});
    }
  }
  run_parallel(jobs);

  double mean_vs_e1 = 0.0, mean_vs_best_ce = 0.0;
  std::ostringstream margins;
  for (int s = 0; s < kSeeds; ++s) {
    auto& slot = g_trend[static_cast<std::size_t>(s)];
    slot.e1_ap = metrics::evaluate(slot.ce_members, slot.test).ap_minority;
    slot.e3_ap = metrics::evaluate(slot.e3_members, slot.test).ap_minority;
    for (const auto& m : slot.ce_members) {
      slot.best_ce_ap = std::max(slot.best_ce_ap, metrics::evaluate(m, slot.test).ap_minority);
    }
    mean_vs_e1 += slot.e3_ap - slot.e1_ap;
    mean_vs_best_ce += slot.e3_ap - slot.best_ce_ap;
    margins << (s ? " " : "") << "seed" << s << ":(" << fmt(slot.e3_ap - slot.e1_ap) << ","
            << fmt(slot.e3_ap - slot.best_ce_ap) << ")";
  }
  mean_vs_e1 /= kSeeds;
  mean_vs_best_ce /= kSeeds;

  check.expect(mean_vs_e1 >= 0.0, "mean E3-E1 margin " + fmt(mean_vs_e1) + " < 0");
  check.expect(mean_vs_best_ce >= 0.0,
               "mean E3-bestCE margin " + fmt(mean_vs_best_ce) + " < 0");
  check.note("mean margins: E3-E1 " + fmt(mean_vs_e1) + ", E3-bestCE " + fmt(mean_vs_best_ce) +
             "; per-seed " + margins.str());
}

// ---------------------------------------------------------------------
// Criterion 9: attribution localization on template twins.

void collect_subtree(const minilang::Ast& ast, int id, std::vector<int>& out) {
  out.push_back(id);
  for (int child : ast.node(id).children) collect_subtree(ast, child, out);
}

int first_while(const minilang::Ast& ast, int id) {
  if (ast.node(id).kind == minilang::NodeKind::While) return id;
  for (int child : ast.node(id).children) {
    const int found = first_while(ast, child);
    if (found >= 0) return found;
  }
  return -1;
}

void criterion_attribution_localization(Check& check) {
  if (g_trend.empty()) {
    check.expect(false, "trend fixture unavailable (criterion 8 did not run)");
    return;
  }
  const char* twins[3] = {"wrong_direction", "missing_decrement", "constant_guard"};
  double mean_hit_rate = 0.0;
  std::ostringstream rates;
  for (std::size_t s = 0; s < g_trend.size(); ++s) {
    const auto& members = g_trend[s].e3_members;
    int hits = 0;
    for (int p = 0; p < 20; ++p) {
      const std::string twin = twins[p % 3];
      const long long n = 3 + (p % 9);
      const std::uint64_t gen_seed = 5000 + static_cast<std::uint64_t>(p);

      // The terminating twin exists and differs only around the loop; the
      // non-terminating twin is the attribution target.
      const std::string nt_source = corpus::generate(twin, {{"n", n}}, gen_seed);
      const auto ast = minilang::parse(nt_source);
      const auto seq = model::tokenize(nt_source);

      std::vector<attribution::NodeAttribution> per_member;
      for (const auto& m : members) {
        const auto scorer = attribution::model_scorer(m);
        const auto tokens = attribution::shapley_sampled(
            scorer, seq.ids, {}, 48, 7000 + static_cast<std::uint64_t>(p));
        per_member.push_back(attribution::map_tokens_to_ast(tokens, seq.spans, ast));
      }
      const auto unified = attribution::aggregate_models(per_member);

      const int loop = first_while(ast, ast.root);
      std::vector<int> modified;
      const bool guard_twin = twin == "constant_guard";
      collect_subtree(ast, ast.node(loop).children[guard_twin ? 0 : 1], modified);

      // Rank constructs only; Program and Seq aggregate their subtrees and
      // carry no localization information.
      std::vector<int> order;
      for (const auto& node : ast.nodes) {
        if (node.kind == minilang::NodeKind::Program || node.kind == minilang::NodeKind::Seq) {
          continue;
        }
        order.push_back(node.id);
      }
      std::sort(order.begin(), order.end(), [&](int a, int b) {
        return std::abs(unified.phi_node[static_cast<std::size_t>(a)]) >
               std::abs(unified.phi_node[static_cast<std::size_t>(b)]);
      });
      bool hit = false;
      for (std::size_t k = 0; k < 2 && k < order.size(); ++k) {
        hit = hit || std::find(modified.begin(), modified.end(), order[k]) != modified.end();
      }
      hits += hit;
    }
    const double rate = hits / 20.0;
    mean_hit_rate += rate;
    rates << (s ? " " : "") << fmt(rate);
  }
  mean_hit_rate /= static_cast<double>(g_trend.size());
  check.expect(mean_hit_rate >= 0.70, "hit rate " + fmt(mean_hit_rate) + " < 0.70");
  check.note("mean top-2 hit rate " + fmt(mean_hit_rate) + " (per seed: " + rates.str() + ")");
}

// ---------------------------------------------------------------------
// Criterion 10: interpreter and labeling soundness.

struct Golden {
  const char* source;
  bool halts;
};

void criterion_interpreter_soundness(Check& check) {
  const Golden golden[30] = {
      {"skip", true},
      {"x := 0", true},
      {"x := 5; while x > 0 { x := x - 1 }", true},
      {"x := 0; while x < 10 { x := x + 1 }", true},
      {"i := 3; while i > 0 { j := 4; while j > 0 { j := j - 1 }; i := i - 1 }", true},
      {"x := 10; while x > 0 { if x > 5 { x := x - 2 } else { x := x - 1 } }", true},
      {"x := 8; while x != 0 { x := x - 2 }", true},
      {"a := 2 + 3 * 4; while a > 0 { a := a - 7 }", true},
      {"x := 1; while x < 100 { x := x * 2 }", true},
      {"n := 6; f := 1; while n > 0 { f := f * n; n := n - 1 }", true},
      {"x := 100; while x > 1 { x := x - 3 }", true},
      {"b := 0 - 10; while b < 0 { b := b + 4 }", true},
      {"x := 5; y := 5; while x > 0 { x := x - 1; y := y + 1 }", true},
      {"if 1 > 0 { skip } else { while 1 > 0 { skip } }", true},
      {"x := 50; while x != 50 { x := x + 1 }", true},
      {"while 1 > 0 { skip }", false},
      {"x := 1; while x > 0 { x := x + 1 }", false},
      {"x := 5; while x > 0 { y := y + 1 }", false},
      {"x := 7; while x != 0 { x := x - 2 }", false},
      {"x := 0; while x < 10 { x := x - 1 }", false},
      {"x := 2; while x != 1 { if x > 100 { x := 2 } else { x := x * 2 } }", false},
      {"while 0 == 0 { t := t + 1 }", false},
      {"x := 1; y := 2; while x < y { x := x - 1; y := y + 0 }", false},
      {"i := 3; while i > 0 { j := 1; while j > 0 { j := j + 1 }; i := i - 1 }", false},
      {"x := 10; while x > 9 { x := x + 0 }", false},
      {"a := 4; while a == 4 { skip }", false},
      {"x := 0; while x == 0 { y := x }", false},
      {"n := 1; while n != 0 { n := 0 - n }", false},
      {"if 0 > 1 { skip } else { while 2 > 1 { z := z + 1 } }", false},
      {"x := 3; while x != x + 1 { skip }", false},
  };
  int mislabeled = 0;
  for (const auto& g : golden) {
    const auto outcome = minilang::interpret(minilang::parse(g.source), 10000);
    const bool halted = outcome.halted();
    if (halted != g.halts || outcome.kind == minilang::ExecutionOutcome::Kind::RuntimeFault) {
      ++mislabeled;
      check.note(std::string("mislabeled: ") + g.source);
    }
  }
  check.expect(mislabeled == 0, std::to_string(mislabeled) + " golden programs mislabeled");

  // Budget monotonicity over 1000 generated programs.
  int monotonicity_failures = 0;
  const auto& names = corpus::template_names();
  for (int i = 0; i < 1000; ++i) {
    const auto& name = names[static_cast<std::size_t>(i) % names.size()];
    const auto ast = minilang::parse(corpus::generate(name, {}, 60000 + static_cast<std::uint64_t>(i)));
    const auto at_budget = minilang::interpret(ast, 10000);
    if (at_budget.halted()) {
      const auto wider = minilang::interpret(ast, 20000);
      const auto tight = minilang::interpret(ast, at_budget.steps);
      if (!wider.halted() || wider.steps != at_budget.steps || !tight.halted() ||
          tight.steps != at_budget.steps) {
        ++monotonicity_failures;
      }
    } else {
      // Needing more than the budget implies exhausting any smaller one.
      const auto half = minilang::interpret(ast, 5000);
      if (!half.exhausted()) ++monotonicity_failures;
    }
  }
  check.expect(monotonicity_failures == 0,
               std::to_string(monotonicity_failures) + " monotonicity failures");
  check.note("30 golden programs, 1000 random programs");
}

struct Criterion {
  int id;
  const char* name;
  std::function<void(Check&)> run;
  double time_limit_seconds;  // 0 = unbounded
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "gradient fidelity", criterion_gradient_fidelity, 30.0},
      {2, "loss reductions", criterion_loss_reductions, 0.0},
      {3, "shapley oracle equivalence", criterion_shapley_oracle, 120.0},
      {4, "shapley axioms", criterion_shapley_axioms, 0.0},
      {5, "metric oracles", criterion_metric_oracles, 0.0},
      {6, "class-aware sampling guarantee", criterion_cas_guarantee, 0.0},
      {7, "training protocol conformance", criterion_training_protocol, 0.0},
      {8, "directional ensemble trend", criterion_directional_trend, 900.0},
      {9, "attribution localization", criterion_attribution_localization, 0.0},
      {10, "interpreter and labeling soundness", criterion_interpreter_soundness, 0.0},
  };

  int failed = 0;
  for (const auto& criterion : criteria) {
    Check check;
    const auto start = std::chrono::steady_clock::now();
    try {
      criterion.run(check);
    } catch (const std::exception& e) {
      check.expect(false, std::string("exception: ") + e.what());
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (criterion.time_limit_seconds > 0.0 && seconds > criterion.time_limit_seconds) {
      check.expect(false, "runtime " + fmt(seconds) + " s exceeds " +
                              fmt(criterion.time_limit_seconds) + " s");
    }
    failed += check.pass ? 0 : 1;
    std::printf("%s criterion %2d: %s (%s; %.1f s)\n", check.pass ? "PASS" : "FAIL",
                criterion.id, criterion.name, check.detail.str().c_str(), seconds);
    std::fflush(stdout);
  }
  if (failed) {
    std::printf("%d of 10 criteria FAILED\n", failed);
    return 1;
  }
  std::printf("all 10 criteria passed\n");
  return 0;
}
