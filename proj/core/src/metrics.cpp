#include "termcast/metrics.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace termcast::metrics {

namespace {

using json = nlohmann::json;

void check_scores(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw Error("scores and labels differ in length");
  if (scores.empty()) throw Error("empty score list");
}

std::pair<long long, long long> class_counts(std::span<const int> labels) {
  long long n0 = 0, n1 = 0;
  for (int y : labels) {
    if (y == 0) ++n0;
    else if (y == 1) ++n1;
    else throw Error("labels must be 0 or 1");
  }
  return {n0, n1};
}

}  // namespace

double soft_vote(std::span<const double> member_probs) {
  if (member_probs.empty()) throw EmptyEnsembleError("soft_vote over zero members");
  for (double p : member_probs) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error("member probability outside [0, 1]");
  }
  // Summing in sorted order makes the vote invariant under member
  // permutation; identical members vote exactly their shared value.
  std::vector<double> sorted(member_probs.begin(), member_probs.end());
  std::sort(sorted.begin(), sorted.end());
  if (sorted.front() == sorted.back()) return sorted.front();
  double sum = 0.0;
  for (double p : sorted) sum += p;
  return sum / static_cast<double>(sorted.size());
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  check_scores(scores, labels);
  const auto [n0, n1] = class_counts(labels);
  if (n0 == 0 || n1 == 0) {
    throw SingleClassInputError("roc_auc requires both classes");
  }

  // Rank-sum (Mann-Whitney) with midranks for ties; exactly the pair count
  // (#{pos > neg} + 0.5 * #ties) / (n1 * n0).
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // average of ranks i+1..j
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) rank_sum_pos += midrank;
    }
    i = j;
  }
  const double u = rank_sum_pos - static_cast<double>(n1) * (static_cast<double>(n1) + 1.0) / 2.0;
  return u / (static_cast<double>(n1) * static_cast<double>(n0));
}

double average_precision(std::span<const double> scores, std::span<const int> labels,
                         int positive_class) {
  check_scores(scores, labels);
  if (positive_class != 0 && positive_class != 1) throw Error("positive_class must be 0 or 1");
  class_counts(labels);  // validates label values

  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Descending score; ties resolved by original index for determinism.
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });

  long long positives = 0;
  for (int y : labels) positives += (y == positive_class);
  if (positives == 0) throw NoPositivesError("average_precision requires >= 1 positive");

  double sum = 0.0;
  long long hits = 0;
  for (std::size_t rank = 0; rank < n; ++rank) {
    if (labels[order[rank]] == positive_class) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
    }
  }
  return sum / static_cast<double>(positives);
}

std::pair<double, double> threshold_metrics(std::span<const double> scores,
                                            std::span<const int> labels, double threshold) {
  check_scores(scores, labels);
  class_counts(labels);
  long long tp = 0, tn = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pred = scores[i] >= threshold;
    const bool truth = labels[i] == 1;
    if (pred && truth) ++tp;
    else if (pred && !truth) ++fp;
    else if (!pred && truth) ++fn;
    else ++tn;
  }
  const double accuracy =
      static_cast<double>(tp + tn) / static_cast<double>(scores.size());
  double f1 = 0.0;
  if (tp > 0) {
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    f1 = 2.0 * precision * recall / (precision + recall);
  }
  return {accuracy, f1};
}

const char* ensemble_kind_name(EnsembleKind kind) {
  switch (kind) {
    case EnsembleKind::E1: return "E1";
    case EnsembleKind::E2: return "E2";
    case EnsembleKind::E3: return "E3";
  }
  return "?";
}

EnsembleKind ensemble_kind_from_name(const std::string& name) {
  if (name == "E1" || name == "e1") return EnsembleKind::E1;
  if (name == "E2" || name == "e2") return EnsembleKind::E2;
  if (name == "E3" || name == "e3") return EnsembleKind::E3;
  throw Error("unknown ensemble kind: " + name);
}

void validate(const EnsembleSpec& spec) {
  if (spec.members.empty()) throw EnsembleSpecError("ensemble has no members");
  for (const auto& m : spec.members) {
    const bool is_ce = m.loss == imbalance::LossKind::CE;
    switch (spec.kind) {
      case EnsembleKind::E1:
        if (!is_ce) {
          throw EnsembleSpecError("E1 admits only cross-entropy members, got " +
                                  std::string(imbalance::loss_kind_name(m.loss)));
        }
        break;
      case EnsembleKind::E2:
        if (is_ce) {
          throw EnsembleSpecError("E2 admits only imbalance-aware losses, got ce");
        }
        break;
      case EnsembleKind::E3:
        if (is_ce) {
          throw EnsembleSpecError("E3 admits only imbalance-aware losses, got ce");
        }
        if (!m.use_cas) {
          throw EnsembleSpecError("E3 requires class-aware sampling on every member");
        }
        break;
    }
  }
}

std::string ensemble_spec_to_json(const EnsembleSpec& spec) {
  json members = json::array();
  for (const auto& m : spec.members) {
    members.push_back(json{{"checkpoint", m.checkpoint},
                           {"loss", imbalance::loss_kind_name(m.loss)},
                           {"use_cas", m.use_cas}});
  }
  return json{{"kind", ensemble_kind_name(spec.kind)}, {"members", members}}.dump();
}

EnsembleSpec ensemble_spec_from_json(const std::string& json_text) {
  json j = json::parse(json_text);
  EnsembleSpec spec;
  spec.kind = ensemble_kind_from_name(j.at("kind").get<std::string>());
  for (const auto& jm : j.at("members")) {
    EnsembleMember m;
    m.checkpoint = jm.at("checkpoint").get<std::string>();
    m.loss = imbalance::loss_kind_from_name(jm.at("loss").get<std::string>());
    if (jm.contains("use_cas")) m.use_cas = jm.at("use_cas").get<bool>();
    spec.members.push_back(std::move(m));
  }
  return spec;
}

EnsembleSpec load_ensemble_spec(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read ensemble spec: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return ensemble_spec_from_json(text);
}

std::vector<double> member_probabilities(const model::Model& member,
                                         const corpus::Corpus& data) {
  std::vector<double> probs;
  probs.reserve(data.items.size());
  for (const auto& item : data.items) {
    const auto seq = model::tokenize(item.source);
    probs.push_back(model::forward(member, seq.ids).prob_nonterm);
  }
  return probs;
}

namespace {

EvalReport report_from_scores(const std::vector<double>& scores,
                              const std::vector<int>& labels, double threshold) {
  const auto [n0, n1] = class_counts(labels);
  if (n0 == 0 || n1 == 0) {
    throw SingleClassInputError("evaluation corpus must contain both classes");
  }
  EvalReport report;
  report.auc = roc_auc(scores, labels);
  report.ap_minority = average_precision(scores, labels, 1);
  const auto [accuracy, f1] = threshold_metrics(scores, labels, threshold);
  report.accuracy = accuracy;
  report.f1 = f1;
  report.threshold = threshold;
  report.n_pos = n1;
  report.n_neg = n0;
  return report;
}

}  // namespace

EvalReport evaluate(const model::Model& member, const corpus::Corpus& data,
                    double threshold) {
  return report_from_scores(member_probabilities(member, data), data.labels(), threshold);
}

EvalReport evaluate(std::span<const model::Model> members, const corpus::Corpus& data,
                    double threshold) {
  if (members.empty()) throw EmptyEnsembleError("evaluate over zero members");
  std::vector<std::vector<double>> per_member;
  per_member.reserve(members.size());
  for (const auto& m : members) per_member.push_back(member_probabilities(m, data));

  std::vector<double> voted(data.items.size());
  std::vector<double> row(members.size());
  for (std::size_t i = 0; i < voted.size(); ++i) {
    for (std::size_t k = 0; k < members.size(); ++k) row[k] = per_member[k][i];
    voted[i] = soft_vote(row);
  }
  return report_from_scores(voted, data.labels(), threshold);
}

std::string eval_report_to_json(const EvalReport& report) {
  return json{{"auc", report.auc},
              {"map", report.ap_minority},
              {"accuracy", report.accuracy},
              {"f1", report.f1},
              {"threshold", report.threshold},
              {"n_pos", report.n_pos},
              {"n_neg", report.n_neg}}
      .dump();
}

}  // namespace termcast::metrics
