#pragma once

#include <span>
#include <string>
#include <vector>

#include "termcast/corpus.hpp"
#include "termcast/errors.hpp"
#include "termcast/imbalance.hpp"
#include "termcast/model.hpp"

namespace termcast::metrics {

// Arithmetic mean of member probabilities. Throws EmptyEnsembleError.
double soft_vote(std::span<const double> member_probs);

// Probability that a random positive (label 1) outranks a random negative,
// ties counted half. Requires both classes present.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

// AP = (1/P) * sum over positives at ranks k of precision@k, in
// descending-score order with ties broken by original index.
double average_precision(std::span<const double> scores, std::span<const int> labels,
                         int positive_class);

// (accuracy, F1) predicting positive iff score >= threshold; F1 is 0 when
// there are no predicted or no true positives.
std::pair<double, double> threshold_metrics(std::span<const double> scores,
                                            std::span<const int> labels, double threshold);

struct EvalReport {
  double auc = 0.0;
  double ap_minority = 0.0;  // reported as "map"
  double accuracy = 0.0;
  double f1 = 0.0;
  double threshold = 0.5;
  long long n_pos = 0;
  long long n_neg = 0;
};

enum class EnsembleKind { E1, E2, E3 };

const char* ensemble_kind_name(EnsembleKind kind);
EnsembleKind ensemble_kind_from_name(const std::string& name);

struct EnsembleMember {
  std::string checkpoint;
  imbalance::LossKind loss = imbalance::LossKind::CE;
  bool use_cas = false;
};

// E1: all members CE. E2: all members imbalance-aware (BCE_EFFNUM, FOCAL
// or LDAM). E3: E2 membership and use_cas on every member.
struct EnsembleSpec {
  EnsembleKind kind = EnsembleKind::E1;
  std::vector<EnsembleMember> members;
};

// Throws EnsembleSpecError on membership violations or empty member list.
void validate(const EnsembleSpec& spec);

std::string ensemble_spec_to_json(const EnsembleSpec& spec);
EnsembleSpec ensemble_spec_from_json(const std::string& json_text);
EnsembleSpec load_ensemble_spec(const std::string& path);

// Non-termination probability for every item of the corpus.
std::vector<double> member_probabilities(const model::Model& member,
                                         const corpus::Corpus& data);

EvalReport evaluate(const model::Model& member, const corpus::Corpus& data,
                    double threshold = 0.5);
EvalReport evaluate(std::span<const model::Model> members, const corpus::Corpus& data,
                    double threshold = 0.5);

// Keys: auc, map, accuracy, f1, threshold, n_pos, n_neg.
std::string eval_report_to_json(const EvalReport& report);

}  // namespace termcast::metrics
