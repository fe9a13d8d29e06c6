#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "termcast/errors.hpp"

namespace termcast::imbalance {

enum class LossKind { CE, BCE_EFFNUM, FOCAL, LDAM };

const char* loss_kind_name(LossKind kind);
LossKind loss_kind_from_name(const std::string& name);

// Which objective to train with, plus its hyperparameters. Fields that do
// not apply to `kind` are ignored. class_counts = (n0 terminating,
// n1 non-terminating) feed the effective-number weights and LDAM margins.
struct LossSpec {
  LossKind kind = LossKind::CE;
  double beta = 0.999;     // BCE_EFFNUM
  double gamma = 2.0;      // FOCAL
  double margin_c = 0.5;   // LDAM
  double scale_s = 10.0;   // LDAM
  std::array<long long, 2> class_counts{1, 1};
};

// Class-balanced weights w_c proportional to (1-beta)/(1-beta^n_c),
// normalized so w0 + w1 = 2. beta in [0, 1); counts >= 1.
std::pair<double, double> effective_number_weights(std::array<long long, 2> counts,
                                                   double beta);

// Per-class margins Delta_c = C / n_c^(1/4); the rarer class gets the
// larger margin.
std::pair<double, double> ldam_margins(std::array<long long, 2> counts, double c);

struct LossValue {
  double loss = 0.0;
  Eigen::Vector2d dlogits = Eigen::Vector2d::Zero();
};

// Softmax cross-entropy on the two-logit head; gradient is p - onehot.
LossValue loss_ce(const Eigen::Vector2d& logits, int label);

// Class-weighted cross-entropy, weights from effective_number_weights.
LossValue loss_bce_effnum(const Eigen::Vector2d& logits, int label,
                          std::pair<double, double> weights);

// Focal loss (1-p_t)^gamma * CE; reduces exactly to loss_ce at gamma = 0.
LossValue loss_focal(const Eigen::Vector2d& logits, int label, double gamma);

// Cross-entropy after subtracting Delta_label from the true-class logit
// and scaling both logits by s.
LossValue loss_ldam(const Eigen::Vector2d& logits, int label,
                    std::pair<double, double> margins, double scale);

// Dispatch on spec.kind; derives weights/margins from spec.class_counts.
LossValue evaluate_loss(const LossSpec& spec, const Eigen::Vector2d& logits, int label);

struct BatchPlan {
  std::vector<std::vector<int>> batches;
  int min_minority_per_batch = 1;
};

// Class-aware batch construction: majority indices are partitioned across
// ceil(n/batch_size) batches exactly once per epoch; minority indices all
// appear at least once and are resampled with replacement until every
// batch holds >= min_minority of them. Deterministic in seed.
BatchPlan class_aware_batches(std::span<const int> labels, int batch_size,
                              int min_minority, std::uint64_t seed);

// LossSpec <-> JSON (keys kind, beta, gamma, margin_c, scale_s); used by
// the training config file.
std::string loss_spec_to_json(const LossSpec& spec);
LossSpec loss_spec_from_json(const std::string& json_text);

}  // namespace termcast::imbalance
