#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "termcast/corpus.hpp"
#include "termcast/errors.hpp"
#include "termcast/imbalance.hpp"
#include "termcast/model.hpp"

namespace termcast::training {

struct TrainConfig {
  imbalance::LossSpec loss;
  double lr = 3e-4;
  double weight_decay = 0.01;
  int batch_size = 32;
  int max_epochs = 7;
  int patience = 10;  // validation checks without improvement before stopping
  int checks_per_epoch = 2;
  int min_minority = 1;  // class-aware sampling quota per batch
  bool use_cas = false;
  std::uint64_t seed = 0;
};

struct CheckRecord {
  long long step = 0;  // optimizer steps completed at this check
  double train_loss = 0.0;
  double val_balanced_map = 0.0;
};

struct TrainReport {
  std::vector<CheckRecord> history;
  int best_check = -1;  // index into history
  bool stopped_early = false;
  std::string final_model_source = "best checkpoint";
};

// Aborted run: the offending batch and the partial history travel with the
// exception so callers can persist them.
class NonFiniteLossError : public Error {
 public:
  NonFiniteLossError(const std::string& message, std::vector<int> batch,
                     TrainReport partial)
      : Error(message), batch_(std::move(batch)), partial_(std::move(partial)) {}

  const std::vector<int>& batch() const { return batch_; }
  const TrainReport& partial_report() const { return partial_; }

 private:
  std::vector<int> batch_;
  TrainReport partial_;
};

// Macro-average of the two directional average precisions: AP with class 1
// positive on the scores as-is, and AP with class 0 positive on negated
// scores. Throws SingleClassInputError unless both classes are present.
double balanced_map(std::span<const double> scores, std::span<const int> labels);

using Validator = std::function<double(const model::Model&)>;

// Mini-batch AdamW with periodic validation checks, early stopping after
// `patience` consecutive non-improving checks, and restoration of the
// best-scoring checkpoint. Returns the best model, never the last.
std::pair<model::Model, TrainReport> train(model::Model model,
                                           const corpus::Corpus& train_set,
                                           const corpus::Corpus& validation_set,
                                           const TrainConfig& config);

// Same loop with an injectable validation metric; train() passes the real
// balanced-mAP validator. Exposed so the stopping protocol is testable
// against forced score sequences.
std::pair<model::Model, TrainReport> train_with_validator(model::Model model,
                                                          const corpus::Corpus& train_set,
                                                          const TrainConfig& config,
                                                          const Validator& validator);

std::string train_config_to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const std::string& json_text);
std::string report_to_json(const TrainReport& report);

}  // namespace termcast::training
