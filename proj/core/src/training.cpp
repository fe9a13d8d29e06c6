#include "termcast/training.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>

#include "termcast/metrics.hpp"
#include "termcast/rng.hpp"

namespace termcast::training {

namespace {

using json = nlohmann::json;

constexpr double kImproveTol = 1e-9;

std::vector<std::vector<int>> plain_batches(int n, int batch_size, std::uint64_t seed) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  Rng rng(Rng::mix(seed, 0x5eedULL));
  rng.shuffle(idx);
  std::vector<std::vector<int>> batches;
  for (int lo = 0; lo < n; lo += batch_size) {
    const int hi = std::min(n, lo + batch_size);
    batches.emplace_back(idx.begin() + lo, idx.begin() + hi);
  }
  return batches;
}

// Element-wise += over two shape-congruent parameter sets, walking both in
// the fixed visit order.
void accumulate(model::Params& into, const model::Params& from) {
  std::vector<double*> dst_ptrs;
  std::vector<Eigen::Index> dst_sizes;
  model::visit_params(into, [&](const std::string&, auto& m) {
    dst_ptrs.push_back(m.data());
    dst_sizes.push_back(m.size());
  });
  std::size_t k = 0;
  model::visit_params(from, [&](const std::string&, const auto& m) {
    Eigen::Map<Eigen::ArrayXd>(dst_ptrs[k], dst_sizes[k]) +=
        Eigen::Map<const Eigen::ArrayXd>(m.data(), m.size());
    ++k;
  });
}

}  // namespace

double balanced_map(std::span<const double> scores, std::span<const int> labels) {
  long long n0 = 0, n1 = 0;
  for (int y : labels) {
    if (y == 0) ++n0;
    else if (y == 1) ++n1;
    else throw Error("labels must be 0 or 1");
  }
  if (n0 == 0 || n1 == 0) {
    throw SingleClassInputError("balanced_map requires both classes");
  }
  const double ap_pos = metrics::average_precision(scores, labels, 1);
  std::vector<double> negated(scores.begin(), scores.end());
  for (double& s : negated) s = -s;
  const double ap_neg = metrics::average_precision(negated, labels, 0);
  return 0.5 * (ap_pos + ap_neg);
}

std::pair<model::Model, TrainReport> train_with_validator(model::Model model,
                                                          const corpus::Corpus& train_set,
                                                          const TrainConfig& config,
                                                          const Validator& validator) {
  if (train_set.items.empty()) throw Error("training set is empty");
  if (config.batch_size < 1 || config.max_epochs < 1 || config.patience < 1 ||
      config.checks_per_epoch < 1) {
    throw Error("train config counts must be >= 1");
  }

  const int n = static_cast<int>(train_set.items.size());
  std::vector<model::TokenSequence> seqs;
  seqs.reserve(static_cast<std::size_t>(n));
  for (const auto& item : train_set.items) seqs.push_back(model::tokenize(item.source));
  const std::vector<int> labels = train_set.labels();

  // Class counts feeding effective-number weights and LDAM margins come
  // from the training data.
  imbalance::LossSpec loss = config.loss;
  loss.class_counts = {std::max<long long>(1, train_set.n0),
                       std::max<long long>(1, train_set.n1)};

  model::AdamWState opt_state = model::init_adamw_state(model.config);
  model::Model best_model = model;
  TrainReport report;
  double best_metric = -1.0;
  int no_improve = 0;
  long long global_step = 0;
  double loss_sum = 0.0;
  long long loss_count = 0;

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    const std::uint64_t epoch_seed = Rng::mix(config.seed, static_cast<std::uint64_t>(epoch));
    std::vector<std::vector<int>> batches;
    if (config.use_cas) {
      batches = imbalance::class_aware_batches(labels, config.batch_size,
                                               config.min_minority, epoch_seed)
                    .batches;
    } else {
      batches = plain_batches(n, config.batch_size, epoch_seed);
    }
    const int n_batches = static_cast<int>(batches.size());

    // Evenly spaced validation checks; the last batch of the epoch always
    // carries one.
    std::vector<bool> check_after(static_cast<std::size_t>(n_batches), false);
    for (int k = 1; k <= config.checks_per_epoch; ++k) {
      const int at = static_cast<int>(
          static_cast<long long>(n_batches) * k / config.checks_per_epoch);
      check_after[static_cast<std::size_t>(std::max(0, at - 1))] = true;
    }

    for (int b = 0; b < n_batches; ++b) {
      const auto& batch = batches[static_cast<std::size_t>(b)];
      const double inv = 1.0 / static_cast<double>(batch.size());
      model::Gradients grads{model::zeros_like(model.config)};
      double batch_loss = 0.0;
      for (int idx : batch) {
        const auto& seq = seqs[static_cast<std::size_t>(idx)];
        const auto fwd = model::forward(model, seq.ids);
        const auto lv = imbalance::evaluate_loss(loss, fwd.logits,
                                                 labels[static_cast<std::size_t>(idx)]);
        batch_loss += lv.loss * inv;
        const Eigen::Vector2d dlogits = lv.dlogits * inv;
        accumulate(grads.params, model::backward(model, seq.ids, dlogits).params);
      }
      if (!std::isfinite(batch_loss)) {
        throw NonFiniteLossError("non-finite training loss in batch " + std::to_string(b) +
                                     " of epoch " + std::to_string(epoch),
                                 batch, report);
      }
      model::adamw_step(model, grads, opt_state, config.lr, config.weight_decay);
      ++global_step;
      loss_sum += batch_loss;
      ++loss_count;

      if (!check_after[static_cast<std::size_t>(b)]) continue;

      CheckRecord rec;
      rec.step = global_step;
      rec.train_loss = loss_count > 0 ? loss_sum / static_cast<double>(loss_count) : 0.0;
      rec.val_balanced_map = validator(model);
      loss_sum = 0.0;
      loss_count = 0;
      report.history.push_back(rec);

      if (rec.val_balanced_map > best_metric + kImproveTol) {
        best_metric = rec.val_balanced_map;
        report.best_check = static_cast<int>(report.history.size()) - 1;
        best_model = model;
        no_improve = 0;
      } else {
        ++no_improve;
        if (no_improve >= config.patience) {
          report.stopped_early = true;
          return {std::move(best_model), std::move(report)};
        }
      }
    }
  }
  return {std::move(best_model), std::move(report)};
}

std::pair<model::Model, TrainReport> train(model::Model model,
                                           const corpus::Corpus& train_set,
                                           const corpus::Corpus& validation_set,
                                           const TrainConfig& config) {
  if (validation_set.n0 == 0 || validation_set.n1 == 0) {
    throw ValidationMissingClassError("validation set must contain both classes");
  }
  std::vector<model::TokenSequence> val_seqs;
  val_seqs.reserve(validation_set.items.size());
  for (const auto& item : validation_set.items) val_seqs.push_back(model::tokenize(item.source));
  const std::vector<int> val_labels = validation_set.labels();

  Validator validator = [&](const model::Model& m) {
    std::vector<double> scores;
    scores.reserve(val_seqs.size());
    for (const auto& seq : val_seqs) scores.push_back(model::forward(m, seq.ids).prob_nonterm);
    return balanced_map(scores, val_labels);
  };
  return train_with_validator(std::move(model), train_set, config, validator);
}

std::string train_config_to_json(const TrainConfig& c) {
  json j{{"loss", json::parse(imbalance::loss_spec_to_json(c.loss))},
         {"lr", c.lr},
         {"weight_decay", c.weight_decay},
         {"batch_size", c.batch_size},
         {"max_epochs", c.max_epochs},
         {"patience", c.patience},
         {"checks_per_epoch", c.checks_per_epoch},
         {"min_minority", c.min_minority},
         {"use_cas", c.use_cas},
         {"seed", c.seed}};
  return j.dump();
}

TrainConfig train_config_from_json(const std::string& json_text) {
  json j = json::parse(json_text);
  TrainConfig c;
  if (j.contains("loss")) c.loss = imbalance::loss_spec_from_json(j.at("loss").dump());
  if (j.contains("lr")) c.lr = j.at("lr").get<double>();
  if (j.contains("weight_decay")) c.weight_decay = j.at("weight_decay").get<double>();
  if (j.contains("batch_size")) c.batch_size = j.at("batch_size").get<int>();
  if (j.contains("max_epochs")) c.max_epochs = j.at("max_epochs").get<int>();
  if (j.contains("patience")) c.patience = j.at("patience").get<int>();
  if (j.contains("checks_per_epoch")) c.checks_per_epoch = j.at("checks_per_epoch").get<int>();
  if (j.contains("min_minority")) c.min_minority = j.at("min_minority").get<int>();
  if (j.contains("use_cas")) c.use_cas = j.at("use_cas").get<bool>();
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

std::string report_to_json(const TrainReport& report) {
  json history = json::array();
  for (const auto& rec : report.history) {
    history.push_back(json{{"step", rec.step},
                           {"train_loss", rec.train_loss},
                           {"val_balanced_map", rec.val_balanced_map}});
  }
  return json{{"history", history},
              {"best_check", report.best_check},
              {"stopped_early", report.stopped_early},
              {"final_model_source", report.final_model_source}}
      .dump();
}

}  // namespace termcast::training
