#include "termcast/imbalance.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>

#include "termcast/rng.hpp"

namespace termcast::imbalance {

namespace {

using json = nlohmann::json;

double softplus(double u) {
  // log(1 + e^u) without overflow.
  if (u > 0.0) return u + std::log1p(std::exp(-u));
  return std::log1p(std::exp(u));
}

double sigmoid(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

void check_label(int label) {
  if (label != 0 && label != 1) throw Error("label must be 0 or 1");
}

// All four objectives reduce to functions of the true-class margin
// m = z_label - z_other on the two-logit head.
double margin(const Eigen::Vector2d& logits, int label) {
  return logits[label] - logits[1 - label];
}

LossValue from_margin_grad(double loss, double dloss_dm, int label) {
  LossValue v;
  v.loss = loss;
  v.dlogits[label] = dloss_dm;
  v.dlogits[1 - label] = -dloss_dm;
  return v;
}

}  // namespace

const char* loss_kind_name(LossKind kind) {
  switch (kind) {
    case LossKind::CE: return "ce";
    case LossKind::BCE_EFFNUM: return "bce_effnum";
    case LossKind::FOCAL: return "focal";
    case LossKind::LDAM: return "ldam";
  }
  return "?";
}

LossKind loss_kind_from_name(const std::string& name) {
  if (name == "ce") return LossKind::CE;
  if (name == "bce_effnum") return LossKind::BCE_EFFNUM;
  if (name == "focal") return LossKind::FOCAL;
  if (name == "ldam") return LossKind::LDAM;
  throw Error("unknown loss kind: " + name);
}

std::pair<double, double> effective_number_weights(std::array<long long, 2> counts,
                                                   double beta) {
  if (!(beta >= 0.0) || beta >= 1.0) {
    throw BetaOutOfRangeError("beta must lie in [0, 1), got " + std::to_string(beta));
  }
  if (counts[0] < 1 || counts[1] < 1) throw Error("class counts must be >= 1");
  const double w0 = (1.0 - beta) / (1.0 - std::pow(beta, static_cast<double>(counts[0])));
  const double w1 = (1.0 - beta) / (1.0 - std::pow(beta, static_cast<double>(counts[1])));
  const double norm = 2.0 / (w0 + w1);
  return {w0 * norm, w1 * norm};
}

std::pair<double, double> ldam_margins(std::array<long long, 2> counts, double c) {
  if (counts[0] < 1 || counts[1] < 1) throw Error("class counts must be >= 1");
  if (!(c > 0.0)) throw Error("LDAM constant C must be > 0");
  return {c / std::pow(static_cast<double>(counts[0]), 0.25),
          c / std::pow(static_cast<double>(counts[1]), 0.25)};
}

LossValue loss_ce(const Eigen::Vector2d& logits, int label) {
  check_label(label);
  const double m = margin(logits, label);
  return from_margin_grad(softplus(-m), -sigmoid(-m), label);
}

LossValue loss_bce_effnum(const Eigen::Vector2d& logits, int label,
                          std::pair<double, double> weights) {
  check_label(label);
  const double w = label == 0 ? weights.first : weights.second;
  LossValue v = loss_ce(logits, label);
  v.loss *= w;
  v.dlogits *= w;
  return v;
}

LossValue loss_focal(const Eigen::Vector2d& logits, int label, double gamma) {
  check_label(label);
  if (gamma < 0.0) throw Error("focal gamma must be >= 0");
  const double m = margin(logits, label);
  const double q = sigmoid(-m);  // 1 - p_t
  const double ce = softplus(-m);
  const double qg = std::pow(q, gamma);  // q^0 == 1, so gamma=0 is exactly CE
  const double p = 1.0 - q;
  const double dm = gamma == 0.0 ? -q : -qg * (gamma * p * ce + q);
  return from_margin_grad(qg * ce, dm, label);
}

LossValue loss_ldam(const Eigen::Vector2d& logits, int label,
                    std::pair<double, double> margins, double scale) {
  check_label(label);
  if (!(scale > 0.0)) throw Error("LDAM scale must be > 0");
  // Subtract the margin from the true-class logit before forming the
  // margin term, so s = 1 matches loss_ce on shifted logits exactly.
  Eigen::Vector2d adjusted = logits;
  adjusted[label] -= label == 0 ? margins.first : margins.second;
  const double m_adj = scale * margin(adjusted, label);
  return from_margin_grad(softplus(-m_adj), -scale * sigmoid(-m_adj), label);
}

LossValue evaluate_loss(const LossSpec& spec, const Eigen::Vector2d& logits, int label) {
  switch (spec.kind) {
    case LossKind::CE:
      return loss_ce(logits, label);
    case LossKind::BCE_EFFNUM:
      return loss_bce_effnum(logits, label,
                             effective_number_weights(spec.class_counts, spec.beta));
    case LossKind::FOCAL:
      return loss_focal(logits, label, spec.gamma);
    case LossKind::LDAM:
      return loss_ldam(logits, label, ldam_margins(spec.class_counts, spec.margin_c),
                       spec.scale_s);
  }
  throw Error("unknown loss kind");
}

BatchPlan class_aware_batches(std::span<const int> labels, int batch_size,
                              int min_minority, std::uint64_t seed) {
  if (min_minority < 1) throw Error("min_minority must be >= 1");
  if (batch_size <= min_minority) throw Error("batch_size must exceed min_minority");

  std::vector<int> class_idx[2];
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    if (y != 0 && y != 1) throw Error("labels must be 0 or 1");
    class_idx[y].push_back(static_cast<int>(i));
  }
  const int minority_class = class_idx[1].size() <= class_idx[0].size() ? 1 : 0;
  std::vector<int>& minority = class_idx[minority_class];
  std::vector<int>& majority = class_idx[1 - minority_class];
  if (minority.empty()) throw EmptyMinorityError("minority class has no items");

  Rng rng(Rng::mix(seed, 0xba7c4e5ULL));
  rng.shuffle(majority);
  rng.shuffle(minority);

  const long long total = static_cast<long long>(labels.size());
  const int n_batches =
      static_cast<int>((total + batch_size - 1) / batch_size);

  auto slice_bounds = [](std::size_t count, int parts, int b) {
    const std::size_t lo = count * static_cast<std::size_t>(b) / static_cast<std::size_t>(parts);
    const std::size_t hi =
        count * static_cast<std::size_t>(b + 1) / static_cast<std::size_t>(parts);
    return std::pair<std::size_t, std::size_t>{lo, hi};
  };

  // Minority sequence: every real index once, then resampled with
  // replacement until each batch can hold its min_minority quota.
  const std::size_t quota = static_cast<std::size_t>(n_batches) *
                            static_cast<std::size_t>(min_minority);
  std::vector<int> minority_seq = minority;
  const bool partition_minority = minority_seq.size() >= quota;
  if (!partition_minority) {
    while (minority_seq.size() < quota) {
      minority_seq.push_back(minority[static_cast<std::size_t>(rng.below(minority.size()))]);
    }
    rng.shuffle(minority_seq);
  }

  BatchPlan plan;
  plan.min_minority_per_batch = min_minority;
  plan.batches.resize(static_cast<std::size_t>(n_batches));
  for (int b = 0; b < n_batches; ++b) {
    auto& batch = plan.batches[static_cast<std::size_t>(b)];
    auto [mlo, mhi] = slice_bounds(majority.size(), n_batches, b);
    batch.assign(majority.begin() + static_cast<std::ptrdiff_t>(mlo),
                 majority.begin() + static_cast<std::ptrdiff_t>(mhi));
    auto [ilo, ihi] = slice_bounds(minority_seq.size(), n_batches, b);
    batch.insert(batch.end(), minority_seq.begin() + static_cast<std::ptrdiff_t>(ilo),
                 minority_seq.begin() + static_cast<std::ptrdiff_t>(ihi));
    rng.shuffle(batch);
  }
  return plan;
}

std::string loss_spec_to_json(const LossSpec& spec) {
  json j{{"kind", loss_kind_name(spec.kind)},
         {"beta", spec.beta},
         {"gamma", spec.gamma},
         {"margin_c", spec.margin_c},
         {"scale_s", spec.scale_s}};
  return j.dump();
}

LossSpec loss_spec_from_json(const std::string& json_text) {
  json j = json::parse(json_text);
  LossSpec spec;
  spec.kind = loss_kind_from_name(j.at("kind").get<std::string>());
  if (j.contains("beta")) spec.beta = j.at("beta").get<double>();
  if (j.contains("gamma")) spec.gamma = j.at("gamma").get<double>();
  if (j.contains("margin_c")) spec.margin_c = j.at("margin_c").get<double>();
  if (j.contains("scale_s")) spec.scale_s = j.at("scale_s").get<double>();
  return spec;
}

}  // namespace termcast::imbalance
