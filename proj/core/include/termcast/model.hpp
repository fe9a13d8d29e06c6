#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "termcast/errors.hpp"
#include "termcast/tokenizer.hpp"

namespace termcast::model {

struct ModelConfig {
  int d_model = 64;
  int n_heads = 4;
  int n_layers = 2;
  int d_ff = 128;
  int max_len = 256;
  int vocab_size = kVocabSize;
  int n_classes = 2;  // fixed; two-logit head
  std::uint64_t seed = 0;
};

struct LayerParams {
  Eigen::MatrixXd wq, wk, wv, wo;      // d_model x d_model
  Eigen::VectorXd bq, bk, bv, bo;      // d_model
  Eigen::VectorXd ln1_gain, ln1_bias;  // d_model
  Eigen::MatrixXd w1;                  // d_model x d_ff
  Eigen::VectorXd b1;                  // d_ff
  Eigen::MatrixXd w2;                  // d_ff x d_model
  Eigen::VectorXd b2;                  // d_model
  Eigen::VectorXd ln2_gain, ln2_bias;  // d_model
};

struct Params {
  Eigen::MatrixXd tok_embed;  // vocab_size x d_model
  Eigen::MatrixXd pos_embed;  // max_len x d_model
  std::vector<LayerParams> layers;
  Eigen::VectorXd lnf_gain, lnf_bias;  // d_model
  Eigen::MatrixXd head_w;              // d_model x 2
  Eigen::VectorXd head_b;              // 2
};

struct Model {
  ModelConfig config;
  Params params;
};

// Shape-congruent with Model parameters.
struct Gradients {
  Params params;
};

// Visits every parameter array as (name, Eigen object&) in a fixed order.
// The order defines initialization, serialization and optimizer traversal.
template <class ParamsRef, class Fn>
void visit_params(ParamsRef& p, Fn&& fn) {
  fn("tok_embed", p.tok_embed);
  fn("pos_embed", p.pos_embed);
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    auto& l = p.layers[i];
    const std::string prefix = "layers." + std::to_string(i) + ".";
    fn(prefix + "wq", l.wq);
    fn(prefix + "bq", l.bq);
    fn(prefix + "wk", l.wk);
    fn(prefix + "bk", l.bk);
    fn(prefix + "wv", l.wv);
    fn(prefix + "bv", l.bv);
    fn(prefix + "wo", l.wo);
    fn(prefix + "bo", l.bo);
    fn(prefix + "ln1_gain", l.ln1_gain);
    fn(prefix + "ln1_bias", l.ln1_bias);
    fn(prefix + "w1", l.w1);
    fn(prefix + "b1", l.b1);
    fn(prefix + "w2", l.w2);
    fn(prefix + "b2", l.b2);
    fn(prefix + "ln2_gain", l.ln2_gain);
    fn(prefix + "ln2_bias", l.ln2_bias);
  }
  fn("lnf_gain", p.lnf_gain);
  fn("lnf_bias", p.lnf_bias);
  fn("head_w", p.head_w);
  fn("head_b", p.head_b);
}

// Seeded scaled-uniform initialization; deterministic in config.seed.
Model init_model(const ModelConfig& config);

// All-zero parameter set of the config's shapes.
Params zeros_like(const ModelConfig& config);

// Closed-form trainable parameter count for a config.
long long param_count(const ModelConfig& config);

// Actual count summed over allocated arrays; equals param_count.
long long param_count(const Params& params);

struct ForwardResult {
  Eigen::Vector2d logits;
  double prob_nonterm = 0.0;
};

// Pre-LN transformer encoder, mean pooling, two-logit head.
// Throws SequenceTooLongError when ids.size() > max_len.
ForwardResult forward(const Model& model, std::span<const int> ids);

// Gradient of loss w.r.t. every parameter, where the scalar loss has
// gradient `dlogits` at the two output logits. Runs its own forward pass.
Gradients backward(const Model& model, std::span<const int> ids,
                   const Eigen::Vector2d& dlogits);

struct AdamWState {
  Params m;
  Params v;
  long long step = 0;
};

AdamWState init_adamw_state(const ModelConfig& config);

// Decoupled weight-decay AdamW with bias correction. Aborts (throwing
// NonFiniteGradientError naming the parameter) before touching the model
// if any gradient entry is non-finite.
void adamw_step(Model& model, const Gradients& grads, AdamWState& state,
                double lr, double weight_decay,
                std::pair<double, double> betas = {0.9, 0.999},
                double eps = 1e-8);

// Checkpoint: one JSON document, config plus parameter-name -> flat
// row-major float64 arrays with shapes. Lossless for doubles.
std::string checkpoint_to_json(const Model& model);
Model checkpoint_from_json(const std::string& json_text);
void save_checkpoint(const Model& model, const std::string& path);
Model load_checkpoint(const std::string& path);

}  // namespace termcast::model
