#include "termcast/model.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>

#include "termcast/rng.hpp"

namespace termcast::model {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using json = nlohmann::json;

constexpr double kLnEps = 1e-5;

void check_config(const ModelConfig& c) {
  if (c.d_model <= 0 || c.n_heads <= 0 || c.n_layers <= 0 || c.d_ff <= 0 ||
      c.max_len <= 0 || c.vocab_size <= 0) {
    throw Error("model config fields must be positive");
  }
  if (c.d_model % c.n_heads != 0) {
    throw Error("d_model must be divisible by n_heads");
  }
  if (c.n_classes != 2) {
    throw Error("n_classes is fixed at 2");
  }
}

double gelu(double x) {
  constexpr double c = 0.7978845608028654;  // sqrt(2/pi)
  constexpr double a = 0.044715;
  return 0.5 * x * (1.0 + std::tanh(c * (x + a * x * x * x)));
}

double gelu_grad(double x) {
  constexpr double c = 0.7978845608028654;
  constexpr double a = 0.044715;
  const double t = std::tanh(c * (x + a * x * x * x));
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * c * (1.0 + 3.0 * a * x * x);
}

// Row-wise layer normalization with gain/bias.
MatrixXd layer_norm(const MatrixXd& x, const VectorXd& gain, const VectorXd& bias) {
  MatrixXd out(x.rows(), x.cols());
  const double n = static_cast<double>(x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double mu = x.row(i).mean();
    const double var = (x.row(i).array() - mu).square().sum() / n;
    const double inv = 1.0 / std::sqrt(var + kLnEps);
    Eigen::ArrayXd xhat = (x.row(i).transpose().array() - mu) * inv;
    out.row(i) = (xhat * gain.array() + bias.array()).matrix().transpose();
  }
  return out;
}

// Backward through layer_norm. Accumulates dgain/dbias, returns dx.
MatrixXd layer_norm_backward(const MatrixXd& dy, const MatrixXd& x,
                             const VectorXd& gain, VectorXd& dgain, VectorXd& dbias) {
  MatrixXd dx(x.rows(), x.cols());
  const double n = static_cast<double>(x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double mu = x.row(i).mean();
    const double var = (x.row(i).array() - mu).square().sum() / n;
    const double inv = 1.0 / std::sqrt(var + kLnEps);
    Eigen::ArrayXd xhat = (x.row(i).transpose().array() - mu) * inv;
    Eigen::ArrayXd dyr = dy.row(i).transpose().array();
    dgain.array() += dyr * xhat;
    dbias.array() += dyr;
    Eigen::ArrayXd dxhat = dyr * gain.array();
    const double m1 = dxhat.mean();
    const double m2 = (dxhat * xhat).mean();
    dx.row(i) = (inv * (dxhat - m1 - xhat * m2)).matrix().transpose();
  }
  return dx;
}

MatrixXd softmax_rows(const MatrixXd& s) {
  MatrixXd p(s.rows(), s.cols());
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    Eigen::ArrayXd e = (s.row(i).transpose().array() - s.row(i).maxCoeff()).exp();
    p.row(i) = (e / e.sum()).matrix().transpose();
  }
  return p;
}

struct LayerCache {
  MatrixXd attn_in;                 // input to the attention sub-block
  MatrixXd n1;                      // layer_norm(attn_in)
  MatrixXd q, k, v;                 // projections of n1
  std::vector<MatrixXd> attn_prob;  // per-head softmax matrices
  MatrixXd heads_out;               // concatenated head outputs
  MatrixXd ffn_in;                  // input to the feed-forward sub-block
  MatrixXd n2;                      // layer_norm(ffn_in)
  MatrixXd z1;                      // n2*w1 + b1 (pre-activation)
  MatrixXd h1;                      // gelu(z1)
};

struct Cache {
  std::vector<LayerCache> layers;
  MatrixXd final_in;   // input to the final layer norm
  MatrixXd final_out;  // normalized states
  VectorXd pooled;
};

Eigen::Vector2d run_forward(const Model& model, std::span<const int> ids, Cache* cache) {
  const ModelConfig& cfg = model.config;
  const Params& p = model.params;
  const int len = static_cast<int>(ids.size());
  if (len == 0) throw Error("forward: empty token sequence");
  if (len > cfg.max_len) {
    throw SequenceTooLongError("sequence of " + std::to_string(len) +
                               " tokens exceeds max_len " + std::to_string(cfg.max_len));
  }
  const int dh = cfg.d_model / cfg.n_heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  MatrixXd x(len, cfg.d_model);
  for (int i = 0; i < len; ++i) {
    if (ids[static_cast<std::size_t>(i)] < 0 || ids[static_cast<std::size_t>(i)] >= cfg.vocab_size) {
      throw Error("token id out of vocabulary range");
    }
    x.row(i) = p.tok_embed.row(ids[static_cast<std::size_t>(i)]) + p.pos_embed.row(i);
  }

  if (cache) cache->layers.resize(static_cast<std::size_t>(cfg.n_layers));
  for (int l = 0; l < cfg.n_layers; ++l) {
    const LayerParams& lp = p.layers[static_cast<std::size_t>(l)];
    LayerCache* lc = cache ? &cache->layers[static_cast<std::size_t>(l)] : nullptr;

    MatrixXd n1 = layer_norm(x, lp.ln1_gain, lp.ln1_bias);
    MatrixXd q = (n1 * lp.wq).rowwise() + lp.bq.transpose();
    MatrixXd k = (n1 * lp.wk).rowwise() + lp.bk.transpose();
    MatrixXd v = (n1 * lp.wv).rowwise() + lp.bv.transpose();

    MatrixXd heads(len, cfg.d_model);
    std::vector<MatrixXd> probs;
    if (lc) probs.reserve(static_cast<std::size_t>(cfg.n_heads));
    for (int h = 0; h < cfg.n_heads; ++h) {
      auto qh = q.middleCols(h * dh, dh);
      auto kh = k.middleCols(h * dh, dh);
      auto vh = v.middleCols(h * dh, dh);
      MatrixXd att = softmax_rows((qh * kh.transpose()) * scale);
      heads.middleCols(h * dh, dh) = att * vh;
      if (lc) probs.push_back(std::move(att));
    }
    MatrixXd attn_out = (heads * lp.wo).rowwise() + lp.bo.transpose();

    if (lc) {
      lc->attn_in = x;
      lc->n1 = std::move(n1);
      lc->q = std::move(q);
      lc->k = std::move(k);
      lc->v = std::move(v);
      lc->attn_prob = std::move(probs);
      lc->heads_out = heads;
    }
    x += attn_out;

    MatrixXd n2 = layer_norm(x, lp.ln2_gain, lp.ln2_bias);
    MatrixXd z1 = (n2 * lp.w1).rowwise() + lp.b1.transpose();
    MatrixXd h1 = z1.unaryExpr([](double t) { return gelu(t); });
    MatrixXd ffn_out = (h1 * lp.w2).rowwise() + lp.b2.transpose();

    if (lc) {
      lc->ffn_in = x;
      lc->n2 = std::move(n2);
      lc->z1 = std::move(z1);
      lc->h1 = std::move(h1);
    }
    x += ffn_out;
  }

  MatrixXd xf = layer_norm(x, p.lnf_gain, p.lnf_bias);
  VectorXd pooled = xf.colwise().mean().transpose();
  Eigen::Vector2d logits = p.head_w.transpose() * pooled + p.head_b;

  if (cache) {
    cache->final_in = std::move(x);
    cache->final_out = std::move(xf);
    cache->pooled = std::move(pooled);
  }
  return logits;
}

void fill_uniform(Eigen::Ref<MatrixXd> m, Rng& rng, double bound) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      m(r, c) = rng.uniform(-bound, bound);
    }
  }
}

double xavier_bound(Eigen::Index fan_in, Eigen::Index fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

Params allocate(const ModelConfig& c) {
  Params p;
  p.tok_embed.resize(c.vocab_size, c.d_model);
  p.pos_embed.resize(c.max_len, c.d_model);
  p.layers.resize(static_cast<std::size_t>(c.n_layers));
  for (auto& l : p.layers) {
    l.wq.resize(c.d_model, c.d_model);
    l.wk.resize(c.d_model, c.d_model);
    l.wv.resize(c.d_model, c.d_model);
    l.wo.resize(c.d_model, c.d_model);
    l.bq.resize(c.d_model);
    l.bk.resize(c.d_model);
    l.bv.resize(c.d_model);
    l.bo.resize(c.d_model);
    l.ln1_gain.resize(c.d_model);
    l.ln1_bias.resize(c.d_model);
    l.w1.resize(c.d_model, c.d_ff);
    l.b1.resize(c.d_ff);
    l.w2.resize(c.d_ff, c.d_model);
    l.b2.resize(c.d_model);
    l.ln2_gain.resize(c.d_model);
    l.ln2_bias.resize(c.d_model);
  }
  p.lnf_gain.resize(c.d_model);
  p.lnf_bias.resize(c.d_model);
  p.head_w.resize(c.d_model, 2);
  p.head_b.resize(2);
  return p;
}

}  // namespace

Params zeros_like(const ModelConfig& config) {
  Params p = allocate(config);
  visit_params(p, [](const std::string&, auto& m) { m.setZero(); });
  return p;
}

Model init_model(const ModelConfig& config) {
  check_config(config);
  Model model{config, allocate(config)};
  Params& p = model.params;
  Rng rng(Rng::mix(config.seed, 0x7e58f0c3a1ULL));

  const double embed_bound = std::sqrt(3.0 / static_cast<double>(config.d_model));
  fill_uniform(p.tok_embed, rng, embed_bound);
  fill_uniform(p.pos_embed, rng, embed_bound);
  for (auto& l : p.layers) {
    const double attn_bound = xavier_bound(config.d_model, config.d_model);
    fill_uniform(l.wq, rng, attn_bound);
    fill_uniform(l.wk, rng, attn_bound);
    fill_uniform(l.wv, rng, attn_bound);
    fill_uniform(l.wo, rng, attn_bound);
    l.bq.setZero();
    l.bk.setZero();
    l.bv.setZero();
    l.bo.setZero();
    l.ln1_gain.setOnes();
    l.ln1_bias.setZero();
    fill_uniform(l.w1, rng, xavier_bound(config.d_model, config.d_ff));
    l.b1.setZero();
    fill_uniform(l.w2, rng, xavier_bound(config.d_ff, config.d_model));
    l.b2.setZero();
    l.ln2_gain.setOnes();
    l.ln2_bias.setZero();
  }
  p.lnf_gain.setOnes();
  p.lnf_bias.setZero();
  fill_uniform(p.head_w, rng, xavier_bound(config.d_model, 2));
  p.head_b.setZero();
  return model;
}

long long param_count(const ModelConfig& c) {
  const long long d = c.d_model, ff = c.d_ff;
  const long long per_layer = 4 * d * d + 2 * d * ff + ff + 9 * d;
  return static_cast<long long>(c.vocab_size) * d + static_cast<long long>(c.max_len) * d +
         static_cast<long long>(c.n_layers) * per_layer + 2 * d + (2 * d + 2);
}

long long param_count(const Params& params) {
  long long total = 0;
  visit_params(params, [&](const std::string&, const auto& m) { total += m.size(); });
  return total;
}

ForwardResult forward(const Model& model, std::span<const int> ids) {
  Eigen::Vector2d logits = run_forward(model, ids, nullptr);
  const double m = logits.maxCoeff();
  const double e0 = std::exp(logits[0] - m), e1 = std::exp(logits[1] - m);
  return ForwardResult{logits, e1 / (e0 + e1)};
}

Gradients backward(const Model& model, std::span<const int> ids,
                   const Eigen::Vector2d& dlogits) {
  const ModelConfig& cfg = model.config;
  const Params& p = model.params;
  Cache cache;
  run_forward(model, ids, &cache);

  const int len = static_cast<int>(ids.size());
  const int dh = cfg.d_model / cfg.n_heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Gradients grads{zeros_like(cfg)};
  Params& g = grads.params;

  // Head and pooling.
  g.head_w += cache.pooled * dlogits.transpose();
  g.head_b += dlogits;
  VectorXd dpooled = p.head_w * dlogits;
  MatrixXd dxf = MatrixXd::Zero(len, cfg.d_model);
  dxf.rowwise() = (dpooled / static_cast<double>(len)).transpose();

  MatrixXd dx = layer_norm_backward(dxf, cache.final_in, p.lnf_gain, g.lnf_gain, g.lnf_bias);

  for (int l = cfg.n_layers - 1; l >= 0; --l) {
    const LayerParams& lp = p.layers[static_cast<std::size_t>(l)];
    LayerParams& lg = g.layers[static_cast<std::size_t>(l)];
    const LayerCache& lc = cache.layers[static_cast<std::size_t>(l)];

    // Feed-forward sub-block: out = ffn_in + gelu(n2*w1+b1)*w2 + b2.
    MatrixXd dffn_out = dx;
    lg.w2 += lc.h1.transpose() * dffn_out;
    lg.b2 += dffn_out.colwise().sum().transpose();
    MatrixXd dh1 = dffn_out * lp.w2.transpose();
    MatrixXd dz1 = dh1.cwiseProduct(lc.z1.unaryExpr([](double t) { return gelu_grad(t); }));
    lg.w1 += lc.n2.transpose() * dz1;
    lg.b1 += dz1.colwise().sum().transpose();
    MatrixXd dn2 = dz1 * lp.w1.transpose();
    dx += layer_norm_backward(dn2, lc.ffn_in, lp.ln2_gain, lg.ln2_gain, lg.ln2_bias);

    // Attention sub-block: out = attn_in + (heads * wo + bo).
    MatrixXd dattn_out = dx;
    lg.wo += lc.heads_out.transpose() * dattn_out;
    lg.bo += dattn_out.colwise().sum().transpose();
    MatrixXd dheads = dattn_out * lp.wo.transpose();

    MatrixXd dq(len, cfg.d_model), dk(len, cfg.d_model), dv(len, cfg.d_model);
    for (int h = 0; h < cfg.n_heads; ++h) {
      auto qh = lc.q.middleCols(h * dh, dh);
      auto kh = lc.k.middleCols(h * dh, dh);
      auto vh = lc.v.middleCols(h * dh, dh);
      const MatrixXd& att = lc.attn_prob[static_cast<std::size_t>(h)];
      auto dout_h = dheads.middleCols(h * dh, dh);

      MatrixXd datt = dout_h * vh.transpose();
      dv.middleCols(h * dh, dh) = att.transpose() * dout_h;

      // Softmax backward row-wise: ds = att .* (datt - rowsum(att .* datt)).
      MatrixXd ds(len, len);
      for (int i = 0; i < len; ++i) {
        const double dot = att.row(i).dot(datt.row(i));
        ds.row(i) = (att.row(i).array() * (datt.row(i).array() - dot)).matrix();
      }
      dq.middleCols(h * dh, dh) = (ds * kh) * scale;
      dk.middleCols(h * dh, dh) = (ds.transpose() * qh) * scale;
    }

    lg.wq += lc.n1.transpose() * dq;
    lg.bq += dq.colwise().sum().transpose();
    lg.wk += lc.n1.transpose() * dk;
    lg.bk += dk.colwise().sum().transpose();
    lg.wv += lc.n1.transpose() * dv;
    lg.bv += dv.colwise().sum().transpose();

    MatrixXd dn1 = dq * lp.wq.transpose() + dk * lp.wk.transpose() + dv * lp.wv.transpose();
    dx += layer_norm_backward(dn1, lc.attn_in, lp.ln1_gain, lg.ln1_gain, lg.ln1_bias);
  }

  for (int i = 0; i < len; ++i) {
    g.tok_embed.row(ids[static_cast<std::size_t>(i)]) += dx.row(i);
    g.pos_embed.row(i) += dx.row(i);
  }
  return grads;
}

AdamWState init_adamw_state(const ModelConfig& config) {
  return AdamWState{zeros_like(config), zeros_like(config), 0};
}

void adamw_step(Model& model, const Gradients& grads, AdamWState& state,
                double lr, double weight_decay, std::pair<double, double> betas,
                double eps) {
  if (!(lr > 0.0) || !(eps > 0.0) || weight_decay < 0.0) {
    throw Error("adamw_step: hyperparameters must be positive");
  }
  // Validate first so a bad batch aborts without touching the model.
  visit_params(grads.params, [&](const std::string& name, const auto& m) {
    if (!m.allFinite()) {
      throw NonFiniteGradientError("non-finite gradient in parameter " + name);
    }
  });

  const double beta1 = betas.first, beta2 = betas.second;
  state.step += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));

  std::vector<Eigen::Map<Eigen::ArrayXd>> ps, ms, vs;
  std::vector<Eigen::Map<const Eigen::ArrayXd>> gs;
  visit_params(model.params, [&](const std::string&, auto& m) {
    ps.emplace_back(m.data(), m.size());
  });
  visit_params(state.m, [&](const std::string&, auto& m) { ms.emplace_back(m.data(), m.size()); });
  visit_params(state.v, [&](const std::string&, auto& m) { vs.emplace_back(m.data(), m.size()); });
  visit_params(grads.params, [&](const std::string&, const auto& m) {
    gs.emplace_back(m.data(), m.size());
  });

  for (std::size_t i = 0; i < ps.size(); ++i) {
    ms[i] = beta1 * ms[i] + (1.0 - beta1) * gs[i];
    vs[i] = beta2 * vs[i] + (1.0 - beta2) * gs[i].square();
    ps[i] -= lr * ((ms[i] / bc1) / ((vs[i] / bc2).sqrt() + eps) + weight_decay * ps[i]);
  }
}

namespace {

json params_to_json(const Params& p) {
  json out = json::object();
  visit_params(p, [&](const std::string& name, const auto& m) {
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
    }
    out[name] = json{{"shape", {m.rows(), m.cols()}}, {"data", data}};
  });
  return out;
}

void params_from_json(const json& j, Params& p) {
  visit_params(p, [&](const std::string& name, auto& m) {
    if (!j.contains(name)) throw IoError("checkpoint missing parameter " + name);
    const json& entry = j.at(name);
    const auto shape = entry.at("shape").get<std::vector<long long>>();
    if (shape.size() != 2 || shape[0] != m.rows() || shape[1] != m.cols()) {
      throw IoError("checkpoint shape mismatch for parameter " + name);
    }
    const auto data = entry.at("data").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(data.size()) != m.size()) {
      throw IoError("checkpoint size mismatch for parameter " + name);
    }
    std::size_t idx = 0;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = data[idx++];
    }
  });
}

}  // namespace

std::string checkpoint_to_json(const Model& model) {
  const ModelConfig& c = model.config;
  json doc{
      {"config",
       {{"d_model", c.d_model},
        {"n_heads", c.n_heads},
        {"n_layers", c.n_layers},
        {"d_ff", c.d_ff},
        {"max_len", c.max_len},
        {"vocab_size", c.vocab_size},
        {"n_classes", c.n_classes},
        {"seed", c.seed}}},
      {"params", params_to_json(model.params)}};
  return doc.dump();
}

Model checkpoint_from_json(const std::string& json_text) {
  json doc = json::parse(json_text);
  const json& jc = doc.at("config");
  ModelConfig c;
  c.d_model = jc.at("d_model").get<int>();
  c.n_heads = jc.at("n_heads").get<int>();
  c.n_layers = jc.at("n_layers").get<int>();
  c.d_ff = jc.at("d_ff").get<int>();
  c.max_len = jc.at("max_len").get<int>();
  c.vocab_size = jc.at("vocab_size").get<int>();
  c.n_classes = jc.at("n_classes").get<int>();
  c.seed = jc.at("seed").get<std::uint64_t>();
  check_config(c);
  Model model{c, allocate(c)};
  params_from_json(doc.at("params"), model.params);
  return model;
}

void save_checkpoint(const Model& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint: " + path);
  out << checkpoint_to_json(model) << '\n';
}

Model load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return checkpoint_from_json(text);
}

}  // namespace termcast::model
