#include "termcast/attribution.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <unordered_map>

#include "termcast/rng.hpp"

namespace termcast::attribution {

namespace {

using json = nlohmann::json;

std::vector<int> masked_vector(std::span<const int> ids, const MaskingRule& masking,
                               std::uint64_t mask_bits) {
  std::vector<int> out(ids.size(), masking.mask_id);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (mask_bits & (std::uint64_t{1} << i)) out[i] = ids[i];
  }
  return out;
}

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// Shared by the sampled and exhaustive estimators: walk one ordering,
// adding tokens to the coalition and crediting marginal contributions.
void walk_permutation(const Scorer& scorer, std::span<const int> ids,
                      const MaskingRule& masking, const std::vector<int>& perm,
                      double base_value, std::vector<double>& phi_sum,
                      std::unordered_map<std::uint64_t, double>* memo) {
  const std::size_t n = ids.size();
  std::vector<int> current(ids.size(), masking.mask_id);
  std::uint64_t bits = 0;
  double prev = base_value;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t pos = static_cast<std::size_t>(perm[k]);
    current[pos] = ids[pos];
    double value;
    if (memo) {
      bits |= std::uint64_t{1} << pos;
      auto it = memo->find(bits);
      if (it != memo->end()) {
        value = it->second;
      } else {
        value = scorer(current);
        memo->emplace(bits, value);
      }
    } else {
      value = scorer(current);
    }
    phi_sum[pos] += value - prev;
    prev = value;
  }
}

}  // namespace

TokenAttribution shapley_exact(const Scorer& scorer, std::span<const int> ids,
                               const MaskingRule& masking) {
  const int n = static_cast<int>(ids.size());
  if (n == 0) throw Error("shapley_exact: no tokens");
  if (n > 12) {
    throw TooManyTokensError("exact Shapley enumerates 2^n coalitions; got " +
                             std::to_string(n) + " tokens (limit 12)");
  }

  const std::uint64_t full = (std::uint64_t{1} << n) - 1;
  std::vector<double> value(static_cast<std::size_t>(full) + 1);
  for (std::uint64_t mask = 0; mask <= full; ++mask) {
    value[static_cast<std::size_t>(mask)] = scorer(masked_vector(ids, masking, mask));
  }

  // phi_i = sum over coalitions S not containing i of
  //         |S|! (n-|S|-1)! / n! * (f(S+i) - f(S))
  std::vector<double> weight(static_cast<std::size_t>(n));
  const double n_fact = factorial(n);
  for (int s = 0; s < n; ++s) {
    weight[static_cast<std::size_t>(s)] = factorial(s) * factorial(n - s - 1) / n_fact;
  }

  TokenAttribution out;
  out.method = Method::Exact;
  out.phi.assign(static_cast<std::size_t>(n), 0.0);
  for (std::uint64_t mask = 0; mask <= full; ++mask) {
    const int size = std::popcount(mask);
    if (size == n) continue;
    const double w = weight[static_cast<std::size_t>(size)];
    const double f_s = value[static_cast<std::size_t>(mask)];
    for (int i = 0; i < n; ++i) {
      const std::uint64_t bit = std::uint64_t{1} << i;
      if (mask & bit) continue;
      out.phi[static_cast<std::size_t>(i)] +=
          w * (value[static_cast<std::size_t>(mask | bit)] - f_s);
    }
  }
  out.base_value = value[0];
  out.full_value = value[static_cast<std::size_t>(full)];
  return out;
}

TokenAttribution shapley_sampled(const Scorer& scorer, std::span<const int> ids,
                                 const MaskingRule& masking, long long n_permutations,
                                 std::uint64_t seed, bool exhaustive) {
  const int n = static_cast<int>(ids.size());
  if (n == 0) throw Error("shapley_sampled: no tokens");
  if (!exhaustive && n_permutations < 1) throw Error("n_permutations must be >= 1");

  TokenAttribution out;
  out.method = Method::Sampled;
  out.seed = seed;
  out.phi.assign(static_cast<std::size_t>(n), 0.0);
  out.base_value = scorer(masked_vector(ids, masking, 0));
  out.full_value = scorer(std::vector<int>(ids.begin(), ids.end()));

  std::unordered_map<std::uint64_t, double> memo;
  std::unordered_map<std::uint64_t, double>* memo_ptr = n <= 64 ? &memo : nullptr;

  if (exhaustive) {
    if (n > 8) {
      throw TooManyTokensError("exhaustive permutation walk limited to 8 tokens, got " +
                               std::to_string(n));
    }
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    long long count = 0;
    do {
      walk_permutation(scorer, ids, masking, perm, out.base_value, out.phi, memo_ptr);
      ++count;
    } while (std::next_permutation(perm.begin(), perm.end()));
    out.n_permutations = count;
    for (double& p : out.phi) p /= static_cast<double>(count);
    return out;
  }

  out.n_permutations = n_permutations;
  std::vector<int> perm(static_cast<std::size_t>(n));
  for (long long p = 0; p < n_permutations; ++p) {
    // Per-permutation substream; ordering of permutations does not matter.
    Rng rng(Rng::mix(seed, static_cast<std::uint64_t>(p)));
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    walk_permutation(scorer, ids, masking, perm, out.base_value, out.phi, memo_ptr);
  }
  for (double& p : out.phi) p /= static_cast<double>(n_permutations);
  return out;
}

NodeAttribution map_tokens_to_ast(const TokenAttribution& tokens,
                                  std::span<const minilang::Span> token_spans,
                                  const minilang::Ast& ast) {
  if (tokens.phi.size() != token_spans.size()) {
    throw Error("token attribution and span list differ in length");
  }
  const minilang::Span root_span = ast.node(ast.root).span;
  for (const auto& span : token_spans) {
    if (span.start < root_span.start || span.end > root_span.end) {
      throw SpanMismatchError("token span [" + std::to_string(span.start) + ", " +
                              std::to_string(span.end) + ") lies outside the root span");
    }
  }

  NodeAttribution out;
  out.phi_node.assign(ast.nodes.size(), 0.0);
  out.covered_tokens.assign(ast.nodes.size(), {});
  for (const auto& node : ast.nodes) {
    for (std::size_t t = 0; t < token_spans.size(); ++t) {
      if (node.span.overlaps(token_spans[t])) {
        out.phi_node[static_cast<std::size_t>(node.id)] += tokens.phi[t];
        out.covered_tokens[static_cast<std::size_t>(node.id)].push_back(static_cast<int>(t));
      }
    }
  }
  return out;
}

EnsembleAttribution aggregate_models(std::span<const NodeAttribution> members) {
  if (members.empty()) throw EmptyEnsembleError("aggregate_models over zero members");
  const std::size_t n = members.front().phi_node.size();
  for (const auto& m : members) {
    if (m.phi_node.size() != n) {
      throw NodeSetMismatchError("node attributions cover different node sets");
    }
  }
  EnsembleAttribution out;
  out.member_count = static_cast<int>(members.size());
  out.phi_node.assign(n, 0.0);
  for (const auto& m : members) {
    for (std::size_t i = 0; i < n; ++i) out.phi_node[i] += m.phi_node[i];
  }
  for (double& v : out.phi_node) v /= static_cast<double>(members.size());
  return out;
}

namespace {

struct Rgb {
  int r, g, b;
};

constexpr Rgb kNonTermRed{181, 64, 58};
constexpr Rgb kNeutral{220, 219, 219};
constexpr Rgb kTermBlue{76, 96, 202};

std::string hex_color(double t) {
  // t in [-1, 1]: red for positive (non-termination evidence), blue for
  // negative, neutral gray at zero.
  const Rgb& target = t >= 0.0 ? kNonTermRed : kTermBlue;
  const double a = std::min(1.0, std::abs(t));
  auto mixc = [&](int from, int to) {
    return static_cast<int>(std::lround(from + a * (to - from)));
  };
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", mixc(kNeutral.r, target.r),
                mixc(kNeutral.g, target.g), mixc(kNeutral.b, target.b));
  return std::string(buf);
}

std::string escape_label(const std::string& text) {
  std::string out;
  for (char c : text) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

std::string node_label(const minilang::AstNode& node) {
  std::string label = minilang::kind_name(node.kind);
  if (!node.label.empty()) {
    label += ' ';
    label += node.label;
  }
  return label;
}

}  // namespace

std::string export_dot(const minilang::Ast& ast, std::span<const double> phi_node) {
  if (phi_node.size() != ast.nodes.size()) {
    throw Error("attribution must cover every node");
  }
  double max_abs = 0.0;
  for (double v : phi_node) max_abs = std::max(max_abs, std::abs(v));

  auto rel = [&](double v) { return max_abs > 0.0 ? std::abs(v) / max_abs : 0.0; };

  std::string out;
  out += "digraph attributed_ast {\n";
  out += "  node [shape=ellipse, style=filled, fontname=\"Helvetica\", fontsize=10];\n";
  char line[256];
  for (const auto& node : ast.nodes) {
    const double v = phi_node[static_cast<std::size_t>(node.id)];
    const double r = rel(v);
    const double width = 0.40 + 1.20 * r;   // floor size at |phi| = 0
    const double height = 0.30 + 0.80 * r;
    const double t = max_abs > 0.0 ? v / max_abs : 0.0;
    std::snprintf(line, sizeof(line),
                  "  n%d [label=\"%s\", width=%.2f, height=%.2f, fixedsize=true, "
                  "fillcolor=\"%s\", tooltip=\"phi=%.6g\"];\n",
                  node.id, escape_label(node_label(node)).c_str(), width, height,
                  hex_color(t).c_str(), v);
    out += line;
  }
  for (const auto& node : ast.nodes) {
    for (int child : node.children) {
      const double pen = 0.60 + 3.40 * rel(phi_node[static_cast<std::size_t>(child)]);
      std::snprintf(line, sizeof(line), "  n%d -> n%d [penwidth=%.2f];\n", node.id, child,
                    pen);
      out += line;
    }
  }
  out += "}\n";
  return out;
}

std::string export_json(const minilang::Ast& ast, std::span<const double> phi_node,
                        double base_value, double full_value) {
  if (phi_node.size() != ast.nodes.size()) {
    throw Error("attribution must cover every node");
  }
  json nodes = json::array();
  json edges = json::array();
  for (const auto& node : ast.nodes) {
    nodes.push_back(json{{"id", node.id},
                         {"kind", minilang::kind_name(node.kind)},
                         {"span", {node.span.start, node.span.end}},
                         {"phi", phi_node[static_cast<std::size_t>(node.id)]}});
    for (int child : node.children) edges.push_back(json::array({node.id, child}));
  }
  return json{{"nodes", nodes},
              {"edges", edges},
              {"base_value", base_value},
              {"full_value", full_value}}
      .dump();
}

std::string export_attributed_graph(const minilang::Ast& ast,
                                    std::span<const double> phi_node, ExportFormat format,
                                    double base_value, double full_value) {
  if (format == ExportFormat::DOT) return export_dot(ast, phi_node);
  return export_json(ast, phi_node, base_value, full_value);
}

Scorer model_scorer(const model::Model& member) {
  return [m = member](const std::vector<int>& ids) {
    return model::forward(m, ids).prob_nonterm;
  };
}

}  // namespace termcast::attribution
