#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "termcast/errors.hpp"
#include "termcast/minilang.hpp"
#include "termcast/model.hpp"

namespace termcast::attribution {

// Scores a full-length token id vector (absent positions already replaced
// by the masking rule) with a probability of non-termination.
using Scorer = std::function<double(const std::vector<int>&)>;

// Absent tokens are replaced by a reserved vocabulary id rather than
// deleted, so positions stay aligned with the positional encoding.
struct MaskingRule {
  int mask_id = model::kMaskId;
};

enum class Method { Exact, Sampled };

struct TokenAttribution {
  std::vector<double> phi;  // probability points, one per token
  double base_value = 0.0;  // f(all masked)
  double full_value = 0.0;  // f(original input)
  Method method = Method::Exact;
  long long n_permutations = 0;  // Sampled only
  std::uint64_t seed = 0;        // Sampled only
};

// Exact Shapley values by coalition enumeration (2^n scorer calls,
// memoized). Throws TooManyTokensError for more than 12 tokens. Satisfies
// efficiency, symmetry and the dummy axiom up to float tolerance.
TokenAttribution shapley_exact(const Scorer& scorer, std::span<const int> ids,
                               const MaskingRule& masking = {});

// Permutation-sampling estimate: mean marginal contribution over
// `n_permutations` random token orderings, deterministic in seed (each
// permutation draws its own substream, so parallel evaluation would agree
// with serial). With exhaustive=true, enumerates all n! orderings instead
// and equals the exact values up to float tolerance (n <= 8).
TokenAttribution shapley_sampled(const Scorer& scorer, std::span<const int> ids,
                                 const MaskingRule& masking, long long n_permutations,
                                 std::uint64_t seed, bool exhaustive = false);

struct NodeAttribution {
  std::vector<double> phi_node;                 // indexed by node id
  std::vector<std::vector<int>> covered_tokens; // token indices per node
};

// phi_node = sum of phi over tokens whose span overlaps the node's span;
// a token overlapping a node contributes fully. Throws SpanMismatchError
// if a token lies outside the root span.
NodeAttribution map_tokens_to_ast(const TokenAttribution& tokens,
                                  std::span<const minilang::Span> token_spans,
                                  const minilang::Ast& ast);

struct EnsembleAttribution {
  std::vector<double> phi_node;
  int member_count = 0;
};

// Unweighted per-node mean across models. All inputs must cover the same
// node set (NodeSetMismatchError otherwise).
EnsembleAttribution aggregate_models(std::span<const NodeAttribution> members);

enum class ExportFormat { DOT, JSON };

// DOT: node width/height grow with |phi| above a floor, fill color on a
// red-blue diverging scale (red = evidence for non-termination), edge
// penwidth grows with the child's |phi|. JSON mirrors the numbers exactly.
std::string export_attributed_graph(const minilang::Ast& ast,
                                    std::span<const double> phi_node,
                                    ExportFormat format, double base_value = 0.0,
                                    double full_value = 0.0);

std::string export_dot(const minilang::Ast& ast, std::span<const double> phi_node);
std::string export_json(const minilang::Ast& ast, std::span<const double> phi_node,
                        double base_value, double full_value);

// Scorer view of a trained model: masked ids in, prob_nonterm out.
Scorer model_scorer(const model::Model& member);

}  // namespace termcast::attribution
