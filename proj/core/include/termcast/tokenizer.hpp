#pragma once

#include <string_view>
#include <vector>

#include "termcast/minilang.hpp"

namespace termcast::model {

// Fixed vocabulary layout. Identifiers hash into a shared bucket range;
// integer literals bucket by clamped value. MASK is reserved for the
// attribution masking rule and never produced by tokenize().
inline constexpr int kUnkId = 0;
inline constexpr int kMaskId = 1;
inline constexpr int kIdentBucketBase = 19;
inline constexpr int kIdentBuckets = 32;
inline constexpr int kIntBucketBase = 51;
inline constexpr int kIntBuckets = 64;
inline constexpr int kVocabSize = 128;

struct TokenSequence {
  std::vector<int> ids;
  std::vector<minilang::Span> spans;  // one per token, into the original source
  int vocab_size = kVocabSize;

  std::size_t size() const { return ids.size(); }
};

// Lexeme-level tokenizer with exact byte spans. Unknown characters map to
// UNK and keep their span, so any text tokenizes.
TokenSequence tokenize(std::string_view source);

int identifier_bucket(std::string_view name);

}  // namespace termcast::model
