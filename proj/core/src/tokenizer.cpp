#include "termcast/tokenizer.hpp"

#include <charconv>

#include "termcast/digest.hpp"

namespace termcast::model {

namespace {

using minilang::lex::TokKind;

int fixed_id(TokKind kind) {
  switch (kind) {
    case TokKind::KwSkip: return 2;
    case TokKind::KwWhile: return 3;
    case TokKind::KwIf: return 4;
    case TokKind::KwElse: return 5;
    case TokKind::Assign: return 6;
    case TokKind::Gt: return 7;
    case TokKind::Lt: return 8;
    case TokKind::Eq: return 9;
    case TokKind::Ne: return 10;
    case TokKind::Plus: return 11;
    case TokKind::Minus: return 12;
    case TokKind::Star: return 13;
    case TokKind::LParen: return 14;
    case TokKind::RParen: return 15;
    case TokKind::LBrace: return 16;
    case TokKind::RBrace: return 17;
    case TokKind::Semi: return 18;
    default: return kUnkId;
  }
}

int integer_bucket(std::string_view text) {
  unsigned long long value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    value = kIntBuckets - 1;  // oversized literal, clamp
  }
  if (value >= static_cast<unsigned long long>(kIntBuckets)) value = kIntBuckets - 1;
  return kIntBucketBase + static_cast<int>(value);
}

}  // namespace

int identifier_bucket(std::string_view name) {
  return kIdentBucketBase + static_cast<int>(fnv1a64(name) % kIdentBuckets);
}

TokenSequence tokenize(std::string_view source) {
  TokenSequence seq;
  for (const auto& tok : minilang::lex::scan(source)) {
    if (tok.kind == TokKind::End) break;
    int id;
    switch (tok.kind) {
      case TokKind::Ident: id = identifier_bucket(tok.text); break;
      case TokKind::Int: id = integer_bucket(tok.text); break;
      case TokKind::Unknown: id = kUnkId; break;
      default: id = fixed_id(tok.kind); break;
    }
    seq.ids.push_back(id);
    seq.spans.push_back(tok.span);
  }
  return seq;
}

}  // namespace termcast::model
