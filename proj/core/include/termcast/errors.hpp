#pragma once

#include <stdexcept>
#include <string>

namespace termcast {

// Base for every library error so callers can catch one family.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnknownTemplateError : public Error { public: using Error::Error; };
class GenerationMismatchError : public Error { public: using Error::Error; };
class TooFewMinorityError : public Error { public: using Error::Error; };
class SequenceTooLongError : public Error { public: using Error::Error; };
class NonFiniteGradientError : public Error { public: using Error::Error; };
class BetaOutOfRangeError : public Error { public: using Error::Error; };
class EmptyMinorityError : public Error { public: using Error::Error; };
class ValidationMissingClassError : public Error { public: using Error::Error; };
class SingleClassInputError : public Error { public: using Error::Error; };
class NoPositivesError : public Error { public: using Error::Error; };
class EmptyEnsembleError : public Error { public: using Error::Error; };
class EnsembleSpecError : public Error { public: using Error::Error; };
class TooManyTokensError : public Error { public: using Error::Error; };
class SpanMismatchError : public Error { public: using Error::Error; };
class NodeSetMismatchError : public Error { public: using Error::Error; };
class IoError : public Error { public: using Error::Error; };

}  // namespace termcast
