#include "patchverify/error.hpp"

namespace patchverify {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Parse: return "ParseError";
    case ErrorKind::DanglingTarget: return "DanglingTarget";
    case ErrorKind::StackUnderflow: return "StackUnderflow";
    case ErrorKind::TypeFault: return "TypeFault";
    case ErrorKind::FuelExhausted: return "FuelExhausted";
    case ErrorKind::InvertedRange: return "InvertedRange";
    case ErrorKind::Collision: return "Collision";
    case ErrorKind::InvalidLine: return "InvalidLine";
    case ErrorKind::JumpIntoDeleted: return "JumpIntoDeleted";
    case ErrorKind::MismatchedDelete: return "MismatchedDelete";
    case ErrorKind::TypeMismatch: return "TypeMismatch";
    case ErrorKind::UnknownVariable: return "UnknownVariable";
    case ErrorKind::DepthMismatch: return "DepthMismatch";
    case ErrorKind::RulePreconditionFailed: return "RulePreconditionFailed";
    case ErrorKind::UnsupportedInstruction: return "UnsupportedInstruction";
    case ErrorKind::NotStraightLine: return "NotStraightLine";
    case ErrorKind::StackShapeError: return "StackShapeError";
    case ErrorKind::AtomBudgetExceeded: return "AtomBudgetExceeded";
    case ErrorKind::TransformException: return "TransformException";
    case ErrorKind::DeletionNotSupported: return "DeletionNotSupported";
    case ErrorKind::MethodMismatch: return "MethodMismatch";
  }
  return "UnknownError";
}

ErrorCategory category(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Parse:
    case ErrorKind::DanglingTarget:
    case ErrorKind::InvertedRange:
    case ErrorKind::Collision:
    case ErrorKind::InvalidLine:
    case ErrorKind::JumpIntoDeleted:
    case ErrorKind::MismatchedDelete:
      return ErrorCategory::Structural;
    case ErrorKind::TypeMismatch:
    case ErrorKind::UnknownVariable:
    case ErrorKind::DepthMismatch:
    case ErrorKind::RulePreconditionFailed:
      return ErrorCategory::Typing;
    // The static verifier raises StackUnderflow too; the interpreter's use
    // of it is distinguished by context, not by category.
    case ErrorKind::StackUnderflow:
      return ErrorCategory::Typing;
    case ErrorKind::TypeFault:
    case ErrorKind::FuelExhausted:
      return ErrorCategory::Runtime;
    case ErrorKind::UnsupportedInstruction:
    case ErrorKind::NotStraightLine:
    case ErrorKind::StackShapeError:
    case ErrorKind::AtomBudgetExceeded:
    case ErrorKind::TransformException:
    case ErrorKind::DeletionNotSupported:
    case ErrorKind::MethodMismatch:
      return ErrorCategory::Logic;
  }
  return ErrorCategory::Logic;
}

Error::Error(ErrorKind kind, const std::string& message, std::optional<Line> line)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message),
      kind_(kind),
      message_(message),
      line_(line) {}

ErrorCategory Error::effective_category() const {
  if (kind_ == ErrorKind::RulePreconditionFailed && cause_) return category(*cause_);
  return category(kind_);
}

Error Error::with_cause(ErrorKind cause) const {
  Error copy = *this;
  copy.cause_ = cause;
  return copy;
}

Error Error::with_item(std::size_t item) const {
  Error copy = *this;
  copy.item_ = item;
  return copy;
}

Error Error::with_line(Line line) const {
  Error copy = *this;
  copy.line_ = line;
  return copy;
}

}  // namespace patchverify
