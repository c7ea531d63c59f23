#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace patchverify {

using Line = std::int32_t;

/// Marker for "control has left the method".
inline constexpr Line kHalt = 0;

enum class ErrorKind : std::uint8_t {
  Parse,
  DanglingTarget,
  StackUnderflow,
  TypeFault,
  FuelExhausted,
  InvertedRange,
  Collision,
  InvalidLine,
  JumpIntoDeleted,
  MismatchedDelete,
  TypeMismatch,
  UnknownVariable,
  DepthMismatch,
  RulePreconditionFailed,
  UnsupportedInstruction,
  NotStraightLine,
  StackShapeError,
  AtomBudgetExceeded,
  TransformException,
  DeletionNotSupported,
  MethodMismatch,
};

/// Coarse grouping used when two independent routes must agree on *why*
/// something was rejected but not necessarily on which check fired first.
enum class ErrorCategory : std::uint8_t {
  Structural,  // malformed code or edit: bad lines, dangling targets
  Typing,      // the static type system rejects the code
  Runtime,     // concrete interpreter faults
  Logic,       // predicate calculus / triple transformation
};

const char* to_string(ErrorKind kind);
ErrorCategory category(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message,
        std::optional<Line> line = std::nullopt);

  ErrorKind kind() const { return kind_; }
  /// The message without the kind prefix that what() carries.
  const std::string& message() const { return message_; }
  std::optional<Line> line() const { return line_; }

  /// For RulePreconditionFailed: the check that failed underneath.
  std::optional<ErrorKind> cause() const { return cause_; }
  /// Index of the patch item being applied when the error was raised.
  std::optional<std::size_t> item() const { return item_; }

  /// Category of the error, looking through RulePreconditionFailed.
  ErrorCategory effective_category() const;

  Error with_cause(ErrorKind cause) const;
  Error with_item(std::size_t item) const;
  Error with_line(Line line) const;

 private:
  ErrorKind kind_;
  std::string message_;
  std::optional<Line> line_;
  std::optional<ErrorKind> cause_;
  std::optional<std::size_t> item_;
};

}  // namespace patchverify
