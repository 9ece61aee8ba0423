// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mpk {

enum class ErrorKind {
  InvalidRank,
  InvalidTag,
  DeadlockDetected,
  RankPanicked,
  HandleAlreadyConsumed,
  LengthMismatch,
  KindMismatch,
  InvalidProcessorCount,
  NonPositiveTime,
  DomainError,
  TooFewPoints,
  WorkloadFailed,
  InvalidConfig,
  IndivisibleDecomposition,
  LimitTooSmall,
  MalformedInput,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Base error for everything the library throws on a contract violation.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised by spawn_world when every live rank is blocked in a communication
/// call and none of those calls can make progress.
class DeadlockDetected : public Error {
 public:
  explicit DeadlockDetected(std::vector<std::string> blocked_sites);

  const std::vector<std::string>& blocked_sites() const noexcept { return sites_; }

 private:
  std::vector<std::string> sites_;
};

/// Raised by spawn_world when a rank's program threw. The first failing rank
/// is reported; `cause()` carries the original library error kind if any.
class RankPanicked : public Error {
 public:
  RankPanicked(int rank, std::string message, bool has_cause, ErrorKind cause);

  int rank() const noexcept { return rank_; }
  const std::string& message() const noexcept { return message_; }
  bool has_cause() const noexcept { return has_cause_; }
  ErrorKind cause() const noexcept { return cause_; }

 private:
  int rank_;
  std::string message_;
  bool has_cause_;
  ErrorKind cause_;
};

}  // namespace mpk
