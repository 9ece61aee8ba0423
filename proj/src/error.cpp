// SPDX-License-Identifier: Apache-2.0
#include "mpk/error.hpp"

namespace mpk {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidRank: return "InvalidRank";
    case ErrorKind::InvalidTag: return "InvalidTag";
    case ErrorKind::DeadlockDetected: return "DeadlockDetected";
    case ErrorKind::RankPanicked: return "RankPanicked";
    case ErrorKind::HandleAlreadyConsumed: return "HandleAlreadyConsumed";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::KindMismatch: return "KindMismatch";
    case ErrorKind::InvalidProcessorCount: return "InvalidProcessorCount";
    case ErrorKind::NonPositiveTime: return "NonPositiveTime";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::TooFewPoints: return "TooFewPoints";
    case ErrorKind::WorkloadFailed: return "WorkloadFailed";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::IndivisibleDecomposition: return "IndivisibleDecomposition";
    case ErrorKind::LimitTooSmall: return "LimitTooSmall";
    case ErrorKind::MalformedInput: return "MalformedInput";
  }
  return "Unknown";
}

namespace {

std::string join_sites(const std::vector<std::string>& sites) {
  std::string out = "all ranks blocked with no message in flight";
  for (const auto& site : sites) {
    out += "; ";
    out += site;
  }
  return out;
}

}  // namespace

DeadlockDetected::DeadlockDetected(std::vector<std::string> blocked_sites)
    : Error(ErrorKind::DeadlockDetected, join_sites(blocked_sites)), sites_(std::move(blocked_sites)) {}

RankPanicked::RankPanicked(int rank, std::string message, bool has_cause, ErrorKind cause)
    : Error(ErrorKind::RankPanicked, "rank " + std::to_string(rank) + " failed: " + message),
      rank_(rank),
      message_(std::move(message)),
      has_cause_(has_cause),
      cause_(cause) {}

}  // namespace mpk
