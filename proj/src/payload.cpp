// SPDX-License-Identifier: Apache-2.0
#include "mpk/payload.hpp"

#include <algorithm>
#include <string>

namespace mpk {

std::string_view to_string(PayloadKind kind) noexcept {
  switch (kind) {
    case PayloadKind::Float64: return "float64";
    case PayloadKind::Int64: return "int64";
    case PayloadKind::Bytes: return "bytes";
  }
  return "unknown";
}

void Payload::throw_kind_mismatch(PayloadKind wanted) const {
  throw Error(ErrorKind::KindMismatch, "payload holds " + std::string(to_string(kind())) + ", expected " +
                                           std::string(to_string(wanted)));
}

Payload Payload::slice(std::size_t first, std::size_t count) const {
  if (first > element_count() || count > element_count() - first) {
    throw Error(ErrorKind::LengthMismatch, "slice [" + std::to_string(first) + ", " + std::to_string(first + count) +
                                               ") exceeds " + std::to_string(element_count()) + " elements");
  }
  return std::visit(
      [&](const auto& v) {
        using V = std::decay_t<decltype(v)>;
        return Payload(V(v.begin() + static_cast<std::ptrdiff_t>(first),
                         v.begin() + static_cast<std::ptrdiff_t>(first + count)));
      },
      data_);
}

void Payload::write_at(std::size_t offset, const Payload& source) {
  if (source.kind() != kind()) source.throw_kind_mismatch(kind());
  const std::size_t n = source.element_count();
  if (offset > element_count() || n > element_count() - offset) {
    throw Error(ErrorKind::LengthMismatch, "segment [" + std::to_string(offset) + ", " + std::to_string(offset + n) +
                                               ") exceeds " + std::to_string(element_count()) + " elements");
  }
  std::visit(
      [&](auto& dst) {
        using V = std::decay_t<decltype(dst)>;
        const auto& src = std::get<V>(source.data_);
        std::copy(src.begin(), src.end(), dst.begin() + static_cast<std::ptrdiff_t>(offset));
      },
      data_);
}

Payload Payload::zeros(PayloadKind kind, std::size_t count) {
  switch (kind) {
    case PayloadKind::Float64: return Payload(std::vector<double>(count));
    case PayloadKind::Int64: return Payload(std::vector<std::int64_t>(count));
    case PayloadKind::Bytes: break;
  }
  return Payload(std::vector<std::byte>(count));
}

}  // namespace mpk
