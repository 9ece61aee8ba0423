// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "mpk/error.hpp"

namespace mpk {

enum class PayloadKind { Float64, Int64, Bytes };

std::string_view to_string(PayloadKind kind) noexcept;

template <class T>
inline constexpr bool is_payload_element_v =
    std::is_same_v<T, double> || std::is_same_v<T, std::int64_t> || std::is_same_v<T, std::byte>;

template <class T>
constexpr PayloadKind payload_kind_of() {
  static_assert(is_payload_element_v<T>, "payload elements are double, int64_t or std::byte");
  if constexpr (std::is_same_v<T, double>) {
    return PayloadKind::Float64;
  } else if constexpr (std::is_same_v<T, std::int64_t>) {
    return PayloadKind::Int64;
  } else {
    return PayloadKind::Bytes;
  }
}

/// Owned message data. Always holds its own copy; nothing is shared between
/// ranks.
class Payload {
 public:
  using Storage = std::variant<std::vector<double>, std::vector<std::int64_t>, std::vector<std::byte>>;

  Payload() : data_(std::vector<std::byte>{}) {}

  template <class T>
  explicit Payload(std::vector<T> values) : data_(std::move(values)) {}

  template <class T>
  static Payload copy_of(std::span<const T> values) {
    return Payload(std::vector<T>(values.begin(), values.end()));
  }

  PayloadKind kind() const noexcept { return static_cast<PayloadKind>(data_.index()); }

  std::size_t element_count() const noexcept {
    return std::visit([](const auto& v) { return v.size(); }, data_);
  }

  std::size_t size_bytes() const noexcept {
    return std::visit([](const auto& v) { return v.size() * sizeof(v[0]); }, data_);
  }

  template <class T>
  bool holds() const noexcept {
    return std::holds_alternative<std::vector<T>>(data_);
  }

  /// Typed view; throws KindMismatch when T does not match kind().
  template <class T>
  const std::vector<T>& as() const {
    if (!holds<T>()) throw_kind_mismatch(payload_kind_of<T>());
    return std::get<std::vector<T>>(data_);
  }

  template <class T>
  std::vector<T> take() && {
    if (!holds<T>()) throw_kind_mismatch(payload_kind_of<T>());
    return std::move(std::get<std::vector<T>>(data_));
  }

  /// Elements [first, first + count). Throws LengthMismatch when out of range.
  Payload slice(std::size_t first, std::size_t count) const;

  /// Copies `source` over elements starting at `offset`. Kinds must match.
  void write_at(std::size_t offset, const Payload& source);

  /// Zero-filled payload of the given kind.
  static Payload zeros(PayloadKind kind, std::size_t count);

  friend bool operator==(const Payload&, const Payload&) = default;

 private:
  [[noreturn]] void throw_kind_mismatch(PayloadKind wanted) const;

  Storage data_;
};

}  // namespace mpk
