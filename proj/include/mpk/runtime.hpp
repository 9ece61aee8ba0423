// SPDX-License-Identifier: Apache-2.0
//
// In-process message-passing runtime. Every virtual rank runs on its own
// thread; ranks exchange value-copied payloads through per-rank mailboxes
// using an eager or a rendezvous protocol chosen by message size.
#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "mpk/error.hpp"
#include "mpk/metrics.hpp"
#include "mpk/payload.hpp"

namespace mpk {

struct RankId {
  int value = 0;

  friend constexpr auto operator<=>(RankId, RankId) = default;
};

inline constexpr RankId kMaster{0};
inline constexpr RankId kAnySource{-1};
inline constexpr int kAnyTag = -1;

inline constexpr std::size_t kDefaultEagerThreshold = 65536;
inline constexpr std::size_t kDefaultMailboxCapacity = std::size_t{16} << 20;
inline constexpr std::size_t kUnlimited = std::numeric_limits<std::size_t>::max();

enum class Protocol { Eager, Rendezvous };

std::string_view to_string(Protocol protocol) noexcept;

struct Envelope {
  RankId source;
  RankId dest;
  int tag = 0;
  std::size_t length = 0;
  Protocol protocol = Protocol::Eager;
};

struct Message {
  Envelope envelope;
  Payload payload;
};

struct WorldOptions {
  std::size_t eager_threshold = kDefaultEagerThreshold;
  /// Bytes of unexpected eager traffic a rank will buffer before senders
  /// degrade to rendezvous.
  std::size_t mailbox_capacity = kDefaultMailboxCapacity;
  bool trace = false;

  /// Defaults, with eager_threshold taken from MPK_EAGER_THRESHOLD when set.
  /// Throws InvalidConfig if the variable is not a decimal byte count.
  static WorldOptions from_env();
};

/// Parses a decimal byte count; "inf" maps to kUnlimited.
std::size_t parse_byte_count(std::string_view text);

enum class TraceKind { Send, RecvPost, Deliver, SendComplete };

struct TraceEvent {
  std::int64_t ts_ns = 0;
  TraceKind kind = TraceKind::Send;
  int src = 0;
  int dst = 0;
  int tag = 0;
  std::size_t bytes = 0;
  Protocol protocol = Protocol::Eager;
};

/// `ts_ns event src dst tag bytes protocol`
std::string format_trace_line(const TraceEvent& event);

/// Host monotonic clock in seconds.
double wtime() noexcept;

enum class RequestState { Pending, Complete, Consumed };

namespace detail {
class World;
struct RequestData;
struct Internal;
}  // namespace detail

/// Handle to a non-blocking operation. Owned by the rank that created it.
class Request {
 public:
  Request() = default;

  RequestState state() const;
  bool valid() const noexcept { return data_ != nullptr; }

 private:
  friend class Communicator;
  friend struct detail::Internal;
  explicit Request(std::shared_ptr<detail::RequestData> data) : data_(std::move(data)) {}

  std::shared_ptr<detail::RequestData> data_;
};

/// Result of a successful test(): a message for receives, empty for sends.
struct Completion {
  std::optional<Message> message;
};

/// A rank's view of its world. User tags must be >= 0; negative tags are
/// reserved for collectives.
class Communicator {
 public:
  RankId rank() const noexcept { return RankId{rank_}; }
  int size() const noexcept;
  std::uint64_t id() const noexcept;
  std::size_t eager_threshold() const noexcept;
  bool is_master() const noexcept { return rank_ == kMaster.value; }

  void send(RankId dst, int tag, Payload payload);
  Message recv(RankId src = kAnySource, int tag = kAnyTag);
  Request isend(RankId dst, int tag, Payload payload);
  Request irecv(RankId src = kAnySource, int tag = kAnyTag);

  /// Blocks until complete, then consumes the handle.
  std::optional<Message> wait(Request& request);
  /// Never blocks. Consumes the handle when it reports completion.
  std::optional<Completion> test(Request& request);
  void wait_all(std::span<Request> requests);

  template <class T>
  void send(RankId dst, int tag, std::span<const T> values) {
    send(dst, tag, Payload::copy_of(values));
  }

  template <class T>
  std::vector<T> recv_as(RankId src = kAnySource, int tag = kAnyTag) {
    return std::move(recv(src, tag).payload).template take<T>();
  }

  double wtime() const noexcept { return mpk::wtime(); }

 private:
  friend class detail::World;
  friend struct detail::Internal;
  Communicator(detail::World* world, int rank) : world_(world), rank_(rank) {}

  detail::World* world_;
  int rank_;
};

struct WorldReport {
  std::vector<TimingBreakdown> timings;
  std::vector<TraceEvent> trace;
  std::size_t messages_sent = 0;
  std::size_t messages_received = 0;
  /// Messages sent but never received; they are drained when the world ends.
  std::size_t undelivered = 0;
  double wall_seconds = 0.0;
};

template <class R>
struct WorldResult : WorldReport {
  std::vector<R> values;
};

/// Runs `program` on world_size ranks and joins them. Throws DeadlockDetected
/// or RankPanicked when the world cannot complete.
WorldReport run_world(int world_size, const std::function<void(Communicator&)>& program,
                      const WorldOptions& options = {});

template <class F>
auto spawn_world(int world_size, F&& program, const WorldOptions& options = {}) {
  using R = std::invoke_result_t<F&, Communicator&>;
  if constexpr (std::is_void_v<R>) {
    return run_world(
        world_size, [&](Communicator& comm) { program(comm); }, options);
  } else {
    std::vector<std::optional<R>> slots(world_size > 0 ? static_cast<std::size_t>(world_size) : 0);
    WorldResult<R> result;
    static_cast<WorldReport&>(result) = run_world(
        world_size,
        [&](Communicator& comm) { slots[static_cast<std::size_t>(comm.rank().value)].emplace(program(comm)); },
        options);
    result.values.reserve(slots.size());
    for (auto& slot : slots) result.values.push_back(std::move(*slot));
    return result;
  }
}

}  // namespace mpk
