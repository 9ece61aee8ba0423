// SPDX-License-Identifier: Apache-2.0
#include "mpk/runtime.hpp"

#include <atomic>
#include <charconv>
#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <mutex>
#include <sstream>
#include <thread>

#include "runtime_internal.hpp"

namespace mpk {

using Clock = std::chrono::steady_clock;

namespace {

double seconds_between(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

std::atomic<std::uint64_t> next_world_id{1};

std::string describe_rank(int rank) { return rank == kAnySource.value ? std::string("any") : std::to_string(rank); }

std::string describe_tag(int tag) { return tag == kAnyTag ? std::string("any") : std::to_string(tag); }

}  // namespace

std::string_view to_string(Protocol protocol) noexcept {
  return protocol == Protocol::Eager ? "eager" : "rendezvous";
}

double wtime() noexcept { return std::chrono::duration<double>(Clock::now().time_since_epoch()).count(); }

std::size_t parse_byte_count(std::string_view text) {
  if (text == "inf" || text == "unlimited") return kUnlimited;
  std::size_t value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc{} || ptr != end) {
    throw Error(ErrorKind::InvalidConfig, "not a decimal byte count: '" + std::string(text) + "'");
  }
  return value;
}

WorldOptions WorldOptions::from_env() {
  WorldOptions options;
  if (const char* raw = std::getenv("MPK_EAGER_THRESHOLD"); raw != nullptr) {
    options.eager_threshold = parse_byte_count(raw);
  }
  return options;
}

std::string format_trace_line(const TraceEvent& event) {
  std::string_view name;
  switch (event.kind) {
    case TraceKind::Send: name = "send"; break;
    case TraceKind::RecvPost: name = "recv_post"; break;
    case TraceKind::Deliver: name = "deliver"; break;
    case TraceKind::SendComplete: name = "send_complete"; break;
  }
  std::ostringstream out;
  out << event.ts_ns << ' ' << name << ' ' << event.src << ' ' << event.dst << ' ' << event.tag << ' ' << event.bytes
      << ' ' << to_string(event.protocol);
  return out.str();
}

namespace detail {

struct RequestData {
  enum class Op { Send, Recv };

  Op op = Op::Send;
  int owner = 0;
  // Written under the world lock; read lock-free by Request::state().
  std::atomic<RequestState> state{RequestState::Pending};
  int src_filter = kAnySource.value;
  int tag_filter = kAnyTag;
  std::optional<Message> result;
};

namespace {

struct Inbound {
  Envelope envelope;
  Payload payload;
  // Set for rendezvous traffic: the sender is held until this is matched.
  std::shared_ptr<RequestData> sender;
};

enum class RankStatus { Running, Blocked, Finished };

struct RankSlot {
  std::deque<Inbound> unexpected;
  std::size_t buffered_bytes = 0;
  std::deque<std::shared_ptr<RequestData>> posted;

  RankStatus status = RankStatus::Running;
  std::function<bool()> wake;
  std::string site;
  std::string blocked_on;

  // Owned by the rank's thread.
  int call_depth = 0;
  Clock::time_point call_start;
  double call_seconds = 0.0;
  double idle_seconds = 0.0;
  double wall_seconds = 0.0;
};

struct WorldAborted {};

bool matches(int src_filter, int tag_filter, const Envelope& env) {
  const bool src_ok = src_filter == kAnySource.value || src_filter == env.source.value;
  const bool tag_ok = tag_filter == kAnyTag ? env.tag >= 0 : tag_filter == env.tag;
  return src_ok && tag_ok;
}

}  // namespace

class World {
 public:
  World(int size, const WorldOptions& options)
      : size_(size), id_(next_world_id++), options_(options), slots_(static_cast<std::size_t>(size)) {}

  int size() const noexcept { return size_; }
  std::uint64_t id() const noexcept { return id_; }
  std::size_t eager_threshold() const noexcept { return options_.eager_threshold; }

  WorldReport run(const std::function<void(Communicator&)>& program) {
    start_ = Clock::now();
    {
      std::vector<std::jthread> threads;
      threads.reserve(slots_.size());
      for (int r = 0; r < size_; ++r) {
        threads.emplace_back([this, r, &program] { rank_main(r, program); });
      }
    }
    const auto end = Clock::now();

    if (panic_) {
      throw RankPanicked(panic_->rank, panic_->message, panic_->has_cause, panic_->cause);
    }
    if (!deadlock_sites_.empty()) throw DeadlockDetected(deadlock_sites_);

    WorldReport report;
    report.wall_seconds = seconds_between(start_, end);
    report.messages_sent = sent_;
    report.messages_received = received_;
    report.trace = std::move(trace_);
    for (const auto& slot : slots_) {
      report.undelivered += slot.unexpected.size();
      const double idle = slot.idle_seconds;
      report.timings.push_back(TimingBreakdown::from_wall(slot.wall_seconds, slot.call_seconds - idle, idle));
    }
    return report;
  }

  void validate_peer(RankId rank, bool allow_any) const {
    if (allow_any && rank == kAnySource) return;
    if (rank.value < 0 || rank.value >= size_) {
      throw Error(ErrorKind::InvalidRank,
                  "rank " + std::to_string(rank.value) + " outside world of size " + std::to_string(size_));
    }
  }

  std::shared_ptr<RequestData> start_send(int self, RankId dst, int tag, Payload payload) {
    validate_peer(dst, false);
    auto request = std::make_shared<RequestData>();
    request->op = RequestData::Op::Send;
    request->owner = self;

    const std::size_t bytes = payload.size_bytes();
    Envelope env{RankId{self}, dst, tag, bytes, bytes <= options_.eager_threshold ? Protocol::Eager : Protocol::Rendezvous};

    std::lock_guard lock(mu_);
    throw_if_aborted();
    ++sent_;
    auto& box = slots_[static_cast<std::size_t>(dst.value)];

    for (auto it = box.posted.begin(); it != box.posted.end(); ++it) {
      if (matches((*it)->src_filter, (*it)->tag_filter, env)) {
        auto receiver = *it;
        box.posted.erase(it);
        record(TraceKind::Send, env);
        deliver(*receiver, Message{env, std::move(payload)});
        complete_send(*request, env);
        cv_.notify_all();
        return request;
      }
    }

    if (env.protocol == Protocol::Eager && box.buffered_bytes + bytes <= options_.mailbox_capacity) {
      record(TraceKind::Send, env);
      box.buffered_bytes += bytes;
      box.unexpected.push_back(Inbound{env, std::move(payload), nullptr});
      complete_send(*request, env);
    } else {
      // Above the threshold, or the receiver cannot buffer any more.
      env.protocol = Protocol::Rendezvous;
      record(TraceKind::Send, env);
      box.unexpected.push_back(Inbound{env, std::move(payload), request});
    }
    cv_.notify_all();
    return request;
  }

  std::shared_ptr<RequestData> start_recv(int self, RankId src, int tag) {
    validate_peer(src, true);
    auto request = std::make_shared<RequestData>();
    request->op = RequestData::Op::Recv;
    request->owner = self;
    request->src_filter = src.value;
    request->tag_filter = tag;

    std::lock_guard lock(mu_);
    throw_if_aborted();
    auto& box = slots_[static_cast<std::size_t>(self)];
    record(TraceKind::RecvPost, Envelope{src, RankId{self}, tag, 0, Protocol::Eager});

    for (auto it = box.unexpected.begin(); it != box.unexpected.end(); ++it) {
      if (matches(src.value, tag, it->envelope)) {
        Inbound inbound = std::move(*it);
        box.unexpected.erase(it);
        if (inbound.sender) {
          complete_send(*inbound.sender, inbound.envelope);
        } else {
          box.buffered_bytes -= inbound.envelope.length;
        }
        deliver(*request, Message{inbound.envelope, std::move(inbound.payload)});
        cv_.notify_all();
        return request;
      }
    }
    box.posted.push_back(request);
    return request;
  }

  std::optional<Message> wait(int self, RequestData& request, const std::string& what) {
    std::unique_lock lock(mu_);
    if (request.state == RequestState::Consumed) {
      throw Error(ErrorKind::HandleAlreadyConsumed, "request already waited on or tested complete");
    }
    block_until(lock, self, [&request] { return request.state == RequestState::Complete; }, what);
    request.state = RequestState::Consumed;
    return std::move(request.result);
  }

  std::optional<Completion> test(RequestData& request) {
    std::lock_guard lock(mu_);
    switch (request.state) {
      case RequestState::Consumed:
        throw Error(ErrorKind::HandleAlreadyConsumed, "request already waited on or tested complete");
      case RequestState::Pending:
        return std::nullopt;
      case RequestState::Complete:
        break;
    }
    request.state = RequestState::Consumed;
    return Completion{std::move(request.result)};
  }

  void enter_call(int self, std::string site) {
    auto& slot = slots_[static_cast<std::size_t>(self)];
    if (slot.call_depth++ == 0) {
      slot.call_start = Clock::now();
      std::lock_guard lock(mu_);
      slot.site = std::move(site);
    }
  }

  void leave_call(int self) {
    auto& slot = slots_[static_cast<std::size_t>(self)];
    if (--slot.call_depth == 0) slot.call_seconds += seconds_between(slot.call_start, Clock::now());
  }

 private:
  struct Panic {
    int rank;
    std::string message;
    bool has_cause;
    ErrorKind cause;
  };

  void rank_main(int rank, const std::function<void(Communicator&)>& program) {
    auto& slot = slots_[static_cast<std::size_t>(rank)];
    const auto begin = Clock::now();
    try {
      Communicator comm(this, rank);
      program(comm);
    } catch (const WorldAborted&) {
    } catch (const Error& e) {
      record_panic(rank, e.what(), true, e.kind());
    } catch (const std::exception& e) {
      record_panic(rank, e.what(), false, ErrorKind::RankPanicked);
    } catch (...) {
      record_panic(rank, "unknown exception", false, ErrorKind::RankPanicked);
    }
    slot.wall_seconds = seconds_between(begin, Clock::now());

    std::lock_guard lock(mu_);
    slot.status = RankStatus::Finished;
    slot.call_depth = 0;
    check_deadlock_locked();
    cv_.notify_all();
  }

  void record_panic(int rank, std::string message, bool has_cause, ErrorKind cause) {
    std::lock_guard lock(mu_);
    if (!panic_) panic_ = Panic{rank, std::move(message), has_cause, cause};
    aborted_ = true;
    cv_.notify_all();
  }

  void throw_if_aborted() const {
    if (aborted_) throw WorldAborted{};
  }

  void block_until(std::unique_lock<std::mutex>& lock, int self, std::function<bool()> ready, const std::string& what) {
    throw_if_aborted();
    if (ready()) return;
    auto& slot = slots_[static_cast<std::size_t>(self)];
    slot.status = RankStatus::Blocked;
    slot.wake = ready;
    slot.blocked_on = what;
    check_deadlock_locked();

    const auto begin = Clock::now();
    cv_.wait(lock, [&] { return aborted_ || ready(); });
    slot.idle_seconds += seconds_between(begin, Clock::now());
    slot.status = RankStatus::Running;
    slot.wake = nullptr;
    throw_if_aborted();
  }

  // Deadlock iff no rank is running and no blocked rank's wait condition
  // holds. Every state change happens under mu_ by a running rank, so the
  // last rank to block or finish sees the final picture.
  void check_deadlock_locked() {
    bool any_blocked = false;
    for (const auto& slot : slots_) {
      if (slot.status == RankStatus::Running) return;
      if (slot.status == RankStatus::Blocked) {
        if (slot.wake()) return;
        any_blocked = true;
      }
    }
    if (!any_blocked || aborted_) return;

    for (std::size_t r = 0; r < slots_.size(); ++r) {
      const auto& slot = slots_[r];
      if (slot.status != RankStatus::Blocked) continue;
      std::string site = "rank " + std::to_string(r) + ": " + slot.blocked_on;
      if (!slot.site.empty() && slot.site != slot.blocked_on) site += " in " + slot.site;
      deadlock_sites_.push_back(std::move(site));
    }
    aborted_ = true;
    cv_.notify_all();
  }

  void deliver(RequestData& receiver, Message message) {
    ++received_;
    record(TraceKind::Deliver, message.envelope);
    receiver.result = std::move(message);
    receiver.state = RequestState::Complete;
  }

  void complete_send(RequestData& sender, const Envelope& env) {
    record(TraceKind::SendComplete, env);
    sender.state = RequestState::Complete;
  }

  void record(TraceKind kind, const Envelope& env) {
    if (!options_.trace) return;
    const auto ts = std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start_).count();
    trace_.push_back(TraceEvent{ts, kind, env.source.value, env.dest.value, env.tag, env.length, env.protocol});
  }

  int size_;
  std::uint64_t id_;
  WorldOptions options_;
  Clock::time_point start_;

  std::mutex mu_;
  std::condition_variable cv_;
  std::vector<RankSlot> slots_;
  bool aborted_ = false;
  std::optional<Panic> panic_;
  std::vector<std::string> deadlock_sites_;
  std::size_t sent_ = 0;
  std::size_t received_ = 0;
  std::vector<TraceEvent> trace_;
};

void Internal::send(Communicator& comm, RankId dst, int tag, Payload payload) {
  const std::string what = "send(dst=" + std::to_string(dst.value) + ", tag=" + std::to_string(tag) + ")";
  Scope scope(comm, what);
  auto request = comm.world_->start_send(comm.rank_, dst, tag, std::move(payload));
  comm.world_->wait(comm.rank_, *request, what);
}

Message Internal::recv(Communicator& comm, RankId src, int tag) {
  const std::string what = "recv(src=" + describe_rank(src.value) + ", tag=" + describe_tag(tag) + ")";
  Scope scope(comm, what);
  auto request = comm.world_->start_recv(comm.rank_, src, tag);
  return std::move(*comm.world_->wait(comm.rank_, *request, what));
}

Request Internal::isend(Communicator& comm, RankId dst, int tag, Payload payload) {
  Scope scope(comm, "isend(dst=" + std::to_string(dst.value) + ", tag=" + std::to_string(tag) + ")");
  return Request(comm.world_->start_send(comm.rank_, dst, tag, std::move(payload)));
}

Internal::Scope::Scope(Communicator& comm, std::string site) : comm_(comm) {
  comm_.world_->enter_call(comm_.rank_, std::move(site));
}

Internal::Scope::~Scope() { comm_.world_->leave_call(comm_.rank_); }

}  // namespace detail

namespace {

void check_user_tag(int tag, bool allow_any) {
  if (allow_any && tag == kAnyTag) return;
  if (tag < 0) throw Error(ErrorKind::InvalidTag, "user tags must be >= 0, got " + std::to_string(tag));
}

}  // namespace

RequestState Request::state() const {
  if (!data_) return RequestState::Consumed;
  return data_->state.load();
}

int Communicator::size() const noexcept { return world_->size(); }
std::uint64_t Communicator::id() const noexcept { return world_->id(); }
std::size_t Communicator::eager_threshold() const noexcept { return world_->eager_threshold(); }

void Communicator::send(RankId dst, int tag, Payload payload) {
  check_user_tag(tag, false);
  detail::Internal::send(*this, dst, tag, std::move(payload));
}

Message Communicator::recv(RankId src, int tag) {
  check_user_tag(tag, true);
  return detail::Internal::recv(*this, src, tag);
}

Request Communicator::isend(RankId dst, int tag, Payload payload) {
  check_user_tag(tag, false);
  return detail::Internal::isend(*this, dst, tag, std::move(payload));
}

Request Communicator::irecv(RankId src, int tag) {
  check_user_tag(tag, true);
  detail::Internal::Scope scope(*this, "irecv");
  return Request(world_->start_recv(rank_, src, tag));
}

std::optional<Message> Communicator::wait(Request& request) {
  if (!request.data_) throw Error(ErrorKind::HandleAlreadyConsumed, "empty request handle");
  detail::Internal::Scope scope(*this, "wait");
  const bool is_send = request.data_->op == detail::RequestData::Op::Send;
  return world_->wait(rank_, *request.data_, is_send ? "wait(isend)" : "wait(irecv)");
}

std::optional<Completion> Communicator::test(Request& request) {
  if (!request.data_) throw Error(ErrorKind::HandleAlreadyConsumed, "empty request handle");
  detail::Internal::Scope scope(*this, "test");
  return world_->test(*request.data_);
}

void Communicator::wait_all(std::span<Request> requests) {
  detail::Internal::Scope scope(*this, "wait_all");
  for (auto& request : requests) wait(request);
}

WorldReport run_world(int world_size, const std::function<void(Communicator&)>& program, const WorldOptions& options) {
  if (world_size < 1) {
    throw Error(ErrorKind::InvalidConfig, "world_size must be >= 1, got " + std::to_string(world_size));
  }
  detail::World world(world_size, options);
  return world.run(program);
}

}  // namespace mpk
