// SPDX-License-Identifier: Apache-2.0
#include "mpk/collectives.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "runtime_internal.hpp"

namespace mpk {

namespace {

// Reserved tags; user tags are >= 0 and kAnyTag never matches these.
constexpr int kTagBarrierArrive = -2;
constexpr int kTagBarrierRelease = -3;
constexpr int kTagBcast = -4;
constexpr int kTagScatter = -5;
constexpr int kTagGather = -6;
constexpr int kTagAlltoall = -7;
constexpr int kTagReduce = -8;

using detail::Internal;

std::size_t as_index(RankId rank) { return static_cast<std::size_t>(rank.value); }

void check_root(const Communicator& comm, RankId root) {
  if (root.value < 0 || root.value >= comm.size()) {
    throw Error(ErrorKind::InvalidRank,
                "root " + std::to_string(root.value) + " outside world of size " + std::to_string(comm.size()));
  }
}

[[noreturn]] void length_mismatch(const std::string& what) { throw Error(ErrorKind::LengthMismatch, what); }

void expect_kind(const Payload& payload, PayloadKind kind, int from) {
  if (payload.kind() != kind) {
    throw Error(ErrorKind::KindMismatch, "rank " + std::to_string(from) + " contributed " +
                                             std::string(to_string(payload.kind())) + ", expected " +
                                             std::string(to_string(kind)));
  }
}

template <class T>
void fold_into(std::vector<T>& acc, const std::vector<T>& next, ReduceOp op) {
  for (std::size_t i = 0; i < acc.size(); ++i) {
    switch (op) {
      case ReduceOp::Sum: acc[i] = acc[i] + next[i]; break;
      case ReduceOp::Max: acc[i] = std::max(acc[i], next[i]); break;
      case ReduceOp::Min: acc[i] = std::min(acc[i], next[i]); break;
    }
  }
}

}  // namespace

std::size_t CountsDispls::extent() const {
  std::size_t end = 0;
  for (std::size_t r = 0; r < counts.size() && r < displs.size(); ++r) end = std::max(end, displs[r] + counts[r]);
  return end;
}

void CountsDispls::validate(int world_size) const { validate(world_size, extent()); }

void CountsDispls::validate(int world_size, std::size_t buffer_length) const {
  const auto n = static_cast<std::size_t>(world_size);
  if (counts.size() != n || displs.size() != n) {
    length_mismatch("counts/displs need " + std::to_string(n) + " entries, got " + std::to_string(counts.size()) +
                    "/" + std::to_string(displs.size()));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return displs[a] < displs[b]; });
  std::size_t covered = 0;
  for (auto r : order) {
    if (counts[r] == 0) continue;
    if (displs[r] < covered) length_mismatch("segment of rank " + std::to_string(r) + " overlaps another segment");
    covered = displs[r] + counts[r];
    if (covered > buffer_length) {
      length_mismatch("segment of rank " + std::to_string(r) + " exceeds buffer of " + std::to_string(buffer_length));
    }
  }
}

CountsDispls CountsDispls::packed(std::vector<std::size_t> counts) {
  CountsDispls layout;
  layout.displs.resize(counts.size());
  std::exclusive_scan(counts.begin(), counts.end(), layout.displs.begin(), std::size_t{0});
  layout.counts = std::move(counts);
  return layout;
}

void barrier(Communicator& comm) {
  Internal::Scope scope(comm, "barrier");
  if (comm.is_master()) {
    for (int r = 1; r < comm.size(); ++r) Internal::recv(comm, RankId{r}, kTagBarrierArrive);
    for (int r = 1; r < comm.size(); ++r) Internal::send(comm, RankId{r}, kTagBarrierRelease, Payload{});
  } else {
    Internal::send(comm, kMaster, kTagBarrierArrive, Payload{});
    Internal::recv(comm, kMaster, kTagBarrierRelease);
  }
}

Payload bcast(Communicator& comm, RankId root, Payload payload) {
  Internal::Scope scope(comm, "bcast");
  check_root(comm, root);
  if (comm.rank() != root) return Internal::recv(comm, root, kTagBcast).payload;
  for (int r = 0; r < comm.size(); ++r) {
    if (RankId{r} != root) Internal::send(comm, RankId{r}, kTagBcast, payload);
  }
  return payload;
}

Payload scatter(Communicator& comm, RankId root, const Payload& payload) {
  Internal::Scope scope(comm, "scatter");
  check_root(comm, root);
  if (comm.rank() != root) return Internal::recv(comm, root, kTagScatter).payload;

  const auto p = static_cast<std::size_t>(comm.size());
  if (payload.element_count() % p != 0) {
    length_mismatch("scatter of " + std::to_string(payload.element_count()) + " elements over " + std::to_string(p) +
                    " ranks");
  }
  const std::size_t k = payload.element_count() / p;
  for (std::size_t r = 0; r < p; ++r) {
    if (r != as_index(root)) Internal::send(comm, RankId{static_cast<int>(r)}, kTagScatter, payload.slice(r * k, k));
  }
  return payload.slice(as_index(root) * k, k);
}

Payload gatherv(Communicator& comm, RankId root, const Payload& contribution, const CountsDispls& layout) {
  Internal::Scope scope(comm, "gatherv");
  check_root(comm, root);
  layout.validate(comm.size());
  const auto me = as_index(comm.rank());
  if (contribution.element_count() != layout.counts[me]) {
    length_mismatch("rank " + std::to_string(me) + " contributes " + std::to_string(contribution.element_count()) +
                    " elements, layout expects " + std::to_string(layout.counts[me]));
  }
  if (comm.rank() != root) {
    Internal::send(comm, root, kTagGather, contribution);
    return Payload::zeros(contribution.kind(), 0);
  }

  Payload assembled = Payload::zeros(contribution.kind(), layout.extent());
  for (int r = 0; r < comm.size(); ++r) {
    const auto ri = static_cast<std::size_t>(r);
    if (RankId{r} == root) {
      assembled.write_at(layout.displs[ri], contribution);
      continue;
    }
    Payload part = Internal::recv(comm, RankId{r}, kTagGather).payload;
    expect_kind(part, contribution.kind(), r);
    if (part.element_count() != layout.counts[ri]) {
      length_mismatch("rank " + std::to_string(r) + " sent " + std::to_string(part.element_count()) +
                      " elements, layout expects " + std::to_string(layout.counts[ri]));
    }
    assembled.write_at(layout.displs[ri], part);
  }
  return assembled;
}

Payload gather(Communicator& comm, RankId root, const Payload& contribution) {
  Internal::Scope scope(comm, "gather");
  check_root(comm, root);
  const std::size_t k = contribution.element_count();
  if (comm.rank() != root) {
    Internal::send(comm, root, kTagGather, contribution);
    return Payload::zeros(contribution.kind(), 0);
  }
  const auto p = static_cast<std::size_t>(comm.size());
  Payload assembled = Payload::zeros(contribution.kind(), p * k);
  for (int r = 0; r < comm.size(); ++r) {
    if (RankId{r} == root) {
      assembled.write_at(as_index(root) * k, contribution);
      continue;
    }
    Payload part = Internal::recv(comm, RankId{r}, kTagGather).payload;
    expect_kind(part, contribution.kind(), r);
    if (part.element_count() != k) {
      length_mismatch("rank " + std::to_string(r) + " contributed " + std::to_string(part.element_count()) +
                      " elements, root contributed " + std::to_string(k));
    }
    assembled.write_at(static_cast<std::size_t>(r) * k, part);
  }
  return assembled;
}

Payload allgather(Communicator& comm, const Payload& contribution) {
  Internal::Scope scope(comm, "allgather");
  return bcast(comm, kMaster, gather(comm, kMaster, contribution));
}

Payload allgatherv(Communicator& comm, const Payload& contribution, const CountsDispls& layout) {
  Internal::Scope scope(comm, "allgatherv");
  return bcast(comm, kMaster, gatherv(comm, kMaster, contribution, layout));
}

Payload alltoallv(Communicator& comm, const Payload& payload, const CountsDispls& send_layout,
                  const CountsDispls& recv_layout) {
  Internal::Scope scope(comm, "alltoallv");
  const int p = comm.size();
  send_layout.validate(p, payload.element_count());
  recv_layout.validate(p);

  // Post every outgoing segment first so rendezvous traffic cannot deadlock.
  std::vector<Request> outgoing;
  outgoing.reserve(static_cast<std::size_t>(p));
  for (int j = 0; j < p; ++j) {
    const auto ji = static_cast<std::size_t>(j);
    outgoing.push_back(
        Internal::isend(comm, RankId{j}, kTagAlltoall, payload.slice(send_layout.displs[ji], send_layout.counts[ji])));
  }

  Payload assembled = Payload::zeros(payload.kind(), recv_layout.extent());
  for (int i = 0; i < p; ++i) {
    const auto ii = static_cast<std::size_t>(i);
    Payload part = Internal::recv(comm, RankId{i}, kTagAlltoall).payload;
    expect_kind(part, payload.kind(), i);
    if (part.element_count() != recv_layout.counts[ii]) {
      length_mismatch("rank " + std::to_string(i) + " sent " + std::to_string(part.element_count()) +
                      " elements, receive layout expects " + std::to_string(recv_layout.counts[ii]));
    }
    assembled.write_at(recv_layout.displs[ii], part);
  }
  comm.wait_all(outgoing);
  return assembled;
}

Payload alltoall(Communicator& comm, const Payload& payload) {
  Internal::Scope scope(comm, "alltoall");
  const auto p = static_cast<std::size_t>(comm.size());
  if (payload.element_count() % p != 0) {
    length_mismatch("alltoall of " + std::to_string(payload.element_count()) + " elements over " +
                    std::to_string(p) + " ranks");
  }
  const auto layout = CountsDispls::packed(std::vector<std::size_t>(p, payload.element_count() / p));
  return alltoallv(comm, payload, layout, layout);
}

Payload reduce(Communicator& comm, RankId root, const Payload& contribution, ReduceOp op) {
  Internal::Scope scope(comm, "reduce");
  check_root(comm, root);
  if (contribution.kind() == PayloadKind::Bytes) {
    throw Error(ErrorKind::KindMismatch, "byte payloads cannot be reduced");
  }
  if (comm.rank() != root) {
    Internal::send(comm, root, kTagReduce, contribution);
    return Payload::zeros(contribution.kind(), 0);
  }

  std::vector<Payload> parts(static_cast<std::size_t>(comm.size()));
  for (int r = 0; r < comm.size(); ++r) {
    auto& part = parts[static_cast<std::size_t>(r)];
    part = RankId{r} == root ? contribution : Internal::recv(comm, RankId{r}, kTagReduce).payload;
    expect_kind(part, contribution.kind(), r);
    if (part.element_count() != contribution.element_count()) {
      length_mismatch("rank " + std::to_string(r) + " contributed " + std::to_string(part.element_count()) +
                      " elements, root contributed " + std::to_string(contribution.element_count()));
    }
  }

  auto fold = [&](auto tag) {
    using T = decltype(tag);
    std::vector<T> acc = parts.front().as<T>();
    for (std::size_t r = 1; r < parts.size(); ++r) fold_into(acc, parts[r].as<T>(), op);
    return Payload(std::move(acc));
  };
  return contribution.kind() == PayloadKind::Float64 ? fold(double{}) : fold(std::int64_t{});
}

}  // namespace mpk
