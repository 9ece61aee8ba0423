// SPDX-License-Identifier: Apache-2.0
//
// Collective operations composed linearly, in rank order, from the runtime's
// point-to-point calls. Every rank of the communicator must make the same
// sequence of collective calls.
#pragma once

#include <cstddef>
#include <vector>

#include "mpk/payload.hpp"
#include "mpk/runtime.hpp"

namespace mpk {

enum class ReduceOp { Sum, Max, Min };

/// Per-rank element counts and offsets into an assembled buffer. Segments
/// [displs[r], displs[r] + counts[r]) must be in-bounds and non-overlapping.
struct CountsDispls {
  std::vector<std::size_t> counts;
  std::vector<std::size_t> displs;

  /// Smallest buffer length that holds every segment.
  std::size_t extent() const;

  /// Throws LengthMismatch unless the layout is valid for world_size ranks and
  /// fits in a buffer of `buffer_length` elements (extent() when omitted).
  void validate(int world_size) const;
  void validate(int world_size, std::size_t buffer_length) const;

  /// Packed layout: displacements are the running sum of counts.
  static CountsDispls packed(std::vector<std::size_t> counts);
};

void barrier(Communicator& comm);

/// Non-root input is ignored.
Payload bcast(Communicator& comm, RankId root, Payload payload);

/// Root's payload must hold size()*k elements; rank r gets [r*k, (r+1)*k).
Payload scatter(Communicator& comm, RankId root, const Payload& payload);

/// Rank-ordered concatenation at root; non-root ranks get an empty payload.
Payload gather(Communicator& comm, RankId root, const Payload& contribution);
Payload gatherv(Communicator& comm, RankId root, const Payload& contribution, const CountsDispls& layout);

Payload allgather(Communicator& comm, const Payload& contribution);
Payload allgatherv(Communicator& comm, const Payload& contribution, const CountsDispls& layout);

/// Segment j of rank i lands as segment i of rank j.
Payload alltoall(Communicator& comm, const Payload& payload);
/// `send_layout` indexes the outgoing buffer by destination, `recv_layout`
/// the incoming buffer by source.
Payload alltoallv(Communicator& comm, const Payload& payload, const CountsDispls& send_layout,
                  const CountsDispls& recv_layout);

/// Elementwise reduction to root, folded in ascending rank order. Only
/// float64 and int64 payloads can be reduced.
Payload reduce(Communicator& comm, RankId root, const Payload& contribution, ReduceOp op);

// Typed conveniences.

template <class T>
std::vector<T> bcast(Communicator& comm, RankId root, std::vector<T> values) {
  return bcast(comm, root, Payload(std::move(values))).template take<T>();
}

template <class T>
std::vector<T> scatter(Communicator& comm, RankId root, std::vector<T> values) {
  return scatter(comm, root, Payload(std::move(values))).template take<T>();
}

template <class T>
std::vector<T> gather(Communicator& comm, RankId root, std::vector<T> values) {
  return gather(comm, root, Payload(std::move(values))).template take<T>();
}

template <class T>
std::vector<T> gatherv(Communicator& comm, RankId root, std::vector<T> values, const CountsDispls& layout) {
  return gatherv(comm, root, Payload(std::move(values)), layout).template take<T>();
}

template <class T>
std::vector<T> allgather(Communicator& comm, std::vector<T> values) {
  return allgather(comm, Payload(std::move(values))).template take<T>();
}

template <class T>
std::vector<T> allgatherv(Communicator& comm, std::vector<T> values, const CountsDispls& layout) {
  return allgatherv(comm, Payload(std::move(values)), layout).template take<T>();
}

template <class T>
std::vector<T> alltoall(Communicator& comm, std::vector<T> values) {
  return alltoall(comm, Payload(std::move(values))).template take<T>();
}

template <class T>
std::vector<T> alltoallv(Communicator& comm, std::vector<T> values, const CountsDispls& send_layout,
                         const CountsDispls& recv_layout) {
  return alltoallv(comm, Payload(std::move(values)), send_layout, recv_layout).template take<T>();
}

template <class T>
std::vector<T> reduce(Communicator& comm, RankId root, std::vector<T> values, ReduceOp op) {
  return reduce(comm, root, Payload(std::move(values)), op).template take<T>();
}

}  // namespace mpk
