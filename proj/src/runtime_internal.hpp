// SPDX-License-Identifier: Apache-2.0
//
// Privileged access to the runtime for the collectives: reserved negative
// tags and call-scope accounting.
#pragma once

#include <string>

#include "mpk/runtime.hpp"

namespace mpk::detail {

struct Internal {
  static void send(Communicator& comm, RankId dst, int tag, Payload payload);
  static Message recv(Communicator& comm, RankId src, int tag);
  static Request isend(Communicator& comm, RankId dst, int tag, Payload payload);

  /// Marks the enclosing region as one communication call for timing and
  /// for deadlock reports. Nested scopes collapse into the outermost one.
  class Scope {
   public:
    Scope(Communicator& comm, std::string site);
    ~Scope();
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    Communicator& comm_;
  };
};

}  // namespace mpk::detail
