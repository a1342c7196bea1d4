// Copyright 2026 The cissl-lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CISSL_COMMON_HPP_
#define CISSL_COMMON_HPP_

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace cissl {

// Raised on violated preconditions and malformed inputs.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when a split cannot be carved from the pool.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised on file system failures; the message carries the path.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Rng = std::mt19937_64;

/// Builds an independent generator for `stream` under a user seed. Distinct
/// streams of one seed never share state.
inline Rng make_rng(std::int64_t seed, std::uint32_t stream) {
  const auto s = static_cast<std::uint64_t>(seed);
  std::seed_seq seq{static_cast<std::uint32_t>(s & 0xffffffffu),
                    static_cast<std::uint32_t>(s >> 32), stream, 0x5eedu};
  return Rng(seq);
}

// Stream identifiers used across the library.
enum RngStream : std::uint32_t {
  kStreamPool = 1,
  kStreamSplit = 2,
  kStreamInit = 3,
  kStreamTrain = 4,
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw InvalidArgument(what);
}

}  // namespace cissl

#endif  // CISSL_COMMON_HPP_
