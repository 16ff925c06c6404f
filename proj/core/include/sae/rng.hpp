// Copyright 2026 The saefh Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Counter-based random streams.
//
// Every draw is Philox4x32-10 applied to a 128-bit counter under a 64-bit key:
//   key     = user seed
//   counter = (draw index: 64 bits, stream id: 64 bits)
// A stream id is a SplitMix64 hash chain over a tuple such as
// (purpose, outer replicate, bootstrap replicate, area), so that any unit of
// work can reconstruct its own stream without shared state. Results are
// therefore identical for any thread count or scheduling order.

#ifndef SAE_RNG_HPP_
#define SAE_RNG_HPP_

#include <array>
#include <cstdint>
#include <initializer_list>

namespace sae {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

// One Philox4x32 block with 10 rounds.
PhiloxCounter philox4x32_10(PhiloxCounter counter, PhiloxKey key);

std::uint64_t splitmix64(std::uint64_t x);

// Order-sensitive hash of a tuple of integers.
std::uint64_t stream_id(std::initializer_list<std::uint64_t> parts);

enum class StreamPurpose : std::uint64_t {
  kSimulate = 1,
  kBootstrap = 2,
  kTest = 99,
};

class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream);

  std::uint32_t next_u32();
  // Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform();
  // Standard normal via Box-Muller; deviates come in pairs.
  double normal();

 private:
  void refill();

  PhiloxKey key_;
  std::uint64_t stream_;
  std::uint64_t block_index_ = 0;
  PhiloxCounter buffer_{};
  int buffer_pos_ = 4;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

}  // namespace sae

#endif  // SAE_RNG_HPP_
