// Copyright 2026 The qncf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <boost/random/binomial_distribution.hpp>
#include <boost/random/normal_distribution.hpp>

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>

#include "qncf/error.hpp"

namespace qncf {

namespace detail {

// Stafford "Mix13" finalizer, as used by SplitMix64.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t hash_tag(std::string_view tag) {
  // FNV-1a, then mixed.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return mix64(h);
}

}  // namespace detail

/// Counter-based splittable generator. Output k of a stream is a pure function
/// of (key, k), so a stream can be split into independent children without
/// consuming draws, and replay is exact.
///
/// Satisfies UniformRandomBitGenerator so Boost/std distributions accept it.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  explicit RandomStream(std::uint64_t seed, std::string path = "root")
      : key_(detail::mix64(seed ^ 0x6a09e667f3bcc909ULL)), seed_(seed), path_(std::move(path)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    ++counter_;
    return detail::mix64(key_ + counter_ * 0x9e3779b97f4a7c15ULL);
  }

  /// Child stream identified by a tag. Splitting does not advance this stream.
  RandomStream split(std::string_view tag) const {
    RandomStream child(*this);
    child.key_ = detail::mix64(key_ ^ detail::hash_tag(tag));
    child.counter_ = 0;
    child.path_ = path_ + "/" + std::string(tag);
    return child;
  }

  RandomStream split(std::uint64_t index) const { return split(std::to_string(index)); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

  double normal() { return boost::random::normal_distribution<double>(0.0, 1.0)(*this); }

  /// Number of successes in n independent Bernoulli(p) trials.
  std::uint64_t binomial(std::uint64_t n, double p) {
    if (n == 0 || p <= 0.0) return 0;
    if (p >= 1.0) return n;
    if (n > (std::uint64_t{1} << 53))
      throw PreconditionError("binomial: trial count exceeds 2^53");
    boost::random::binomial_distribution<std::int64_t, double> dist(
        static_cast<std::int64_t>(n), p);
    return static_cast<std::uint64_t>(dist(*this));
  }

  /// Index drawn with probability proportional to weights (non-negative).
  std::size_t categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (!(total > 0.0)) throw PreconditionError("categorical: weights sum to zero");
    const double target = uniform() * total;
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (weights[i] <= 0.0) continue;
      acc += weights[i];
      last_positive = i;
      if (target < acc) return i;
    }
    return last_positive;
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t draws() const { return counter_; }
  const std::string& path() const { return path_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::uint64_t seed_;
  std::string path_;
};

}  // namespace qncf
