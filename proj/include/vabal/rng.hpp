#pragma once

#include <cstdint>
#include <string_view>

namespace vabal {

/// Counter-based deterministic random stream. A stream is identified by a
/// 64-bit key derived from (seed, label, index); drawing advances only a
/// counter, so streams can be created cheaply per consumer (dataset
/// generation, weight init, minibatch shuffling, Monte-Carlo inference, ...)
/// and two streams with different keys never share a sequence. Workers in
/// parallel loops each take a substream keyed by their item index, which
/// makes results independent of scheduling order.
class RngStream {
 public:
  RngStream() = default;
  RngStream(std::uint64_t seed, std::string_view label, std::uint64_t index = 0);

  /// Derive an independent stream from this one. Does not disturb this
  /// stream's counter.
  RngStream substream(std::string_view label, std::uint64_t index = 0) const;

  std::uint64_t next_u64();

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform();

  /// Unbiased integer in [0, n). n must be > 0.
  std::uint64_t uniform_below(std::uint64_t n);

  /// Standard normal via Box-Muller. Pairs are cached, so consecutive calls
  /// consume one uniform pair per two normals.
  double normal();

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_ = 0x853c49e6748fea9bULL;
  std::uint64_t counter_ = 0;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace vabal
