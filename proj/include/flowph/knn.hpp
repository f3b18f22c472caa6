#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "flowph/signal_model.hpp"

namespace flowph {

/// Exact k-nearest-neighbour queries over the points of a cloud.
///
/// Candidates are ordered by (squared distance, index), so ties go to the
/// smaller index. The query point itself is excluded. Small clouds are
/// scanned exhaustively; larger ones use a kd-tree whose pruning keeps every
/// candidate that could still win a tie, so both backends return identical
/// sets.
class KnnIndex {
 public:
  enum class Backend { automatic, exhaustive, kd_tree };

  static constexpr std::size_t kExhaustiveLimit = 2000;

  explicit KnnIndex(const TimeSeriesPointCloud& cloud, Backend backend = Backend::automatic);

  /// The k nearest j != i, nearest first. Requires k < n.
  std::vector<std::size_t> query(std::size_t i, std::size_t k) const;

  Backend backend() const noexcept { return backend_; }

 private:
  struct Node {
    std::uint32_t begin;  // range into order_
    std::uint32_t end;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::uint32_t axis = 0;
    double split = 0.0;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);

  const TimeSeriesPointCloud* cloud_;
  Backend backend_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace flowph
