#include "flowph/knn.hpp"

#include <algorithm>
#include <numeric>
#include <queue>
#include <utility>

#include <fmt/format.h>

#include "flowph/errors.hpp"

namespace flowph {

namespace {

constexpr std::uint32_t kLeafSize = 16;

using Candidate = std::pair<double, std::size_t>;  // (squared distance, index)

// Bounded max-heap keeping the k smallest candidates under lexicographic order.
class BestK {
 public:
  explicit BestK(std::size_t k) : k_(k) {}

  bool full() const { return heap_.size() == k_; }
  const Candidate& worst() const { return heap_.top(); }

  void offer(Candidate c) {
    if (k_ == 0) return;
    if (!full()) {
      heap_.push(c);
    } else if (c < heap_.top()) {
      heap_.pop();
      heap_.push(c);
    }
  }

  std::vector<std::size_t> sorted_indices() {
    std::vector<Candidate> items;
    items.reserve(heap_.size());
    while (!heap_.empty()) {
      items.push_back(heap_.top());
      heap_.pop();
    }
    std::sort(items.begin(), items.end());
    std::vector<std::size_t> out;
    out.reserve(items.size());
    for (const auto& c : items) out.push_back(c.second);
    return out;
  }

 private:
  std::size_t k_;
  std::priority_queue<Candidate> heap_;
};

}  // namespace

KnnIndex::KnnIndex(const TimeSeriesPointCloud& cloud, Backend backend) : cloud_(&cloud), backend_(backend) {
  if (backend_ == Backend::automatic) {
    backend_ = cloud.size() <= kExhaustiveLimit ? Backend::exhaustive : Backend::kd_tree;
  }
  if (backend_ == Backend::kd_tree) {
    order_.resize(cloud.size());
    std::iota(order_.begin(), order_.end(), 0U);
    nodes_.reserve(2 * cloud.size() / kLeafSize + 1);
    build(0, static_cast<std::uint32_t>(cloud.size()));
  }
}

std::int32_t KnnIndex::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(Node{begin, end});
  if (end - begin <= kLeafSize) return id;

  const auto& pts = cloud_->points();
  std::uint32_t best_axis = 0;
  double best_spread = -1.0;
  for (Eigen::Index a = 0; a < pts.cols(); ++a) {
    double lo = pts(order_[begin], a);
    double hi = lo;
    for (std::uint32_t r = begin + 1; r < end; ++r) {
      lo = std::min(lo, pts(order_[r], a));
      hi = std::max(hi, pts(order_[r], a));
    }
    if (hi - lo > best_spread) {
      best_spread = hi - lo;
      best_axis = static_cast<std::uint32_t>(a);
    }
  }
  if (best_spread <= 0.0) return id;  // all coincident: keep as a leaf

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) { return pts(a, best_axis) < pts(b, best_axis); });
  const double split = pts(order_[mid], best_axis);

  const std::int32_t left = build(begin, mid);
  const std::int32_t right = build(mid, end);
  nodes_[static_cast<std::size_t>(id)].left = left;
  nodes_[static_cast<std::size_t>(id)].right = right;
  nodes_[static_cast<std::size_t>(id)].axis = best_axis;
  nodes_[static_cast<std::size_t>(id)].split = split;
  return id;
}

std::vector<std::size_t> KnnIndex::query(std::size_t i, std::size_t k) const {
  const std::size_t n = cloud_->size();
  if (i >= n) throw InvalidArgument(fmt::format("query index {} out of range for {} points", i, n));
  if (k >= n) throw InvalidArgument(fmt::format("k = {} must be smaller than n = {}", k, n));
  BestK best(k);
  if (k == 0) return {};

  if (backend_ == Backend::exhaustive) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) best.offer({cloud_->squared_distance(i, j), j});
    }
    return best.sorted_indices();
  }

  const auto& pts = cloud_->points();
  const auto query_row = static_cast<Eigen::Index>(i);
  // Iterative depth-first descent, nearer child first.
  std::vector<std::pair<std::int32_t, double>> stack;  // (node, lower bound on squared distance)
  stack.emplace_back(0, 0.0);
  while (!stack.empty()) {
    const auto [id, bound] = stack.back();
    stack.pop_back();
    if (best.full() && bound > best.worst().first) continue;
    const Node& node = nodes_[static_cast<std::size_t>(id)];
    if (node.left < 0) {
      for (std::uint32_t r = node.begin; r < node.end; ++r) {
        const std::size_t j = order_[r];
        if (j != i) best.offer({cloud_->squared_distance(i, j), j});
      }
      continue;
    }
    const double diff = pts(query_row, node.axis) - node.split;
    const double gap = diff * diff;
    const std::int32_t near = diff < 0.0 ? node.left : node.right;
    const std::int32_t far = diff < 0.0 ? node.right : node.left;
    stack.emplace_back(far, std::max(bound, gap));
    stack.emplace_back(near, bound);
  }
  return best.sorted_indices();
}

}  // namespace flowph
