#include "flowph/filtration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <tuple>

#include <fmt/format.h>

#include "detail/contact.hpp"
#include "detail/parallel.hpp"
#include "flowph/errors.hpp"
#include "flowph/knn.hpp"

namespace flowph {

bool filtration_less(const Edge& a, const Edge& b) noexcept {
  return std::tie(a.value, a.i, a.j) < std::tie(b.value, b.i, b.j);
}

bool filtration_less(const Triangle& a, const Triangle& b) noexcept {
  return std::tie(a.value, a.i, a.j, a.k) < std::tie(b.value, b.i, b.j, b.k);
}

FilteredComplex::FilteredComplex(std::size_t vertex_count, std::vector<Edge> edges, double scale_cap)
    : FilteredComplex(vertex_count, std::move(edges), scale_cap, true) {
  validate();
}

FilteredComplex FilteredComplex::unchecked(std::size_t vertex_count, std::vector<Edge> edges, double scale_cap) {
  return FilteredComplex(vertex_count, std::move(edges), scale_cap, false);
}

FilteredComplex::FilteredComplex(std::size_t vertex_count, std::vector<Edge> edges, double scale_cap, bool sort)
    : vertex_count_(vertex_count), edges_(std::move(edges)), scale_cap_(scale_cap) {
  if (sort) {
    for (auto& e : edges_) {
      if (e.j < e.i) std::swap(e.i, e.j);
    }
    std::sort(edges_.begin(), edges_.end(), [](const Edge& a, const Edge& b) { return filtration_less(a, b); });
  }
  // CSR adjacency; edges with out-of-range endpoints are left for validate().
  offsets_.assign(vertex_count_ + 1, 0);
  for (const auto& e : edges_) {
    if (e.i >= vertex_count_ || e.j >= vertex_count_ || e.i == e.j) continue;
    ++offsets_[e.i + 1];
    ++offsets_[e.j + 1];
  }
  for (std::size_t v = 0; v < vertex_count_; ++v) offsets_[v + 1] += offsets_[v];
  adjacency_.resize(offsets_.back());
  std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (const auto& e : edges_) {
    if (e.i >= vertex_count_ || e.j >= vertex_count_ || e.i == e.j) continue;
    adjacency_[fill[e.i]++] = Neighbor{e.j, e.value};
    adjacency_[fill[e.j]++] = Neighbor{e.i, e.value};
  }
  for (std::size_t v = 0; v < vertex_count_; ++v) {
    std::sort(adjacency_.begin() + static_cast<std::ptrdiff_t>(offsets_[v]),
              adjacency_.begin() + static_cast<std::ptrdiff_t>(offsets_[v + 1]),
              [](const Neighbor& a, const Neighbor& b) { return a.vertex < b.vertex; });
  }
}

std::span<const FilteredComplex::Neighbor> FilteredComplex::neighbors(std::uint32_t v) const {
  if (v >= vertex_count_) throw InvalidArgument(fmt::format("vertex {} out of range", v));
  return {adjacency_.data() + offsets_[v], offsets_[v + 1] - offsets_[v]};
}

std::optional<double> FilteredComplex::edge_value(std::uint32_t a, std::uint32_t b) const {
  const auto adj = neighbors(a);
  const auto it = std::lower_bound(adj.begin(), adj.end(), b,
                                   [](const Neighbor& n, std::uint32_t v) { return n.vertex < v; });
  if (it == adj.end() || it->vertex != b) return std::nullopt;
  return it->value;
}

std::vector<Triangle> FilteredComplex::triangles() const {
  std::vector<Triangle> out;
  for (const auto& e : edges_) {
    // Each triangle is reported once: from the edge on its two smallest vertices.
    for_each_cofacet(e, [&](const Triangle& t) {
      if (t.i == e.i && t.j == e.j) out.push_back(t);
    });
  }
  std::sort(out.begin(), out.end(), [](const Triangle& a, const Triangle& b) { return filtration_less(a, b); });
  return out;
}

FilteredComplex FilteredComplex::snapshot(double eps) const {
  std::vector<Edge> kept;
  for (const auto& e : edges_) {
    if (e.value > eps) break;
    kept.push_back(e);
  }
  return FilteredComplex(vertex_count_, std::move(kept), std::min(eps, scale_cap_), false);
}

void FilteredComplex::validate() const {
  for (std::size_t s = 0; s < edges_.size(); ++s) {
    const auto& e = edges_[s];
    if (e.i >= e.j || e.j >= vertex_count_) {
      throw FiltrationOrderError(fmt::format("edge ({}, {}) is not a valid simplex on {} vertices", e.i, e.j,
                                             vertex_count_));
    }
    if (!std::isfinite(e.value) || e.value < 0.0) {
      throw FiltrationOrderError(fmt::format("edge ({}, {}) has invalid value {}", e.i, e.j, e.value));
    }
    if (s > 0 && !filtration_less(edges_[s - 1], e)) {
      const auto& p = edges_[s - 1];
      throw FiltrationOrderError(fmt::format("edge ({}, {}) at {} is not after edge ({}, {}) at {}", e.i, e.j,
                                             e.value, p.i, p.j, p.value));
    }
  }
  for (std::size_t v = 0; v < vertex_count_; ++v) {
    for (std::size_t a = offsets_[v] + 1; a < offsets_[v + 1]; ++a) {
      if (adjacency_[a].vertex == adjacency_[a - 1].vertex) {
        throw FiltrationOrderError(fmt::format("edge ({}, {}) appears twice", std::min<std::size_t>(v, adjacency_[a].vertex),
                                               std::max<std::size_t>(v, adjacency_[a].vertex)));
      }
    }
  }
}

// ---------------------------------------------------------------------------

namespace {

std::uint32_t vertex_id(std::size_t v) { return static_cast<std::uint32_t>(v); }

void check_field(const TimeSeriesPointCloud& cloud, const CovarianceField& field) {
  if (field.size() != cloud.size()) {
    throw InvalidArgument(fmt::format("covariance field has {} entries for {} points", field.size(), cloud.size()));
  }
  for (const auto& c : field.entries()) {
    if (static_cast<std::size_t>(c.sigma.rows()) != cloud.dim()) {
      throw InvalidArgument("covariance field dimension does not match the cloud");
    }
  }
}

/// Runs pair_value(i, j) for all i < j in parallel over rows and concatenates
/// the surviving edges in (i, j) order.
template <class PairValue>
std::vector<Edge> collect_edges(std::size_t n, PairValue&& pair_value) {
  std::vector<std::vector<Edge>> rows(n);
  detail::parallel_for(n, [&](std::size_t i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (const std::optional<double> value = pair_value(i, j)) rows[i].push_back({vertex_id(i), vertex_id(j), *value});
    }
  });
  std::vector<Edge> edges;
  for (auto& row : rows) edges.insert(edges.end(), row.begin(), row.end());
  return edges;
}

template <int D>
struct FixedField {
  using Mat = Eigen::Matrix<double, D, D>;
  using Vec = Eigen::Matrix<double, D, 1>;
  std::vector<Mat> sigma;
  std::vector<Vec> x;

  FixedField(const TimeSeriesPointCloud& cloud, const CovarianceField& field) {
    sigma.reserve(cloud.size());
    x.reserve(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      sigma.emplace_back(field[i].sigma);
      x.emplace_back(cloud.point(i).transpose());
    }
  }

  detail::ContactPair<D> pair(std::size_t i, std::size_t j) const { return {sigma[i], sigma[j], x[i] - x[j]}; }
};

template <int D>
std::vector<Edge> ellipsoid_edges_at(const TimeSeriesPointCloud& cloud, const CovarianceField& field, double eps,
                                     const IntersectionOptions& options) {
  const FixedField<D> fixed(cloud, field);
  return collect_edges(cloud.size(), [&](std::size_t i, std::size_t j) -> std::optional<double> {
    const auto out = detail::golden_contact(fixed.pair(i, j), options.tol, options.max_iter,
                                            options.early_exit ? eps : 0.0);
    if (!detail::within_contact(out.g_max, eps)) return std::nullopt;
    return eps;
  });
}

template <int D>
std::vector<Edge> ellipsoid_births(const TimeSeriesPointCloud& cloud, const CovarianceField& field, double eps_max,
                                   double rel_tol, const IntersectionOptions& options) {
  const FixedField<D> fixed(cloud, field);
  return collect_edges(cloud.size(), [&](std::size_t i, std::size_t j) -> std::optional<double> {
    const auto out = detail::birth_scale(fixed.pair(i, j), eps_max, rel_tol, options.tol, options.max_iter);
    switch (out.status) {
      case detail::BirthStatus::beyond_cap:
        return std::nullopt;
      case detail::BirthStatus::inconsistent:
        throw ConsistencyError(
            fmt::format("pair ({}, {}): non-monotone intersection bracket around eps = {}", i, j, out.scale));
      case detail::BirthStatus::born:
        break;
    }
    return out.scale;
  });
}

}  // namespace

FilteredComplex ellipsoid_complex_at_scale(const TimeSeriesPointCloud& cloud, const CovarianceField& field,
                                           double eps, const IntersectionOptions& options) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw InvalidArgument("scale eps must be positive and finite");
  check_field(cloud, field);
  std::vector<Edge> edges;
  switch (cloud.dim()) {
    case 2:
      edges = ellipsoid_edges_at<2>(cloud, field, eps, options);
      break;
    case 3:
      edges = ellipsoid_edges_at<3>(cloud, field, eps, options);
      break;
    default:
      edges = ellipsoid_edges_at<Eigen::Dynamic>(cloud, field, eps, options);
  }
  return FilteredComplex(cloud.size(), std::move(edges), eps);
}

FilteredComplex ellipsoid_filtration(const TimeSeriesPointCloud& cloud, const CovarianceField& field,
                                     double eps_max, double rel_tol, const IntersectionOptions& options) {
  if (!(eps_max > 0.0) || !std::isfinite(eps_max)) throw InvalidArgument("eps_max must be positive and finite");
  if (!(rel_tol > 0.0 && rel_tol < 1.0)) throw InvalidArgument("rel_tol must lie in (0, 1)");
  check_field(cloud, field);
  std::vector<Edge> edges;
  switch (cloud.dim()) {
    case 2:
      edges = ellipsoid_births<2>(cloud, field, eps_max, rel_tol, options);
      break;
    case 3:
      edges = ellipsoid_births<3>(cloud, field, eps_max, rel_tol, options);
      break;
    default:
      edges = ellipsoid_births<Eigen::Dynamic>(cloud, field, eps_max, rel_tol, options);
  }
  return FilteredComplex(cloud.size(), std::move(edges), eps_max);
}

FilteredComplex vietoris_rips_filtration(const TimeSeriesPointCloud& cloud, double r_max) {
  if (!(r_max > 0.0)) throw InvalidArgument("r_max must be positive");
  auto edges = collect_edges(cloud.size(), [&](std::size_t i, std::size_t j) -> std::optional<double> {
    const double d = std::sqrt(cloud.squared_distance(i, j));
    if (d > r_max) return std::nullopt;
    return d;
  });
  return FilteredComplex(cloud.size(), std::move(edges), r_max);
}

FilteredComplex rips_filtration(const Eigen::MatrixXd& distances, double r_max) {
  if (!(r_max > 0.0)) throw InvalidArgument("r_max must be positive");
  if (distances.rows() != distances.cols()) throw InvalidArgument("distance matrix must be square");
  const auto n = static_cast<std::size_t>(distances.rows());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double a = distances(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      const double b = distances(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i));
      if (std::isnan(a) || a < 0.0 || a != b) {
        throw InvalidArgument(fmt::format("distance matrix entry ({}, {}) is not a symmetric non-negative value", i, j));
      }
    }
  }
  auto edges = collect_edges(n, [&](std::size_t i, std::size_t j) -> std::optional<double> {
    const double d = distances(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    if (d > r_max) return std::nullopt;
    return d;
  });
  return FilteredComplex(n, std::move(edges), r_max);
}

void FermatParams::validate() const {
  if (!(p >= 1.0) || !std::isfinite(p)) throw InvalidArgument(fmt::format("Fermat exponent p = {} must be >= 1", p));
}

Eigen::MatrixXd fermat_distance_matrix(const TimeSeriesPointCloud& cloud, const FermatParams& params) {
  params.validate();
  const auto n = static_cast<Eigen::Index>(cloud.size());
  auto hop = [&](Eigen::Index a, Eigen::Index b) {
    return std::pow(std::sqrt(cloud.squared_distance(static_cast<std::size_t>(a), static_cast<std::size_t>(b))),
                    params.p);
  };

  constexpr double kInf = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd dist(n, n);

  if (params.knn == 0 || params.knn + 1 >= cloud.size()) {
    for (Eigen::Index a = 0; a < n; ++a) {
      dist(a, a) = 0.0;
      for (Eigen::Index b = a + 1; b < n; ++b) dist(a, b) = dist(b, a) = hop(a, b);
    }
    // Floyd-Warshall; the matrix stays symmetric because each relaxation is.
    for (Eigen::Index m = 0; m < n; ++m) {
      for (Eigen::Index a = 0; a < n; ++a) {
        const double am = dist(a, m);
        for (Eigen::Index b = 0; b < n; ++b) {
          const double via = am + dist(m, b);
          if (via < dist(a, b)) dist(a, b) = via;
        }
      }
    }
    return dist;
  }

  // Symmetrised k-NN graph, Dijkstra from every source.
  const KnnIndex index(cloud);
  std::vector<std::vector<std::pair<Eigen::Index, double>>> graph(static_cast<std::size_t>(n));
  for (Eigen::Index a = 0; a < n; ++a) {
    for (const auto nb : index.query(static_cast<std::size_t>(a), params.knn)) {
      const auto b = static_cast<Eigen::Index>(nb);
      const double w = hop(std::min(a, b), std::max(a, b));
      graph[static_cast<std::size_t>(a)].emplace_back(b, w);
      graph[static_cast<std::size_t>(b)].emplace_back(a, w);
    }
  }
  detail::parallel_for(static_cast<std::size_t>(n), [&](std::size_t src) {
    std::vector<double> best(static_cast<std::size_t>(n), kInf);
    using Item = std::pair<double, Eigen::Index>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
    best[src] = 0.0;
    queue.emplace(0.0, static_cast<Eigen::Index>(src));
    while (!queue.empty()) {
      const auto [d, u] = queue.top();
      queue.pop();
      if (d > best[static_cast<std::size_t>(u)]) continue;
      for (const auto& [v, w] : graph[static_cast<std::size_t>(u)]) {
        const double cand = d + w;
        if (cand < best[static_cast<std::size_t>(v)]) {
          best[static_cast<std::size_t>(v)] = cand;
          queue.emplace(cand, v);
        }
      }
    }
    for (Eigen::Index b = 0; b < n; ++b) dist(static_cast<Eigen::Index>(src), b) = best[static_cast<std::size_t>(b)];
  });
  // Path sums accumulate in different orders from each end; keep the smaller.
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = a + 1; b < n; ++b) dist(a, b) = dist(b, a) = std::min(dist(a, b), dist(b, a));
  }
  return dist;
}

FilteredComplex fermat_filtration(const TimeSeriesPointCloud& cloud, const FermatParams& params, double r_max) {
  return rips_filtration(fermat_distance_matrix(cloud, params), r_max);
}

}  // namespace flowph
