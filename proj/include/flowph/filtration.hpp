#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "flowph/ellipsoid.hpp"
#include "flowph/neighborhoods.hpp"
#include "flowph/signal_model.hpp"

namespace flowph {

struct Edge {
  std::uint32_t i;  // i < j
  std::uint32_t j;
  double value;

  friend bool operator==(const Edge&, const Edge&) = default;
};

struct Triangle {
  std::uint32_t i;  // i < j < k
  std::uint32_t j;
  std::uint32_t k;
  double value;

  friend bool operator==(const Triangle&, const Triangle&) = default;
};

/// Filtration order within a dimension: value, then lexicographic vertices.
bool filtration_less(const Edge& a, const Edge& b) noexcept;
bool filtration_less(const Triangle& a, const Triangle& b) noexcept;

/// Filtered flag complex of dimension <= 2.
///
/// Vertices all enter at 0. Edges are stored in filtration order; a triangle
/// exists whenever its three edges do, entering at the largest of their
/// values, so triangles are enumerated on demand rather than stored.
class FilteredComplex {
 public:
  struct Neighbor {
    std::uint32_t vertex;
    double value;
  };

  /// Sorts the edges into filtration order and validates them.
  FilteredComplex(std::size_t vertex_count, std::vector<Edge> edges, double scale_cap);

  /// Keeps the caller's edge order untouched; validate() reports problems.
  static FilteredComplex unchecked(std::size_t vertex_count, std::vector<Edge> edges, double scale_cap);

  std::size_t vertex_count() const noexcept { return vertex_count_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  /// Largest scale represented; edges beyond it were not built.
  double scale_cap() const noexcept { return scale_cap_; }

  /// Neighbours of v sorted by vertex index.
  std::span<const Neighbor> neighbors(std::uint32_t v) const;
  std::optional<double> edge_value(std::uint32_t a, std::uint32_t b) const;

  /// Every triangle of the flag complex, in filtration order.
  std::vector<Triangle> triangles() const;
  /// Calls fn(Triangle) for each triangle containing the given edge.
  template <class Fn>
  void for_each_cofacet(const Edge& e, Fn&& fn) const;

  /// Edges with value <= eps (and hence the triangles they span).
  FilteredComplex snapshot(double eps) const;

  /// Throws FiltrationOrderError naming the first offending simplex pair.
  void validate() const;

 private:
  FilteredComplex(std::size_t vertex_count, std::vector<Edge> edges, double scale_cap, bool sort);

  std::size_t vertex_count_;
  std::vector<Edge> edges_;
  double scale_cap_;
  std::vector<std::size_t> offsets_;
  std::vector<Neighbor> adjacency_;
};

template <class Fn>
void FilteredComplex::for_each_cofacet(const Edge& e, Fn&& fn) const {
  const auto a = neighbors(e.i);
  const auto b = neighbors(e.j);
  std::size_t p = 0;
  std::size_t q = 0;
  while (p < a.size() && q < b.size()) {
    if (a[p].vertex < b[q].vertex) {
      ++p;
    } else if (b[q].vertex < a[p].vertex) {
      ++q;
    } else {
      const std::uint32_t k = a[p].vertex;
      double value = e.value;
      if (a[p].value > value) value = a[p].value;
      if (b[q].value > value) value = b[q].value;
      std::uint32_t v0 = e.i, v1 = e.j, v2 = k;
      if (v2 < v1) std::swap(v1, v2);
      if (v1 < v0) std::swap(v0, v1);
      fn(Triangle{v0, v1, v2, value});
      ++p;
      ++q;
    }
  }
}

// ---------------------------------------------------------------------------

/// Algorithm-1 complex at a single scale: edge (i, j) iff E_i(eps) and
/// E_j(eps) intersect. Every edge carries the value eps.
FilteredComplex ellipsoid_complex_at_scale(const TimeSeriesPointCloud& cloud, const CovarianceField& field,
                                           double eps, const IntersectionOptions& options = {});

/// Continuous ellipsoidal filtration: each pair enters at its birth scale;
/// pairs still apart at eps_max are omitted. With identity covariances the
/// edge values are half the Euclidean distances (ball radius convention).
FilteredComplex ellipsoid_filtration(const TimeSeriesPointCloud& cloud, const CovarianceField& field,
                                     double eps_max, double rel_tol = 1e-6,
                                     const IntersectionOptions& options = {});

/// Vietoris-Rips in the diameter convention: edge value = ||x_i - x_j||.
FilteredComplex vietoris_rips_filtration(const TimeSeriesPointCloud& cloud, double r_max);

/// Rips construction over an arbitrary symmetric dissimilarity matrix.
FilteredComplex rips_filtration(const Eigen::MatrixXd& distances, double r_max);

struct FermatParams {
  double p = 2.0;
  /// 0 = exact shortest paths on the complete graph; otherwise restrict hops
  /// to a symmetrised k-nearest-neighbour graph.
  std::size_t knn = 0;

  void validate() const;
};

/// All-pairs minimum of sum ||x_{a+1} - x_a||^p over discrete paths through
/// the sample.
Eigen::MatrixXd fermat_distance_matrix(const TimeSeriesPointCloud& cloud, const FermatParams& params);

FilteredComplex fermat_filtration(const TimeSeriesPointCloud& cloud, const FermatParams& params, double r_max);

}  // namespace flowph
