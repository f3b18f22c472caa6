#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "flowph/filtration.hpp"

namespace flowph {

struct PersistencePair {
  int dim = 0;
  double birth = 0.0;
  double death = std::numeric_limits<double>::infinity();
  /// The class was still alive at the largest scale built.
  bool unresolved = false;
  /// H0: the merging edge. H1: the edge that creates the cycle.
  std::optional<Edge> edge;
  /// H1 only: the triangle that fills the cycle.
  std::optional<Triangle> triangle;

  double lifetime() const noexcept { return death - birth; }
};

struct PersistenceDiagram {
  std::vector<PersistencePair> pairs;
  double scale_cap = 0.0;

  /// Pairs of one dimension, in the order they were produced.
  std::vector<PersistencePair> in_dimension(int dim) const;
  /// Death with unresolved classes reported at the cap.
  double capped_death(const PersistencePair& p) const noexcept;
};

/// H0 and H1 over Z/2. H0 keeps all n pairs, zero-length merges included, and
/// an unresolved pair (death = +inf) per final component. H1 omits
/// zero-length pairs; cycles never filled get death = +inf and unresolved.
/// Throws FiltrationOrderError if the complex is not validly ordered.
PersistenceDiagram compute_persistence(const FilteredComplex& complex);

/// Number of classes in `dim` alive at scale v, i.e. birth <= v < death.
std::size_t betti_at(const PersistenceDiagram& diagram, int dim, double v);

struct DominantClass {
  double birth = 0.0;
  double death = 0.0;
  double lifetime = 0.0;
  bool unresolved = false;
  std::size_t index = 0;  // position in diagram.pairs
};

/// Longest-lived pair of a dimension; ties go to the earlier birth, then the
/// earlier position. Unresolved pairs count only with include_capped, using
/// the capped death. Throws NotFound when there is no candidate.
DominantClass dominant_class(const PersistenceDiagram& diagram, int dim, bool include_capped = false);

/// Four evaluation scales around a persistent class: B, B + L/2, B + L, B + 3L/2.
struct ScaleSchedule {
  double birth = 0.0;
  double death = 0.0;
  double lifetime = 0.0;
  std::array<double, 4> scales{};
};

ScaleSchedule scale_schedule(const DominantClass& dominant);

/// Result of growing the cap until the dominant H1 class is settled.
struct DominantSearch {
  PersistenceDiagram diagram;
  DominantClass dominant;
  double cap = 0.0;
  /// No unresolved H1 class could still outlive the dominant one.
  bool settled = false;
};

/// Builds complexes at increasing caps (cap, cap * growth, ...) until the
/// finite dominant H1 lifetime is at least cap - (earliest unresolved H1
/// birth), or no H1 class is unresolved. Throws NotFound if no finite H1
/// pair appears within max_rounds.
DominantSearch settle_dominant_h1(const std::function<FilteredComplex(double)>& build, double initial_cap,
                                  double growth = 1.5, int max_rounds = 8);

}  // namespace flowph
