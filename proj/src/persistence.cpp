#include "flowph/persistence.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <unordered_map>

#include <fmt/format.h>

#include "flowph/errors.hpp"

namespace flowph {

std::vector<PersistencePair> PersistenceDiagram::in_dimension(int dim) const {
  std::vector<PersistencePair> out;
  std::copy_if(pairs.begin(), pairs.end(), std::back_inserter(out), [dim](const auto& p) { return p.dim == dim; });
  return out;
}

double PersistenceDiagram::capped_death(const PersistencePair& p) const noexcept {
  return p.unresolved ? scale_cap : p.death;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), std::size_t{0}); }

  std::size_t find(std::size_t v) {
    while (parent_[v] != v) {
      parent_[v] = parent_[parent_[v]];
      v = parent_[v];
    }
    return v;
  }

  /// Keeps the smaller root so the surviving representative is deterministic.
  void link(std::size_t a, std::size_t b) {
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<std::size_t> parent_;
};

struct LaterTriangle {
  bool operator()(const Triangle& a, const Triangle& b) const noexcept { return filtration_less(b, a); }
};

using CoboundaryHeap = std::priority_queue<Triangle, std::vector<Triangle>, LaterTriangle>;

/// Pops the earliest triangle with odd multiplicity; entries cancel in pairs.
std::optional<Triangle> pop_pivot(CoboundaryHeap& heap) {
  while (!heap.empty()) {
    const Triangle t = heap.top();
    heap.pop();
    if (!heap.empty() && heap.top() == t) {
      heap.pop();
      continue;
    }
    return t;
  }
  return std::nullopt;
}

std::optional<Triangle> peek_pivot(CoboundaryHeap& heap) {
  auto t = pop_pivot(heap);
  if (t) heap.push(*t);
  return t;
}

}  // namespace

PersistenceDiagram compute_persistence(const FilteredComplex& complex) {
  complex.validate();
  const std::size_t n = complex.vertex_count();
  const auto& edges = complex.edges();

  PersistenceDiagram diagram;
  diagram.scale_cap = complex.scale_cap();

  // H0: every vertex is born at 0, so a merge always ends one class.
  std::vector<bool> merges(edges.size(), false);
  DisjointSets sets(n);
  for (std::size_t s = 0; s < edges.size(); ++s) {
    const auto& e = edges[s];
    const std::size_t a = sets.find(e.i);
    const std::size_t b = sets.find(e.j);
    if (a == b) continue;
    sets.link(a, b);
    merges[s] = true;
    diagram.pairs.push_back({0, 0.0, e.value, false, e, std::nullopt});
  }
  for (std::size_t v = 0; v < n; ++v) {
    if (sets.find(v) == v) diagram.pairs.push_back({0, 0.0, kInf, true, std::nullopt, std::nullopt});
  }

  // H1 by reducing coboundaries of the remaining edges, latest edge first.
  // A column's pivot is its earliest triangle; the reduction of a paired
  // column is kept as the list of edges whose coboundaries it sums.
  auto key = [n](const Triangle& t) {
    return (static_cast<std::uint64_t>(t.i) * n + t.j) * n + t.k;
  };
  std::unordered_map<std::uint64_t, std::size_t> pivot_owner;
  std::unordered_map<std::size_t, std::vector<std::size_t>> reductions;
  std::vector<PersistencePair> h1;

  for (std::size_t s = edges.size(); s-- > 0;) {
    if (merges[s]) continue;
    const Edge& e = edges[s];

    std::optional<Triangle> first;
    complex.for_each_cofacet(e, [&](const Triangle& t) {
      if (!first || filtration_less(t, *first)) first = t;
    });

    std::optional<Triangle> pivot = first;
    std::vector<std::size_t> reduction;
    if (pivot && pivot_owner.contains(key(*pivot))) {
      CoboundaryHeap heap;
      std::vector<std::size_t> combined{s};
      auto add_column = [&](std::size_t edge_index) {
        complex.for_each_cofacet(edges[edge_index], [&](const Triangle& t) { heap.push(t); });
      };
      add_column(s);
      for (;;) {
        pivot = peek_pivot(heap);
        if (!pivot) break;
        const auto owner = pivot_owner.find(key(*pivot));
        if (owner == pivot_owner.end()) break;
        const auto stored = reductions.find(owner->second);
        if (stored == reductions.end()) {
          add_column(owner->second);
          combined.push_back(owner->second);
        } else {
          for (const auto f : stored->second) {
            add_column(f);
            combined.push_back(f);
          }
        }
      }
      // Collapse the edge multiset mod 2.
      std::sort(combined.begin(), combined.end());
      for (std::size_t a = 0; a < combined.size();) {
        std::size_t b = a;
        while (b < combined.size() && combined[b] == combined[a]) ++b;
        if ((b - a) % 2 == 1) reduction.push_back(combined[a]);
        a = b;
      }
    }

    if (!pivot) {
      h1.push_back({1, e.value, kInf, true, e, std::nullopt});
      continue;
    }
    pivot_owner.emplace(key(*pivot), s);
    if (reduction.size() > 1) reductions.emplace(s, std::move(reduction));
    if (pivot->value > e.value) h1.push_back({1, e.value, pivot->value, false, e, *pivot});
  }

  // Report H1 in birth order (the reduction ran backwards).
  std::reverse(h1.begin(), h1.end());
  diagram.pairs.insert(diagram.pairs.end(), h1.begin(), h1.end());
  return diagram;
}

std::size_t betti_at(const PersistenceDiagram& diagram, int dim, double v) {
  return static_cast<std::size_t>(std::count_if(diagram.pairs.begin(), diagram.pairs.end(), [&](const auto& p) {
    return p.dim == dim && p.birth <= v && v < p.death;
  }));
}

DominantClass dominant_class(const PersistenceDiagram& diagram, int dim, bool include_capped) {
  std::optional<DominantClass> best;
  for (std::size_t idx = 0; idx < diagram.pairs.size(); ++idx) {
    const auto& p = diagram.pairs[idx];
    if (p.dim != dim) continue;
    if (p.unresolved && !include_capped) continue;
    const double death = diagram.capped_death(p);
    const double lifetime = death - p.birth;
    if (!std::isfinite(lifetime)) continue;
    if (!best || lifetime > best->lifetime || (lifetime == best->lifetime && p.birth < best->birth)) {
      best = DominantClass{p.birth, death, lifetime, p.unresolved, idx};
    }
  }
  if (!best) throw NotFound(fmt::format("no {}finite H{} pair in the diagram", include_capped ? "capped or " : "", dim));
  return *best;
}

ScaleSchedule scale_schedule(const DominantClass& dominant) {
  if (!(dominant.lifetime >= 0.0)) throw InvalidArgument("lifetime must be non-negative");
  ScaleSchedule s;
  s.birth = dominant.birth;
  s.lifetime = dominant.lifetime;
  s.death = dominant.birth + dominant.lifetime;
  for (std::size_t k = 0; k < s.scales.size(); ++k) {
    s.scales[k] = dominant.birth + 0.5 * static_cast<double>(k) * dominant.lifetime;
  }
  return s;
}

DominantSearch settle_dominant_h1(const std::function<FilteredComplex(double)>& build, double initial_cap,
                                  double growth, int max_rounds) {
  if (!(initial_cap > 0.0)) throw InvalidArgument("initial cap must be positive");
  if (!(growth > 1.0)) throw InvalidArgument("cap growth factor must exceed 1");
  if (max_rounds < 1) throw InvalidArgument("max_rounds must be at least 1");

  std::optional<DominantSearch> last;
  double cap = initial_cap;
  for (int round = 0; round < max_rounds; ++round, cap *= growth) {
    DominantSearch result;
    result.diagram = compute_persistence(build(cap));
    result.cap = cap;
    double earliest_open = kInf;
    for (const auto& p : result.diagram.pairs) {
      if (p.dim == 1 && p.unresolved) earliest_open = std::min(earliest_open, p.birth);
    }
    try {
      result.dominant = dominant_class(result.diagram, 1);
    } catch (const NotFound&) {
      continue;
    }
    result.settled = !std::isfinite(earliest_open) || result.dominant.lifetime >= cap - earliest_open;
    if (result.settled) return result;
    last = std::move(result);
  }
  if (!last) throw NotFound(fmt::format("no finite H1 pair up to scale {}", cap / growth));
  return *last;
}

}  // namespace flowph
