#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "multibin/errors.hpp"

namespace multibin {

// Half-open interval [lo, hi) on the target axis. Used both for class bins
// and for the support of a discretization.
struct Interval {
  double lo = 0.0;
  double hi = 1.0;

  double length() const { return hi - lo; }
  double midpoint() const { return 0.5 * (lo + hi); }
  bool contains(double t) const { return t >= lo && t < hi; }
};

// An ordered partition of a support interval into contiguous bins.
// Invariants: bins sorted ascending, bins[i].hi == bins[i+1].lo exactly,
// first bin starts at support.lo, last bin ends at support.hi.
struct Discretization {
  std::vector<Interval> bins;
  Interval support;

  std::size_t size() const { return bins.size(); }

  // Shared boundary values lo_0, lo_1, ..., hi_last (size() + 1 entries).
  std::vector<double> boundaries() const;
};

// M discretizations of the same support, derived from a common base
// partition with K bins. Members may have different bin counts.
struct DiscretizationEnsemble {
  std::vector<Discretization> members;
  Discretization base;
  Interval support;

  std::size_t head_count() const { return members.size(); }
};

// Builds a Discretization from a strictly increasing boundary sequence.
// Consecutive bins share boundary values exactly by construction.
Discretization discretization_from_boundaries(std::vector<double> boundaries);

// K contiguous bins of equal width over the support.
Discretization equal_width_base(Interval support, std::size_t k);

// M regroupings of the base partition into runs of W = ceil(K/L) base bins.
// Member m's grouping grid starts (m-1)*floor(W/M) base bins into the
// support, so consecutive members overlap by a fixed amount; the grid is
// truncated at both support edges, which can leave a shorter first/last bin
// (members then hold L or L+1 bins). Warns on stderr when L*M > K.
DiscretizationEnsemble equal_width_overlapping(const Discretization& base,
                                               std::size_t l, std::size_t m);

// M members, each built by sampling L base-bin indices uniformly with
// replacement (duplicates collapse, so a member can end up with fewer than
// L bins), taking the sampled bins' midpoints as centers and merging every
// other base bin into its nearest center. Distance ties go to the
// lower-index center. Deterministic in (base, l, m, seed).
DiscretizationEnsemble randomized_bins(const Discretization& base,
                                       std::size_t l, std::size_t m,
                                       uint64_t seed);

// Inclusive base-bin index range [first, last].
struct IndexRange {
  std::size_t first = 0;
  std::size_t last = 0;
};

// One member per entry of `sets`; each member's ranges must tile the base
// indices 0..K-1 exactly (sorted, contiguous, no gaps or overlaps).
DiscretizationEnsemble explicit_ensemble(
    const Discretization& base,
    const std::vector<std::vector<IndexRange>>& sets);

// Parses a member-set description, one member per line or semicolon-separated,
// bins as comma-separated inclusive index ranges "a-b" (or a bare "a").
// '#' starts a comment. See README for the exact grammar.
std::vector<std::vector<IndexRange>> parse_ensemble_sets(const std::string& text);
std::vector<std::vector<IndexRange>> load_ensemble_sets(const std::string& path);

// Index of the bin containing t. t == support.hi is accepted and maps to the
// last bin so the maximal target stays representable; anything else outside
// the support throws std::out_of_range naming t and the support.
std::size_t locate(const Discretization& d, double t);

// Midpoint of bin l; the bin's representative value for expected-value
// inference.
double bin_mean(const Discretization& d, std::size_t l);

// length(d intersect c) / length(d), in [0, 1]. Disjoint intervals give 0.
double overlap_ratio(const Interval& d, const Interval& c);

// "[lo, hi) [lo, hi) ..." - debugging aid.
std::string to_string(const Discretization& d);

namespace detail {
// Builds one randomized-bins member from already-chosen base-bin indices
// (need not be sorted or unique). Exposed so the nearest-center assignment
// rule is testable without going through the sampler.
Discretization randomized_member_from_indices(const Discretization& base,
                                              std::vector<std::size_t> indices);
}  // namespace detail

}  // namespace multibin
