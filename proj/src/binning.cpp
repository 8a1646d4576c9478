#include "multibin/binning.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "multibin/rng.hpp"

namespace multibin {

std::vector<double> Discretization::boundaries() const {
  std::vector<double> b;
  b.reserve(bins.size() + 1);
  for (const Interval& bin : bins) b.push_back(bin.lo);
  b.push_back(bins.back().hi);
  return b;
}

Discretization discretization_from_boundaries(std::vector<double> boundaries) {
  if (boundaries.size() < 2)
    throw std::invalid_argument("discretization needs at least two boundaries");
  for (std::size_t i = 0; i + 1 < boundaries.size(); ++i) {
    if (!(boundaries[i] < boundaries[i + 1]))
      throw std::invalid_argument("discretization boundaries must be strictly increasing");
  }
  Discretization d;
  d.support = {boundaries.front(), boundaries.back()};
  d.bins.reserve(boundaries.size() - 1);
  for (std::size_t i = 0; i + 1 < boundaries.size(); ++i)
    d.bins.push_back({boundaries[i], boundaries[i + 1]});
  return d;
}

Discretization equal_width_base(Interval support, std::size_t k) {
  if (k == 0) throw std::invalid_argument("equal_width_base: K must be >= 1");
  if (!(support.lo < support.hi))
    throw std::invalid_argument("equal_width_base: degenerate support");
  std::vector<double> bounds(k + 1);
  const double width = support.length() / static_cast<double>(k);
  for (std::size_t i = 0; i <= k; ++i)
    bounds[i] = support.lo + static_cast<double>(i) * width;
  bounds[0] = support.lo;
  bounds[k] = support.hi;  // pin the edges against rounding drift
  return discretization_from_boundaries(std::move(bounds));
}

DiscretizationEnsemble equal_width_overlapping(const Discretization& base,
                                               std::size_t l, std::size_t m) {
  if (l == 0 || m == 0)
    throw std::invalid_argument("equal_width_overlapping: L and M must be >= 1");
  const std::size_t k = base.size();
  if (l * m > k)
    std::fprintf(stderr,
                 "warning: equal_width_overlapping with L*M = %zu > K = %zu; "
                 "members will repeat\n",
                 l * m, k);
  const std::size_t group = (k + l - 1) / l;  // base bins per interior group
  const std::size_t shift_step = group / m;
  const std::vector<double> base_bounds = base.boundaries();

  DiscretizationEnsemble ens;
  ens.base = base;
  ens.support = base.support;
  ens.members.reserve(m);
  for (std::size_t member = 0; member < m; ++member) {
    const std::size_t origin = member * shift_step;
    if (origin >= k)
      throw std::runtime_error("equal_width_overlapping: member shift exceeds support");
    std::vector<double> bounds;
    bounds.push_back(base_bounds[0]);
    for (std::size_t j = origin == 0 ? 1 : 0;; ++j) {
      const std::size_t idx = origin + j * group;
      if (idx >= k) break;
      if (idx > 0) bounds.push_back(base_bounds[idx]);
    }
    bounds.push_back(base_bounds[k]);
    ens.members.push_back(discretization_from_boundaries(std::move(bounds)));
  }
  return ens;
}

namespace detail {

Discretization randomized_member_from_indices(const Discretization& base,
                                              std::vector<std::size_t> indices) {
  std::sort(indices.begin(), indices.end());
  indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
  const std::vector<double> base_bounds = base.boundaries();

  // Between consecutive centers a < b, base bins whose midpoint is at least
  // as close to a's midpoint as to b's belong to a (ties go low). The cut is
  // the last such bin; its right boundary separates the two new bins.
  std::vector<double> bounds;
  bounds.push_back(base_bounds.front());
  for (std::size_t g = 0; g + 1 < indices.size(); ++g) {
    const double wa = base.bins[indices[g]].midpoint();
    const double wb = base.bins[indices[g + 1]].midpoint();
    std::size_t cut = indices[g];
    for (std::size_t kk = indices[g]; kk < indices[g + 1]; ++kk) {
      const double wk = base.bins[kk].midpoint();
      if (wk - wa <= wb - wk) cut = kk;
    }
    bounds.push_back(base_bounds[cut + 1]);
  }
  bounds.push_back(base_bounds.back());
  return discretization_from_boundaries(std::move(bounds));
}

}  // namespace detail

DiscretizationEnsemble randomized_bins(const Discretization& base,
                                       std::size_t l, std::size_t m,
                                       uint64_t seed) {
  const std::size_t k = base.size();
  if (l == 0) throw std::invalid_argument("randomized_bins: L must be >= 1");
  if (l >= k) throw std::invalid_argument("randomized_bins: L must be < K");
  if (m == 0) throw std::invalid_argument("randomized_bins: M must be >= 1");

  Rng rng(seed);
  DiscretizationEnsemble ens;
  ens.base = base;
  ens.support = base.support;
  ens.members.reserve(m);
  for (std::size_t member = 0; member < m; ++member) {
    std::vector<std::size_t> idx(l);
    for (std::size_t i = 0; i < l; ++i)
      idx[i] = static_cast<std::size_t>(rng.next_below(k));
    ens.members.push_back(detail::randomized_member_from_indices(base, std::move(idx)));
  }
  return ens;
}

DiscretizationEnsemble explicit_ensemble(
    const Discretization& base,
    const std::vector<std::vector<IndexRange>>& sets) {
  const std::size_t k = base.size();
  if (sets.empty()) throw std::invalid_argument("explicit_ensemble: no members given");
  const std::vector<double> base_bounds = base.boundaries();

  DiscretizationEnsemble ens;
  ens.base = base;
  ens.support = base.support;
  ens.members.reserve(sets.size());
  for (std::size_t member = 0; member < sets.size(); ++member) {
    const auto& ranges = sets[member];
    auto fail = [&](std::size_t r, const std::string& why) {
      std::ostringstream msg;
      msg << "explicit_ensemble: member " << member + 1 << ", range "
          << ranges[r].first << "-" << ranges[r].last << ": " << why;
      throw std::invalid_argument(msg.str());
    };
    if (ranges.empty())
      throw std::invalid_argument("explicit_ensemble: member " +
                                  std::to_string(member + 1) + " is empty");
    std::size_t expect = 0;
    std::vector<double> bounds;
    bounds.push_back(base_bounds.front());
    for (std::size_t r = 0; r < ranges.size(); ++r) {
      if (ranges[r].first > ranges[r].last) fail(r, "descending range");
      if (ranges[r].last >= k) fail(r, "index out of range");
      if (ranges[r].first != expect)
        fail(r, ranges[r].first > expect ? "gap before range" : "overlaps previous range");
      expect = ranges[r].last + 1;
      bounds.push_back(base_bounds[ranges[r].last + 1]);
    }
    if (expect != k) fail(ranges.size() - 1, "does not reach last base bin");
    ens.members.push_back(discretization_from_boundaries(std::move(bounds)));
  }
  return ens;
}

std::vector<std::vector<IndexRange>> parse_ensemble_sets(const std::string& text) {
  std::vector<std::vector<IndexRange>> sets;
  std::string member_text;
  auto flush_member = [&]() {
    // split member_text on commas into "a-b" / "a" tokens
    std::vector<IndexRange> ranges;
    std::stringstream ss(member_text);
    std::string token;
    bool any = false;
    while (std::getline(ss, token, ',')) {
      const auto b = token.find_first_not_of(" \t");
      const auto e = token.find_last_not_of(" \t");
      if (b == std::string::npos) {
        if (any) throw std::invalid_argument("ensemble set: empty range token");
        continue;
      }
      token = token.substr(b, e - b + 1);
      any = true;
      std::size_t first = 0, last = 0;
      const auto dash = token.find('-');
      try {
        if (dash == std::string::npos) {
          first = last = std::stoul(token);
        } else {
          first = std::stoul(token.substr(0, dash));
          last = std::stoul(token.substr(dash + 1));
        }
      } catch (const std::exception&) {
        throw std::invalid_argument("ensemble set: bad range token '" + token + "'");
      }
      ranges.push_back({first, last});
    }
    if (!ranges.empty()) sets.push_back(std::move(ranges));
    member_text.clear();
  };

  bool in_comment = false;
  for (char c : text) {
    if (c == '\n') {
      in_comment = false;
      flush_member();
    } else if (in_comment) {
      continue;
    } else if (c == '#') {
      in_comment = true;
    } else if (c == ';') {
      flush_member();
    } else {
      member_text.push_back(c);
    }
  }
  flush_member();
  return sets;
}

std::vector<std::vector<IndexRange>> load_ensemble_sets(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open ensemble file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_ensemble_sets(ss.str());
}

std::size_t locate(const Discretization& d, double t) {
  const Interval& s = d.support;
  if (t == s.hi) return d.bins.size() - 1;  // right edge closes at the support max
  if (!(t >= s.lo && t < s.hi)) {
    std::ostringstream msg;
    msg << "locate: target " << t << " outside support [" << s.lo << ", " << s.hi << "]";
    throw std::out_of_range(msg.str());
  }
  // first bin with hi > t
  std::size_t lo = 0, hi = d.bins.size() - 1;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (d.bins[mid].hi > t)
      hi = mid;
    else
      lo = mid + 1;
  }
  return lo;
}

double bin_mean(const Discretization& d, std::size_t l) {
  if (l >= d.bins.size()) throw std::out_of_range("bin_mean: bin index out of range");
  return d.bins[l].midpoint();
}

double overlap_ratio(const Interval& d, const Interval& c) {
  const double lo = std::max(d.lo, c.lo);
  const double hi = std::min(d.hi, c.hi);
  if (hi <= lo) return 0.0;
  return (hi - lo) / d.length();
}

std::string to_string(const Discretization& d) {
  std::ostringstream out;
  for (std::size_t i = 0; i < d.bins.size(); ++i) {
    if (i) out << ' ';
    out << '[' << d.bins[i].lo << ", " << d.bins[i].hi << ')';
  }
  return out.str();
}

}  // namespace multibin
