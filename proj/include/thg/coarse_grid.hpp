#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "thg/error.hpp"
#include "thg/schedules.hpp"

namespace thg {

/// Subset C of fine indices at which the guidance branch is re-evaluated.
/// Indices are strictly increasing, start at 0 (t = T) and end at N (t = t_min).
class CoarseGrid {
 public:
  CoarseGrid(FineGrid fine, std::vector<int> indices)
      : fine_(std::move(fine)), indices_(std::move(indices)) {
    const int n = fine_.steps();
    if (indices_.empty() || indices_.front() != 0 || indices_.back() != n) {
      throw InvalidParameter("coarse grid must start at index 0 and end at index N = " +
                             std::to_string(n));
    }
    for (std::size_t k = 1; k < indices_.size(); ++k) {
      if (indices_[k] <= indices_[k - 1]) {
        throw InvalidParameter("coarse grid indices must be strictly increasing");
      }
    }
    member_.assign(static_cast<std::size_t>(n) + 1, false);
    for (int i : indices_) member_[static_cast<std::size_t>(i)] = true;
  }

  /// Every fine index is coarse; THG then reduces to plain CFG stepping.
  static CoarseGrid full(const FineGrid& fine) {
    std::vector<int> all(static_cast<std::size_t>(fine.steps()) + 1);
    for (int i = 0; i <= fine.steps(); ++i) all[static_cast<std::size_t>(i)] = i;
    return CoarseGrid(fine, std::move(all));
  }

  const FineGrid& fine() const noexcept { return fine_; }
  const std::vector<int>& indices() const noexcept { return indices_; }
  int steps() const noexcept { return fine_.steps(); }
  std::size_t size() const noexcept { return indices_.size(); }

  bool contains(int i) const {
    return i >= 0 && i <= steps() && member_[static_cast<std::size_t>(i)];
  }

  /// Smallest coarse index strictly greater than i (i must be < N).
  int next_after(int i) const {
    auto it = std::upper_bound(indices_.begin(), indices_.end(), i);
    return it == indices_.end() ? steps() : *it;
  }

  /// Number of coarse indices strictly below `limit`.
  int count_below(int limit) const {
    return static_cast<int>(std::lower_bound(indices_.begin(), indices_.end(), limit) -
                            indices_.begin());
  }

  /// NFE of one THG run: N conditional evaluations plus one unconditional
  /// evaluation at every coarse index below min(N, i_hi).
  long projected_nfe(int i_hi) const {
    return steps() + count_below(std::min(i_hi, steps()));
  }

 private:
  FineGrid fine_;
  std::vector<int> indices_;
  std::vector<bool> member_;
};

/// Jaccard similarity |A n B| / |A u B| of two index sets.
inline double jaccard(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> inter;
  std::vector<int> uni;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(inter));
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(uni));
  return uni.empty() ? 1.0 : static_cast<double>(inter.size()) / static_cast<double>(uni.size());
}

}  // namespace thg
