#pragma once

#include <algorithm>
#include <vector>

namespace fvarseg {

enum class Stage : int { factor = 1, idiosyncratic = 2 };

struct ChangePoint {
  int location = 0;
  int bandwidth = 0;
  double stat = 0.0;
  Stage stage = Stage::factor;

  friend bool operator==(const ChangePoint&, const ChangePoint&) = default;
};

/// Change-point estimates kept sorted by location.
class ChangePointSet {
 public:
  ChangePointSet() = default;
  explicit ChangePointSet(std::vector<ChangePoint> pts) : points_(std::move(pts)) { sort(); }

  void add(const ChangePoint& cp) {
    points_.push_back(cp);
    sort();
  }

  [[nodiscard]] const std::vector<ChangePoint>& points() const noexcept { return points_; }
  [[nodiscard]] std::size_t size() const noexcept { return points_.size(); }
  [[nodiscard]] bool empty() const noexcept { return points_.empty(); }

  [[nodiscard]] std::vector<int> locations() const {
    std::vector<int> out;
    out.reserve(points_.size());
    for (const auto& cp : points_) out.push_back(cp.location);
    return out;
  }

  friend bool operator==(const ChangePointSet&, const ChangePointSet&) = default;

 private:
  void sort() {
    std::stable_sort(points_.begin(), points_.end(),
                     [](const ChangePoint& a, const ChangePoint& b) { return a.location < b.location; });
  }

  std::vector<ChangePoint> points_;
};

}  // namespace fvarseg
