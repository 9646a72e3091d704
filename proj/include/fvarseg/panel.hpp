#pragma once

#include <cmath>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "fvarseg/error.hpp"

namespace fvarseg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;

/// A p x n panel: rows are series, columns are time points.
///
/// All public time indices are 1-based, so column t of the panel is X_t and a
/// window I_v(G) = {v-G+1, ..., v} covers columns v-G .. v-1 of `values()`.
class PanelSeries {
 public:
  PanelSeries() = default;

  explicit PanelSeries(Matrix values) : values_(std::move(values)) {
    if (values_.rows() < 1) throw DataError("panel needs at least one series (p >= 1)");
    if (values_.cols() < 2) throw DataError("panel needs at least two time points (n >= 2)");
    for (Eigen::Index t = 0; t < values_.cols(); ++t) {
      for (Eigen::Index i = 0; i < values_.rows(); ++i) {
        if (!std::isfinite(values_(i, t))) {
          throw DataError("non-finite value at series " + std::to_string(i + 1) + ", time " +
                          std::to_string(t + 1));
        }
      }
    }
  }

  [[nodiscard]] int p() const noexcept { return static_cast<int>(values_.rows()); }
  [[nodiscard]] int n() const noexcept { return static_cast<int>(values_.cols()); }
  [[nodiscard]] const Matrix& values() const noexcept { return values_; }

  /// X_t with 1-based t.
  [[nodiscard]] auto at(int t) const { return values_.col(t - 1); }

  /// Copy with each series centred at its sample mean.
  [[nodiscard]] PanelSeries demeaned() const {
    Matrix centred = values_.colwise() - values_.rowwise().mean();
    return PanelSeries(std::move(centred));
  }

 private:
  Matrix values_;
};

}  // namespace fvarseg
