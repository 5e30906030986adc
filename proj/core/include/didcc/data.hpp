#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace didcc {

/// Treatment-period cell (d, t). The enumerator value is the column used for
/// the cell in every n x 4 probability matrix.
enum class Cell : int { k11 = 0, k10 = 1, k01 = 2, k00 = 3 };

inline constexpr std::array<Cell, 4> kAllCells{Cell::k11, Cell::k10, Cell::k01, Cell::k00};
/// The three non-reference cells, in the order their logit blocks are stacked.
inline constexpr std::array<Cell, 3> kControlCells{Cell::k10, Cell::k01, Cell::k00};

constexpr int index(Cell c) { return static_cast<int>(c); }
constexpr int treatment_of(Cell c) { return (c == Cell::k11 || c == Cell::k10) ? 1 : 0; }
constexpr int period_of(Cell c) { return (c == Cell::k11 || c == Cell::k01) ? 1 : 0; }
constexpr Cell make_cell(int d, int t) {
  return d == 1 ? (t == 1 ? Cell::k11 : Cell::k10) : (t == 1 ? Cell::k01 : Cell::k00);
}
/// (-1)^(d+t)
constexpr double cell_sign(Cell c) { return ((treatment_of(c) + period_of(c)) % 2 == 0) ? 1.0 : -1.0; }
std::string_view cell_name(Cell c);

/// Number of covariates of each type.
struct CovariateLayout {
  std::size_t continuous = 0;
  std::size_t unordered = 0;
  std::size_t ordered = 0;

  bool operator==(const CovariateLayout&) const = default;
};

/// Non-owning view of one observation's covariates.
struct CovariatePoint {
  std::span<const double> continuous;
  std::span<const int> unordered;
  std::span<const int> ordered;
};

/// One repeated cross-section observation.
struct Sample {
  double y = 0.0;
  int d = 0;
  int t = 0;
  std::vector<double> x_c;
  std::vector<int> x_u;
  std::vector<int> x_o;
  std::optional<std::int64_t> cluster;
};

/// Column-oriented, immutable sample used by every estimator.
class Dataset {
 public:
  Dataset() = default;

  /// Validates d, t in {0,1}, a common covariate layout and consistent cluster presence.
  static Dataset from_samples(std::span<const Sample> samples);

  std::size_t size() const { return y_.size(); }
  const CovariateLayout& layout() const { return layout_; }

  double y(std::size_t i) const { return y_[i]; }
  int d(std::size_t i) const { return d_[i]; }
  int t(std::size_t i) const { return t_[i]; }
  Cell cell(std::size_t i) const { return make_cell(d_[i], t_[i]); }
  bool in_cell(std::size_t i, Cell c) const { return cell(i) == c; }

  std::span<const double> x_c(std::size_t i) const {
    return {x_c_.data() + i * layout_.continuous, layout_.continuous};
  }
  std::span<const int> x_u(std::size_t i) const {
    return {x_u_.data() + i * layout_.unordered, layout_.unordered};
  }
  std::span<const int> x_o(std::size_t i) const {
    return {x_o_.data() + i * layout_.ordered, layout_.ordered};
  }
  CovariatePoint point(std::size_t i) const { return {x_c(i), x_u(i), x_o(i)}; }

  bool has_clusters() const { return !cluster_.empty(); }
  std::int64_t cluster(std::size_t i) const { return cluster_[i]; }

  const Eigen::VectorXd& outcomes() const { return y_; }
  std::array<std::size_t, 4> cell_counts() const;

  Sample sample(std::size_t i) const;
  std::vector<Sample> samples() const;

  /// Copy with observation j removed.
  Dataset without(std::size_t j) const;
  /// Copy with the outcome vector replaced.
  Dataset with_outcomes(const Eigen::VectorXd& y) const;

 private:
  CovariateLayout layout_;
  Eigen::VectorXd y_;
  std::vector<int> d_;
  std::vector<int> t_;
  std::vector<double> x_c_;
  std::vector<int> x_u_;
  std::vector<int> x_o_;
  std::vector<std::int64_t> cluster_;
};

}  // namespace didcc
