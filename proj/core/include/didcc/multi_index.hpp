#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace didcc {

/// Multi-indices k with |k| <= order over `dimension` continuous coordinates.
///
/// Blocks are ordered by degree. Within a degree the tuples are sorted
/// colexicographically (compare the last position first, ascending), so for
/// dimension 2 and degree 2 the order is (2,0), (1,1), (0,2), i.e. a^2, ab, b^2.
/// The zero index is always first, which puts the intercept at position 0.
/// This table is the canonical coefficient order for every local fit.
class MultiIndexBasis {
 public:
  MultiIndexBasis(int order, std::size_t dimension);

  int order() const { return order_; }
  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return table_.size(); }
  const std::vector<std::vector<int>>& index_table() const { return table_; }

  /// C(k + dim - 1, dim - 1): number of tuples of total degree k.
  static std::size_t degree_count(int k, std::size_t dimension);
  /// N_p = sum_{k=0}^{order} degree_count(k, dimension).
  static std::size_t basis_size(int order, std::size_t dimension);

  /// Entries (x - center)^k in table order. `out` must have size() entries.
  void fill(std::span<const double> x, std::span<const double> center, Eigen::Ref<Eigen::VectorXd> out) const;
  Eigen::VectorXd build(std::span<const double> x, std::span<const double> center) const;

 private:
  int order_;
  std::size_t dimension_;
  std::vector<std::vector<int>> table_;
};

}  // namespace didcc
