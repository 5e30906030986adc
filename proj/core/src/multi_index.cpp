#include "didcc/multi_index.hpp"

#include <algorithm>
#include <array>
#include <functional>

#include "didcc/error.hpp"

namespace didcc {

namespace {

// All tuples of `dimension` nonnegative ints summing to `degree`.
void enumerate(std::size_t dimension, int degree, std::vector<int>& current, std::vector<std::vector<int>>& out) {
  if (current.size() + 1 == dimension) {
    current.push_back(degree);
    out.push_back(current);
    current.pop_back();
    return;
  }
  for (int k = degree; k >= 0; --k) {
    current.push_back(k);
    enumerate(dimension, degree - k, current, out);
    current.pop_back();
  }
}

bool colex_less(const std::vector<int>& a, const std::vector<int>& b) {
  for (std::size_t i = a.size(); i-- > 0;) {
    if (a[i] != b[i]) return a[i] < b[i];
  }
  return false;
}

}  // namespace

MultiIndexBasis::MultiIndexBasis(int order, std::size_t dimension) : order_(order), dimension_(dimension) {
  if (order < 0) throw ParameterError("polynomial order must be nonnegative");
  if (dimension == 0) {
    table_.emplace_back();
    return;
  }
  for (int degree = 0; degree <= order; ++degree) {
    std::vector<std::vector<int>> block;
    std::vector<int> current;
    enumerate(dimension, degree, current, block);
    std::sort(block.begin(), block.end(), colex_less);
    table_.insert(table_.end(), block.begin(), block.end());
  }
}

std::size_t MultiIndexBasis::degree_count(int k, std::size_t dimension) {
  if (dimension == 0) return k == 0 ? 1 : 0;
  // C(k + dim - 1, dim - 1)
  std::size_t num = 1;
  std::size_t den = 1;
  for (std::size_t i = 1; i < dimension; ++i) {
    num *= static_cast<std::size_t>(k) + i;
    den *= i;
  }
  return num / den;
}

std::size_t MultiIndexBasis::basis_size(int order, std::size_t dimension) {
  std::size_t total = 0;
  for (int k = 0; k <= order; ++k) total += degree_count(k, dimension);
  return total;
}

void MultiIndexBasis::fill(std::span<const double> x, std::span<const double> center,
                           Eigen::Ref<Eigen::VectorXd> out) const {
  if (x.size() != dimension_ || center.size() != dimension_) {
    throw ShapeError("basis evaluation point has the wrong dimension");
  }
  if (static_cast<std::size_t>(out.size()) != table_.size()) throw ShapeError("basis output has the wrong length");
  for (std::size_t l = 0; l < table_.size(); ++l) {
    double v = 1.0;
    for (std::size_t c = 0; c < dimension_; ++c) {
      const double delta = x[c] - center[c];
      for (int e = 0; e < table_[l][c]; ++e) v *= delta;
    }
    out[static_cast<Eigen::Index>(l)] = v;
  }
}

Eigen::VectorXd MultiIndexBasis::build(std::span<const double> x, std::span<const double> center) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(size()));
  fill(x, center, out);
  return out;
}

}  // namespace didcc
