#include "didcc/data.hpp"

#include <string>

#include "didcc/error.hpp"

namespace didcc {

std::string_view cell_name(Cell c) {
  switch (c) {
    case Cell::k11: return "(1,1)";
    case Cell::k10: return "(1,0)";
    case Cell::k01: return "(0,1)";
    case Cell::k00: return "(0,0)";
  }
  return "(?)";
}

Dataset Dataset::from_samples(std::span<const Sample> samples) {
  Dataset out;
  if (samples.empty()) return out;
  const Sample& first = samples.front();
  out.layout_ = {first.x_c.size(), first.x_u.size(), first.x_o.size()};
  const bool clustered = first.cluster.has_value();
  const std::size_t n = samples.size();

  out.y_.resize(static_cast<Eigen::Index>(n));
  out.d_.reserve(n);
  out.t_.reserve(n);
  out.x_c_.reserve(n * out.layout_.continuous);
  out.x_u_.reserve(n * out.layout_.unordered);
  out.x_o_.reserve(n * out.layout_.ordered);
  if (clustered) out.cluster_.reserve(n);

  for (std::size_t i = 0; i < n; ++i) {
    const Sample& s = samples[i];
    if ((s.d != 0 && s.d != 1) || (s.t != 0 && s.t != 1)) {
      throw ParameterError("observation " + std::to_string(i) + ": treatment and period must be 0 or 1");
    }
    const CovariateLayout layout{s.x_c.size(), s.x_u.size(), s.x_o.size()};
    if (!(layout == out.layout_)) {
      throw ShapeError("observation " + std::to_string(i) + ": covariate layout differs from observation 0");
    }
    if (s.cluster.has_value() != clustered) {
      throw ShapeError("observation " + std::to_string(i) + ": cluster id present on some observations only");
    }
    out.y_[static_cast<Eigen::Index>(i)] = s.y;
    out.d_.push_back(s.d);
    out.t_.push_back(s.t);
    out.x_c_.insert(out.x_c_.end(), s.x_c.begin(), s.x_c.end());
    out.x_u_.insert(out.x_u_.end(), s.x_u.begin(), s.x_u.end());
    out.x_o_.insert(out.x_o_.end(), s.x_o.begin(), s.x_o.end());
    if (clustered) out.cluster_.push_back(*s.cluster);
  }
  return out;
}

std::array<std::size_t, 4> Dataset::cell_counts() const {
  std::array<std::size_t, 4> counts{};
  for (std::size_t i = 0; i < size(); ++i) ++counts[static_cast<std::size_t>(index(cell(i)))];
  return counts;
}

Sample Dataset::sample(std::size_t i) const {
  Sample s;
  s.y = y_[static_cast<Eigen::Index>(i)];
  s.d = d_[i];
  s.t = t_[i];
  const auto c = x_c(i);
  const auto u = x_u(i);
  const auto o = x_o(i);
  s.x_c.assign(c.begin(), c.end());
  s.x_u.assign(u.begin(), u.end());
  s.x_o.assign(o.begin(), o.end());
  if (has_clusters()) s.cluster = cluster_[i];
  return s;
}

std::vector<Sample> Dataset::samples() const {
  std::vector<Sample> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) out.push_back(sample(i));
  return out;
}

Dataset Dataset::without(std::size_t j) const {
  auto all = samples();
  all.erase(all.begin() + static_cast<std::ptrdiff_t>(j));
  return from_samples(all);
}

Dataset Dataset::with_outcomes(const Eigen::VectorXd& y) const {
  if (y.size() != y_.size()) throw ShapeError("outcome vector length does not match the sample size");
  Dataset out = *this;
  out.y_ = y;
  return out;
}

}  // namespace didcc
