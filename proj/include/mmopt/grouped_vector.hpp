#pragma once

#include <Eigen/Dense>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace mmopt {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// A flat parameter vector partitioned into M contiguous groups of sizes
// beta_1..beta_M.
struct GroupedVector {
  VectorXd values;
  std::vector<Index> group_sizes;
  std::vector<Index> offsets;  // size M+1, offsets[M] == dim

  GroupedVector() = default;

  GroupedVector(VectorXd v, std::vector<Index> sizes)
      : values(std::move(v)), group_sizes(std::move(sizes)) {
    if (group_sizes.empty())
      throw std::invalid_argument("GroupedVector: no groups");
    offsets.resize(group_sizes.size() + 1);
    offsets[0] = 0;
    for (std::size_t m = 0; m < group_sizes.size(); ++m) {
      if (group_sizes[m] < 1)
        throw std::invalid_argument("GroupedVector: group " +
                                    std::to_string(m) + " has size < 1");
      offsets[m + 1] = offsets[m] + group_sizes[m];
    }
    if (offsets.back() != values.size())
      throw std::invalid_argument(
          "GroupedVector: group sizes sum to " +
          std::to_string(offsets.back()) + " but vector has length " +
          std::to_string(values.size()));
  }

  Index dim() const { return values.size(); }
  std::size_t num_groups() const { return group_sizes.size(); }

  Eigen::VectorBlock<const VectorXd> group(std::size_t m) const {
    return values.segment(offsets[m], group_sizes[m]);
  }
  Eigen::VectorBlock<VectorXd> group(std::size_t m) {
    return values.segment(offsets[m], group_sizes[m]);
  }
  double group_norm(std::size_t m) const { return group(m).norm(); }

  VectorXd group_norms() const {
    VectorXd out(static_cast<Index>(num_groups()));
    for (std::size_t m = 0; m < num_groups(); ++m)
      out[static_cast<Index>(m)] = group_norm(m);
    return out;
  }

  bool same_structure(const std::vector<Index>& sizes) const {
    return group_sizes == sizes;
  }
};

inline GroupedVector zeros_like_structure(const std::vector<Index>& sizes) {
  Index n = std::accumulate(sizes.begin(), sizes.end(), Index{0});
  return GroupedVector(VectorXd::Zero(n), sizes);
}

}  // namespace mmopt
