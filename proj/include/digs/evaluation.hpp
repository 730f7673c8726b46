#pragma once

#include "digs/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace digs {

/// Predicted labels against ground truth.
struct SegmentationResult {
  std::vector<int> labels;
  std::vector<int> truth;

  void validate() const {
    if (labels.size() != truth.size())
      throw std::invalid_argument("SegmentationResult: length mismatch");
  }
};

/// Figure of Certainty of Strasters and Gerbrand:
///   FOC = (1/n) sum_j 1 / (1 + p |orig(j) - segmented(j)|^q),
/// where segmented(j) is the intensity representing the segment that
/// comprises pixel j. Equals 1 iff every pixel's segment intensity matches
/// its original intensity.
inline double foc(const Eigen::VectorXd& original, const Eigen::VectorXd& segmented,
                  double p = 0.5, double q = 0.5) {
  if (original.size() != segmented.size()) throw std::invalid_argument("foc: length mismatch");
  if (!(p > 0.0) || !(q > 0.0)) throw std::invalid_argument("foc: p,q must be > 0");
  double acc = 0.0;
  for (Eigen::Index j = 0; j < original.size(); ++j)
    acc += 1.0 / (1.0 + p * std::pow(std::abs(original[j] - segmented[j]), q));
  return acc / static_cast<double>(original.size());
}

/// Per-pixel representative intensity of its predicted segment: the mean
/// original intensity over the segment.
inline Eigen::VectorXd segment_representative(const Eigen::VectorXd& original,
                                              const std::vector<int>& labels) {
  if (original.size() != static_cast<Eigen::Index>(labels.size()))
    throw std::invalid_argument("segment_representative: length mismatch");
  std::map<int, std::pair<double, std::size_t>> sums;
  for (std::size_t j = 0; j < labels.size(); ++j) {
    auto& [sum, count] = sums[labels[j]];
    sum += original[static_cast<Eigen::Index>(j)];
    ++count;
  }
  Eigen::VectorXd rep(original.size());
  for (std::size_t j = 0; j < labels.size(); ++j) {
    const auto& [sum, count] = sums[labels[j]];
    rep[static_cast<Eigen::Index>(j)] = sum / static_cast<double>(count);
  }
  return rep;
}

/// Count of labels[i] != truth[i], optionally skipping the fidelity indices.
inline int misclassification(const SegmentationResult& result,
                             const std::vector<Eigen::Index>& fidelity = {},
                             bool exclude_fidelity = false) {
  result.validate();
  std::vector<bool> skip;
  if (exclude_fidelity) {
    skip.assign(result.labels.size(), false);
    for (Eigen::Index i : fidelity) skip[static_cast<std::size_t>(i)] = true;
  }
  int count = 0;
  for (std::size_t i = 0; i < result.labels.size(); ++i) {
    if (exclude_fidelity && skip[i]) continue;
    if (result.labels[i] != result.truth[i]) ++count;
  }
  return count;
}

/// Uniform without-replacement draw of n_sample vertices per class, by a
/// seeded partial Fisher-Yates shuffle of each class member list. The counts
/// vector follows the sorted order of the distinct class labels; a single
/// count broadcasts to every class. Deterministic under the seed.
inline std::vector<Eigen::Index> sample_fidelity(const std::vector<int>& truth,
                                                 std::vector<int> n_sample_per_class,
                                                 std::uint64_t seed) {
  std::map<int, std::vector<Eigen::Index>> members;
  for (std::size_t i = 0; i < truth.size(); ++i)
    members[truth[i]].push_back(static_cast<Eigen::Index>(i));
  if (n_sample_per_class.empty())
    throw std::invalid_argument("sample_fidelity: empty sample counts");
  if (n_sample_per_class.size() == 1)
    n_sample_per_class.assign(members.size(), n_sample_per_class[0]);
  if (n_sample_per_class.size() != members.size())
    throw std::invalid_argument("sample_fidelity: got " +
                                std::to_string(n_sample_per_class.size()) + " counts for " +
                                std::to_string(members.size()) + " classes");

  SplitMix64 rng(seed);
  std::vector<Eigen::Index> out;
  std::size_t c = 0;
  for (auto& [label, idx] : members) {
    const int want = n_sample_per_class[c++];
    if (want < 1 || static_cast<std::size_t>(want) > idx.size())
      throw std::invalid_argument("sample_fidelity: class " + std::to_string(label) + " has " +
                                  std::to_string(idx.size()) + " members, requested " +
                                  std::to_string(want));
    for (int t = 0; t < want; ++t) {
      const std::size_t j = static_cast<std::size_t>(t) +
                            static_cast<std::size_t>(rng.below(idx.size() - static_cast<std::size_t>(t)));
      std::swap(idx[static_cast<std::size_t>(t)], idx[j]);
      out.push_back(idx[static_cast<std::size_t>(t)]);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace digs
