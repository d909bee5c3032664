#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "posefuse/errors.hpp"
#include "posefuse/geometry.hpp"

namespace posefuse {

// Image descriptors, unit-norm vectors keyed by image id. Ordered map keeps
// every derived iteration deterministic.
struct DescriptorSet {
  std::map<std::string, Eigen::VectorXd> entries;

  int dim() const { return entries.empty() ? 0 : static_cast<int>(entries.begin()->second.size()); }
  void validate() const;
};

struct CandidatePair {
  std::string main_id;
  std::string aux_id;
  double similarity = 0.0;
};

struct AngleGaps {
  double fwd_deg = 0.0;
  double up_deg = 0.0;
};

// Two-view pose-predictor oracle: per candidate pair, the angle gaps between
// predicted forward and up directions.
struct PosePrediction {
  std::map<std::string, AngleGaps> entries;  // canonical key, see make_key

  static std::string make_key(const std::string& a, const std::string& b) {
    return a <= b ? a + "|" + b : b + "|" + a;
  }
  std::optional<AngleGaps> lookup(const std::string& main_id,
                                  const std::string& aux_id) const {
    auto it = entries.find(make_key(main_id, aux_id));
    if (it == entries.end()) return std::nullopt;
    return it->second;
  }
};

struct MixedPoseSelection {
  std::vector<std::string> main_ids;
  std::vector<std::string> aux_ids;
  CandidatePair seed_pair;
  double score = 0.0;  // mean cross-set pairwise similarity
};

struct SimilarityMatrix {
  std::vector<std::string> main_ids;  // row order
  std::vector<std::string> aux_ids;   // column order
  Eigen::MatrixXd values;
};

// Cosine similarities between all main-auxiliary descriptor pairs.
// Throws ZeroDescriptor if any vector has norm below 1e-12.
SimilarityMatrix similarity_matrix(const DescriptorSet& main,
                                   const DescriptorSet& aux);

// K highest entries in descending similarity; ties broken by
// (main_id, aux_id) lexicographic order.
std::vector<CandidatePair> top_k_pairs(const SimilarityMatrix& matrix, int k);

struct VerifyResult {
  std::vector<CandidatePair> kept;
  int missing_oracle = 0;  // pairs dropped for lack of a prediction
  double max_fwd_gap = 0.0;
  double max_up_gap = 0.0;
};

// Keeps a pair iff forward gap <= phi and up gap <= delta (inclusive).
VerifyResult geometric_verify(const std::vector<CandidatePair>& pairs,
                              const PosePrediction& oracle, double phi_deg,
                              double delta_deg);

// Seed image plus its nearest neighbors by camera-center distance, each set
// measured in its own frame. Seed first, then ascending distance, distance
// ties by id.
std::pair<std::vector<std::string>, std::vector<std::string>>
expand_neighborhood(const CandidatePair& pair, const PoseSet& main_poses,
                    const PoseSet& aux_poses, int m, int n);

struct SelectionParams {
  int m = 15;
  int n = 15;
  int k = 50;
  double phi_deg = 60.0;
  double delta_deg = 45.0;
};

// Full mixed-pose selection: top-K candidate pairs, geometric verification,
// neighborhood expansion, mean cross-set similarity scoring.
MixedPoseSelection select_mixed_set(const DescriptorSet& main_desc,
                                    const DescriptorSet& aux_desc,
                                    const PoseSet& main_poses,
                                    const PoseSet& aux_poses,
                                    const PosePrediction& oracle,
                                    const SelectionParams& params);

}  // namespace posefuse
