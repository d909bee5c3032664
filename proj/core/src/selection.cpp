#include "posefuse/selection.hpp"

#include <algorithm>
#include <cmath>

namespace posefuse {

void DescriptorSet::validate() const {
  const int d = dim();
  for (const auto& [id, v] : entries) {
    if (v.size() != d)
      throw PreconditionError("descriptor " + id + ": inconsistent dimension");
    if (std::abs(v.norm() - 1.0) > 1e-6)
      throw PreconditionError("descriptor " + id + ": not unit norm");
  }
}

SimilarityMatrix similarity_matrix(const DescriptorSet& main,
                                   const DescriptorSet& aux) {
  if (main.entries.empty() || aux.entries.empty())
    throw PreconditionError("similarity_matrix: empty descriptor set");
  for (const auto* set : {&main, &aux})
    for (const auto& [id, v] : set->entries)
      if (v.norm() < 1e-12) throw ZeroDescriptor("descriptor " + id + " is zero");

  SimilarityMatrix out;
  out.main_ids.reserve(main.entries.size());
  out.aux_ids.reserve(aux.entries.size());
  for (const auto& [id, v] : main.entries) out.main_ids.push_back(id);
  for (const auto& [id, v] : aux.entries) out.aux_ids.push_back(id);
  out.values.resize(static_cast<Eigen::Index>(out.main_ids.size()),
                    static_cast<Eigen::Index>(out.aux_ids.size()));
  Eigen::Index i = 0;
  for (const auto& [mid, mv] : main.entries) {
    Eigen::Index j = 0;
    for (const auto& [aid, av] : aux.entries) out.values(i, j++) = mv.dot(av);
    ++i;
  }
  return out;
}

std::vector<CandidatePair> top_k_pairs(const SimilarityMatrix& matrix, int k) {
  if (k < 1) throw PreconditionError("top_k_pairs: k must be >= 1");
  std::vector<CandidatePair> all;
  all.reserve(static_cast<std::size_t>(matrix.values.size()));
  for (std::size_t i = 0; i < matrix.main_ids.size(); ++i)
    for (std::size_t j = 0; j < matrix.aux_ids.size(); ++j)
      all.push_back({matrix.main_ids[i], matrix.aux_ids[j],
                     matrix.values(static_cast<Eigen::Index>(i),
                                   static_cast<Eigen::Index>(j))});
  std::sort(all.begin(), all.end(), [](const CandidatePair& a, const CandidatePair& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    if (a.main_id != b.main_id) return a.main_id < b.main_id;
    return a.aux_id < b.aux_id;
  });
  if (all.size() > static_cast<std::size_t>(k)) all.resize(k);
  return all;
}

VerifyResult geometric_verify(const std::vector<CandidatePair>& pairs,
                              const PosePrediction& oracle, double phi_deg,
                              double delta_deg) {
  if (!(phi_deg > 0.0 && phi_deg <= 180.0) ||
      !(delta_deg > 0.0 && delta_deg <= 180.0))
    throw PreconditionError("geometric_verify: thresholds must be in (0,180]");
  VerifyResult out;
  for (const auto& p : pairs) {
    const auto gaps = oracle.lookup(p.main_id, p.aux_id);
    if (!gaps) {
      ++out.missing_oracle;
      continue;
    }
    out.max_fwd_gap = std::max(out.max_fwd_gap, gaps->fwd_deg);
    out.max_up_gap = std::max(out.max_up_gap, gaps->up_deg);
    if (gaps->fwd_deg <= phi_deg && gaps->up_deg <= delta_deg)
      out.kept.push_back(p);
  }
  return out;
}

namespace {

std::vector<std::string> nearest_ids(const PoseSet& set, const std::string& seed,
                                     int count) {
  const CameraPose* anchor = set.find(seed);
  if (!anchor)
    throw PreconditionError("expand_neighborhood: seed " + seed + " not in set");
  if (count > static_cast<int>(set.poses.size()))
    throw PreconditionError("expand_neighborhood: requested more ids than poses");

  std::vector<std::pair<double, std::string>> dist;
  dist.reserve(set.poses.size());
  for (const auto& p : set.poses) {
    if (p.id == seed) continue;
    dist.emplace_back((p.center - anchor->center).norm(), p.id);
  }
  std::sort(dist.begin(), dist.end());
  std::vector<std::string> out;
  out.reserve(count);
  out.push_back(seed);
  for (int i = 0; i + 1 < count; ++i) out.push_back(dist[i].second);
  return out;
}

}  // namespace

std::pair<std::vector<std::string>, std::vector<std::string>>
expand_neighborhood(const CandidatePair& pair, const PoseSet& main_poses,
                    const PoseSet& aux_poses, int m, int n) {
  return {nearest_ids(main_poses, pair.main_id, m),
          nearest_ids(aux_poses, pair.aux_id, n)};
}

MixedPoseSelection select_mixed_set(const DescriptorSet& main_desc,
                                    const DescriptorSet& aux_desc,
                                    const PoseSet& main_poses,
                                    const PoseSet& aux_poses,
                                    const PosePrediction& oracle,
                                    const SelectionParams& params) {
  const SimilarityMatrix matrix = similarity_matrix(main_desc, aux_desc);
  const std::vector<CandidatePair> top = top_k_pairs(matrix, params.k);
  const VerifyResult verified =
      geometric_verify(top, oracle, params.phi_deg, params.delta_deg);
  if (verified.kept.empty())
    throw NoVerifiedPairs(
        "select_mixed_set: no candidate pair passed verification (max fwd gap " +
        std::to_string(verified.max_fwd_gap) + " deg, max up gap " +
        std::to_string(verified.max_up_gap) + " deg, " +
        std::to_string(verified.missing_oracle) + " without prediction)");

  // Index lookups for scoring expansions.
  std::map<std::string, Eigen::Index> main_index, aux_index;
  for (std::size_t i = 0; i < matrix.main_ids.size(); ++i)
    main_index[matrix.main_ids[i]] = static_cast<Eigen::Index>(i);
  for (std::size_t j = 0; j < matrix.aux_ids.size(); ++j)
    aux_index[matrix.aux_ids[j]] = static_cast<Eigen::Index>(j);

  bool have_best = false;
  MixedPoseSelection best;
  for (const auto& seed : verified.kept) {
    auto [main_ids, aux_ids] =
        expand_neighborhood(seed, main_poses, aux_poses, params.m, params.n);
    double sum = 0.0;
    for (const auto& mid : main_ids)
      for (const auto& aid : aux_ids)
        sum += matrix.values(main_index.at(mid), aux_index.at(aid));
    const double score =
        sum / (static_cast<double>(main_ids.size()) * aux_ids.size());

    const bool better =
        !have_best || score > best.score ||
        (score == best.score &&
         (seed.similarity > best.seed_pair.similarity ||
          (seed.similarity == best.seed_pair.similarity &&
           std::tie(seed.main_id, seed.aux_id) <
               std::tie(best.seed_pair.main_id, best.seed_pair.aux_id))));
    if (better) {
      best.main_ids = std::move(main_ids);
      best.aux_ids = std::move(aux_ids);
      best.seed_pair = seed;
      best.score = score;
      have_best = true;
    }
  }
  return best;
}

}  // namespace posefuse
