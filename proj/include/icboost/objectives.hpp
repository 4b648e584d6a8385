#pragma once

// Gradient/hessian providers for boosting. The lambda family walks item pairs
// inside one group, weights the logistic pair gradient by how much the group
// ranking metric would move if the pair swapped places, and accumulates into
// per-item g/h. Orientation: the more relevant item of a pair always receives
// the negative gradient contribution, so a -g/h Newton step raises its score.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "icboost/dataset.hpp"
#include "icboost/random.hpp"
#include "icboost/rankcore.hpp"

namespace icboost {

enum class ObjectiveKind { SquaredError, LambdaPairwise, LambdaNDCG, LambdaRankIC };

// CLI spellings: mse, pairwise, ndcg, rankic.
ObjectiveKind objective_from_string(const std::string& name);
std::string to_string(ObjectiveKind kind);
inline bool is_lambda_objective(ObjectiveKind k) { return k != ObjectiveKind::SquaredError; }

struct ObjectiveConfig {
    SigmoidShape sigma{};
    std::optional<std::size_t> pair_budget;  // absent: all n(n-1)/2 pairs
    double hessian_floor = 1e-16;            // applied after accumulation
    int ndcg_relevance_grades = 32;          // G: grades take values 0..G-1
    void validate() const;
};

struct GradHessVector {
    std::vector<double> g;
    std::vector<double> h;
};

// g_i = s_i - y_i, h_i = 1 (one-half squared error).
GradHessVector grad_hess_squared_error(std::span<const double> scores,
                                       std::span<const double> labels);

// Buckets descending label ranks into num_grades relevance levels:
// grade_i = floor(num_grades * (n - rank_i) / n), so the top item gets the
// highest grade and grades never decrease with relevance.
std::vector<int> labels_to_relevance_grades(const LabelRanks& labels, int num_grades);

// Pair-accumulated gradients for one group. For each pair (hi = more
// relevant, lo = less relevant):
//   p      = 1 / (1 + e^{-sigma (s_hi - s_lo)})
//   |lambda| = sigma * (1 - p) * |delta|
//   g[hi] -= |lambda|,  g[lo] += |lambda|
//   h[both] += 2 sigma^2 p (1 - p) * |delta|
// where |delta| is the swap delta of the chosen metric: the exact rho move
// for LambdaRankIC, the NDCG move for LambdaNDCG, and 1 for LambdaPairwise.
// With a pair_budget, that many distinct pairs are sampled without
// replacement from pair_rng (required in that case). Group weights, when
// present, scale each item's g and h after accumulation.
GradHessVector grad_hess_lambda(const Group& group, const LabelRanks& labels,
                                std::span<const double> scores, ObjectiveKind kind,
                                const ObjectiveConfig& cfg, rng::Rng* pair_rng = nullptr);

}  // namespace icboost
