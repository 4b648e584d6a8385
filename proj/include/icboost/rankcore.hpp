#pragma once

// Rank statistics over one group: descending score ranks, the exact Spearman
// correlation between integer rank vectors, the closed-form change of that
// correlation under a single rank swap, the matching NDCG swap delta, and the
// pairwise rank-correlation losses tied together by the sandwich
//   1 - rho  <=  logistic surrogate  <=  rank-gap weighted (lambda) loss,
// which holds whenever scores are tie-free. All logs are base 2.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "icboost/dataset.hpp"

namespace icboost {

// Descending score ranks, 1 = highest score; ties broken by ascending
// item_index (input order when item_index is omitted).
struct PredictedRanks {
    std::vector<std::int32_t> ranks;
};

PredictedRanks predicted_ranks(std::span<const double> scores,
                               std::span<const std::int32_t> item_index = {});

// Variance of the integers 1..n: (n^2 - 1) / 12. Requires n >= 2.
double rank_variance(std::size_t n);

// Spearman correlation of two rank permutations of 1..n, computed exactly as
//   rho = 12 * (sum_i r_i * y_i - n * ((n + 1) / 2)^2) / (n * (n^2 - 1)).
double spearman_rho(std::span<const std::int32_t> pred_ranks,
                    std::span<const std::int32_t> label_ranks);
double spearman_rho(const PredictedRanks& pred, const LabelRanks& labels);

// |rho change| when items holding predicted ranks r_i, r_j swap places:
//   12 * |r_j - r_i| * |y_i - y_j| / (n * (n^2 - 1)).
double delta_rank_ic(std::int32_t r_i, std::int32_t r_j, std::int32_t y_i, std::int32_t y_j,
                     std::size_t n);

// |NDCG change| when items with relevance grades g_i, g_j swap the positions
// they currently hold: |2^g_i - 2^g_j| / idcg * |1/log2(1+r_i) - 1/log2(1+r_j)|.
// idcg must be positive.
double delta_ndcg(double grade_i, double grade_j, std::int32_t r_i, std::int32_t r_j,
                  double idcg);

// DCG truncated at k over grade order chosen by descending score; gains are
// 2^grade - 1, discounts 1/log2(1+position). An all-zero ideal (idcg == 0)
// returns 1.0 by convention.
double ndcg_at_k(std::span<const double> scores, std::span<const int> grades, std::size_t k);

// Ideal DCG at k (grades sorted descending). Exposed for objective reuse.
double ideal_dcg(std::span<const int> grades, std::size_t k);

// Exact complement of Spearman rho written over discordant pairs:
//   1 - rho = 12/(n(n^2-1)) * sum_{y_i < y_j} (y_j - y_i) * [s_i < s_j].
// Scores must be tie-free, otherwise the identity has no meaning and this
// throws. (Rank arguments follow the descending convention of LabelRanks.)
double rank_ic_loss(std::span<const double> scores, const LabelRanks& labels);

struct SigmoidShape {
    double sigma = 1.0;
    SigmoidShape() = default;
    explicit SigmoidShape(double s) : sigma(s) {
        if (!(s > 0.0)) throw std::invalid_argument("SigmoidShape: sigma must be positive");
    }
};

// Upper bound on 1 - rho that weights each pair's logistic term by the
// current predicted rank gap (pairs oriented so item i is the more relevant):
//   12/(n(n^2-1)) * sum_{y_i < y_j} |r_i - r_j| * (y_j - y_i) * log2(1 + e^{-sigma (s_i - s_j)}).
double lambda_rank_ic_loss(std::span<const double> scores, const LabelRanks& labels,
                           SigmoidShape shape = {});

// Same sum without the rank-gap weight; the tight logistic surrogate of
// 1 - rho (rank gaps are at least 1 for distinct items, hence the sandwich).
double logistic_surrogate_loss(std::span<const double> scores, const LabelRanks& labels,
                               SigmoidShape shape = {});

}  // namespace icboost
