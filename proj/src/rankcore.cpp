#include "icboost/rankcore.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <numeric>

namespace icboost {

namespace {

// log2(1 + e^t) without overflow for large |t|.
double log2_one_plus_exp(double t) {
    constexpr double inv_ln2 = std::numbers::log2e;
    if (t > 0.0) return (t + std::log1p(std::exp(-t))) * inv_ln2;
    return std::log1p(std::exp(t)) * inv_ln2;
}

void check_rank_pair(std::span<const std::int32_t> a, std::span<const std::int32_t> b,
                     const char* who) {
    if (a.size() != b.size())
        throw std::invalid_argument(std::string(who) + ": rank vectors differ in length");
    if (a.size() < 2) throw std::invalid_argument(std::string(who) + ": needs n >= 2");
}

}  // namespace

PredictedRanks predicted_ranks(std::span<const double> scores,
                               std::span<const std::int32_t> item_index) {
    const std::size_t n = scores.size();
    if (!item_index.empty() && item_index.size() != n)
        throw std::invalid_argument("predicted_ranks: item_index length mismatch");
    for (double s : scores)
        if (std::isnan(s)) throw std::invalid_argument("predicted_ranks: NaN score");

    std::vector<std::int32_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    auto tie_key = [&](std::int32_t i) {
        return item_index.empty() ? i : item_index[static_cast<std::size_t>(i)];
    };
    std::sort(order.begin(), order.end(), [&](std::int32_t a, std::int32_t b) {
        double sa = scores[static_cast<std::size_t>(a)];
        double sb = scores[static_cast<std::size_t>(b)];
        if (sa != sb) return sa > sb;
        return tie_key(a) < tie_key(b);
    });
    PredictedRanks out;
    out.ranks.resize(n);
    for (std::size_t pos = 0; pos < n; ++pos)
        out.ranks[static_cast<std::size_t>(order[pos])] = static_cast<std::int32_t>(pos + 1);
    return out;
}

double rank_variance(std::size_t n) {
    if (n < 2) throw std::invalid_argument("rank_variance: needs n >= 2");
    double dn = static_cast<double>(n);
    return (dn * dn - 1.0) / 12.0;
}

double spearman_rho(std::span<const std::int32_t> pred_ranks,
                    std::span<const std::int32_t> label_ranks) {
    check_rank_pair(pred_ranks, label_ranks, "spearman_rho");
    const std::size_t n = pred_ranks.size();
    // Products of ranks stay within int64 far beyond any practical group size.
    std::int64_t dot = 0;
    for (std::size_t i = 0; i < n; ++i)
        dot += static_cast<std::int64_t>(pred_ranks[i]) * static_cast<std::int64_t>(label_ranks[i]);
    const double dn = static_cast<double>(n);
    const double half = (dn + 1.0) / 2.0;
    const double numer = static_cast<double>(dot) - dn * half * half;
    return 12.0 * numer / (dn * (dn * dn - 1.0));
}

double spearman_rho(const PredictedRanks& pred, const LabelRanks& labels) {
    return spearman_rho(std::span<const std::int32_t>(pred.ranks),
                        std::span<const std::int32_t>(labels.ranks));
}

double delta_rank_ic(std::int32_t r_i, std::int32_t r_j, std::int32_t y_i, std::int32_t y_j,
                     std::size_t n) {
    if (n < 2) throw std::invalid_argument("delta_rank_ic: needs n >= 2");
    const double dn = static_cast<double>(n);
    const std::int64_t dr = std::abs(static_cast<std::int64_t>(r_j) - static_cast<std::int64_t>(r_i));
    const std::int64_t dy = std::abs(static_cast<std::int64_t>(y_i) - static_cast<std::int64_t>(y_j));
    return 12.0 * static_cast<double>(dr * dy) / (dn * (dn * dn - 1.0));
}

double delta_ndcg(double grade_i, double grade_j, std::int32_t r_i, std::int32_t r_j,
                  double idcg) {
    if (!(idcg > 0.0)) throw std::invalid_argument("delta_ndcg: idcg must be positive");
    if (r_i < 1 || r_j < 1) throw std::invalid_argument("delta_ndcg: positions are 1-based");
    const double gain_gap = std::abs(std::exp2(grade_i) - std::exp2(grade_j));
    const double disc_i = 1.0 / std::log2(1.0 + static_cast<double>(r_i));
    const double disc_j = 1.0 / std::log2(1.0 + static_cast<double>(r_j));
    return gain_gap / idcg * std::abs(disc_i - disc_j);
}

double ideal_dcg(std::span<const int> grades, std::size_t k) {
    std::vector<int> sorted(grades.begin(), grades.end());
    std::sort(sorted.begin(), sorted.end(), std::greater<int>());
    const std::size_t limit = std::min(k, sorted.size());
    double dcg = 0.0;
    for (std::size_t pos = 0; pos < limit; ++pos)
        dcg += (std::exp2(static_cast<double>(sorted[pos])) - 1.0) /
               std::log2(static_cast<double>(pos) + 2.0);
    return dcg;
}

double ndcg_at_k(std::span<const double> scores, std::span<const int> grades, std::size_t k) {
    if (scores.size() != grades.size())
        throw std::invalid_argument("ndcg_at_k: scores and grades differ in length");
    if (k < 1) throw std::invalid_argument("ndcg_at_k: k must be >= 1");
    const double idcg = ideal_dcg(grades, k);
    if (idcg == 0.0) return 1.0;

    PredictedRanks pr = predicted_ranks(scores);
    const std::size_t n = scores.size();
    double dcg = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t pos = static_cast<std::size_t>(pr.ranks[i]);
        if (pos > k) continue;
        dcg += (std::exp2(static_cast<double>(grades[i])) - 1.0) /
               std::log2(static_cast<double>(pos) + 1.0);
    }
    return dcg / idcg;
}

double rank_ic_loss(std::span<const double> scores, const LabelRanks& labels) {
    const std::size_t n = scores.size();
    if (labels.ranks.size() != n) throw std::invalid_argument("rank_ic_loss: length mismatch");
    if (n < 2) throw std::invalid_argument("rank_ic_loss: needs n >= 2");
    std::int64_t weighted_discordant = 0;
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            if (scores[a] == scores[b])
                throw std::invalid_argument("rank_ic_loss: tied scores make the pair sum undefined");
            // Orient so i is the more relevant item (smaller label rank).
            std::size_t i = a, j = b;
            if (labels.ranks[i] > labels.ranks[j]) std::swap(i, j);
            if (scores[i] < scores[j])
                weighted_discordant += static_cast<std::int64_t>(labels.ranks[j]) -
                                       static_cast<std::int64_t>(labels.ranks[i]);
        }
    }
    const double dn = static_cast<double>(n);
    return 12.0 * static_cast<double>(weighted_discordant) / (dn * (dn * dn - 1.0));
}

namespace {

// Shared pair sum for the two surrogate losses. rank_weighted multiplies each
// term by the predicted rank gap; with it off the two losses coincide exactly
// on gap-1 pairs, which keeps the sandwich inequality safe in floating point.
double pairwise_logistic_sum(std::span<const double> scores, const LabelRanks& labels,
                             SigmoidShape shape, bool rank_weighted) {
    const std::size_t n = scores.size();
    if (labels.ranks.size() != n)
        throw std::invalid_argument("pairwise loss: length mismatch");
    if (n < 2) throw std::invalid_argument("pairwise loss: needs n >= 2");
    PredictedRanks pred = predicted_ranks(scores);
    const double dn = static_cast<double>(n);
    const double scale = 12.0 / (dn * (dn * dn - 1.0));
    double total = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            std::size_t i = a, j = b;
            if (labels.ranks[i] > labels.ranks[j]) std::swap(i, j);
            const double y_gap =
                static_cast<double>(static_cast<std::int64_t>(labels.ranks[j]) -
                                    static_cast<std::int64_t>(labels.ranks[i]));
            double weight = y_gap;
            if (rank_weighted) {
                const std::int64_t r_gap = std::abs(
                    static_cast<std::int64_t>(pred.ranks[i]) -
                    static_cast<std::int64_t>(pred.ranks[j]));
                weight = static_cast<double>(r_gap * (static_cast<std::int64_t>(labels.ranks[j]) -
                                                      static_cast<std::int64_t>(labels.ranks[i])));
            }
            total += scale * weight * log2_one_plus_exp(-shape.sigma * (scores[i] - scores[j]));
        }
    }
    return total;
}

}  // namespace

double lambda_rank_ic_loss(std::span<const double> scores, const LabelRanks& labels,
                           SigmoidShape shape) {
    return pairwise_logistic_sum(scores, labels, shape, true);
}

double logistic_surrogate_loss(std::span<const double> scores, const LabelRanks& labels,
                               SigmoidShape shape) {
    return pairwise_logistic_sum(scores, labels, shape, false);
}

}  // namespace icboost
