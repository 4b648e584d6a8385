#include "icboost/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <unordered_set>

#include "icboost/errors.hpp"

namespace icboost {

ObjectiveKind objective_from_string(const std::string& name) {
    if (name == "mse") return ObjectiveKind::SquaredError;
    if (name == "pairwise") return ObjectiveKind::LambdaPairwise;
    if (name == "ndcg") return ObjectiveKind::LambdaNDCG;
    if (name == "rankic") return ObjectiveKind::LambdaRankIC;
    throw std::invalid_argument("unknown objective '" + name +
                                "' (expected mse, pairwise, ndcg or rankic)");
}

std::string to_string(ObjectiveKind kind) {
    switch (kind) {
        case ObjectiveKind::SquaredError: return "mse";
        case ObjectiveKind::LambdaPairwise: return "pairwise";
        case ObjectiveKind::LambdaNDCG: return "ndcg";
        case ObjectiveKind::LambdaRankIC: return "rankic";
    }
    return "?";
}

void ObjectiveConfig::validate() const {
    if (!(sigma.sigma > 0.0)) throw std::invalid_argument("objective: sigma must be positive");
    if (!(hessian_floor > 0.0))
        throw std::invalid_argument("objective: hessian_floor must be positive");
    if (ndcg_relevance_grades < 1)
        throw std::invalid_argument("objective: ndcg_relevance_grades must be >= 1");
    if (pair_budget && *pair_budget < 1)
        throw std::invalid_argument("objective: pair_budget must be >= 1 when set");
}

GradHessVector grad_hess_squared_error(std::span<const double> scores,
                                       std::span<const double> labels) {
    if (scores.size() != labels.size())
        throw std::invalid_argument("grad_hess_squared_error: length mismatch");
    GradHessVector out;
    out.g.resize(scores.size());
    out.h.assign(scores.size(), 1.0);
    for (std::size_t i = 0; i < scores.size(); ++i) out.g[i] = scores[i] - labels[i];
    return out;
}

std::vector<int> labels_to_relevance_grades(const LabelRanks& labels, int num_grades) {
    if (num_grades < 1)
        throw std::invalid_argument("labels_to_relevance_grades: num_grades must be >= 1");
    const std::int64_t n = static_cast<std::int64_t>(labels.ranks.size());
    std::vector<int> grades(labels.ranks.size());
    for (std::size_t i = 0; i < labels.ranks.size(); ++i) {
        const std::int64_t rank = labels.ranks[i];
        grades[i] = static_cast<int>(static_cast<std::int64_t>(num_grades) * (n - rank) / n);
    }
    return grades;
}

namespace {

// Enumerates the pairs to visit: either every (i, j) with i < j, or a sorted
// sample of pair codes drawn without replacement (Floyd's algorithm), decoded
// back to index pairs. Codes count pairs row by row: (0,1), (0,2), ..., (1,2), ...
std::vector<std::pair<std::uint32_t, std::uint32_t>> sample_pairs(std::size_t n,
                                                                  std::size_t budget,
                                                                  rng::Rng& rng) {
    const std::uint64_t total = static_cast<std::uint64_t>(n) * (n - 1) / 2;
    std::vector<std::uint64_t> codes;
    codes.reserve(budget);
    std::unordered_set<std::uint64_t> chosen;
    chosen.reserve(budget * 2);
    for (std::uint64_t j = total - budget; j < total; ++j) {
        std::uint64_t t = rng.uniform_below(j + 1);
        if (!chosen.insert(t).second) {
            chosen.insert(j);
            codes.push_back(j);
        } else {
            codes.push_back(t);
        }
    }
    std::sort(codes.begin(), codes.end());

    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
    pairs.reserve(budget);
    // Codes are sorted, so the owning row i only ever advances.
    std::uint64_t i = 0;
    std::uint64_t row_begin = 0;                  // code of pair (i, i+1)
    std::uint64_t row_len = n - 1;                // pairs in row i
    for (std::uint64_t code : codes) {
        while (code >= row_begin + row_len) {
            row_begin += row_len;
            --row_len;
            ++i;
        }
        std::uint64_t j = i + 1 + (code - row_begin);
        pairs.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
    }
    return pairs;
}

struct DeltaContext {
    ObjectiveKind kind;
    double c_n = 0.0;                 // 12 / (n (n^2 - 1))
    std::vector<double> gains;        // 2^grade per item (NDCG)
    std::vector<double> discounts;    // 1/log2(1 + pos), index 0 unused
    double inv_idcg = 0.0;
};

inline double swap_delta(const DeltaContext& ctx, const LabelRanks& labels,
                         const PredictedRanks& pred, std::size_t i, std::size_t j) {
    switch (ctx.kind) {
        case ObjectiveKind::LambdaPairwise:
            return 1.0;
        case ObjectiveKind::LambdaRankIC: {
            const std::int64_t dr = std::abs(static_cast<std::int64_t>(pred.ranks[i]) -
                                             static_cast<std::int64_t>(pred.ranks[j]));
            const std::int64_t dy = std::abs(static_cast<std::int64_t>(labels.ranks[i]) -
                                             static_cast<std::int64_t>(labels.ranks[j]));
            return ctx.c_n * static_cast<double>(dr * dy);
        }
        case ObjectiveKind::LambdaNDCG: {
            const double gain_gap = std::abs(ctx.gains[i] - ctx.gains[j]);
            const double disc_gap =
                std::abs(ctx.discounts[static_cast<std::size_t>(pred.ranks[i])] -
                         ctx.discounts[static_cast<std::size_t>(pred.ranks[j])]);
            return gain_gap * ctx.inv_idcg * disc_gap;
        }
        case ObjectiveKind::SquaredError:
            break;
    }
    throw std::invalid_argument("swap_delta: not a lambda objective");
}

}  // namespace

GradHessVector grad_hess_lambda(const Group& group, const LabelRanks& labels,
                                std::span<const double> scores, ObjectiveKind kind,
                                const ObjectiveConfig& cfg, rng::Rng* pair_rng) {
    const std::size_t n = group.n;
    if (!is_lambda_objective(kind))
        throw std::invalid_argument("grad_hess_lambda: use grad_hess_squared_error for mse");
    if (scores.size() != n || labels.ranks.size() != n)
        throw std::invalid_argument("grad_hess_lambda: length mismatch");
    if (n < 2) throw std::invalid_argument("grad_hess_lambda: needs n >= 2");
    cfg.validate();

    const PredictedRanks pred = predicted_ranks(scores, group.item_index);
    const double sigma = cfg.sigma.sigma;

    DeltaContext ctx;
    ctx.kind = kind;
    if (kind == ObjectiveKind::LambdaRankIC) {
        const double dn = static_cast<double>(n);
        ctx.c_n = 12.0 / (dn * (dn * dn - 1.0));
    } else if (kind == ObjectiveKind::LambdaNDCG) {
        std::vector<int> grades = labels_to_relevance_grades(labels, cfg.ndcg_relevance_grades);
        ctx.gains.resize(n);
        for (std::size_t i = 0; i < n; ++i) ctx.gains[i] = std::exp2(static_cast<double>(grades[i]));
        ctx.discounts.resize(n + 1);
        for (std::size_t pos = 1; pos <= n; ++pos)
            ctx.discounts[pos] = 1.0 / std::log2(static_cast<double>(pos) + 1.0);
        const double idcg = ideal_dcg(grades, n);
        if (!(idcg > 0.0))
            throw DataError("grad_hess_lambda: group '" + group.id + "' has zero ideal DCG");
        ctx.inv_idcg = 1.0 / idcg;
    }

    GradHessVector out;
    out.g.assign(n, 0.0);
    out.h.assign(n, 0.0);

    auto accumulate = [&](std::size_t a, std::size_t b) {
        // hi = more relevant item (smaller descending label rank).
        std::size_t hi = a, lo = b;
        if (labels.ranks[hi] > labels.ranks[lo]) std::swap(hi, lo);
        const double delta = swap_delta(ctx, labels, pred, hi, lo);
        const double margin = sigma * (scores[hi] - scores[lo]);
        // p = sigmoid(margin), evaluated on the safe side for large |margin|.
        double p;
        if (margin >= 0.0) {
            const double e = std::exp(-margin);
            p = 1.0 / (1.0 + e);
        } else {
            const double e = std::exp(margin);
            p = e / (1.0 + e);
        }
        const double lambda = sigma * (1.0 - p) * delta;
        const double hess = 2.0 * sigma * sigma * p * (1.0 - p) * delta;
        out.g[hi] -= lambda;
        out.g[lo] += lambda;
        out.h[hi] += hess;
        out.h[lo] += hess;
    };

    const std::uint64_t total_pairs = static_cast<std::uint64_t>(n) * (n - 1) / 2;
    if (cfg.pair_budget && *cfg.pair_budget < total_pairs) {
        if (pair_rng == nullptr)
            throw std::invalid_argument("grad_hess_lambda: pair_budget needs a generator");
        for (auto [a, b] : sample_pairs(n, *cfg.pair_budget, *pair_rng)) accumulate(a, b);
    } else {
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = a + 1; b < n; ++b) accumulate(a, b);
    }

    for (std::size_t i = 0; i < n; ++i)
        if (out.h[i] < cfg.hessian_floor) out.h[i] = cfg.hessian_floor;

    if (group.has_weights()) {
        for (std::size_t i = 0; i < n; ++i) {
            out.g[i] *= group.weights[i];
            out.h[i] *= group.weights[i];
        }
    }
    return out;
}

}  // namespace icboost
