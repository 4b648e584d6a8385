#pragma once

// Out-of-sample evaluation: per-group Spearman rank IC, aggregate IC/ICIR and
// mean NDCG, and a long-short decile backtest where labels are per-period
// returns. Deciles are formed per period on descending scores (decile 10 =
// best-scored); bucket sizes follow the largest remainder so they never
// differ by more than one, with leftovers paired onto the outer deciles first
// so negating every score mirrors the decile table exactly.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "icboost/dataset.hpp"
#include "icboost/gbdt.hpp"

namespace icboost {

using ScoresPerGroup = std::vector<std::vector<double>>;

struct ICSeries {
    std::vector<std::pair<std::string, double>> entries;  // (group id, rho)
    std::size_t skipped = 0;                              // groups with n < 2
};

ICSeries ic_series(const GroupedDataset& ds, const ScoresPerGroup& scores);

// NDCG@k per group with relevance grades bucketed from label ranks.
std::vector<double> group_ndcg(const GroupedDataset& ds, const ScoresPerGroup& scores,
                               std::size_t k, int num_grades);

struct MetricsReport {
    double mean_ic = 0.0;
    double std_ic = 0.0;               // sample standard deviation (n - 1)
    std::optional<double> icir;        // absent when std_ic == 0 or n < 2
    double mean_ndcg = 0.0;
    std::size_t ndcg_k = 100;
    std::size_t groups_evaluated = 0;
};

MetricsReport aggregate_metrics(const ICSeries& series, std::span<const double> ndcg_values,
                                std::size_t k);

struct SeriesStats {
    double mean_pct = 0.0;
    double vol_pct = 0.0;              // sample standard deviation, percent
    std::optional<double> sharpe;      // mean/vol * sqrt(12); absent when vol == 0
    double mdd_pct = 0.0;              // NaN when a period return <= -100%
};

struct BacktestReport {
    std::array<SeriesStats, 10> deciles;  // index 0 = decile 1 (worst scores)
    SeriesStats long_short;               // decile 10 minus decile 1
    std::vector<std::string> periods;
    // Per-period simple returns; NaN when a decile had no members that period.
    std::array<std::vector<double>, 10> decile_returns;
    std::vector<double> long_short_returns;
    // Compounded cumulative returns (product of 1 + r, minus 1); NaN periods flat.
    std::array<std::vector<double>, 10> decile_cumulative;
    std::vector<double> long_short_cumulative;
};

// Labels are the realized returns; group weights, when present, weight the
// bucket means. Periods with no rows are skipped entirely.
BacktestReport decile_backtest(const GroupedDataset& ds, const ScoresPerGroup& scores);

// Peak-to-trough loss in percent of the wealth path starting at 1 and
// compounding 1 + r per period. Requires every return > -1.
double max_drawdown(std::span<const double> returns);

// Decile sizes for one period under the largest-remainder rule; index 0 is
// decile 1. Exposed for direct auditing.
std::array<std::size_t, 10> decile_sizes(std::size_t n);

struct ProtocolConfig {
    ObjectiveKind kind = ObjectiveKind::LambdaRankIC;
    ObjectiveConfig objective{};
    std::vector<TrainConfig> candidates{TrainConfig{}};  // tuned on valid mean IC
    std::size_t ndcg_k = 100;
};

struct WindowOutcome {
    std::size_t window = 0;
    std::size_t chosen_candidate = 0;
    std::optional<double> valid_mean_ic;  // absent when the window has no valid slice
    std::string model_json;
};

struct ProtocolResult {
    std::vector<std::size_t> covered_groups;  // dataset positions, first hit wins
    ScoresPerGroup oos_scores;                // aligned with covered_groups
    MetricsReport metrics;
    BacktestReport backtest;
    std::vector<WindowOutcome> windows;
    std::vector<std::string> warnings;
};

// Walks the rolling plan: fit on each window's train slice (refitting every
// candidate config and keeping the best validation mean IC when there is a
// valid slice), score its test slice, and pool the out-of-sample scores.
// Test groups covered by more than one window keep their first scores.
ProtocolResult run_protocol(const GroupedDataset& ds, const ProtocolConfig& cfg,
                            const RollingWindowPlan& plan);

}  // namespace icboost
