#pragma once

// Histogram-based gradient boosting with second-order leaf values. Features
// are quantile-binned once per fit; trees grow level by level, taking the
// best split by the usual gain
//   1/2 [ G_L^2/(H_L+reg) + G_R^2/(H_R+reg) - G^2/(H+reg) ]
// and leaves store -G/(H+reg) unscaled; the learning rate is applied when
// scores are updated or predicted. With a fixed seed and one thread the whole
// fit is bit-reproducible; histograms subtract siblings from parents so each
// level costs one pass over the smaller children only.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "icboost/dataset.hpp"
#include "icboost/objectives.hpp"

namespace icboost {

struct TrainConfig {
    int max_depth = 8;
    double learning_rate = 0.1;
    int num_rounds = 100;
    double subsample = 1.0;         // lambda objectives: fraction of groups per round
    double colsample_bytree = 1.0;  // fraction of features per tree
    double min_child_weight = 1.0;  // minimum sum of h per child
    double reg_lambda = 1.0;
    int max_bins = 256;
    std::uint64_t seed = 0;
    int eval_every = 1;
    void validate() const;
};

struct TreeNode {
    std::int32_t feature = -1;
    double threshold = 0.0;   // x <= threshold goes left
    std::int32_t left = -1;
    std::int32_t right = -1;
    double leaf_value = 0.0;
    bool is_leaf = true;
};

struct Tree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root; children follow parents
    double value_at(std::span<const double> row) const;
    std::int32_t leaf_index(std::span<const double> row) const;
};

struct Forest {
    std::vector<Tree> trees;
    double base_score = 0.0;
    double learning_rate = 0.1;
    std::size_t feature_count = 0;
    std::string objective = "mse";

    double predict_row(std::span<const double> row) const {
        double score = base_score;
        for (const auto& t : trees) score += learning_rate * t.value_at(row);
        return score;
    }
};

struct HistoryRecord {
    int round = 0;  // 1-based
    std::string set_name;
    std::string metric_name;
    double value = 0.0;
};

struct TrainHistory {
    std::vector<HistoryRecord> records;
    void write_csv(const std::string& path) const;
    // Highest value of metric on set; earliest round wins ties.
    std::optional<std::pair<int, double>> peak(const std::string& set_name,
                                               const std::string& metric_name) const;
    // Value at the largest recorded round.
    std::optional<double> last(const std::string& set_name, const std::string& metric_name) const;
};

struct EvalSet {
    std::string name;
    const GroupedDataset* data = nullptr;
};

struct FitResult {
    Forest forest;
    TrainHistory history;
    std::vector<double> train_scores;  // cached scores, concatenated row order
    std::vector<std::string> warnings;
};

// Boosts on the grouped training set. Every eval set (the training set may be
// one of them) gets a mean-rank-IC record each eval_every rounds; the squared
// error objective additionally records rmse.
FitResult fit(const GroupedDataset& train, ObjectiveKind kind, const ObjectiveConfig& ocfg,
              const TrainConfig& cfg, const std::vector<EvalSet>& eval_sets = {});

// Scores in concatenated row order (groups in dataset order).
std::vector<double> predict(const Forest& forest, const GroupedDataset& ds);

void save_model(const Forest& forest, const std::string& path);
Forest load_model(const std::string& path);

// JSON round-trip bodies, exposed so byte-level identity can be checked.
std::string model_to_json(const Forest& forest);
Forest model_from_json(const std::string& text);

}  // namespace icboost
