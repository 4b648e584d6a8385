#pragma once

// Grouped panel data: rows are (group, features, label [, weight]) where a
// group is one ranking universe (a period's cross-section or a query). All
// per-item order inside a group follows input order; item_index records it
// and is the tie-breaker everywhere ranks are formed.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace icboost {

struct Group {
    std::string id;
    std::size_t n = 0;
    std::size_t num_features = 0;
    std::vector<double> features;            // n x num_features, row-major
    std::vector<double> labels;              // size n
    std::vector<double> weights;             // size n, or empty for equal weight
    std::vector<std::int32_t> item_index;    // 0..n-1 in input order

    std::span<const double> row(std::size_t i) const {
        return {features.data() + i * num_features, num_features};
    }
    bool has_weights() const { return !weights.empty(); }
};

struct GroupedDataset {
    std::vector<Group> groups;
    std::size_t num_features = 0;
    std::vector<std::string> feature_names;  // empty when unnamed

    std::size_t num_groups() const { return groups.size(); }
    std::size_t total_rows() const;

    // Copies groups [begin, end) into a standalone dataset.
    GroupedDataset slice(std::size_t begin, std::size_t end) const;

    void validate() const;  // throws DataError on any broken invariant
};

// Descending label ranks, 1 = largest label; label ties broken by ascending
// item_index so the result is always a permutation of 1..n.
struct LabelRanks {
    std::vector<std::int32_t> ranks;
};

LabelRanks label_ranks(const Group& g);

struct CsvSchema {
    std::string group_col = "group";
    std::string label_col = "label";
    std::string weight_col;  // empty: dataset carries no weights
};

// Strict CSV: header row, comma separated, '.' decimal point, every non-key
// column numeric and finite. Groups appear in order of first occurrence.
GroupedDataset load_csv(const std::string& path, const CsvSchema& schema = {});
void save_csv(const GroupedDataset& ds, const std::string& path, const CsvSchema& schema = {});

// Per group and per feature column, replaces values by ascending average
// ranks mapped linearly onto [-1, 1] (ties share their averaged rank, a
// single-item group maps to 0). Applying it twice is a no-op.
GroupedDataset rank_transform_features(const GroupedDataset& ds);

struct WindowSpec {
    std::size_t train_begin = 0, train_end = 0;  // [begin, end) group positions
    std::size_t valid_begin = 0, valid_end = 0;
    std::size_t test_begin = 0, test_end = 0;
};

struct RollingWindowPlan {
    std::vector<WindowSpec> windows;
    std::size_t train_len = 0, valid_len = 0, test_len = 0, step = 0;
    bool insufficient_history = false;  // set when not even one window fits
};

// Window k starts at group k*step and lays train | valid | test back to back.
// valid_len may be 0 (plain train/test split); train_len, test_len, step >= 1.
RollingWindowPlan rolling_windows(std::size_t num_groups, std::size_t train_len,
                                  std::size_t valid_len, std::size_t test_len,
                                  std::size_t step);

}  // namespace icboost
