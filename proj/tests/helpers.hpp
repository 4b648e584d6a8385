#pragma once

// Small builders and oracles shared by the unit tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "icboost/dataset.hpp"

namespace testutil {

inline icboost::Group make_group(std::string id, std::vector<double> labels,
                                 std::size_t num_features = 0, std::vector<double> features = {},
                                 std::vector<double> weights = {}) {
    icboost::Group g;
    g.id = std::move(id);
    g.n = labels.size();
    g.num_features = num_features;
    g.features = std::move(features);
    g.labels = std::move(labels);
    g.weights = std::move(weights);
    g.item_index.resize(g.n);
    std::iota(g.item_index.begin(), g.item_index.end(), 0);
    return g;
}

inline icboost::GroupedDataset make_dataset(std::vector<icboost::Group> groups,
                                            std::size_t num_features,
                                            std::vector<std::string> feature_names = {}) {
    icboost::GroupedDataset ds;
    ds.groups = std::move(groups);
    ds.num_features = num_features;
    ds.feature_names = std::move(feature_names);
    return ds;
}

// Descending ranks by brute force: stable sort of indices by (-value, index),
// then invert the order into per-item positions.
inline std::vector<std::int32_t> brute_force_desc_ranks(const std::vector<double>& values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
    std::vector<std::int32_t> ranks(values.size());
    for (std::size_t pos = 0; pos < order.size(); ++pos)
        ranks[order[pos]] = static_cast<std::int32_t>(pos + 1);
    return ranks;
}

// Textbook Pearson correlation, used as the Spearman-on-ranks oracle.
inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    std::size_t n = x.size();
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace testutil
