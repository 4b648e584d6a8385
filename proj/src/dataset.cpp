#include "icboost/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "icboost/errors.hpp"
#include "icboost/numio.hpp"

namespace icboost {

std::size_t GroupedDataset::total_rows() const {
    std::size_t total = 0;
    for (const auto& g : groups) total += g.n;
    return total;
}

GroupedDataset GroupedDataset::slice(std::size_t begin, std::size_t end) const {
    if (begin > end || end > groups.size())
        throw DataError("slice: invalid group range [" + std::to_string(begin) + ", " +
                        std::to_string(end) + ") of " + std::to_string(groups.size()));
    GroupedDataset out;
    out.num_features = num_features;
    out.feature_names = feature_names;
    out.groups.assign(groups.begin() + static_cast<std::ptrdiff_t>(begin),
                      groups.begin() + static_cast<std::ptrdiff_t>(end));
    return out;
}

void GroupedDataset::validate() const {
    for (const auto& g : groups) {
        if (g.num_features != num_features)
            throw DataError("group '" + g.id + "': feature width " +
                            std::to_string(g.num_features) + " != dataset width " +
                            std::to_string(num_features));
        if (g.features.size() != g.n * g.num_features || g.labels.size() != g.n)
            throw DataError("group '" + g.id + "': inconsistent buffer sizes");
        if (!g.weights.empty() && g.weights.size() != g.n)
            throw DataError("group '" + g.id + "': weight count != n");
        if (g.item_index.size() != g.n)
            throw DataError("group '" + g.id + "': item_index count != n");
        for (double v : g.labels)
            if (!std::isfinite(v)) throw DataError("group '" + g.id + "': non-finite label");
        for (double v : g.features)
            if (!std::isfinite(v)) throw DataError("group '" + g.id + "': non-finite feature");
        for (double w : g.weights)
            if (!(w >= 0.0)) throw DataError("group '" + g.id + "': negative weight");
    }
}

LabelRanks label_ranks(const Group& g) {
    const std::size_t n = g.n;
    std::vector<std::int32_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::int32_t a, std::int32_t b) {
        if (g.labels[static_cast<std::size_t>(a)] != g.labels[static_cast<std::size_t>(b)])
            return g.labels[static_cast<std::size_t>(a)] > g.labels[static_cast<std::size_t>(b)];
        return g.item_index[static_cast<std::size_t>(a)] < g.item_index[static_cast<std::size_t>(b)];
    });
    LabelRanks out;
    out.ranks.resize(n);
    for (std::size_t pos = 0; pos < n; ++pos)
        out.ranks[static_cast<std::size_t>(order[pos])] = static_cast<std::int32_t>(pos + 1);
    return out;
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            fields.push_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
    return fields;
}

std::string_view strip_cr(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
}

}  // namespace

GroupedDataset load_csv(const std::string& path, const CsvSchema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    std::vector<std::string_view> lines;
    {
        std::size_t start = 0;
        std::string_view text(content);
        for (std::size_t i = 0; i <= text.size(); ++i) {
            if (i == text.size() || text[i] == '\n') {
                std::string_view line = strip_cr(text.substr(start, i - start));
                if (!(i == text.size() && line.empty())) lines.push_back(line);
                start = i + 1;
            }
        }
    }
    if (lines.empty() || (lines.size() == 1 && lines[0].empty()))
        throw DataError("empty dataset: " + path + " has no header row");

    auto header = split_fields(lines[0]);
    std::ptrdiff_t group_idx = -1, label_idx = -1, weight_idx = -1;
    std::vector<std::size_t> feature_cols;
    std::vector<std::string> feature_names;
    for (std::size_t c = 0; c < header.size(); ++c) {
        std::string name(header[c]);
        if (name == schema.group_col) {
            group_idx = static_cast<std::ptrdiff_t>(c);
        } else if (name == schema.label_col) {
            label_idx = static_cast<std::ptrdiff_t>(c);
        } else if (!schema.weight_col.empty() && name == schema.weight_col) {
            weight_idx = static_cast<std::ptrdiff_t>(c);
        } else {
            feature_cols.push_back(c);
            feature_names.push_back(std::move(name));
        }
    }
    if (group_idx < 0) throw SchemaError("missing group column '" + schema.group_col + "' in " + path);
    if (label_idx < 0) throw SchemaError("missing label column '" + schema.label_col + "' in " + path);
    if (!schema.weight_col.empty() && weight_idx < 0)
        throw SchemaError("missing weight column '" + schema.weight_col + "' in " + path);
    if (feature_cols.empty()) throw SchemaError("no feature columns in " + path);
    if (lines.size() == 1) throw DataError("empty dataset: " + path + " has a header but no rows");

    GroupedDataset ds;
    ds.num_features = feature_cols.size();
    ds.feature_names = std::move(feature_names);
    std::unordered_map<std::string, std::size_t> group_of;

    const bool has_weights = weight_idx >= 0;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const std::size_t row = li;  // 1-based data row number
        auto fields = split_fields(lines[li]);
        if (fields.size() != header.size())
            throw DataError("row " + std::to_string(row) + ": expected " +
                            std::to_string(header.size()) + " fields, got " +
                            std::to_string(fields.size()));

        std::string gid(fields[static_cast<std::size_t>(group_idx)]);
        auto [it, inserted] = group_of.try_emplace(gid, ds.groups.size());
        if (inserted) {
            Group g;
            g.id = gid;
            g.num_features = ds.num_features;
            ds.groups.push_back(std::move(g));
        }
        Group& g = ds.groups[it->second];

        double label = 0.0;
        if (!parse_finite_double(fields[static_cast<std::size_t>(label_idx)], label))
            throw DataError("row " + std::to_string(row) + ": bad value '" +
                            std::string(fields[static_cast<std::size_t>(label_idx)]) +
                            "' in label column '" + schema.label_col + "'");
        double weight = 0.0;
        if (has_weights) {
            if (!parse_finite_double(fields[static_cast<std::size_t>(weight_idx)], weight) ||
                weight < 0.0)
                throw DataError("row " + std::to_string(row) + ": bad value '" +
                                std::string(fields[static_cast<std::size_t>(weight_idx)]) +
                                "' in weight column '" + schema.weight_col + "'");
        }
        for (std::size_t f = 0; f < feature_cols.size(); ++f) {
            double v = 0.0;
            if (!parse_finite_double(fields[feature_cols[f]], v))
                throw DataError("row " + std::to_string(row) + ": bad value '" +
                                std::string(fields[feature_cols[f]]) + "' in feature column '" +
                                ds.feature_names[f] + "'");
            g.features.push_back(v);
        }
        g.labels.push_back(label);
        if (has_weights) g.weights.push_back(weight);
        g.item_index.push_back(static_cast<std::int32_t>(g.n));
        ++g.n;
    }
    return ds;
}

void save_csv(const GroupedDataset& ds, const std::string& path, const CsvSchema& schema) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path);
    const bool has_weights = !ds.groups.empty() && ds.groups.front().has_weights();

    out << schema.group_col << ',' << schema.label_col;
    if (has_weights)
        out << ',' << (schema.weight_col.empty() ? std::string("weight") : schema.weight_col);
    for (std::size_t f = 0; f < ds.num_features; ++f) {
        out << ',';
        if (f < ds.feature_names.size() && !ds.feature_names[f].empty()) {
            out << ds.feature_names[f];
        } else {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "f%03u", static_cast<unsigned>(f));
            out << buf;
        }
    }
    out << '\n';

    for (const auto& g : ds.groups) {
        for (std::size_t i = 0; i < g.n; ++i) {
            out << g.id << ',' << format_double(g.labels[i]);
            if (has_weights) out << ',' << format_double(g.has_weights() ? g.weights[i] : 1.0);
            auto row = g.row(i);
            for (double v : row) out << ',' << format_double(v);
            out << '\n';
        }
    }
    if (!out) throw DataError("write failed: " + path);
}

GroupedDataset rank_transform_features(const GroupedDataset& ds) {
    GroupedDataset out = ds;
    std::vector<std::int32_t> order;
    for (auto& g : out.groups) {
        const std::size_t n = g.n;
        if (n == 0) continue;
        order.resize(n);
        for (std::size_t f = 0; f < g.num_features; ++f) {
            std::iota(order.begin(), order.end(), 0);
            std::sort(order.begin(), order.end(), [&](std::int32_t a, std::int32_t b) {
                double va = g.features[static_cast<std::size_t>(a) * g.num_features + f];
                double vb = g.features[static_cast<std::size_t>(b) * g.num_features + f];
                if (va != vb) return va < vb;
                return a < b;
            });
            if (n == 1) {
                g.features[f] = 0.0;
                continue;
            }
            const double mid = (static_cast<double>(n) + 1.0) / 2.0;
            const double scale = 2.0 / (static_cast<double>(n) - 1.0);
            std::size_t run_begin = 0;
            while (run_begin < n) {
                std::size_t run_end = run_begin + 1;
                double v = g.features[static_cast<std::size_t>(order[run_begin]) * g.num_features + f];
                while (run_end < n &&
                       g.features[static_cast<std::size_t>(order[run_end]) * g.num_features + f] == v)
                    ++run_end;
                // Ranks are 1-based; a tie run shares the average of its ranks.
                double avg_rank = (static_cast<double>(run_begin + 1) + static_cast<double>(run_end)) / 2.0;
                double mapped = (avg_rank - mid) * scale;
                for (std::size_t k = run_begin; k < run_end; ++k)
                    g.features[static_cast<std::size_t>(order[k]) * g.num_features + f] = mapped;
                run_begin = run_end;
            }
        }
    }
    return out;
}

RollingWindowPlan rolling_windows(std::size_t num_groups, std::size_t train_len,
                                  std::size_t valid_len, std::size_t test_len,
                                  std::size_t step) {
    if (train_len < 1 || test_len < 1 || step < 1)
        throw std::invalid_argument("rolling_windows: train_len, test_len and step must be >= 1");
    RollingWindowPlan plan;
    plan.train_len = train_len;
    plan.valid_len = valid_len;
    plan.test_len = test_len;
    plan.step = step;
    const std::size_t span = train_len + valid_len + test_len;
    for (std::size_t start = 0; start + span <= num_groups; start += step) {
        WindowSpec w;
        w.train_begin = start;
        w.train_end = start + train_len;
        w.valid_begin = w.train_end;
        w.valid_end = w.valid_begin + valid_len;
        w.test_begin = w.valid_end;
        w.test_end = w.test_begin + test_len;
        plan.windows.push_back(w);
    }
    plan.insufficient_history = plan.windows.empty();
    return plan;
}

}  // namespace icboost
