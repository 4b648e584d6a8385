#include "icboost/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "icboost/errors.hpp"
#include "icboost/numio.hpp"
#include "icboost/parallel.hpp"
#include "icboost/rankcore.hpp"
#include "icboost/version.hpp"

namespace icboost {

void TrainConfig::validate() const {
    if (max_depth < 1) throw std::invalid_argument("train: max_depth must be >= 1");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("train: learning_rate must be positive");
    if (num_rounds < 0) throw std::invalid_argument("train: num_rounds must be >= 0");
    if (!(subsample > 0.0) || subsample > 1.0)
        throw std::invalid_argument("train: subsample must be in (0, 1]");
    if (!(colsample_bytree > 0.0) || colsample_bytree > 1.0)
        throw std::invalid_argument("train: colsample_bytree must be in (0, 1]");
    if (!(min_child_weight >= 0.0))
        throw std::invalid_argument("train: min_child_weight must be >= 0");
    if (!(reg_lambda >= 0.0)) throw std::invalid_argument("train: reg_lambda must be >= 0");
    if (max_bins < 2 || max_bins > 65536)
        throw std::invalid_argument("train: max_bins must be in [2, 65536]");
    if (eval_every < 1) throw std::invalid_argument("train: eval_every must be >= 1");
}

double Tree::value_at(std::span<const double> row) const {
    std::size_t node = 0;
    while (!nodes[node].is_leaf) {
        const TreeNode& nd = nodes[node];
        node = static_cast<std::size_t>(
            row[static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left : nd.right);
    }
    return nodes[node].leaf_value;
}

std::int32_t Tree::leaf_index(std::span<const double> row) const {
    std::size_t node = 0;
    while (!nodes[node].is_leaf) {
        const TreeNode& nd = nodes[node];
        node = static_cast<std::size_t>(
            row[static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left : nd.right);
    }
    return static_cast<std::int32_t>(node);
}

void TrainHistory::write_csv(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path);
    out << "round,set_name,metric_name,value\n";
    for (const auto& r : records)
        out << r.round << ',' << r.set_name << ',' << r.metric_name << ','
            << format_double(r.value) << '\n';
    if (!out) throw DataError("write failed: " + path);
}

std::optional<std::pair<int, double>> TrainHistory::peak(const std::string& set_name,
                                                         const std::string& metric_name) const {
    std::optional<std::pair<int, double>> best;
    for (const auto& r : records) {
        if (r.set_name != set_name || r.metric_name != metric_name) continue;
        if (!best || r.value > best->second) best = {r.round, r.value};
    }
    return best;
}

std::optional<double> TrainHistory::last(const std::string& set_name,
                                         const std::string& metric_name) const {
    std::optional<double> value;
    for (const auto& r : records)
        if (r.set_name == set_name && r.metric_name == metric_name) value = r.value;
    return value;
}

namespace {

constexpr std::uint64_t kTagSubsample = 0x5a11;
constexpr std::uint64_t kTagColsample = 0xc011;
constexpr std::uint64_t kTagPairs = 0x9a15;

struct FeatureBins {
    std::vector<double> boundaries;  // strictly increasing; bin b holds x <= boundaries[b]
    int num_bins() const { return static_cast<int>(boundaries.size()) + 1; }
};

inline int bin_of(const FeatureBins& fb, double x) {
    return static_cast<int>(
        std::lower_bound(fb.boundaries.begin(), fb.boundaries.end(), x) - fb.boundaries.begin());
}

// One flattened view of a grouped dataset plus everything per-round evaluation
// needs: contiguous features/labels and per-group label ranks.
struct FlatPanel {
    std::size_t n_rows = 0;
    std::size_t d = 0;
    std::vector<double> features;  // n_rows x d
    std::vector<double> labels;
    std::vector<double> weights;   // empty when the dataset carries none
    struct GroupRef {
        std::size_t offset = 0;
        std::size_t n = 0;
        const Group* src = nullptr;
        LabelRanks ranks;
    };
    std::vector<GroupRef> groups;

    std::span<const double> row(std::size_t r) const { return {features.data() + r * d, d}; }
};

FlatPanel flatten(const GroupedDataset& ds) {
    FlatPanel p;
    p.d = ds.num_features;
    p.n_rows = ds.total_rows();
    p.features.reserve(p.n_rows * p.d);
    p.labels.reserve(p.n_rows);
    bool any_weights = false;
    for (const auto& g : ds.groups)
        if (g.has_weights()) any_weights = true;
    if (any_weights) p.weights.reserve(p.n_rows);
    std::size_t offset = 0;
    for (const auto& g : ds.groups) {
        FlatPanel::GroupRef ref;
        ref.offset = offset;
        ref.n = g.n;
        ref.src = &g;
        ref.ranks = label_ranks(g);
        p.groups.push_back(std::move(ref));
        p.features.insert(p.features.end(), g.features.begin(), g.features.end());
        p.labels.insert(p.labels.end(), g.labels.begin(), g.labels.end());
        if (any_weights) {
            if (g.has_weights())
                p.weights.insert(p.weights.end(), g.weights.begin(), g.weights.end());
            else
                p.weights.insert(p.weights.end(), g.n, 1.0);
        }
        offset += g.n;
    }
    return p;
}

double mean_rank_ic(const FlatPanel& panel, const std::vector<double>& scores) {
    double sum = 0.0;
    std::size_t counted = 0;
    for (const auto& gr : panel.groups) {
        if (gr.n < 2) continue;
        std::span<const double> s(scores.data() + gr.offset, gr.n);
        PredictedRanks pr = predicted_ranks(s, gr.src->item_index);
        sum += spearman_rho(pr, gr.ranks);
        ++counted;
    }
    if (counted == 0) return std::numeric_limits<double>::quiet_NaN();
    return sum / static_cast<double>(counted);
}

double rmse_of(const FlatPanel& panel, const std::vector<double>& scores) {
    double sq = 0.0;
    for (std::size_t r = 0; r < panel.n_rows; ++r) {
        double e = scores[r] - panel.labels[r];
        sq += e * e;
    }
    return std::sqrt(sq / static_cast<double>(panel.n_rows));
}

std::vector<FeatureBins> build_bins(const FlatPanel& panel, int max_bins,
                                    std::vector<std::uint16_t>& binned) {
    const std::size_t n = panel.n_rows, d = panel.d;
    std::vector<FeatureBins> bins(d);
    binned.assign(n * d, 0);
    parallel_for(d, [&](std::size_t fb, std::size_t fe, std::size_t) {
        std::vector<double> vals(n);
        for (std::size_t f = fb; f < fe; ++f) {
            for (std::size_t r = 0; r < n; ++r) vals[r] = panel.features[r * d + f];
            std::sort(vals.begin(), vals.end());
            auto& out = bins[f].boundaries;
            std::size_t distinct = 1;
            for (std::size_t r = 1; r < n; ++r)
                if (vals[r] != vals[r - 1]) ++distinct;
            auto push_mid = [&](double lo, double hi) {
                double mid = lo + (hi - lo) / 2.0;
                if (out.empty() || mid > out.back()) out.push_back(mid);
            };
            if (distinct <= static_cast<std::size_t>(max_bins)) {
                for (std::size_t r = 1; r < n; ++r)
                    if (vals[r] != vals[r - 1]) push_mid(vals[r - 1], vals[r]);
            } else {
                for (int b = 1; b < max_bins; ++b) {
                    std::size_t pos = n * static_cast<std::size_t>(b) /
                                      static_cast<std::size_t>(max_bins);
                    if (pos == 0) continue;
                    double lo = vals[pos - 1], hi = vals[pos];
                    if (lo < hi) push_mid(lo, hi);
                }
            }
            for (std::size_t r = 0; r < n; ++r)
                binned[r * d + f] = static_cast<std::uint16_t>(bin_of(bins[f], panel.features[r * d + f]));
        }
    });
    return bins;
}

std::vector<std::uint32_t> sample_without_replacement(std::size_t n, std::size_t k,
                                                      rng::Rng& rng) {
    std::vector<std::uint32_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < k; ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng.uniform_below(n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
}

struct LeafRange {
    std::size_t beg = 0, end = 0;
    double value = 0.0;
};

class TreeBuilder {
public:
    TreeBuilder(const FlatPanel& panel, const std::vector<std::uint16_t>& binned,
                const std::vector<FeatureBins>& bins, const std::vector<int>& sel,
                const TrainConfig& cfg, const double* g, const double* h)
        : panel_(panel), binned_(binned), bins_(bins), sel_(sel), cfg_(cfg), g_(g), h_(h) {
        hist_off_.resize(sel_.size());
        std::size_t off = 0;
        for (std::size_t fs = 0; fs < sel_.size(); ++fs) {
            hist_off_[fs] = off;
            off += 2 * static_cast<std::size_t>(bins_[static_cast<std::size_t>(sel_[fs])].num_bins());
        }
        hist_size_ = off;
    }

    // rows: selected row ids; partitioned in place while the tree grows.
    Tree build(std::vector<std::uint32_t>& rows, std::vector<LeafRange>& leaves) {
        Tree tree;
        tree.nodes.emplace_back();
        leaves.clear();
        rows_ = &rows;
        scratch_.resize(rows.size());

        struct BNode {
            int id = 0;
            std::size_t beg = 0, end = 0;
            double G = 0.0, H = 0.0;
            std::vector<double> hist;
        };

        std::vector<BNode> level;
        {
            BNode root;
            root.id = 0;
            root.beg = 0;
            root.end = rows.size();
            build_hist(root.beg, root.end, root.hist);
            for (std::size_t idx = root.beg; idx < root.end; ++idx) {
                root.G += g_[rows[idx]];
                root.H += h_[rows[idx]];
            }
            level.push_back(std::move(root));
        }

        auto make_leaf = [&](BNode& node) {
            tree.nodes[static_cast<std::size_t>(node.id)].is_leaf = true;
            tree.nodes[static_cast<std::size_t>(node.id)].leaf_value =
                -node.G / (node.H + cfg_.reg_lambda);
            leaves.push_back({node.beg, node.end, tree.nodes[static_cast<std::size_t>(node.id)].leaf_value});
        };

        for (int depth = 0; !level.empty(); ++depth) {
            std::vector<BNode> next;
            for (auto& node : level) {
                if (depth >= cfg_.max_depth || node.end - node.beg < 2) {
                    make_leaf(node);
                    continue;
                }
                Split split = best_split(node.hist, node.G, node.H);
                if (split.fs < 0) {
                    make_leaf(node);
                    continue;
                }
                const int feat = sel_[static_cast<std::size_t>(split.fs)];
                std::size_t mid = partition(node.beg, node.end, feat, split.bin);

                TreeNode& tn = tree.nodes[static_cast<std::size_t>(node.id)];
                tn.is_leaf = false;
                tn.feature = feat;
                tn.threshold = bins_[static_cast<std::size_t>(feat)]
                                   .boundaries[static_cast<std::size_t>(split.bin)];
                tn.left = static_cast<std::int32_t>(tree.nodes.size());
                tn.right = tn.left + 1;
                tree.nodes.emplace_back();
                tree.nodes.emplace_back();

                BNode left, right;
                left.id = tn.left;
                left.beg = node.beg;
                left.end = mid;
                left.G = split.GL;
                left.H = split.HL;
                right.id = tn.right;
                right.beg = mid;
                right.end = node.end;
                right.G = node.G - split.GL;
                right.H = node.H - split.HL;

                // Build the smaller child's histogram, derive the sibling from
                // the parent's by subtraction (in the parent's buffer).
                BNode* small = (left.end - left.beg <= right.end - right.beg) ? &left : &right;
                BNode* big = (small == &left) ? &right : &left;
                build_hist(small->beg, small->end, small->hist);
                big->hist = std::move(node.hist);
                for (std::size_t i = 0; i < hist_size_; ++i) big->hist[i] -= small->hist[i];

                next.push_back(std::move(left));
                next.push_back(std::move(right));
            }
            level = std::move(next);
        }
        return tree;
    }

private:
    struct Split {
        int fs = -1;
        int bin = -1;
        double gain = 0.0;
        double GL = 0.0, HL = 0.0;
    };

    void build_hist(std::size_t beg, std::size_t end, std::vector<double>& out) const {
        out.assign(hist_size_, 0.0);
        const std::size_t n = end - beg;
        const std::size_t chunks = parallel_chunk_count(n);
        const auto& rows = *rows_;
        auto accumulate = [&](std::size_t b, std::size_t e, double* acc) {
            const std::size_t d = panel_.d;
            for (std::size_t idx = b; idx < e; ++idx) {
                const std::uint32_t r = rows[beg + idx];
                const double gr = g_[r], hr = h_[r];
                const std::uint16_t* brow = binned_.data() + static_cast<std::size_t>(r) * d;
                for (std::size_t fs = 0; fs < sel_.size(); ++fs) {
                    const std::size_t slot =
                        hist_off_[fs] + 2 * static_cast<std::size_t>(brow[sel_[fs]]);
                    acc[slot] += gr;
                    acc[slot + 1] += hr;
                }
            }
        };
        if (chunks <= 1) {
            accumulate(0, n, out.data());
            return;
        }
        std::vector<std::vector<double>> partial(chunks);
        parallel_for(n, [&](std::size_t b, std::size_t e, std::size_t c) {
            partial[c].assign(hist_size_, 0.0);
            accumulate(b, e, partial[c].data());
        });
        // Merge in chunk order so the result only depends on the chunk split.
        for (const auto& part : partial)
            for (std::size_t i = 0; i < hist_size_; ++i) out[i] += part[i];
    }

    Split best_split(const std::vector<double>& hist, double G, double H) const {
        Split best;
        const double reg = cfg_.reg_lambda;
        const double parent_term = G * G / (H + reg);
        for (std::size_t fs = 0; fs < sel_.size(); ++fs) {
            const int nb = bins_[static_cast<std::size_t>(sel_[fs])].num_bins();
            if (nb < 2) continue;
            const double* hf = hist.data() + hist_off_[fs];
            double GL = 0.0, HL = 0.0;
            for (int b = 0; b + 1 < nb; ++b) {
                GL += hf[2 * b];
                HL += hf[2 * b + 1];
                const double HR = H - HL;
                if (HL < cfg_.min_child_weight) continue;
                if (HR < cfg_.min_child_weight) break;
                const double GR = G - GL;
                const double gain =
                    0.5 * (GL * GL / (HL + reg) + GR * GR / (HR + reg) - parent_term);
                if (gain > best.gain && gain > 0.0) {
                    best.fs = static_cast<int>(fs);
                    best.bin = b;
                    best.gain = gain;
                    best.GL = GL;
                    best.HL = HL;
                }
            }
        }
        return best;
    }

    std::size_t partition(std::size_t beg, std::size_t end, int feat, int split_bin) {
        auto& rows = *rows_;
        const std::size_t d = panel_.d;
        std::size_t w = beg;
        for (std::size_t idx = beg; idx < end; ++idx) {
            const std::uint32_t r = rows[idx];
            if (binned_[static_cast<std::size_t>(r) * d + static_cast<std::size_t>(feat)] <=
                split_bin)
                scratch_[w++] = r;
        }
        const std::size_t mid = w;
        for (std::size_t idx = beg; idx < end; ++idx) {
            const std::uint32_t r = rows[idx];
            if (binned_[static_cast<std::size_t>(r) * d + static_cast<std::size_t>(feat)] >
                split_bin)
                scratch_[w++] = r;
        }
        std::copy(scratch_.begin() + static_cast<std::ptrdiff_t>(beg),
                  scratch_.begin() + static_cast<std::ptrdiff_t>(end),
                  rows.begin() + static_cast<std::ptrdiff_t>(beg));
        return mid;
    }

    const FlatPanel& panel_;
    const std::vector<std::uint16_t>& binned_;
    const std::vector<FeatureBins>& bins_;
    const std::vector<int>& sel_;
    const TrainConfig& cfg_;
    const double* g_;
    const double* h_;
    std::vector<std::size_t> hist_off_;
    std::size_t hist_size_ = 0;
    std::vector<std::uint32_t>* rows_ = nullptr;
    std::vector<std::uint32_t> scratch_;
};

}  // namespace

FitResult fit(const GroupedDataset& train, ObjectiveKind kind, const ObjectiveConfig& ocfg,
              const TrainConfig& cfg, const std::vector<EvalSet>& eval_sets) {
    cfg.validate();
    ocfg.validate();
    train.validate();
    if (train.num_features == 0) throw DataError("fit: training data has no features");
    if (train.total_rows() == 0) throw DataError("fit: training data has no rows");
    for (const auto& es : eval_sets) {
        if (es.data == nullptr) throw DataError("fit: eval set '" + es.name + "' is null");
        if (es.data->num_features != train.num_features)
            throw DataError("fit: eval set '" + es.name + "' feature width mismatch");
    }

    FitResult result;
    const bool lambda = is_lambda_objective(kind);

    FlatPanel panel = flatten(train);
    const std::size_t n_rows = panel.n_rows;
    const std::size_t d = panel.d;

    if (lambda) {
        std::size_t tiny = 0;
        for (const auto& gr : panel.groups)
            if (gr.n < 2) ++tiny;
        if (tiny > 0)
            result.warnings.push_back("skipped " + std::to_string(tiny) +
                                      " size-1 group(s): pairwise objectives need n >= 2");
    }

    // Eval sets referencing the training data reuse its cached scores.
    struct EvalState {
        std::string name;
        FlatPanel panel;
        std::vector<double> scores;
        bool is_train = false;
    };
    std::vector<EvalState> evals;
    for (const auto& es : eval_sets) {
        EvalState st;
        st.name = es.name;
        if (es.data == &train) {
            st.is_train = true;
        } else {
            es.data->validate();
            st.panel = flatten(*es.data);
            st.scores.assign(st.panel.n_rows, 0.0);
        }
        evals.push_back(std::move(st));
    }

    std::vector<std::uint16_t> binned;
    std::vector<FeatureBins> bins = build_bins(panel, cfg.max_bins, binned);

    Forest forest;
    forest.base_score = 0.0;
    forest.learning_rate = cfg.learning_rate;
    forest.feature_count = d;
    forest.objective = to_string(kind);
    forest.trees.reserve(static_cast<std::size_t>(cfg.num_rounds));

    std::vector<double> scores(n_rows, forest.base_score);
    std::vector<double> g(n_rows, 0.0), h(n_rows, 0.0);
    std::vector<std::uint32_t> rows;
    std::vector<LeafRange> leaves;
    std::vector<char> in_tree(n_rows, 1);

    const std::size_t n_groups = panel.groups.size();
    const bool sub_all = cfg.subsample >= 1.0;

    for (int round = 1; round <= cfg.num_rounds; ++round) {
        // Pick this round's rows (groups for pairwise objectives, rows for mse).
        std::vector<std::size_t> active_groups;
        rows.clear();
        if (lambda) {
            if (sub_all) {
                for (std::size_t gi = 0; gi < n_groups; ++gi) active_groups.push_back(gi);
            } else {
                std::size_t k = static_cast<std::size_t>(
                    std::ceil(cfg.subsample * static_cast<double>(n_groups)));
                if (k == 0) k = 1;
                rng::Rng r(rng::substream(cfg.seed, kTagSubsample, static_cast<std::uint64_t>(round)));
                for (auto gi : sample_without_replacement(n_groups, k, r))
                    active_groups.push_back(gi);
            }
            for (std::size_t gi : active_groups) {
                const auto& gr = panel.groups[gi];
                if (gr.n < 2) continue;
                for (std::size_t i = 0; i < gr.n; ++i)
                    rows.push_back(static_cast<std::uint32_t>(gr.offset + i));
            }
        } else {
            if (sub_all) {
                rows.resize(n_rows);
                std::iota(rows.begin(), rows.end(), 0);
            } else {
                std::size_t k = static_cast<std::size_t>(
                    std::ceil(cfg.subsample * static_cast<double>(n_rows)));
                if (k == 0) k = 1;
                rng::Rng r(rng::substream(cfg.seed, kTagSubsample, static_cast<std::uint64_t>(round)));
                rows = sample_without_replacement(n_rows, k, r);
            }
        }
        if (rows.empty())
            throw DataError("fit: no usable rows this round (all groups below size 2?)");

        if (!sub_all) {
            std::fill(in_tree.begin(), in_tree.end(), 0);
            for (auto r : rows) in_tree[r] = 1;
        }

        // Gradients at the current scores, only where this round's tree looks.
        if (lambda) {
            parallel_for(active_groups.size(), [&](std::size_t b, std::size_t e, std::size_t) {
                for (std::size_t k = b; k < e; ++k) {
                    const auto& gr = panel.groups[active_groups[k]];
                    if (gr.n < 2) continue;
                    std::span<const double> s(scores.data() + gr.offset, gr.n);
                    rng::Rng pair_rng(rng::substream(
                        cfg.seed, kTagPairs,
                        (static_cast<std::uint64_t>(round) << 32) | active_groups[k]));
                    GradHessVector gh =
                        grad_hess_lambda(*gr.src, gr.ranks, s, kind, ocfg, &pair_rng);
                    std::copy(gh.g.begin(), gh.g.end(), g.begin() + static_cast<std::ptrdiff_t>(gr.offset));
                    std::copy(gh.h.begin(), gh.h.end(), h.begin() + static_cast<std::ptrdiff_t>(gr.offset));
                }
            });
        } else {
            const bool weighted = !panel.weights.empty();
            parallel_for(rows.size(), [&](std::size_t b, std::size_t e, std::size_t) {
                for (std::size_t k = b; k < e; ++k) {
                    const std::uint32_t r = rows[k];
                    const double w = weighted ? panel.weights[r] : 1.0;
                    g[r] = (scores[r] - panel.labels[r]) * w;
                    h[r] = w;
                }
            });
        }

        // Feature subset for this tree.
        std::vector<int> sel;
        if (cfg.colsample_bytree >= 1.0) {
            sel.resize(d);
            std::iota(sel.begin(), sel.end(), 0);
        } else {
            std::size_t k =
                static_cast<std::size_t>(std::ceil(cfg.colsample_bytree * static_cast<double>(d)));
            if (k == 0) k = 1;
            rng::Rng r(rng::substream(cfg.seed, kTagColsample, static_cast<std::uint64_t>(round)));
            for (auto f : sample_without_replacement(d, k, r)) sel.push_back(static_cast<int>(f));
        }

        TreeBuilder builder(panel, binned, bins, sel, cfg, g.data(), h.data());
        Tree tree = builder.build(rows, leaves);

        // Rows the tree was built on know their leaf already; the rest walk it.
        const double lr = cfg.learning_rate;
        for (const auto& leaf : leaves)
            for (std::size_t idx = leaf.beg; idx < leaf.end; ++idx)
                scores[rows[idx]] += lr * leaf.value;
        if (!sub_all) {
            parallel_for(n_rows, [&](std::size_t b, std::size_t e, std::size_t) {
                for (std::size_t r = b; r < e; ++r)
                    if (!in_tree[r]) scores[r] += lr * tree.value_at(panel.row(r));
            });
        }
        for (auto& ev : evals) {
            if (ev.is_train) continue;
            parallel_for(ev.panel.n_rows, [&](std::size_t b, std::size_t e, std::size_t) {
                for (std::size_t r = b; r < e; ++r)
                    ev.scores[r] += lr * tree.value_at(ev.panel.row(r));
            });
        }

        forest.trees.push_back(std::move(tree));

        if (round % cfg.eval_every == 0) {
            for (auto& ev : evals) {
                const FlatPanel& ep = ev.is_train ? panel : ev.panel;
                const std::vector<double>& es = ev.is_train ? scores : ev.scores;
                result.history.records.push_back(
                    {round, ev.name, "rank_ic", mean_rank_ic(ep, es)});
                if (kind == ObjectiveKind::SquaredError)
                    result.history.records.push_back({round, ev.name, "rmse", rmse_of(ep, es)});
            }
        }
    }

    result.forest = std::move(forest);
    result.train_scores = std::move(scores);
    return result;
}

std::vector<double> predict(const Forest& forest, const GroupedDataset& ds) {
    if (ds.num_features != forest.feature_count)
        throw DataError("predict: dataset has " + std::to_string(ds.num_features) +
                        " features, model expects " + std::to_string(forest.feature_count));
    std::vector<double> out(ds.total_rows(), 0.0);
    std::vector<std::size_t> offsets(ds.groups.size(), 0);
    std::size_t off = 0;
    for (std::size_t gi = 0; gi < ds.groups.size(); ++gi) {
        offsets[gi] = off;
        off += ds.groups[gi].n;
    }
    parallel_for(ds.groups.size(), [&](std::size_t b, std::size_t e, std::size_t) {
        for (std::size_t gi = b; gi < e; ++gi) {
            const Group& g = ds.groups[gi];
            for (std::size_t i = 0; i < g.n; ++i) {
                // Same accumulation order as the cached scores during fit.
                double s = forest.base_score;
                for (const auto& t : forest.trees)
                    s += forest.learning_rate * t.value_at(g.row(i));
                out[offsets[gi] + i] = s;
            }
        }
    });
    return out;
}

namespace {

nlohmann::json node_to_json(const TreeNode& n) {
    if (n.is_leaf) return nlohmann::json{{"leaf", n.leaf_value}};
    return nlohmann::json{
        {"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right}};
}

TreeNode node_from_json(const nlohmann::json& j) {
    TreeNode n;
    if (j.contains("leaf")) {
        n.is_leaf = true;
        n.leaf_value = j.at("leaf").get<double>();
        return n;
    }
    n.is_leaf = false;
    n.feature = j.at("feature").get<std::int32_t>();
    n.threshold = j.at("threshold").get<double>();
    n.left = j.at("left").get<std::int32_t>();
    n.right = j.at("right").get<std::int32_t>();
    return n;
}

}  // namespace

std::string model_to_json(const Forest& forest) {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : forest.trees) {
        nlohmann::json nodes = nlohmann::json::array();
        for (const auto& n : t.nodes) nodes.push_back(node_to_json(n));
        trees.push_back(nlohmann::json{{"nodes", std::move(nodes)}});
    }
    nlohmann::json j{{"format", "icboost-forest"},
                     {"format_version", 1},
                     {"version", ICBOOST_VERSION},
                     {"objective", forest.objective},
                     {"base_score", forest.base_score},
                     {"learning_rate", forest.learning_rate},
                     {"feature_count", forest.feature_count},
                     {"trees", std::move(trees)}};
    return j.dump();
}

Forest model_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("model parse error at byte " + std::to_string(e.byte) + ": " + e.what());
    }
    try {
        if (!j.is_object() || j.value("format", "") != std::string("icboost-forest"))
            throw ParseError("model parse error: not an icboost-forest file");
        if (j.value("format_version", 0) != 1)
            throw ParseError("model parse error: unsupported format_version");
        Forest f;
        f.base_score = j.at("base_score").get<double>();
        f.learning_rate = j.at("learning_rate").get<double>();
        f.feature_count = j.at("feature_count").get<std::size_t>();
        f.objective = j.at("objective").get<std::string>();
        for (const auto& jt : j.at("trees")) {
            Tree t;
            for (const auto& jn : jt.at("nodes")) t.nodes.push_back(node_from_json(jn));
            if (t.nodes.empty()) throw ParseError("model parse error: tree with no nodes");
            const auto count = static_cast<std::int32_t>(t.nodes.size());
            for (std::int32_t i = 0; i < count; ++i) {
                const TreeNode& n = t.nodes[static_cast<std::size_t>(i)];
                if (n.is_leaf) continue;
                if (n.left <= i || n.right <= i || n.left >= count || n.right >= count)
                    throw ParseError("model parse error: child index out of order");
                if (n.feature < 0 ||
                    static_cast<std::size_t>(n.feature) >= f.feature_count)
                    throw ParseError("model parse error: feature index out of range");
                if (!std::isfinite(n.threshold))
                    throw ParseError("model parse error: non-finite threshold");
            }
            f.trees.push_back(std::move(t));
        }
        return f;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("model parse error: ") + e.what());
    }
}

void save_model(const Forest& forest, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path);
    out << model_to_json(forest) << '\n';
    if (!out) throw DataError("write failed: " + path);
}

Forest load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return model_from_json(text);
}

}  // namespace icboost
