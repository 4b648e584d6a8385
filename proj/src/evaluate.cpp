#include "icboost/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "icboost/errors.hpp"
#include "icboost/objectives.hpp"
#include "icboost/rankcore.hpp"

namespace icboost {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_scores_shape(const GroupedDataset& ds, const ScoresPerGroup& scores,
                        const char* who) {
    if (scores.size() != ds.groups.size())
        throw DataError(std::string(who) + ": scores for " + std::to_string(scores.size()) +
                        " groups, dataset has " + std::to_string(ds.groups.size()));
    for (std::size_t gi = 0; gi < scores.size(); ++gi)
        if (scores[gi].size() != ds.groups[gi].n)
            throw DataError(std::string(who) + ": group '" + ds.groups[gi].id +
                            "' score count mismatch");
}

double sample_std(std::span<const double> v, double mean) {
    if (v.size() < 2) return 0.0;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

ICSeries ic_series(const GroupedDataset& ds, const ScoresPerGroup& scores) {
    check_scores_shape(ds, scores, "ic_series");
    ICSeries out;
    for (std::size_t gi = 0; gi < ds.groups.size(); ++gi) {
        const Group& g = ds.groups[gi];
        if (g.n < 2) {
            ++out.skipped;
            continue;
        }
        PredictedRanks pr = predicted_ranks(scores[gi], g.item_index);
        out.entries.emplace_back(g.id, spearman_rho(pr, label_ranks(g)));
    }
    return out;
}

std::vector<double> group_ndcg(const GroupedDataset& ds, const ScoresPerGroup& scores,
                               std::size_t k, int num_grades) {
    check_scores_shape(ds, scores, "group_ndcg");
    std::vector<double> out;
    for (std::size_t gi = 0; gi < ds.groups.size(); ++gi) {
        const Group& g = ds.groups[gi];
        if (g.n < 2) continue;
        std::vector<int> grades = labels_to_relevance_grades(label_ranks(g), num_grades);
        out.push_back(ndcg_at_k(scores[gi], grades, k));
    }
    return out;
}

MetricsReport aggregate_metrics(const ICSeries& series, std::span<const double> ndcg_values,
                                std::size_t k) {
    MetricsReport rep;
    rep.ndcg_k = k;
    rep.groups_evaluated = series.entries.size();
    if (series.entries.empty()) {
        rep.mean_ic = kNaN;
        rep.std_ic = kNaN;
        rep.mean_ndcg = kNaN;
        return rep;
    }
    double sum = 0.0;
    for (const auto& [id, rho] : series.entries) sum += rho;
    rep.mean_ic = sum / static_cast<double>(series.entries.size());

    std::vector<double> values;
    values.reserve(series.entries.size());
    for (const auto& [id, rho] : series.entries) values.push_back(rho);
    rep.std_ic = sample_std(values, rep.mean_ic);
    if (values.size() >= 2 && rep.std_ic > 0.0) rep.icir = rep.mean_ic / rep.std_ic;

    if (ndcg_values.empty()) {
        rep.mean_ndcg = kNaN;
    } else {
        double nsum = 0.0;
        for (double v : ndcg_values) nsum += v;
        rep.mean_ndcg = nsum / static_cast<double>(ndcg_values.size());
    }
    return rep;
}

std::array<std::size_t, 10> decile_sizes(std::size_t n) {
    std::array<std::size_t, 10> sizes;
    sizes.fill(n / 10);
    std::size_t extra = n % 10;
    // Outer deciles first, in mirror pairs, so decile 1 and decile 10 always
    // match in size; a lone leftover lands in the middle (decile 6).
    static constexpr int pair_order[5][2] = {{10, 1}, {9, 2}, {8, 3}, {7, 4}, {6, 5}};
    std::size_t pair = 0;
    while (extra >= 2) {
        ++sizes[static_cast<std::size_t>(pair_order[pair][0] - 1)];
        ++sizes[static_cast<std::size_t>(pair_order[pair][1] - 1)];
        extra -= 2;
        ++pair;
    }
    if (extra == 1) ++sizes[5];
    return sizes;
}

double max_drawdown(std::span<const double> returns) {
    double wealth = 1.0, peak = 1.0, mdd = 0.0;
    for (double r : returns) {
        if (std::isnan(r)) continue;  // undefined period: wealth unchanged
        if (!(r > -1.0)) throw std::invalid_argument("max_drawdown: return <= -100%");
        wealth *= 1.0 + r;
        if (wealth > peak) peak = wealth;
        double dd = (peak - wealth) / peak;
        if (dd > mdd) mdd = dd;
    }
    return 100.0 * mdd;
}

namespace {

SeriesStats stats_of(const std::vector<double>& returns) {
    SeriesStats st;
    std::vector<double> defined;
    defined.reserve(returns.size());
    for (double r : returns)
        if (!std::isnan(r)) defined.push_back(r);
    if (defined.empty()) {
        st.mean_pct = kNaN;
        st.vol_pct = kNaN;
        st.mdd_pct = kNaN;
        return st;
    }
    double mean = 0.0;
    for (double r : defined) mean += r;
    mean /= static_cast<double>(defined.size());
    double vol = sample_std(defined, mean);
    st.mean_pct = 100.0 * mean;
    st.vol_pct = 100.0 * vol;
    if (vol > 0.0) st.sharpe = mean / vol * std::sqrt(12.0);
    // Compounding is undefined once a period loses 100% or more; that happens
    // with labels that are not really returns. Mean and vol stay valid, the
    // drawdown becomes NaN rather than failing the whole report.
    bool compoundable = true;
    for (double r : defined)
        if (!(r > -1.0)) compoundable = false;
    st.mdd_pct = compoundable ? max_drawdown(returns) : kNaN;
    return st;
}

std::vector<double> cumulative_of(const std::vector<double>& returns) {
    std::vector<double> cum(returns.size());
    double wealth = 1.0;
    for (std::size_t t = 0; t < returns.size(); ++t) {
        if (!std::isnan(returns[t])) wealth *= 1.0 + returns[t];
        cum[t] = wealth - 1.0;
    }
    return cum;
}

}  // namespace

BacktestReport decile_backtest(const GroupedDataset& ds, const ScoresPerGroup& scores) {
    check_scores_shape(ds, scores, "decile_backtest");
    BacktestReport rep;

    for (std::size_t gi = 0; gi < ds.groups.size(); ++gi) {
        const Group& g = ds.groups[gi];
        if (g.n == 0) continue;
        rep.periods.push_back(g.id);

        std::vector<std::int32_t> order(g.n);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::int32_t a, std::int32_t b) {
            double sa = scores[gi][static_cast<std::size_t>(a)];
            double sb = scores[gi][static_cast<std::size_t>(b)];
            if (sa != sb) return sa > sb;
            return g.item_index[static_cast<std::size_t>(a)] <
                   g.item_index[static_cast<std::size_t>(b)];
        });

        const auto sizes = decile_sizes(g.n);
        std::size_t cursor = 0;
        std::array<double, 10> period_ret;
        for (int d = 10; d >= 1; --d) {
            const std::size_t count = sizes[static_cast<std::size_t>(d - 1)];
            if (count == 0) {
                period_ret[static_cast<std::size_t>(d - 1)] = kNaN;
                continue;
            }
            double wsum = 0.0, rsum = 0.0;
            for (std::size_t k = 0; k < count; ++k) {
                const auto i = static_cast<std::size_t>(order[cursor + k]);
                const double w = g.has_weights() ? g.weights[i] : 1.0;
                wsum += w;
                rsum += w * g.labels[i];
            }
            period_ret[static_cast<std::size_t>(d - 1)] = wsum > 0.0 ? rsum / wsum : kNaN;
            cursor += count;
        }
        for (std::size_t d = 0; d < 10; ++d) rep.decile_returns[d].push_back(period_ret[d]);
        const double hi = period_ret[9], lo = period_ret[0];
        rep.long_short_returns.push_back(
            (std::isnan(hi) || std::isnan(lo)) ? kNaN : hi - lo);
    }

    for (std::size_t d = 0; d < 10; ++d) {
        rep.deciles[d] = stats_of(rep.decile_returns[d]);
        rep.decile_cumulative[d] = cumulative_of(rep.decile_returns[d]);
    }
    rep.long_short = stats_of(rep.long_short_returns);
    rep.long_short_cumulative = cumulative_of(rep.long_short_returns);
    return rep;
}

ProtocolResult run_protocol(const GroupedDataset& ds, const ProtocolConfig& cfg,
                            const RollingWindowPlan& plan) {
    if (cfg.candidates.empty())
        throw std::invalid_argument("run_protocol: needs at least one candidate config");
    ProtocolResult result;
    if (plan.insufficient_history)
        result.warnings.push_back("rolling plan is empty: not enough history for one window");

    std::vector<char> covered(ds.groups.size(), 0);

    for (std::size_t wi = 0; wi < plan.windows.size(); ++wi) {
        const WindowSpec& w = plan.windows[wi];
        GroupedDataset train = ds.slice(w.train_begin, w.train_end);
        GroupedDataset valid = ds.slice(w.valid_begin, w.valid_end);
        const bool has_valid = valid.num_groups() > 0;

        WindowOutcome outcome;
        outcome.window = wi;

        FitResult chosen;
        if (cfg.candidates.size() > 1 && has_valid) {
            double best_ic = -std::numeric_limits<double>::infinity();
            std::size_t best_idx = 0;
            for (std::size_t ci = 0; ci < cfg.candidates.size(); ++ci) {
                FitResult fr = fit(train, cfg.kind, cfg.objective, cfg.candidates[ci]);
                std::vector<double> flat = predict(fr.forest, valid);
                ScoresPerGroup vs;
                std::size_t off = 0;
                for (const auto& g : valid.groups) {
                    vs.emplace_back(flat.begin() + static_cast<std::ptrdiff_t>(off),
                                    flat.begin() + static_cast<std::ptrdiff_t>(off + g.n));
                    off += g.n;
                }
                ICSeries series = ic_series(valid, vs);
                double mean = aggregate_metrics(series, {}, cfg.ndcg_k).mean_ic;
                if (ci == 0 || mean > best_ic) {
                    best_ic = mean;
                    best_idx = ci;
                    chosen = std::move(fr);
                }
            }
            outcome.chosen_candidate = best_idx;
            if (!std::isnan(best_ic)) outcome.valid_mean_ic = best_ic;
        } else {
            chosen = fit(train, cfg.kind, cfg.objective, cfg.candidates[0]);
            outcome.chosen_candidate = 0;
            if (has_valid) {
                std::vector<double> flat = predict(chosen.forest, valid);
                ScoresPerGroup vs;
                std::size_t off = 0;
                for (const auto& g : valid.groups) {
                    vs.emplace_back(flat.begin() + static_cast<std::ptrdiff_t>(off),
                                    flat.begin() + static_cast<std::ptrdiff_t>(off + g.n));
                    off += g.n;
                }
                outcome.valid_mean_ic = aggregate_metrics(ic_series(valid, vs), {}, cfg.ndcg_k).mean_ic;
            }
        }
        for (const auto& warning : chosen.warnings) result.warnings.push_back(warning);
        outcome.model_json = model_to_json(chosen.forest);

        for (std::size_t gi = w.test_begin; gi < w.test_end; ++gi) {
            if (covered[gi]) {
                result.warnings.push_back("group '" + ds.groups[gi].id +
                                          "' tested by more than one window; keeping the first");
                continue;
            }
            covered[gi] = 1;
            GroupedDataset one = ds.slice(gi, gi + 1);
            result.covered_groups.push_back(gi);
            result.oos_scores.push_back(predict(chosen.forest, one));
        }
        result.windows.push_back(std::move(outcome));
    }

    // Pool the covered test groups into one out-of-sample dataset.
    GroupedDataset oos;
    oos.num_features = ds.num_features;
    oos.feature_names = ds.feature_names;
    for (std::size_t gi : result.covered_groups) oos.groups.push_back(ds.groups[gi]);

    if (!oos.groups.empty()) {
        ICSeries series = ic_series(oos, result.oos_scores);
        std::vector<double> ndcg =
            group_ndcg(oos, result.oos_scores, cfg.ndcg_k, cfg.objective.ndcg_relevance_grades);
        result.metrics = aggregate_metrics(series, ndcg, cfg.ndcg_k);
        result.backtest = decile_backtest(oos, result.oos_scores);
    }
    return result;
}

}  // namespace icboost
