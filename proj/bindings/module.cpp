// Python bindings for the core operations: rank math, grouped datasets, the
// panel simulator, boosting, and the evaluation/backtest summaries. Row data
// crosses the boundary as plain lists; scores come back flat in dataset row
// order, matching Booster.predict.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "icboost/dataset.hpp"
#include "icboost/evaluate.hpp"
#include "icboost/gbdt.hpp"
#include "icboost/objectives.hpp"
#include "icboost/rankcore.hpp"
#include "icboost/simulate.hpp"
#include "icboost/version.hpp"

namespace py = pybind11;
using namespace icboost;

namespace {

GroupedDataset dataset_from_rows(const std::vector<std::string>& group_ids,
                                 const std::vector<std::vector<double>>& features,
                                 const std::vector<double>& labels) {
    if (group_ids.size() != features.size() || group_ids.size() != labels.size())
        throw std::invalid_argument("group_ids, features and labels must have equal length");
    GroupedDataset ds;
    ds.num_features = features.empty() ? 0 : features.front().size();
    std::map<std::string, std::size_t> seen;
    for (std::size_t i = 0; i < group_ids.size(); ++i) {
        if (features[i].size() != ds.num_features)
            throw std::invalid_argument("feature rows must all have the same width");
        auto [it, inserted] = seen.emplace(group_ids[i], ds.groups.size());
        if (inserted) {
            Group g;
            g.id = group_ids[i];
            g.num_features = ds.num_features;
            ds.groups.push_back(std::move(g));
        }
        Group& g = ds.groups[it->second];
        g.features.insert(g.features.end(), features[i].begin(), features[i].end());
        g.labels.push_back(labels[i]);
        g.item_index.push_back(static_cast<std::int32_t>(g.n));
        ++g.n;
    }
    ds.validate();
    return ds;
}

ScoresPerGroup split_scores(const GroupedDataset& ds, const std::vector<double>& flat) {
    if (flat.size() != ds.total_rows())
        throw std::invalid_argument("scores length must equal the dataset row count");
    ScoresPerGroup per_group;
    std::size_t offset = 0;
    for (const Group& g : ds.groups) {
        per_group.emplace_back(flat.begin() + offset, flat.begin() + offset + g.n);
        offset += g.n;
    }
    return per_group;
}

LabelRanks ranks_from_labels(const std::vector<double>& labels) {
    Group g;
    g.id = "g";
    g.n = labels.size();
    g.labels = labels;
    for (std::size_t i = 0; i < labels.size(); ++i)
        g.item_index.push_back(static_cast<std::int32_t>(i));
    return label_ranks(g);
}

struct Booster {
    Forest forest;
    TrainHistory history;

    std::vector<double> predict(const GroupedDataset& ds) const {
        return icboost::predict(forest, ds);
    }
    void save(const std::string& path) const { save_model(forest, path); }
    std::size_t num_trees() const { return forest.trees.size(); }
};

Booster train(const GroupedDataset& data, const std::string& objective, int rounds, int depth,
              double learning_rate, double subsample, double colsample, double min_child_weight,
              double reg_lambda, int max_bins, std::uint64_t seed, int eval_every, double sigma,
              std::optional<std::size_t> pair_budget, int ndcg_grades,
              const GroupedDataset* test) {
    TrainConfig cfg;
    cfg.max_depth = depth;
    cfg.learning_rate = learning_rate;
    cfg.num_rounds = rounds;
    cfg.subsample = subsample;
    cfg.colsample_bytree = colsample;
    cfg.min_child_weight = min_child_weight;
    cfg.reg_lambda = reg_lambda;
    cfg.max_bins = max_bins;
    cfg.seed = seed;
    cfg.eval_every = eval_every;

    ObjectiveConfig ocfg;
    ocfg.sigma = SigmoidShape(sigma);
    ocfg.pair_budget = pair_budget;
    ocfg.ndcg_relevance_grades = ndcg_grades;

    std::vector<EvalSet> evals{{"train", &data}};
    if (test) evals.push_back({"test", test});
    FitResult fr = fit(data, objective_from_string(objective), ocfg, cfg, evals);
    return Booster{std::move(fr.forest), std::move(fr.history)};
}

py::dict evaluate_scores(const GroupedDataset& ds, const std::vector<double>& flat,
                         std::size_t ndcg_k, int num_grades) {
    ScoresPerGroup scores = split_scores(ds, flat);
    ICSeries series = ic_series(ds, scores);
    std::vector<double> ndcg = group_ndcg(ds, scores, ndcg_k, num_grades);
    MetricsReport rep = aggregate_metrics(series, ndcg, ndcg_k);
    py::dict out;
    out["mean_ic"] = rep.mean_ic;
    out["std_ic"] = rep.std_ic;
    out["icir"] = rep.icir ? py::cast(*rep.icir) : py::none();
    out["mean_ndcg"] = rep.mean_ndcg;
    out["ndcg_k"] = rep.ndcg_k;
    out["groups_evaluated"] = rep.groups_evaluated;
    return out;
}

py::dict stats_dict(const SeriesStats& s) {
    py::dict out;
    out["ret_pct"] = s.mean_pct;
    out["vol_pct"] = s.vol_pct;
    out["sharpe"] = s.sharpe ? py::cast(*s.sharpe) : py::none();
    out["mdd_pct"] = s.mdd_pct;
    return out;
}

py::dict backtest_scores(const GroupedDataset& ds, const std::vector<double>& flat) {
    BacktestReport rep = decile_backtest(ds, split_scores(ds, flat));
    py::dict out;
    out["long_short"] = stats_dict(rep.long_short);
    py::list deciles;
    for (const SeriesStats& s : rep.deciles) deciles.append(stats_dict(s));
    out["deciles"] = deciles;
    out["long_short_returns"] = rep.long_short_returns;
    out["periods"] = rep.periods;
    return out;
}

py::dict simulate(std::size_t periods, std::size_t items, std::size_t features,
                  const std::string& noise, std::optional<double> snr, double dof,
                  std::size_t train_periods, std::uint64_t seed) {
    DGPConfig cfg;
    cfg.periods = periods;
    cfg.items_per_period = items;
    cfg.num_features = features;
    cfg.noise = noise_from_string(noise);
    cfg.snr_target = snr;
    cfg.t_dof = dof;
    cfg.train_periods = train_periods;
    cfg.seed = seed;
    SimPanel panel = gen_linear_panel(cfg);
    py::dict out;
    out["dataset"] = py::cast(std::move(panel.dataset));
    out["beta"] = panel.beta;
    out["realized_snr"] = panel.realized_snr ? py::cast(*panel.realized_snr) : py::none();
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Rank-correlation boosted trees: core operations";
    m.attr("__version__") = ICBOOST_VERSION;

    py::class_<GroupedDataset>(m, "Dataset")
        .def(py::init(&dataset_from_rows), py::arg("group_ids"), py::arg("features"),
             py::arg("labels"),
             "Build from parallel per-row lists; groups form in order of first occurrence.")
        .def_static(
            "load_csv",
            [](const std::string& path, const std::string& group_col,
               const std::string& label_col, const std::string& weight_col) {
                return load_csv(path, CsvSchema{group_col, label_col, weight_col});
            },
            py::arg("path"), py::arg("group_col") = "group", py::arg("label_col") = "label",
            py::arg("weight_col") = "")
        .def_property_readonly("num_groups", &GroupedDataset::num_groups)
        .def_property_readonly("num_rows", &GroupedDataset::total_rows)
        .def_property_readonly("num_features",
                               [](const GroupedDataset& ds) { return ds.num_features; })
        .def_property_readonly("feature_names",
                               [](const GroupedDataset& ds) { return ds.feature_names; })
        .def_property_readonly("group_ids",
                               [](const GroupedDataset& ds) {
                                   std::vector<std::string> ids;
                                   for (const Group& g : ds.groups) ids.push_back(g.id);
                                   return ids;
                               })
        .def("labels",
             [](const GroupedDataset& ds) {
                 std::vector<double> out;
                 for (const Group& g : ds.groups)
                     out.insert(out.end(), g.labels.begin(), g.labels.end());
                 return out;
             },
             "Labels concatenated in dataset row order.")
        .def("slice", &GroupedDataset::slice, py::arg("begin"), py::arg("end"),
             "Copy of groups [begin, end) as a standalone dataset.");

    py::class_<Booster>(m, "Booster")
        .def("predict", &Booster::predict, py::arg("data"),
             "Scores in dataset row order.")
        .def("save", &Booster::save, py::arg("path"))
        .def_property_readonly("num_trees", &Booster::num_trees)
        .def_property_readonly("history", [](const Booster& b) {
            std::vector<std::tuple<int, std::string, std::string, double>> rows;
            for (const HistoryRecord& r : b.history.records)
                rows.emplace_back(r.round, r.set_name, r.metric_name, r.value);
            return rows;
        });

    m.def("load_model", [](const std::string& path) {
        return Booster{load_model(path), {}};
    });

    m.def("train", &train, py::arg("data"), py::arg("objective") = "rankic",
          py::arg("rounds") = 100, py::arg("depth") = 8, py::arg("learning_rate") = 0.1,
          py::arg("subsample") = 1.0, py::arg("colsample") = 1.0,
          py::arg("min_child_weight") = 1.0, py::arg("reg_lambda") = 1.0,
          py::arg("max_bins") = 256, py::arg("seed") = 0, py::arg("eval_every") = 1,
          py::arg("sigma") = 1.0, py::arg("pair_budget") = py::none(),
          py::arg("ndcg_grades") = 32, py::arg("test") = nullptr,
          "Fit a boosted forest; objective is one of mse, pairwise, ndcg, rankic.");

    m.def("simulate", &simulate, py::arg("periods") = 120, py::arg("items") = 500,
          py::arg("features") = 10, py::arg("noise") = "none", py::arg("snr") = py::none(),
          py::arg("dof") = 5.0, py::arg("train_periods") = 80, py::arg("seed") = 0,
          "Linear panel generator; returns dict with dataset, beta, realized_snr.");

    m.def("evaluate", &evaluate_scores, py::arg("data"), py::arg("scores"),
          py::arg("ndcg_k") = 100, py::arg("ndcg_grades") = 32,
          "Per-group rank IC and NDCG aggregated over groups.");

    m.def("backtest", &backtest_scores, py::arg("data"), py::arg("scores"),
          "Decile long-short backtest treating labels as per-period returns.");

    m.def("predicted_ranks",
          [](const std::vector<double>& scores) { return predicted_ranks(scores).ranks; },
          py::arg("scores"), "Descending ranks, 1 = highest score, ties by input order.");

    m.def("label_ranks",
          [](const std::vector<double>& labels) { return ranks_from_labels(labels).ranks; },
          py::arg("labels"), "Descending label ranks, ties by input order.");

    m.def("spearman_rho",
          [](const std::vector<std::int32_t>& pred, const std::vector<std::int32_t>& lab) {
              return spearman_rho(pred, lab);
          },
          py::arg("pred_ranks"), py::arg("label_ranks"));

    m.def("delta_rank_ic", &delta_rank_ic, py::arg("r_i"), py::arg("r_j"), py::arg("y_i"),
          py::arg("y_j"), py::arg("n"),
          "|rho change| when the items holding ranks r_i, r_j swap places.");

    m.def("ndcg_at_k",
          [](const std::vector<double>& scores, const std::vector<int>& grades, std::size_t k) {
              return ndcg_at_k(scores, grades, k);
          },
          py::arg("scores"), py::arg("grades"), py::arg("k"));

    m.def("rank_ic_loss",
          [](const std::vector<double>& scores, const std::vector<double>& labels) {
              return rank_ic_loss(scores, ranks_from_labels(labels));
          },
          py::arg("scores"), py::arg("labels"), "Exactly 1 - spearman rho; scores must be tie-free.");

    m.def("lambda_rank_ic_loss",
          [](const std::vector<double>& scores, const std::vector<double>& labels, double sigma) {
              return lambda_rank_ic_loss(scores, ranks_from_labels(labels), SigmoidShape(sigma));
          },
          py::arg("scores"), py::arg("labels"), py::arg("sigma") = 1.0);

    m.def("logistic_surrogate_loss",
          [](const std::vector<double>& scores, const std::vector<double>& labels, double sigma) {
              return logistic_surrogate_loss(scores, ranks_from_labels(labels),
                                             SigmoidShape(sigma));
          },
          py::arg("scores"), py::arg("labels"), py::arg("sigma") = 1.0);
}
