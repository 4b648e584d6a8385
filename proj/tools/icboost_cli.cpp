// Command line front end: simulate | train | predict | benchmark | backtest.
// Resolution order for every run is preset < config file < explicit flags;
// the fully resolved configuration lands in <out>/config.resolved before any
// work starts. Failures exit nonzero with a single "error: ..." line.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "icboost/dataset.hpp"
#include "icboost/errors.hpp"
#include "icboost/evaluate.hpp"
#include "icboost/gbdt.hpp"
#include "icboost/numio.hpp"
#include "icboost/objectives.hpp"
#include "icboost/parallel.hpp"
#include "icboost/simulate.hpp"
#include "icboost/version.hpp"
#include "svg_chart.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace icboost;

namespace {

std::vector<std::uint64_t> parse_seed_spec(const std::string& spec) {
    auto parse_one = [&](std::string_view field) -> std::uint64_t {
        long long v = 0;
        if (!parse_long(field, v) || v < 0) throw DataError("bad seed list '" + spec + "'");
        return static_cast<std::uint64_t>(v);
    };
    std::vector<std::uint64_t> seeds;
    auto dots = spec.find("..");
    if (dots != std::string::npos) {
        std::uint64_t a = parse_one(std::string_view(spec).substr(0, dots));
        std::uint64_t b = parse_one(std::string_view(spec).substr(dots + 2));
        if (b < a) throw DataError("bad seed list '" + spec + "'");
        for (std::uint64_t s = a;; ++s) {
            seeds.push_back(s);
            if (s == b) break;
        }
    } else {
        std::size_t pos = 0;
        while (pos <= spec.size()) {
            auto comma = spec.find(',', pos);
            auto end = comma == std::string::npos ? spec.size() : comma;
            seeds.push_back(parse_one(std::string_view(spec).substr(pos, end - pos)));
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
    }
    return seeds;
}

double parse_snr_level(const std::string& text) {
    if (text == "high") return 2.0;
    if (text == "medium") return 0.5;
    if (text == "low") return 0.1;
    double v = 0.0;
    if (!parse_finite_double(text, v) || !(v > 0.0))
        throw DataError("bad snr '" + text + "' (use high, medium, low, or a positive number)");
    return v;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto comma = text.find(',', pos);
        auto end = comma == std::string::npos ? text.size() : comma;
        std::string field = text.substr(pos, end - pos);
        while (!field.empty() && field.front() == ' ') field.erase(field.begin());
        while (!field.empty() && field.back() == ' ') field.pop_back();
        if (!field.empty()) out.push_back(std::move(field));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

// ---- shared flag groups ----------------------------------------------------

struct CommonFlags {
    std::string out;
    int threads = 0;
};

void add_common_flags(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--out", f.out, "Output directory (created if missing)")->required();
    cmd->add_option("--threads", f.threads, "Worker threads (0 = all hardware threads)")
        ->check(CLI::NonNegativeNumber);
    // --config lives on the root app; let flags typed after the subcommand
    // reach it.
    cmd->fallthrough();
}

void prepare_out_dir(const CommonFlags& f) {
    fs::create_directories(f.out);
    set_num_threads(f.threads);
}

void write_resolved_config(const CommonFlags& f, const json& j) {
    fs::path path = fs::path(f.out) / "config.resolved";
    std::ofstream out(path);
    out << j.dump(2) << '\n';
    if (!out) throw DataError("cannot write '" + path.string() + "'");
}

json resolved_base(const std::string& command, const CommonFlags& f) {
    return json{{"command", command}, {"version", ICBOOST_VERSION}, {"out", f.out},
                {"threads", f.threads}};
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    return out;
}

void finish_output(std::ofstream& out, const fs::path& path) {
    out.flush();
    if (!out) throw DataError("failed while writing '" + path.string() + "'");
}

struct DgpFlags {
    std::string preset;
    std::size_t periods = 120, items = 500, features = 10, train_periods = 80;
    std::string noise = "none";
    double t_dof = 5.0;
    std::string snr;
    std::uint64_t seed = 0;
};

void add_dgp_flags(CLI::App* cmd, DgpFlags& f, bool with_seed) {
    cmd->add_option("--preset", f.preset, "Experiment preset: noiseless, snr-sweep, heavy-tail");
    cmd->add_option("--periods", f.periods, "Cross-sectional groups T");
    cmd->add_option("--items", f.items, "Rows per group N");
    cmd->add_option("--features", f.features, "Feature count p");
    cmd->add_option("--noise", f.noise, "Noise kind: none, gaussian, student-t");
    cmd->add_option("--t-dof", f.t_dof, "Student-t degrees of freedom (> 2)");
    cmd->add_option("--snr", f.snr, "Target SNR: high (2.0), medium (0.5), low (0.1), or a number");
    cmd->add_option("--train-periods", f.train_periods, "Leading groups used for training");
    if (with_seed) cmd->add_option("--seed", f.seed, "Generator seed");
}

DGPConfig resolve_dgp(const CLI::App* cmd, const DgpFlags& f) {
    DGPConfig cfg;
    if (cmd->count("--preset") > 0) {
        if (f.preset == "noiseless") {
            // The defaults already are the noiseless study: 120 x 500 x 10.
        } else if (f.preset == "snr-sweep") {
            cfg.num_features = 100;
            cfg.noise = NoiseKind::Gaussian;
            cfg.snr_target = 0.1;
        } else if (f.preset == "heavy-tail") {
            cfg.num_features = 100;
            cfg.noise = NoiseKind::StudentT;
            cfg.t_dof = 5.0;
            cfg.snr_target = 0.1;
        } else {
            throw DataError("unknown preset '" + f.preset + "'");
        }
    }
    if (cmd->count("--periods") > 0) cfg.periods = f.periods;
    if (cmd->count("--items") > 0) cfg.items_per_period = f.items;
    if (cmd->count("--features") > 0) cfg.num_features = f.features;
    if (cmd->count("--noise") > 0) cfg.noise = noise_from_string(f.noise);
    if (cmd->count("--t-dof") > 0) cfg.t_dof = f.t_dof;
    if (cmd->count("--snr") > 0) cfg.snr_target = parse_snr_level(f.snr);
    if (cmd->count("--train-periods") > 0) cfg.train_periods = f.train_periods;
    cfg.seed = f.seed;
    // A preset SNR target dies with the noise it belonged to; an explicit
    // --snr together with --noise none stays a loud contradiction.
    if (cfg.noise == NoiseKind::None && cmd->count("--snr") == 0) cfg.snr_target.reset();
    cfg.validate();
    return cfg;
}

json dgp_to_json(const DGPConfig& cfg) {
    json j{{"periods", cfg.periods},
           {"items_per_period", cfg.items_per_period},
           {"num_features", cfg.num_features},
           {"noise", to_string(cfg.noise)},
           {"train_periods", cfg.train_periods},
           {"seed", cfg.seed}};
    if (cfg.noise == NoiseKind::StudentT) j["t_dof"] = cfg.t_dof;
    j["snr_target"] = cfg.snr_target ? json(*cfg.snr_target) : json(nullptr);
    return j;
}

struct TrainFlags {
    int rounds = 100, depth = 8, max_bins = 256, eval_every = 1;
    double eta = 0.1, subsample = 1.0, colsample = 1.0, min_child_weight = 1.0, reg_lambda = 1.0;
};

void add_train_flags(CLI::App* cmd, TrainFlags& f) {
    cmd->add_option("--rounds", f.rounds, "Boosting rounds");
    cmd->add_option("--depth", f.depth, "Maximum tree depth");
    cmd->add_option("--eta", f.eta, "Learning rate");
    cmd->add_option("--subsample", f.subsample, "Group (row for mse) fraction sampled per round");
    cmd->add_option("--colsample", f.colsample, "Feature fraction sampled per tree");
    cmd->add_option("--min-child-weight", f.min_child_weight, "Minimum hessian sum per child");
    cmd->add_option("--reg-lambda", f.reg_lambda, "L2 leaf regularization");
    cmd->add_option("--max-bins", f.max_bins, "Histogram bins per feature");
    cmd->add_option("--eval-every", f.eval_every, "Evaluation interval in rounds");
}

TrainConfig resolve_train(const CLI::App* cmd, const TrainFlags& f, TrainConfig cfg,
                          std::uint64_t seed) {
    if (cmd->count("--rounds") > 0) cfg.num_rounds = f.rounds;
    if (cmd->count("--depth") > 0) cfg.max_depth = f.depth;
    if (cmd->count("--eta") > 0) cfg.learning_rate = f.eta;
    if (cmd->count("--subsample") > 0) cfg.subsample = f.subsample;
    if (cmd->count("--colsample") > 0) cfg.colsample_bytree = f.colsample;
    if (cmd->count("--min-child-weight") > 0) cfg.min_child_weight = f.min_child_weight;
    if (cmd->count("--reg-lambda") > 0) cfg.reg_lambda = f.reg_lambda;
    if (cmd->count("--max-bins") > 0) cfg.max_bins = f.max_bins;
    if (cmd->count("--eval-every") > 0) cfg.eval_every = f.eval_every;
    cfg.seed = seed;
    cfg.validate();
    return cfg;
}

json train_to_json(const TrainConfig& c) {
    return json{{"num_rounds", c.num_rounds},
                {"max_depth", c.max_depth},
                {"learning_rate", c.learning_rate},
                {"subsample", c.subsample},
                {"colsample_bytree", c.colsample_bytree},
                {"min_child_weight", c.min_child_weight},
                {"reg_lambda", c.reg_lambda},
                {"max_bins", c.max_bins},
                {"eval_every", c.eval_every},
                {"seed", c.seed}};
}

struct ObjFlags {
    std::string objective = "rankic";
    double sigma = 1.0;
    long long pair_budget = -1;  // < 0: all pairs
    int grades = 32;
};

void add_objective_shape_flags(CLI::App* cmd, ObjFlags& f) {
    cmd->add_option("--sigma", f.sigma, "Pairwise logistic sharpness");
    cmd->add_option("--pair-budget", f.pair_budget, "Sampled pairs per group (default: all pairs)")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--grades", f.grades, "Relevance grade count for ndcg");
}

ObjectiveConfig resolve_objective_config(const ObjFlags& f) {
    ObjectiveConfig cfg;
    cfg.sigma = SigmoidShape(f.sigma);
    if (f.pair_budget >= 0) cfg.pair_budget = static_cast<std::size_t>(f.pair_budget);
    cfg.ndcg_relevance_grades = f.grades;
    cfg.validate();
    return cfg;
}

json objective_to_json(const ObjFlags& f) {
    return json{{"objective", f.objective},
                {"sigma", f.sigma},
                {"pair_budget", f.pair_budget >= 0 ? json(f.pair_budget) : json(nullptr)},
                {"grades", f.grades}};
}

void add_schema_flags(CLI::App* cmd, CsvSchema& s) {
    cmd->add_option("--group-col", s.group_col, "Group id column name");
    cmd->add_option("--label-col", s.label_col, "Label column name");
    cmd->add_option("--weight-col", s.weight_col, "Optional weight column name");
}

json schema_to_json(const CsvSchema& s) {
    return json{{"group_col", s.group_col},
                {"label_col", s.label_col},
                {"weight_col", s.weight_col.empty() ? json(nullptr) : json(s.weight_col)}};
}

ScoresPerGroup split_scores(const GroupedDataset& ds, const std::vector<double>& flat) {
    ScoresPerGroup out(ds.groups.size());
    std::size_t pos = 0;
    for (std::size_t g = 0; g < ds.groups.size(); ++g) {
        out[g].assign(flat.begin() + static_cast<std::ptrdiff_t>(pos),
                      flat.begin() + static_cast<std::ptrdiff_t>(pos + ds.groups[g].n));
        pos += ds.groups[g].n;
    }
    return out;
}

double sample_std(const std::vector<double>& v, double mean) {
    if (v.size() < 2) return 0.0;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

// ---- simulate ---------------------------------------------------------------

int run_simulate(const CLI::App* cmd, const DgpFlags& df, const CommonFlags& common) {
    DGPConfig cfg = resolve_dgp(cmd, df);
    prepare_out_dir(common);
    json j = resolved_base("simulate", common);
    j["dgp"] = dgp_to_json(cfg);
    write_resolved_config(common, j);

    SimPanel panel = gen_linear_panel(cfg);
    fs::path dir(common.out);
    save_panel(panel, (dir / "panel.csv").string(), (dir / "panel.meta.json").string());
    std::cout << "panel: " << (dir / "panel.csv").string() << " (" << cfg.periods << " groups x "
              << cfg.items_per_period << " rows x " << cfg.num_features << " features)\n";
    if (panel.realized_snr)
        std::cout << "realized snr: " << format_double(*panel.realized_snr) << '\n';
    return 0;
}

// ---- train ------------------------------------------------------------------

struct TrainArgs {
    std::string data, valid, test;
    bool rank_features = false;
    long long split_train = -1;
    std::uint64_t seed = 0;
    CsvSchema schema;
    ObjFlags obj;
    TrainFlags tf;
    CommonFlags common;
};

int run_train(const CLI::App* cmd, const TrainArgs& a) {
    ObjectiveKind kind = objective_from_string(a.obj.objective);
    ObjectiveConfig ocfg = resolve_objective_config(a.obj);
    TrainConfig tc = resolve_train(cmd, a.tf, TrainConfig{}, a.seed);
    if (a.split_train >= 0 && !a.test.empty())
        throw DataError("--split-train and --test are mutually exclusive");

    prepare_out_dir(a.common);
    json j = resolved_base("train", a.common);
    j["data"] = a.data;
    j["columns"] = schema_to_json(a.schema);
    j["rank_features"] = a.rank_features;
    j["split_train"] = a.split_train >= 0 ? json(a.split_train) : json(nullptr);
    j["valid"] = a.valid.empty() ? json(nullptr) : json(a.valid);
    j["test"] = a.test.empty() ? json(nullptr) : json(a.test);
    j["objective"] = objective_to_json(a.obj);
    j["train"] = train_to_json(tc);
    write_resolved_config(a.common, j);

    GroupedDataset full = load_csv(a.data, a.schema);
    if (a.rank_features) full = rank_transform_features(full);

    GroupedDataset train, test_ds, valid_ds;
    if (a.split_train >= 0) {
        auto k = static_cast<std::size_t>(a.split_train);
        if (k < 1 || k >= full.num_groups())
            throw DataError("--split-train must lie in [1, groups-1]");
        train = full.slice(0, k);
        test_ds = full.slice(k, full.num_groups());
    } else {
        train = std::move(full);
        if (!a.test.empty()) {
            test_ds = load_csv(a.test, a.schema);
            if (a.rank_features) test_ds = rank_transform_features(test_ds);
        }
    }
    if (!a.valid.empty()) {
        valid_ds = load_csv(a.valid, a.schema);
        if (a.rank_features) valid_ds = rank_transform_features(valid_ds);
    }

    std::vector<EvalSet> evals{{"train", &train}};
    if (!valid_ds.groups.empty()) evals.push_back({"valid", &valid_ds});
    if (!test_ds.groups.empty()) evals.push_back({"test", &test_ds});

    FitResult res = fit(train, kind, ocfg, tc, evals);
    for (const auto& w : res.warnings) std::cerr << "warning: " << w << '\n';

    fs::path dir(a.common.out);
    save_model(res.forest, (dir / "model.json").string());
    res.history.write_csv((dir / "history.csv").string());

    std::cout << "model: " << (dir / "model.json").string() << " (" << res.forest.trees.size()
              << " trees)\n";
    if (auto last = res.history.last("train", "rank_ic"))
        std::cout << "final train rank_ic: " << format_double(*last) << '\n';
    for (const char* set : {"valid", "test"}) {
        if (auto pk = res.history.peak(set, "rank_ic"))
            std::cout << "peak " << set << " rank_ic: " << format_double(pk->second)
                      << " @ round " << pk->first << '\n';
    }
    return 0;
}

// ---- predict ----------------------------------------------------------------

struct PredictArgs {
    std::string model, data;
    bool rank_features = false;
    CsvSchema schema;
    CommonFlags common;
};

int run_predict(const PredictArgs& a) {
    prepare_out_dir(a.common);
    json j = resolved_base("predict", a.common);
    j["model"] = a.model;
    j["data"] = a.data;
    j["columns"] = schema_to_json(a.schema);
    j["rank_features"] = a.rank_features;
    write_resolved_config(a.common, j);

    Forest forest = load_model(a.model);
    GroupedDataset ds = load_csv(a.data, a.schema);
    if (a.rank_features) ds = rank_transform_features(ds);
    std::vector<double> flat = predict(forest, ds);

    fs::path path = fs::path(a.common.out) / "predictions.csv";
    auto out = open_output(path);
    out << "group,row,score\n";
    std::size_t pos = 0;
    for (const auto& g : ds.groups)
        for (std::size_t i = 0; i < g.n; ++i)
            out << g.id << ',' << i << ',' << format_double(flat[pos++]) << '\n';
    finish_output(out, path);
    std::cout << "predictions: " << path.string() << " (" << flat.size() << " rows)\n";
    return 0;
}

// ---- benchmark --------------------------------------------------------------

struct BenchmarkArgs {
    DgpFlags dgp;
    TrainFlags tf;
    ObjFlags obj;
    std::string objectives;
    std::string seeds = "0";
    bool svg = false;
    CommonFlags common;
};

int run_benchmark(const CLI::App* cmd, const BenchmarkArgs& a) {
    DGPConfig dgp = resolve_dgp(cmd, a.dgp);
    TrainConfig base;
    std::string default_objectives = "rankic,ndcg,mse";
    if (cmd->count("--preset") > 0) {
        if (a.dgp.preset == "noiseless") {
            base.learning_rate = 0.01;
            base.max_depth = 6;
            base.num_rounds = 1000;
            default_objectives = "rankic";
        } else if (a.dgp.preset == "snr-sweep") {
            base.learning_rate = 0.1;
            base.max_depth = 8;
            base.num_rounds = 200;
            default_objectives = "rankic";
        } else if (a.dgp.preset == "heavy-tail") {
            base.learning_rate = 0.1;
            base.max_depth = 8;
            base.num_rounds = 1000;
        }
    }
    std::vector<std::string> names =
        split_list(cmd->count("--objectives") > 0 ? a.objectives : default_objectives);
    if (names.empty()) throw DataError("no objectives given");
    std::vector<ObjectiveKind> kinds;
    for (const auto& n : names) kinds.push_back(objective_from_string(n));
    std::vector<std::uint64_t> seeds = parse_seed_spec(a.seeds);
    if (seeds.empty()) throw DataError("no seeds given");
    ObjectiveConfig ocfg = resolve_objective_config(a.obj);
    if (dgp.train_periods < 1 || dgp.train_periods >= dgp.periods)
        throw DataError("train-periods must lie in [1, periods-1]");
    TrainConfig probe = resolve_train(cmd, a.tf, base, 0);
    if (probe.eval_every > probe.num_rounds)
        throw DataError("eval-every exceeds rounds; nothing would be recorded");

    prepare_out_dir(a.common);
    json j = resolved_base("benchmark", a.common);
    if (cmd->count("--preset") > 0) j["preset"] = a.dgp.preset;
    j["dgp"] = dgp_to_json(dgp);
    j["dgp"].erase("seed");
    json jt = train_to_json(probe);
    jt.erase("seed");
    j["train"] = jt;
    j["objective_shape"] = json{{"sigma", a.obj.sigma},
                                {"pair_budget",
                                 a.obj.pair_budget >= 0 ? json(a.obj.pair_budget) : json(nullptr)},
                                {"grades", a.obj.grades}};
    j["objectives"] = names;
    j["seeds"] = seeds;
    j["svg"] = a.svg;
    write_resolved_config(a.common, j);

    fs::path dir(a.common.out);
    fs::path curves_path = dir / "curves.csv";
    auto curves = open_output(curves_path);
    curves << "objective,seed,set,round,rank_ic\n";

    struct SeedRow {
        std::string objective;
        std::uint64_t seed;
        double peak;
        int peak_round;
        double final_ic;
    };
    std::vector<SeedRow> rows;
    // Seed-mean test curve per objective, for the optional chart.
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> mean_curves;

    for (std::uint64_t seed : seeds) {
        DGPConfig cfg = dgp;
        cfg.seed = seed;
        SimPanel panel = gen_linear_panel(cfg);
        GroupedDataset train = panel.dataset.slice(0, cfg.train_periods);
        GroupedDataset test = panel.dataset.slice(cfg.train_periods, cfg.periods);
        for (std::size_t oi = 0; oi < kinds.size(); ++oi) {
            TrainConfig tc = resolve_train(cmd, a.tf, base, seed);
            FitResult res = fit(train, kinds[oi], ocfg, tc,
                                {{"train", &train}, {"test", &test}});
            for (const auto& w : res.warnings) std::cerr << "warning: " << w << '\n';
            for (const auto& r : res.history.records) {
                if (r.metric_name != "rank_ic") continue;
                curves << names[oi] << ',' << seed << ',' << r.set_name << ',' << r.round << ','
                       << format_double(r.value) << '\n';
            }
            auto pk = res.history.peak("test", "rank_ic");
            auto fin = res.history.last("test", "rank_ic");
            rows.push_back({names[oi], seed, pk->second, pk->first, *fin});
            std::cout << "seed " << seed << ' ' << names[oi] << ": peak test rank_ic "
                      << format_double(pk->second) << " @ round " << pk->first << '\n';

            auto& mc = mean_curves[names[oi]];
            std::size_t idx = 0;
            for (const auto& r : res.history.records) {
                if (r.metric_name != "rank_ic" || r.set_name != "test") continue;
                if (idx == mc.first.size()) {
                    mc.first.push_back(r.round);
                    mc.second.push_back(0.0);
                }
                mc.second[idx] += r.value;
                ++idx;
            }
        }
    }
    finish_output(curves, curves_path);

    fs::path seeds_path = dir / "benchmark_seeds.csv";
    auto per_seed = open_output(seeds_path);
    per_seed << "objective,seed,peak_test_rank_ic,peak_round,final_test_rank_ic\n";
    for (const auto& r : rows)
        per_seed << r.objective << ',' << r.seed << ',' << format_double(r.peak) << ','
                 << r.peak_round << ',' << format_double(r.final_ic) << '\n';
    finish_output(per_seed, seeds_path);

    fs::path table_path = dir / "benchmark.csv";
    auto table = open_output(table_path);
    table << "objective,mean_peak_test_rank_ic,std_peak_test_rank_ic,mean_peak_round,"
             "mean_final_test_rank_ic\n";
    for (const auto& name : names) {
        std::vector<double> peaks, rounds, finals;
        for (const auto& r : rows) {
            if (r.objective != name) continue;
            peaks.push_back(r.peak);
            rounds.push_back(r.peak_round);
            finals.push_back(r.final_ic);
        }
        auto mean = [](const std::vector<double>& v) {
            double s = 0.0;
            for (double x : v) s += x;
            return s / static_cast<double>(v.size());
        };
        double mp = mean(peaks), mr = mean(rounds), mf = mean(finals);
        table << name << ',' << format_double(mp) << ',' << format_double(sample_std(peaks, mp))
              << ',' << format_double(mr) << ',' << format_double(mf) << '\n';
        std::cout << name << ": mean peak test rank_ic " << format_double(mp) << " (std "
                  << format_double(sample_std(peaks, mp)) << "), mean peak round "
                  << format_double(mr) << '\n';
    }
    finish_output(table, table_path);

    if (a.svg) {
        std::vector<svgchart::Series> series;
        for (const auto& name : names) {
            auto& mc = mean_curves[name];
            svgchart::Series s;
            s.label = name;
            s.xs = mc.first;
            s.ys = mc.second;
            for (double& y : s.ys) y /= static_cast<double>(seeds.size());
            series.push_back(std::move(s));
        }
        svgchart::write_line_chart((dir / "curves.svg").string(), "Test rank IC by round",
                                   "round", "rank IC", series);
    }
    return 0;
}

// ---- backtest ---------------------------------------------------------------

struct BacktestArgs {
    std::string data, model, score_col;
    bool protocol = false, rank_features = false, svg = false;
    std::size_t ndcg_k = 100;
    std::size_t train_len = 80, valid_len = 0, test_len = 40, step = 0;
    std::uint64_t seed = 0;
    CsvSchema schema;
    ObjFlags obj;
    TrainFlags tf;
    CommonFlags common;
};

int run_backtest(const CLI::App* cmd, const BacktestArgs& a) {
    int modes = (!a.model.empty() ? 1 : 0) + (!a.score_col.empty() ? 1 : 0) + (a.protocol ? 1 : 0);
    if (modes != 1) throw DataError("choose exactly one of --model, --score-col, --protocol");
    const char* method = !a.model.empty()       ? "model"
                         : !a.score_col.empty() ? "score-column"
                                                : "rolling-protocol";
    ObjectiveKind kind = objective_from_string(a.obj.objective);
    ObjectiveConfig ocfg = resolve_objective_config(a.obj);
    TrainConfig tc = resolve_train(cmd, a.tf, TrainConfig{}, a.seed);
    std::size_t step = a.step == 0 ? a.test_len : a.step;

    prepare_out_dir(a.common);
    json j = resolved_base("backtest", a.common);
    j["method"] = method;
    j["data"] = a.data;
    j["columns"] = schema_to_json(a.schema);
    j["rank_features"] = a.rank_features;
    j["ndcg_k"] = a.ndcg_k;
    j["grades"] = a.obj.grades;
    if (!a.model.empty()) j["model"] = a.model;
    if (!a.score_col.empty()) j["score_col"] = a.score_col;
    if (a.protocol)
        j["protocol"] = json{{"train_len", a.train_len}, {"valid_len", a.valid_len},
                             {"test_len", a.test_len},   {"step", step},
                             {"objective", objective_to_json(a.obj)}, {"train", train_to_json(tc)}};
    j["svg"] = a.svg;
    write_resolved_config(a.common, j);

    GroupedDataset ds = load_csv(a.data, a.schema);

    GroupedDataset eval_ds;
    ScoresPerGroup scores;
    MetricsReport metrics;
    BacktestReport bt;
    ICSeries series;
    json windows = json::array();

    if (!a.model.empty()) {
        Forest forest = load_model(a.model);
        if (a.rank_features) ds = rank_transform_features(ds);
        eval_ds = std::move(ds);
        scores = split_scores(eval_ds, predict(forest, eval_ds));
    } else if (!a.score_col.empty()) {
        std::size_t col = 0;
        bool found = false;
        for (std::size_t f = 0; f < ds.feature_names.size(); ++f) {
            if (ds.feature_names[f] == a.score_col) {
                col = f;
                found = true;
                break;
            }
        }
        if (!found) throw DataError("score column '" + a.score_col + "' not found among features");
        eval_ds = std::move(ds);
        scores.resize(eval_ds.groups.size());
        for (std::size_t g = 0; g < eval_ds.groups.size(); ++g) {
            const Group& grp = eval_ds.groups[g];
            scores[g].resize(grp.n);
            for (std::size_t i = 0; i < grp.n; ++i) scores[g][i] = grp.row(i)[col];
        }
    } else {
        if (a.rank_features) ds = rank_transform_features(ds);
        RollingWindowPlan plan =
            rolling_windows(ds.num_groups(), a.train_len, a.valid_len, a.test_len, step);
        if (plan.insufficient_history)
            throw DataError("not enough groups for one rolling window");
        ProtocolConfig pc;
        pc.kind = kind;
        pc.objective = ocfg;
        pc.candidates = {tc};
        pc.ndcg_k = a.ndcg_k;
        ProtocolResult res = run_protocol(ds, pc, plan);
        for (const auto& w : res.warnings) std::cerr << "warning: " << w << '\n';
        metrics = res.metrics;
        bt = res.backtest;
        GroupedDataset covered;
        covered.num_features = ds.num_features;
        covered.feature_names = ds.feature_names;
        for (std::size_t pos : res.covered_groups) covered.groups.push_back(ds.groups[pos]);
        eval_ds = std::move(covered);
        scores = std::move(res.oos_scores);
        series = ic_series(eval_ds, scores);
        for (const auto& w : res.windows)
            windows.push_back(json{{"window", w.window},
                                   {"chosen_candidate", w.chosen_candidate},
                                   {"valid_mean_ic",
                                    w.valid_mean_ic ? json(*w.valid_mean_ic) : json(nullptr)}});
    }

    if (a.protocol == false) {
        series = ic_series(eval_ds, scores);
        std::vector<double> ndcgs = group_ndcg(eval_ds, scores, a.ndcg_k, a.obj.grades);
        metrics = aggregate_metrics(series, ndcgs, a.ndcg_k);
        bt = decile_backtest(eval_ds, scores);
    }

    fs::path dir(a.common.out);

    json m{{"command", "backtest"},
           {"version", ICBOOST_VERSION},
           {"method", method},
           {"mean_ic", metrics.mean_ic},
           {"std_ic", metrics.std_ic},
           {"icir", metrics.icir ? json(*metrics.icir) : json(nullptr)},
           {"mean_ndcg", metrics.mean_ndcg},
           {"ndcg_k", metrics.ndcg_k},
           {"groups_evaluated", metrics.groups_evaluated},
           {"return_pct", bt.long_short.mean_pct},
           {"vol_pct", bt.long_short.vol_pct},
           {"sharpe", bt.long_short.sharpe ? json(*bt.long_short.sharpe) : json(nullptr)},
           {"mdd_pct", bt.long_short.mdd_pct}};
    if (a.protocol) m["windows"] = windows;
    {
        fs::path path = dir / "metrics.json";
        auto out = open_output(path);
        out << m.dump(2) << '\n';
        finish_output(out, path);
    }

    {
        fs::path path = dir / "deciles.csv";
        auto out = open_output(path);
        out << "portfolio,ret_pct,vol_pct,sharpe,mdd_pct\n";
        auto row = [&](const std::string& name, const SeriesStats& s) {
            out << name << ',' << format_double(s.mean_pct) << ',' << format_double(s.vol_pct)
                << ',' << (s.sharpe ? format_double(*s.sharpe) : std::string{}) << ','
                << format_double(s.mdd_pct) << '\n';
        };
        for (int d = 0; d < 10; ++d) row("decile_" + std::to_string(d + 1), bt.deciles[d]);
        row("long_short", bt.long_short);
        finish_output(out, path);
    }

    {
        fs::path path = dir / "cumulative.csv";
        auto out = open_output(path);
        out << "group,series,cumulative_return\n";
        for (int d = 0; d < 10; ++d)
            for (std::size_t t = 0; t < bt.periods.size(); ++t)
                out << bt.periods[t] << ",decile_" << (d + 1) << ','
                    << format_double(bt.decile_cumulative[d][t]) << '\n';
        for (std::size_t t = 0; t < bt.periods.size(); ++t)
            out << bt.periods[t] << ",long_short,"
                << format_double(bt.long_short_cumulative[t]) << '\n';
        finish_output(out, path);
    }

    {
        fs::path path = dir / "ic_series.csv";
        auto out = open_output(path);
        out << "group,rank_ic\n";
        for (const auto& [id, rho] : series.entries)
            out << id << ',' << format_double(rho) << '\n';
        finish_output(out, path);
    }

    {
        fs::path path = dir / "scores.csv";
        auto out = open_output(path);
        out << "group,row,score,label\n";
        for (std::size_t g = 0; g < eval_ds.groups.size(); ++g) {
            const Group& grp = eval_ds.groups[g];
            for (std::size_t i = 0; i < grp.n; ++i)
                out << grp.id << ',' << i << ',' << format_double(scores[g][i]) << ','
                    << format_double(grp.labels[i]) << '\n';
        }
        finish_output(out, path);
    }

    if (a.svg) {
        std::vector<svgchart::Series> chart;
        std::vector<double> xs(bt.periods.size());
        for (std::size_t t = 0; t < xs.size(); ++t) xs[t] = static_cast<double>(t + 1);
        for (int d = 0; d < 10; ++d)
            chart.push_back({"decile " + std::to_string(d + 1), xs, bt.decile_cumulative[d]});
        chart.push_back({"H-L", xs, bt.long_short_cumulative});
        svgchart::write_line_chart((dir / "cumulative.svg").string(),
                                   "Cumulative return by decile", "period", "cumulative return",
                                   chart);
    }

    std::cout << "groups evaluated: " << metrics.groups_evaluated << " (skipped "
              << series.skipped << ")\n";
    std::cout << "mean rank_ic: " << format_double(metrics.mean_ic) << "  icir: "
              << (metrics.icir ? format_double(*metrics.icir) : std::string("n/a")) << '\n';
    std::cout << "long-short: ret " << format_double(bt.long_short.mean_pct) << "%/period, vol "
              << format_double(bt.long_short.vol_pct) << "%, sharpe "
              << (bt.long_short.sharpe ? format_double(*bt.long_short.sharpe)
                                       : std::string("n/a"))
              << ", mdd " << format_double(bt.long_short.mdd_pct) << "%\n";
    if (a.protocol) std::cout << "windows: " << windows.size() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gradient boosted ranking for grouped cross-sectional prediction"};
    app.set_version_flag("--version", ICBOOST_VERSION);
    app.set_config("--config", "",
                   "Key/value file; a [subcommand] section mirrors its long flags, explicit "
                   "flags win");
    app.require_subcommand(1);

    auto* sim = app.add_subcommand("simulate", "Generate a synthetic labeled panel");
    DgpFlags sim_dgp;
    CommonFlags sim_common;
    add_dgp_flags(sim, sim_dgp, true);
    add_common_flags(sim, sim_common);

    auto* tr = app.add_subcommand("train", "Fit a boosted forest on a grouped CSV");
    TrainArgs train_args;
    tr->add_option("--data", train_args.data, "Training CSV")->required();
    add_schema_flags(tr, train_args.schema);
    tr->add_flag("--rank-features", train_args.rank_features,
                 "Rank-transform features per group before fitting");
    tr->add_option("--valid", train_args.valid, "Validation CSV evaluated per round");
    tr->add_option("--test", train_args.test, "Test CSV evaluated per round");
    tr->add_option("--split-train", train_args.split_train,
                   "Use the first K groups for training and the rest as the test set");
    tr->add_option("--seed", train_args.seed, "Training seed");
    tr->add_option("--objective", train_args.obj.objective,
                   "Objective: mse, pairwise, ndcg, rankic");
    add_objective_shape_flags(tr, train_args.obj);
    add_train_flags(tr, train_args.tf);
    add_common_flags(tr, train_args.common);

    auto* pr = app.add_subcommand("predict", "Score a CSV with a saved model");
    PredictArgs predict_args;
    pr->add_option("--model", predict_args.model, "Model JSON")->required();
    pr->add_option("--data", predict_args.data, "Input CSV")->required();
    add_schema_flags(pr, predict_args.schema);
    pr->add_flag("--rank-features", predict_args.rank_features,
                 "Rank-transform features per group before scoring");
    add_common_flags(pr, predict_args.common);

    auto* be = app.add_subcommand("benchmark",
                                  "Compare objectives on simulated panels across seeds");
    BenchmarkArgs bench_args;
    add_dgp_flags(be, bench_args.dgp, false);
    be->add_option("--objectives", bench_args.objectives,
                   "Comma list from mse, pairwise, ndcg, rankic");
    be->add_option("--seeds", bench_args.seeds, "Seed list: 0..9 or 0,3,7");
    add_objective_shape_flags(be, bench_args.obj);
    add_train_flags(be, bench_args.tf);
    be->add_flag("--svg", bench_args.svg, "Also render curves.svg");
    add_common_flags(be, bench_args.common);

    auto* bk = app.add_subcommand("backtest", "Decile long-short evaluation of scores");
    BacktestArgs backtest_args;
    bk->add_option("--data", backtest_args.data, "Panel CSV with labels as realized returns")
        ->required();
    add_schema_flags(bk, backtest_args.schema);
    bk->add_flag("--rank-features", backtest_args.rank_features,
                 "Rank-transform features per group before scoring (model and protocol modes)");
    auto* om = bk->add_option("--model", backtest_args.model, "Score with this saved model");
    auto* os = bk->add_option("--score-col", backtest_args.score_col,
                              "Use this feature column as the score");
    auto* op = bk->add_flag("--protocol", backtest_args.protocol,
                            "Rolling-window fit/predict protocol");
    om->excludes(os);
    om->excludes(op);
    os->excludes(op);
    bk->add_option("--ndcg-k", backtest_args.ndcg_k, "NDCG truncation depth");
    bk->add_option("--train-len", backtest_args.train_len, "Rolling window: training groups");
    bk->add_option("--valid-len", backtest_args.valid_len, "Rolling window: validation groups");
    bk->add_option("--test-len", backtest_args.test_len, "Rolling window: test groups");
    bk->add_option("--step", backtest_args.step, "Rolling window stride (0: test-len)");
    bk->add_option("--seed", backtest_args.seed, "Training seed (protocol mode)");
    bk->add_option("--objective", backtest_args.obj.objective,
                   "Objective: mse, pairwise, ndcg, rankic");
    add_objective_shape_flags(bk, backtest_args.obj);
    add_train_flags(bk, backtest_args.tf);
    bk->add_flag("--svg", backtest_args.svg, "Also render cumulative.svg");
    add_common_flags(bk, backtest_args.common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }

    try {
        if (*sim) return run_simulate(sim, sim_dgp, sim_common);
        if (*tr) return run_train(tr, train_args);
        if (*pr) return run_predict(predict_args);
        if (*be) return run_benchmark(be, bench_args);
        if (*bk) return run_backtest(bk, backtest_args);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
