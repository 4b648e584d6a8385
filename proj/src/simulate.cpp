#include "icboost/simulate.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "icboost/errors.hpp"
#include "icboost/random.hpp"

namespace icboost {

namespace {

constexpr std::uint64_t kTagBeta = 0xbe7a;
constexpr std::uint64_t kTagFeatures = 0xfea7;
constexpr std::uint64_t kTagNoise = 0x0153;

}  // namespace

NoiseKind noise_from_string(const std::string& name) {
    if (name == "none") return NoiseKind::None;
    if (name == "gaussian") return NoiseKind::Gaussian;
    if (name == "student-t") return NoiseKind::StudentT;
    throw std::invalid_argument("unknown noise kind '" + name +
                                "' (expected none, gaussian or student-t)");
}

std::string to_string(NoiseKind kind) {
    switch (kind) {
        case NoiseKind::None: return "none";
        case NoiseKind::Gaussian: return "gaussian";
        case NoiseKind::StudentT: return "student-t";
    }
    return "?";
}

void DGPConfig::validate() const {
    if (periods < 1) throw std::invalid_argument("dgp: periods must be >= 1");
    if (items_per_period < 1) throw std::invalid_argument("dgp: items_per_period must be >= 1");
    if (num_features < 1) throw std::invalid_argument("dgp: num_features must be >= 1");
    if (noise == NoiseKind::StudentT && !(t_dof > 2.0))
        throw std::invalid_argument("dgp: student-t dof must be > 2 for finite variance");
    if (snr_target && !(*snr_target > 0.0))
        throw std::invalid_argument("dgp: snr_target must be positive");
    if (snr_target && noise == NoiseKind::None)
        throw std::invalid_argument("dgp: snr_target needs a noise kind");
}

double population_variance(std::span<const double> values) {
    const std::size_t n = values.size();
    if (n == 0) throw std::invalid_argument("population_variance: empty input");
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return ss / static_cast<double>(n);
}

double calibrate_noise_scale(std::span<const double> signal, double snr_target,
                             std::span<const double> raw_noise) {
    if (!(snr_target > 0.0))
        throw std::invalid_argument("calibrate_noise_scale: snr_target must be positive");
    const double var_signal = population_variance(signal);
    const double var_noise = population_variance(raw_noise);
    if (var_signal == 0.0)
        throw DataError("calibrate_noise_scale: signal has zero variance");
    if (var_noise == 0.0)
        throw DataError("calibrate_noise_scale: raw noise has zero variance");
    return std::sqrt(var_signal / (snr_target * var_noise));
}

std::vector<double> student_t_noise(std::size_t count, double dof, std::uint64_t seed) {
    if (!(dof > 2.0))
        throw std::invalid_argument("student_t_noise: dof must be > 2 for finite variance");
    rng::Rng r(rng::substream(seed, kTagNoise, 0));
    std::vector<double> out(count);
    for (auto& v : out) v = r.student_t(dof);
    return out;
}

SimPanel gen_linear_panel(const DGPConfig& cfg) {
    cfg.validate();
    const std::size_t T = cfg.periods, N = cfg.items_per_period, p = cfg.num_features;

    SimPanel panel;
    panel.config = cfg;

    // One coefficient vector for the whole panel, on its own stream.
    {
        rng::Rng r(rng::substream(cfg.seed, kTagBeta, 0));
        panel.beta.resize(p);
        double norm_sq = 0.0;
        for (auto& b : panel.beta) {
            b = r.normal();
            norm_sq += b * b;
        }
        if (norm_sq == 0.0) throw DataError("gen_linear_panel: degenerate beta draw");
        const double inv_norm = 1.0 / std::sqrt(norm_sq);
        for (auto& b : panel.beta) b *= inv_norm;
    }

    GroupedDataset& ds = panel.dataset;
    ds.num_features = p;
    ds.feature_names.resize(p);
    for (std::size_t f = 0; f < p; ++f) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "f%03u", static_cast<unsigned>(f));
        ds.feature_names[f] = buf;
    }

    std::vector<double> signal(T * N);
    std::vector<double> raw_noise;
    if (cfg.noise != NoiseKind::None) raw_noise.resize(T * N);

    ds.groups.resize(T);
    for (std::size_t t = 0; t < T; ++t) {
        Group& g = ds.groups[t];
        g.id = std::to_string(t);
        g.n = N;
        g.num_features = p;
        g.features.resize(N * p);
        g.labels.resize(N);
        g.item_index.resize(N);
        for (std::size_t i = 0; i < N; ++i) g.item_index[i] = static_cast<std::int32_t>(i);

        rng::Rng rf(rng::substream(cfg.seed, kTagFeatures, static_cast<std::uint64_t>(t)));
        for (auto& x : g.features) x = rf.normal();
        for (std::size_t i = 0; i < N; ++i) {
            double dot = 0.0;
            const double* row = g.features.data() + i * p;
            for (std::size_t f = 0; f < p; ++f) dot += panel.beta[f] * row[f];
            signal[t * N + i] = dot;
        }
        if (cfg.noise != NoiseKind::None) {
            rng::Rng rn(rng::substream(cfg.seed, kTagNoise, static_cast<std::uint64_t>(t)));
            for (std::size_t i = 0; i < N; ++i)
                raw_noise[t * N + i] = cfg.noise == NoiseKind::Gaussian
                                           ? rn.normal()
                                           : rn.student_t(cfg.t_dof);
        }
    }

    if (cfg.noise == NoiseKind::None) {
        for (std::size_t t = 0; t < T; ++t)
            for (std::size_t i = 0; i < N; ++i) ds.groups[t].labels[i] = signal[t * N + i];
        panel.realized_snr = std::nullopt;
    } else {
        // The scale is panel-wide; per-period streams stay untouched by T.
        double scale = 1.0;
        if (cfg.snr_target) scale = calibrate_noise_scale(signal, *cfg.snr_target, raw_noise);
        std::vector<double> noise(T * N);
        for (std::size_t k = 0; k < noise.size(); ++k) noise[k] = scale * raw_noise[k];
        for (std::size_t t = 0; t < T; ++t)
            for (std::size_t i = 0; i < N; ++i)
                ds.groups[t].labels[i] = signal[t * N + i] + noise[t * N + i];
        panel.realized_snr = population_variance(signal) / population_variance(noise);
    }
    return panel;
}

void save_panel(const SimPanel& panel, const std::string& csv_path,
                const std::string& meta_path) {
    save_csv(panel.dataset, csv_path);

    nlohmann::json meta{
        {"seed", panel.config.seed},
        {"generator_id", rng::kGeneratorId},
        {"beta", panel.beta},
        {"realized_snr",
         panel.realized_snr ? nlohmann::json(*panel.realized_snr) : nlohmann::json(nullptr)},
        {"config",
         {{"periods", panel.config.periods},
          {"items_per_period", panel.config.items_per_period},
          {"num_features", panel.config.num_features},
          {"noise", to_string(panel.config.noise)},
          {"t_dof", panel.config.t_dof},
          {"snr_target", panel.config.snr_target ? nlohmann::json(*panel.config.snr_target)
                                                 : nlohmann::json(nullptr)},
          {"train_periods", panel.config.train_periods}}}};
    std::ofstream out(meta_path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + meta_path);
    out << meta.dump(2) << '\n';
    if (!out) throw DataError("write failed: " + meta_path);
}

}  // namespace icboost
