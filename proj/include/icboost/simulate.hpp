#pragma once

// Synthetic panel generator: y = beta' x + noise with iid standard normal
// features, a fixed unit-norm coefficient vector shared by all periods, and
// optional Gaussian or heavy-tailed Student-t noise scaled so the realized
// signal-to-noise ratio Var(signal)/Var(noise) hits a target. Every period
// draws from its own derived random stream, so growing the panel appends
// periods without disturbing the ones already generated.

#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "icboost/dataset.hpp"

namespace icboost {

enum class NoiseKind { None, Gaussian, StudentT };

NoiseKind noise_from_string(const std::string& name);  // none | gaussian | student-t
std::string to_string(NoiseKind kind);

struct DGPConfig {
    std::size_t periods = 120;          // T groups, labeled "0".."T-1"
    std::size_t items_per_period = 500; // N rows per group
    std::size_t num_features = 10;      // p
    NoiseKind noise = NoiseKind::None;
    double t_dof = 5.0;                 // Student-t only; must be > 2
    std::optional<double> snr_target;   // absent with noise: unit-scale noise
    std::size_t train_periods = 80;     // advisory split carried in metadata
    std::uint64_t seed = 0;
    void validate() const;
};

struct SimPanel {
    GroupedDataset dataset;
    std::vector<double> beta;           // unit norm
    std::optional<double> realized_snr; // absent for noiseless panels
    DGPConfig config;
};

SimPanel gen_linear_panel(const DGPConfig& cfg);

// Scale c with Var(c * raw_noise) = Var(signal) / snr_target (population
// variances). Throws if the signal or the raw noise has zero variance.
double calibrate_noise_scale(std::span<const double> signal, double snr_target,
                             std::span<const double> raw_noise);

// Student-t draws on their natural scale (variance dof/(dof-2)); dof must
// exceed 2 so that variance exists.
std::vector<double> student_t_noise(std::size_t count, double dof, std::uint64_t seed);

double population_variance(std::span<const double> values);

// panel.csv (columns: group,label,f000..) plus a JSON sidecar recording seed,
// config, beta, realized SNR and the generator identifier.
void save_panel(const SimPanel& panel, const std::string& csv_path,
                const std::string& meta_path);

}  // namespace icboost
