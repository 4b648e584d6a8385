#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "icboost/errors.hpp"
#include "icboost/random.hpp"
#include "icboost/simulate.hpp"

using namespace icboost;

namespace {

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / name;
}

// Ordinary least squares via normal equations and Gauss elimination with
// partial pivoting; independent of anything in the library.
std::vector<double> solve_ls(const std::vector<std::vector<double>>& rows,
                             const std::vector<double>& y) {
    const std::size_t p = rows[0].size();
    std::vector<std::vector<double>> a(p, std::vector<double>(p + 1, 0.0));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t i = 0; i < p; ++i) {
            for (std::size_t j = 0; j < p; ++j) a[i][j] += rows[r][i] * rows[r][j];
            a[i][p] += rows[r][i] * y[r];
        }
    for (std::size_t col = 0; col < p; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < p; ++r)
            if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
        std::swap(a[col], a[pivot]);
        for (std::size_t r = col + 1; r < p; ++r) {
            double m = a[r][col] / a[col][col];
            for (std::size_t j = col; j <= p; ++j) a[r][j] -= m * a[col][j];
        }
    }
    std::vector<double> b(p, 0.0);
    for (std::size_t i = p; i-- > 0;) {
        double acc = a[i][p];
        for (std::size_t j = i + 1; j < p; ++j) acc -= a[i][j] * b[j];
        b[i] = acc / a[i][i];
    }
    return b;
}

double sample_moment(const std::vector<double>& v, int order) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double m = 0.0;
    for (double x : v) m += std::pow(x - mean, order);
    return m / static_cast<double>(v.size());
}

}  // namespace

TEST_CASE("noiseless labels are an exact linear model recoverable by least squares") {
    DGPConfig cfg;
    cfg.periods = 3;
    cfg.items_per_period = 50;
    cfg.num_features = 4;
    cfg.seed = 11;
    SimPanel panel = gen_linear_panel(cfg);

    std::vector<std::vector<double>> rows;
    std::vector<double> y;
    for (const auto& g : panel.dataset.groups)
        for (std::size_t i = 0; i < g.n; ++i) {
            auto r = g.row(i);
            rows.emplace_back(r.begin(), r.end());
            y.push_back(g.labels[i]);
        }
    auto b = solve_ls(rows, y);
    REQUIRE(b.size() == panel.beta.size());
    for (std::size_t f = 0; f < b.size(); ++f)
        CHECK(b[f] == doctest::Approx(panel.beta[f]).epsilon(1e-10));
}

TEST_CASE("the coefficient vector has unit norm and ignores the panel length") {
    DGPConfig cfg;
    cfg.periods = 2;
    cfg.items_per_period = 10;
    cfg.num_features = 7;
    cfg.seed = 3;
    SimPanel a = gen_linear_panel(cfg);
    double norm_sq = 0.0;
    for (double v : a.beta) norm_sq += v * v;
    CHECK(std::sqrt(norm_sq) == doctest::Approx(1.0).epsilon(1e-12));

    cfg.periods = 5;
    SimPanel b = gen_linear_panel(cfg);
    CHECK(a.beta == b.beta);
}

TEST_CASE("gaussian noise hits the requested signal-to-noise ratio") {
    DGPConfig cfg;
    cfg.periods = 6;
    cfg.items_per_period = 200;
    cfg.num_features = 5;
    cfg.noise = NoiseKind::Gaussian;
    cfg.snr_target = 0.1;
    cfg.seed = 4;
    SimPanel panel = gen_linear_panel(cfg);
    REQUIRE(panel.realized_snr.has_value());
    CHECK(*panel.realized_snr == doctest::Approx(0.1).epsilon(1e-10));
}

TEST_CASE("one seed always generates the same panel") {
    DGPConfig cfg;
    cfg.periods = 4;
    cfg.items_per_period = 30;
    cfg.num_features = 3;
    cfg.noise = NoiseKind::StudentT;
    cfg.snr_target = 0.5;
    cfg.seed = 99;
    SimPanel a = gen_linear_panel(cfg);
    SimPanel b = gen_linear_panel(cfg);
    CHECK(a.beta == b.beta);
    for (std::size_t t = 0; t < cfg.periods; ++t) {
        CHECK(a.dataset.groups[t].features == b.dataset.groups[t].features);
        CHECK(a.dataset.groups[t].labels == b.dataset.groups[t].labels);
    }
}

TEST_CASE("extending the panel appends periods without touching earlier ones") {
    DGPConfig cfg;
    cfg.periods = 3;
    cfg.items_per_period = 25;
    cfg.num_features = 4;
    cfg.noise = NoiseKind::Gaussian;  // unit noise scale: no panel-wide calibration
    cfg.seed = 7;
    SimPanel small = gen_linear_panel(cfg);
    cfg.periods = 6;
    SimPanel big = gen_linear_panel(cfg);
    for (std::size_t t = 0; t < 3; ++t) {
        CHECK(small.dataset.groups[t].features == big.dataset.groups[t].features);
        CHECK(small.dataset.groups[t].labels == big.dataset.groups[t].labels);
    }
}

TEST_CASE("noise scale calibration solves for the target variance ratio") {
    std::vector<double> sig1{-1.0, 1.0};
    std::vector<double> raw1{-1.0, 1.0};
    CHECK(calibrate_noise_scale(sig1, 2.0, raw1) == doctest::Approx(std::sqrt(0.5)));
    std::vector<double> sig4{-2.0, 2.0};
    CHECK(calibrate_noise_scale(sig4, 0.5, raw1) == doctest::Approx(std::sqrt(8.0)));

    rng::Rng r(rng::substream(13, 0));
    std::vector<double> sig(400), raw(400);
    for (auto& v : sig) v = 3.0 * r.normal() + 1.0;
    for (auto& v : raw) v = 0.7 * r.normal();
    double c = calibrate_noise_scale(sig, 0.25, raw);
    std::vector<double> scaled(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) scaled[i] = c * raw[i];
    CHECK(population_variance(sig) / population_variance(scaled) ==
          doctest::Approx(0.25).epsilon(1e-10));

    std::vector<double> flat{2.0, 2.0, 2.0};
    CHECK_THROWS_AS(calibrate_noise_scale(flat, 1.0, raw1), DataError);
    CHECK_THROWS_AS(calibrate_noise_scale(sig1, 1.0, flat), DataError);
    CHECK_THROWS_AS(calibrate_noise_scale(sig1, 0.0, raw1), std::invalid_argument);
}

TEST_CASE("student-t draws have the textbook variance and normal limit") {
    auto t5 = student_t_noise(200000, 5.0, 17);
    CHECK(sample_moment(t5, 2) == doctest::Approx(5.0 / 3.0).epsilon(0.05));

    // Huge dof approaches a standard normal; excess kurtosis dies out.
    auto tn = student_t_noise(400000, 1e6, 17);
    double var = sample_moment(tn, 2);
    double kurt = sample_moment(tn, 4) / (var * var);
    CHECK(var == doctest::Approx(1.0).epsilon(0.02));
    CHECK(kurt == doctest::Approx(3.0).epsilon(0.02));

    auto again = student_t_noise(1000, 5.0, 17);
    std::vector<double> head(t5.begin(), t5.begin() + 1000);
    CHECK(again == head);

    CHECK_THROWS_AS(student_t_noise(10, 2.0, 0), std::invalid_argument);
}

TEST_CASE("generator config validation") {
    DGPConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    DGPConfig bad = cfg;
    bad.periods = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg;
    bad.snr_target = 0.1;  // noise kind still None
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg;
    bad.noise = NoiseKind::StudentT;
    bad.t_dof = 2.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg;
    bad.noise = NoiseKind::Gaussian;
    bad.snr_target = -1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("noise kind names round-trip and reject unknowns") {
    for (const char* name : {"none", "gaussian", "student-t"})
        CHECK(to_string(noise_from_string(name)) == name);
    CHECK_THROWS_AS(noise_from_string("laplace"), std::invalid_argument);
}

TEST_CASE("saved panels round-trip through csv and carry full metadata") {
    DGPConfig cfg;
    cfg.periods = 2;
    cfg.items_per_period = 8;
    cfg.num_features = 3;
    cfg.noise = NoiseKind::Gaussian;
    cfg.snr_target = 0.5;
    cfg.seed = 23;
    SimPanel panel = gen_linear_panel(cfg);
    auto csv = temp_file("icboost_test_panel.csv");
    auto meta = temp_file("icboost_test_panel.meta.json");
    save_panel(panel, csv.string(), meta.string());

    GroupedDataset loaded = load_csv(csv.string());
    REQUIRE(loaded.num_groups() == 2);
    CHECK(loaded.feature_names == panel.dataset.feature_names);
    for (std::size_t t = 0; t < 2; ++t) {
        CHECK(loaded.groups[t].labels == panel.dataset.groups[t].labels);
        CHECK(loaded.groups[t].features == panel.dataset.groups[t].features);
    }

    std::ifstream meta_in(meta);
    auto j = nlohmann::json::parse(meta_in);
    CHECK(j.at("seed").get<std::uint64_t>() == 23);
    CHECK(j.at("generator_id").get<std::string>() == rng::kGeneratorId);
    CHECK(j.at("beta").size() == 3);
    CHECK(j.at("realized_snr").is_number());
    CHECK(j.at("config").at("noise").get<std::string>() == "gaussian");
    CHECK(j.at("config").at("snr_target").get<double>() == 0.5);
    CHECK(j.at("config").at("train_periods").get<std::size_t>() == 80);

    std::filesystem::remove(csv);
    std::filesystem::remove(meta);
}
