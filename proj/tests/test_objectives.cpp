#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "helpers.hpp"
#include "icboost/objectives.hpp"
#include "icboost/random.hpp"
#include "icboost/rankcore.hpp"

using namespace icboost;
using testutil::make_group;

namespace {

Group random_group(std::size_t n, rng::Rng& r) {
    std::vector<double> labels(n);
    for (auto& v : labels) v = r.normal();
    return make_group("g", labels);
}

std::vector<double> random_scores(std::size_t n, rng::Rng& r) {
    std::vector<double> s(n);
    for (auto& v : s) v = r.normal();
    return s;
}

// Independent re-accumulation of the documented pair rule, driven entirely by
// the public swap-delta formulas.
GradHessVector pair_oracle(const Group& g, const LabelRanks& lr,
                           const std::vector<double>& scores, ObjectiveKind kind,
                           const ObjectiveConfig& cfg) {
    const std::size_t n = g.n;
    auto pred = predicted_ranks(scores, g.item_index);
    std::vector<int> grades;
    double idcg = 0.0;
    if (kind == ObjectiveKind::LambdaNDCG) {
        grades = labels_to_relevance_grades(lr, cfg.ndcg_relevance_grades);
        idcg = ideal_dcg(grades, n);
    }
    GradHessVector out;
    out.g.assign(n, 0.0);
    out.h.assign(n, 0.0);
    const double sigma = cfg.sigma.sigma;
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            std::size_t hi = a, lo = b;
            if (lr.ranks[hi] > lr.ranks[lo]) std::swap(hi, lo);
            double delta = 1.0;
            if (kind == ObjectiveKind::LambdaRankIC)
                delta = delta_rank_ic(pred.ranks[hi], pred.ranks[lo], lr.ranks[hi],
                                      lr.ranks[lo], n);
            else if (kind == ObjectiveKind::LambdaNDCG)
                delta = delta_ndcg(grades[hi], grades[lo], pred.ranks[hi], pred.ranks[lo],
                                   idcg);
            const double margin = sigma * (scores[hi] - scores[lo]);
            const double p = 1.0 / (1.0 + std::exp(-margin));
            out.g[hi] -= sigma * (1.0 - p) * delta;
            out.g[lo] += sigma * (1.0 - p) * delta;
            out.h[hi] += 2.0 * sigma * sigma * p * (1.0 - p) * delta;
            out.h[lo] += 2.0 * sigma * sigma * p * (1.0 - p) * delta;
        }
    }
    for (auto& h : out.h) h = std::max(h, cfg.hessian_floor);
    if (g.has_weights())
        for (std::size_t i = 0; i < n; ++i) {
            out.g[i] *= g.weights[i];
            out.h[i] *= g.weights[i];
        }
    return out;
}

}  // namespace

TEST_CASE("squared error gradients are residuals with unit curvature") {
    std::vector<double> y{0.4, -1.2, 3.0};
    auto gh = grad_hess_squared_error(y, y);
    for (double v : gh.g) CHECK(v == 0.0);
    for (double v : gh.h) CHECK(v == 1.0);

    auto gh2 = grad_hess_squared_error(std::vector<double>{1.0, 0.0},
                                       std::vector<double>{0.0, 0.0});
    CHECK(gh2.g == std::vector<double>{1.0, 0.0});
    CHECK(gh2.h == std::vector<double>{1.0, 1.0});

    CHECK_THROWS_AS(grad_hess_squared_error(std::vector<double>{1.0},
                                            std::vector<double>{1.0, 2.0}),
                    std::invalid_argument);
}

TEST_CASE("squared error gradient matches a central finite difference") {
    rng::Rng r(rng::substream(11, 0));
    std::vector<double> s = random_scores(8, r), y = random_scores(8, r);
    auto gh = grad_hess_squared_error(s, y);
    auto loss = [&](const std::vector<double>& v) {
        double total = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i)
            total += 0.5 * (v[i] - y[i]) * (v[i] - y[i]);
        return total;
    };
    const double eps = 1e-6;
    for (std::size_t i = 0; i < s.size(); ++i) {
        auto up = s, dn = s;
        up[i] += eps;
        dn[i] -= eps;
        CHECK(gh.g[i] == doctest::Approx((loss(up) - loss(dn)) / (2 * eps)).epsilon(1e-6));
    }
}

TEST_CASE("rank-ic lambda on a tied two-item group is the unit pair update") {
    Group g = make_group("g", {1.0, 0.0});
    auto lr = label_ranks(g);
    std::vector<double> scores{0.0, 0.0};
    auto gh = grad_hess_lambda(g, lr, scores, ObjectiveKind::LambdaRankIC, {});
    CHECK(gh.g[0] == doctest::Approx(-1.0));
    CHECK(gh.g[1] == doctest::Approx(1.0));
    CHECK(gh.h[0] == doctest::Approx(1.0));
    CHECK(gh.h[1] == doctest::Approx(1.0));
}

TEST_CASE("a correctly ordered pair with a huge margin gets a vanishing gradient") {
    Group g = make_group("g", {1.0, 0.0});
    auto lr = label_ranks(g);
    std::vector<double> scores{40.0, 0.0};
    auto gh = grad_hess_lambda(g, lr, scores, ObjectiveKind::LambdaRankIC, {});
    CHECK(std::fabs(gh.g[0]) < 1e-12);
    CHECK(std::fabs(gh.g[1]) < 1e-12);
    // The hessian collapses too, but never below its floor.
    CHECK(gh.h[0] >= 1e-16);
}

TEST_CASE("lambda gradients sum to zero over each unweighted group") {
    rng::Rng r(rng::substream(11, 1));
    for (ObjectiveKind kind : {ObjectiveKind::LambdaPairwise, ObjectiveKind::LambdaNDCG,
                               ObjectiveKind::LambdaRankIC}) {
        for (int rep = 0; rep < 20; ++rep) {
            std::size_t n = 2 + r.uniform_below(40);
            Group g = random_group(n, r);
            auto lr = label_ranks(g);
            auto scores = random_scores(n, r);
            auto gh = grad_hess_lambda(g, lr, scores, kind, {});
            double sum = 0.0;
            for (double v : gh.g) sum += v;
            CHECK(std::fabs(sum) < 1e-10);
            for (double v : gh.h) CHECK(v > 0.0);
        }
    }
}

TEST_CASE("lambda accumulation matches an independent pair-by-pair oracle") {
    rng::Rng r(rng::substream(11, 2));
    ObjectiveConfig cfg;
    cfg.sigma = SigmoidShape(1.7);
    for (ObjectiveKind kind : {ObjectiveKind::LambdaPairwise, ObjectiveKind::LambdaNDCG,
                               ObjectiveKind::LambdaRankIC}) {
        for (int rep = 0; rep < 10; ++rep) {
            std::size_t n = 2 + r.uniform_below(25);
            Group g = random_group(n, r);
            if (rep % 2 == 1) {
                g.weights.resize(n);
                for (auto& w : g.weights) w = 0.5 + r.uniform();
            }
            auto lr = label_ranks(g);
            auto scores = random_scores(n, r);
            auto gh = grad_hess_lambda(g, lr, scores, kind, cfg);
            auto expect = pair_oracle(g, lr, scores, kind, cfg);
            for (std::size_t i = 0; i < n; ++i) {
                CHECK(gh.g[i] == doctest::Approx(expect.g[i]).epsilon(1e-12));
                CHECK(gh.h[i] == doctest::Approx(expect.h[i]).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("one Newton step from tied scores orders items and descends the surrogate") {
    // The weighted lambda loss itself can rise across a step because its
    // rank-gap weights are re-read from the new predicted ranks; what a
    // useful step must do is beat the tied-score baseline of the unweighted
    // surrogate (exactly 2, every logistic term is 1) and correlate the new
    // ranking with the labels.
    rng::Rng r(rng::substream(11, 3));
    for (int rep = 0; rep < 10; ++rep) {
        std::size_t n = 3 + r.uniform_below(18);
        Group g = random_group(n, r);
        auto lr = label_ranks(g);
        std::vector<double> scores(n, 0.0);
        CHECK(logistic_surrogate_loss(scores, lr) == doctest::Approx(2.0));
        auto gh = grad_hess_lambda(g, lr, scores, ObjectiveKind::LambdaRankIC, {});
        for (std::size_t i = 0; i < n; ++i) scores[i] -= 0.1 * gh.g[i] / gh.h[i];
        CHECK(logistic_surrogate_loss(scores, lr) < 2.0);
        CHECK(spearman_rho(predicted_ranks(scores), lr) > 0.5);
    }
}

TEST_CASE("the most misordered pair dominates the rank-ic gradient") {
    // Scores exactly reverse the labels; the top-vs-bottom pair carries the
    // largest swap delta and the largest margin error.
    Group g = make_group("g", {1.0, 2.0, 3.0});
    auto lr = label_ranks(g);
    std::vector<double> scores{3.0, 2.0, 1.0};
    auto gh = grad_hess_lambda(g, lr, scores, ObjectiveKind::LambdaRankIC, {});
    CHECK(gh.g[2] < 0.0);      // most relevant, pushed up
    CHECK(gh.g[0] > 0.0);      // least relevant, pushed down
    CHECK(gh.g[0] == doctest::Approx(-gh.g[2]));
    CHECK(std::fabs(gh.g[1]) < 1e-12);  // symmetric middle item
    CHECK(std::fabs(gh.g[0]) > 1.5);    // dominated by the delta-2 outer pair
}

TEST_CASE("pairwise and rank-ic gradients depend on labels only through ranks") {
    Group a = make_group("g", {1.0, 2.0, 3.0, 4.0});
    Group b = make_group("g", {10.0, 200.0, 3000.0, 40000.0});
    auto la = label_ranks(a), lb = label_ranks(b);
    std::vector<double> scores{0.3, -0.2, 0.9, 0.1};
    for (ObjectiveKind kind : {ObjectiveKind::LambdaPairwise, ObjectiveKind::LambdaRankIC}) {
        auto ga = grad_hess_lambda(a, la, scores, kind, {});
        auto gb = grad_hess_lambda(b, lb, scores, kind, {});
        CHECK(ga.g == gb.g);
        CHECK(ga.h == gb.h);
    }
}

TEST_CASE("pair budget sampling is deterministic and falls back to full enumeration") {
    rng::Rng r(rng::substream(11, 4));
    Group g = random_group(30, r);
    auto lr = label_ranks(g);
    auto scores = random_scores(30, r);

    ObjectiveConfig cfg;
    cfg.pair_budget = 50;  // out of 435
    rng::Rng s1(rng::substream(99, 0)), s2(rng::substream(99, 0));
    auto a = grad_hess_lambda(g, lr, scores, ObjectiveKind::LambdaRankIC, cfg, &s1);
    auto b = grad_hess_lambda(g, lr, scores, ObjectiveKind::LambdaRankIC, cfg, &s2);
    CHECK(a.g == b.g);
    CHECK(a.h == b.h);

    // A budget at or above the pair count enumerates everything; no rng needed.
    ObjectiveConfig big;
    big.pair_budget = 435;
    auto full = grad_hess_lambda(g, lr, scores, ObjectiveKind::LambdaRankIC, {});
    auto capped = grad_hess_lambda(g, lr, scores, ObjectiveKind::LambdaRankIC, big);
    CHECK(full.g == capped.g);

    CHECK_THROWS_AS(grad_hess_lambda(g, lr, scores, ObjectiveKind::LambdaRankIC, cfg),
                    std::invalid_argument);
}

TEST_CASE("relevance grades bucket descending ranks evenly") {
    Group g4 = make_group("g", {4.0, 3.0, 2.0, 1.0});
    auto grades4 = labels_to_relevance_grades(label_ranks(g4), 4);
    CHECK(grades4 == std::vector<int>{3, 2, 1, 0});

    Group g8 = make_group("g", {8.0, 7.0, 6.0, 5.0, 4.0, 3.0, 2.0, 1.0});
    auto grades8 = labels_to_relevance_grades(label_ranks(g8), 4);
    CHECK(grades8 == std::vector<int>{3, 3, 2, 2, 1, 1, 0, 0});

    // More relevant items never grade below less relevant ones.
    rng::Rng r(rng::substream(11, 5));
    Group g = random_group(57, r);
    auto lr = label_ranks(g);
    auto grades = labels_to_relevance_grades(lr, 32);
    for (std::size_t i = 0; i < g.n; ++i)
        for (std::size_t j = 0; j < g.n; ++j)
            if (lr.ranks[i] < lr.ranks[j]) CHECK(grades[i] >= grades[j]);
    CHECK_THROWS_AS(labels_to_relevance_grades(lr, 0), std::invalid_argument);
}

TEST_CASE("objective names round-trip and reject unknowns") {
    for (const char* name : {"mse", "pairwise", "ndcg", "rankic"})
        CHECK(to_string(objective_from_string(name)) == name);
    CHECK_THROWS_WITH_AS(objective_from_string("huber"),
                         "unknown objective 'huber' (expected mse, pairwise, ndcg or rankic)",
                         std::invalid_argument);
}

TEST_CASE("objective config validation") {
    ObjectiveConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.hessian_floor = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.hessian_floor = 1e-16;
    cfg.ndcg_relevance_grades = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.ndcg_relevance_grades = 32;
    cfg.pair_budget = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
