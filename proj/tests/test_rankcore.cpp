#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "helpers.hpp"
#include "icboost/random.hpp"
#include "icboost/rankcore.hpp"

using namespace icboost;
using testutil::brute_force_desc_ranks;
using testutil::make_group;
using testutil::pearson;

namespace {

// Random permutation of 1..n.
std::vector<std::int32_t> random_permutation(std::size_t n, rng::Rng& r) {
    std::vector<std::int32_t> p(n);
    std::iota(p.begin(), p.end(), 1);
    for (std::size_t i = n; i > 1; --i)
        std::swap(p[i - 1], p[r.uniform_below(static_cast<std::uint64_t>(i))]);
    return p;
}

double dcg_of(const std::vector<int>& grades, const std::vector<std::int32_t>& positions) {
    double dcg = 0.0;
    for (std::size_t i = 0; i < grades.size(); ++i)
        dcg += (std::exp2(grades[i]) - 1.0) / std::log2(1.0 + positions[i]);
    return dcg;
}

}  // namespace

TEST_CASE("predicted_ranks sorts descending, rank 1 for the top score") {
    auto pr = predicted_ranks(std::vector<double>{0.1, 0.9, 0.5});
    CHECK(pr.ranks == std::vector<std::int32_t>{3, 1, 2});
}

TEST_CASE("predicted_ranks breaks ties by item index") {
    std::vector<double> scores{1.0, 1.0, 1.0};
    std::vector<std::int32_t> idx{0, 1, 2};
    auto pr = predicted_ranks(scores, idx);
    CHECK(pr.ranks == std::vector<std::int32_t>{1, 2, 3});
}

TEST_CASE("predicted_ranks matches an argsort oracle on 500 random scores") {
    rng::Rng r(rng::substream(7, 1));
    std::vector<double> scores(500);
    for (auto& s : scores) s = r.normal();
    auto pr = predicted_ranks(scores);
    CHECK(pr.ranks == brute_force_desc_ranks(scores));
}

TEST_CASE("predicted_ranks rejects NaN scores") {
    std::vector<double> scores{1.0, std::numeric_limits<double>::quiet_NaN()};
    CHECK_THROWS_AS(predicted_ranks(scores), std::invalid_argument);
}

TEST_CASE("rank_variance is (n^2 - 1) / 12") {
    CHECK(rank_variance(3) == doctest::Approx(8.0 / 12.0));
    CHECK(rank_variance(2) == doctest::Approx(0.25));
    // Direct population variance of 1..100.
    double mean = 50.5, ss = 0.0;
    for (int i = 1; i <= 100; ++i) ss += (i - mean) * (i - mean);
    CHECK(rank_variance(100) == doctest::Approx(ss / 100.0).epsilon(1e-14));
    CHECK_THROWS_AS(rank_variance(1), std::invalid_argument);
}

TEST_CASE("spearman_rho is exactly +/-1 on identity and reversal") {
    std::vector<std::int32_t> up{1, 2, 3, 4};
    std::vector<std::int32_t> down{4, 3, 2, 1};
    CHECK(spearman_rho(up, up) == 1.0);
    CHECK(spearman_rho(down, up) == -1.0);
}

TEST_CASE("spearman_rho equals Pearson correlation of the rank vectors") {
    rng::Rng r(rng::substream(7, 2));
    for (int rep = 0; rep < 50; ++rep) {
        auto a = random_permutation(50, r);
        auto b = random_permutation(50, r);
        std::vector<double> da(a.begin(), a.end()), db(b.begin(), b.end());
        CHECK(spearman_rho(a, b) == doctest::Approx(pearson(da, db)).epsilon(1e-12));
    }
}

TEST_CASE("spearman_rho validates its inputs") {
    std::vector<std::int32_t> a{1, 2, 3}, b{1, 2};
    CHECK_THROWS_AS(spearman_rho(a, b), std::invalid_argument);
    std::vector<std::int32_t> one{1};
    CHECK_THROWS_AS(spearman_rho(one, one), std::invalid_argument);
}

TEST_CASE("delta_rank_ic closed form on pinned examples") {
    // Top and bottom of a perfectly ranked 3-item group: rho flips 1 -> -1.
    CHECK(delta_rank_ic(1, 3, 1, 3, 3) == doctest::Approx(2.0));
    // Adjacent swap with unit gaps in a 10-item group.
    CHECK(delta_rank_ic(4, 5, 7, 8, 10) == doctest::Approx(12.0 / 990.0));
    // n = 2 has a single possible swap and rho flips sign.
    CHECK(delta_rank_ic(1, 2, 1, 2, 2) == doctest::Approx(2.0));
    // Symmetric in the pair.
    CHECK(delta_rank_ic(2, 5, 1, 4, 9) == delta_rank_ic(5, 2, 4, 1, 9));
    CHECK_THROWS_AS(delta_rank_ic(1, 1, 1, 1, 1), std::invalid_argument);
}

TEST_CASE("delta_rank_ic equals the recomputed rho change for random swaps") {
    rng::Rng r(rng::substream(7, 3));
    for (int rep = 0; rep < 300; ++rep) {
        std::size_t n = 2 + r.uniform_below(49);
        auto pred = random_permutation(n, r);
        auto labels = random_permutation(n, r);
        std::size_t i = r.uniform_below(n);
        std::size_t j = r.uniform_below(n);
        if (i == j) j = (j + 1) % n;
        double before = spearman_rho(pred, labels);
        std::vector<std::int32_t> swapped = pred;
        std::swap(swapped[i], swapped[j]);
        double after = spearman_rho(swapped, labels);
        double expected = std::fabs(after - before);
        double got = delta_rank_ic(pred[i], pred[j], labels[i], labels[j], n);
        CHECK(got == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("delta_ndcg vanishes on equal gains or equal discounts") {
    CHECK(delta_ndcg(3.0, 3.0, 1, 5, 2.0) == 0.0);
    CHECK(delta_ndcg(3.0, 1.0, 4, 4, 2.0) == 0.0);
    CHECK_THROWS_AS(delta_ndcg(1.0, 0.0, 1, 2, 0.0), std::invalid_argument);
}

TEST_CASE("delta_ndcg equals the recomputed NDCG change for a position swap") {
    rng::Rng r(rng::substream(7, 4));
    for (int rep = 0; rep < 200; ++rep) {
        std::size_t n = 2 + r.uniform_below(30);
        std::vector<int> grades(n);
        for (auto& g : grades) g = static_cast<int>(r.uniform_below(6));
        if (std::all_of(grades.begin(), grades.end(), [](int g) { return g == 0; }))
            grades[0] = 1;
        auto positions = random_permutation(n, r);
        double idcg = ideal_dcg(grades, n);
        REQUIRE(idcg > 0.0);
        std::size_t i = r.uniform_below(n);
        std::size_t j = r.uniform_below(n);
        if (i == j) continue;
        auto swapped = positions;
        std::swap(swapped[i], swapped[j]);
        double expected = std::fabs(dcg_of(grades, swapped) - dcg_of(grades, positions)) / idcg;
        double got = delta_ndcg(grades[i], grades[j], positions[i], positions[j], idcg);
        CHECK(got == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("ndcg_at_k is 1 for perfect orderings and degenerate grades") {
    std::vector<double> scores{4.0, 3.0, 2.0, 1.0};
    std::vector<int> grades{3, 2, 1, 0};
    CHECK(ndcg_at_k(scores, grades, 4) == doctest::Approx(1.0));
    CHECK(ndcg_at_k(scores, grades, 1) == doctest::Approx(1.0));
    std::vector<int> zeros{0, 0, 0};
    std::vector<double> s3{1.0, 2.0, 3.0};
    CHECK(ndcg_at_k(s3, zeros, 2) == 1.0);
}

TEST_CASE("ndcg_at_k matches a hand-computed worst-order ratio") {
    // Grades reversed relative to scores: item order by score is g=0,1,2,3.
    std::vector<double> scores{4.0, 3.0, 2.0, 1.0};
    std::vector<int> grades{0, 1, 2, 3};
    double dcg = 0.0, idcg = 0.0;
    std::vector<int> by_score{0, 1, 2, 3};
    std::vector<int> ideal{3, 2, 1, 0};
    for (int pos = 1; pos <= 4; ++pos) {
        dcg += (std::exp2(by_score[pos - 1]) - 1.0) / std::log2(1.0 + pos);
        idcg += (std::exp2(ideal[pos - 1]) - 1.0) / std::log2(1.0 + pos);
    }
    CHECK(ndcg_at_k(scores, grades, 4) == doctest::Approx(dcg / idcg).epsilon(1e-12));
}

TEST_CASE("ndcg_at_k is invariant to strictly monotone score transforms") {
    rng::Rng r(rng::substream(7, 5));
    std::vector<double> scores(40);
    for (auto& s : scores) s = r.normal();
    std::vector<int> grades(40);
    for (auto& g : grades) g = static_cast<int>(r.uniform_below(8));
    std::vector<double> squashed(40);
    for (std::size_t i = 0; i < 40; ++i) squashed[i] = std::tanh(scores[i]) * 3.0 + 10.0;
    CHECK(ndcg_at_k(scores, grades, 40) == ndcg_at_k(squashed, grades, 40));
    CHECK(ndcg_at_k(scores, grades, 10) == ndcg_at_k(squashed, grades, 10));
}

TEST_CASE("rank_ic_loss is the exact complement of spearman_rho") {
    Group aligned = make_group("g", {3.0, 2.0, 1.0});
    auto lr = label_ranks(aligned);
    CHECK(rank_ic_loss(std::vector<double>{3.0, 2.0, 1.0}, lr) == 0.0);
    CHECK(rank_ic_loss(std::vector<double>{1.0, 2.0, 3.0}, lr) == doctest::Approx(2.0));

    rng::Rng r(rng::substream(7, 6));
    for (int rep = 0; rep < 100; ++rep) {
        std::size_t n = 2 + r.uniform_below(99);
        std::vector<double> labels(n), scores(n);
        for (auto& v : labels) v = r.normal();
        for (auto& v : scores) v = r.normal();
        Group g = make_group("g", labels);
        auto ranks = label_ranks(g);
        double loss = rank_ic_loss(scores, ranks);
        double rho = spearman_rho(predicted_ranks(scores), ranks);
        CHECK(loss == doctest::Approx(1.0 - rho).epsilon(1e-12));
    }
}

TEST_CASE("rank_ic_loss rejects tied scores") {
    Group g = make_group("g", {1.0, 2.0, 3.0});
    auto lr = label_ranks(g);
    CHECK_THROWS_AS(rank_ic_loss(std::vector<double>{5.0, 5.0, 1.0}, lr),
                    std::invalid_argument);
}

TEST_CASE("lambda_rank_ic_loss pinned values for n = 2") {
    Group g = make_group("g", {2.0, 1.0});
    auto lr = label_ranks(g);
    // Aligned with a huge gap: the logistic tail kills the loss.
    CHECK(lambda_rank_ic_loss(std::vector<double>{30.0, 0.0}, lr) < 1e-6);
    // Tied scores: delta = 2, log2(1 + e^0) = 1.
    CHECK(lambda_rank_ic_loss(std::vector<double>{0.0, 0.0}, lr) == doctest::Approx(2.0));
}

TEST_CASE("logistic_surrogate_loss pinned value for all-equal scores, n = 3") {
    Group g = make_group("g", {3.0, 2.0, 1.0});
    auto lr = label_ranks(g);
    // (12/24) * sum of label-rank gaps (1 + 2 + 1) * log2(2).
    CHECK(logistic_surrogate_loss(std::vector<double>{0.0, 0.0, 0.0}, lr) ==
          doctest::Approx(2.0));
    CHECK(logistic_surrogate_loss(std::vector<double>{60.0, 30.0, 0.0}, lr) < 1e-6);
}

TEST_CASE("loss sandwich holds exactly on tie-free instances") {
    rng::Rng r(rng::substream(7, 7));
    for (int rep = 0; rep < 200; ++rep) {
        std::size_t n = 2 + r.uniform_below(40);
        std::vector<double> labels(n), scores(n);
        for (auto& v : labels) v = r.normal();
        for (auto& v : scores) v = r.normal();
        Group g = make_group("g", labels);
        auto ranks = label_ranks(g);
        double complement = rank_ic_loss(scores, ranks);
        double surrogate = logistic_surrogate_loss(scores, ranks);
        double lambda = lambda_rank_ic_loss(scores, ranks);
        CHECK(complement <= surrogate);
        CHECK(surrogate <= lambda);
    }
}

TEST_CASE("SigmoidShape rejects non-positive sigma") {
    CHECK_THROWS_AS(SigmoidShape(0.0), std::invalid_argument);
    CHECK_THROWS_AS(SigmoidShape(-1.0), std::invalid_argument);
    CHECK(SigmoidShape(2.5).sigma == 2.5);
}
