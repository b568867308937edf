#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "tod/analysis.hpp"
#include "tod/rng.hpp"

using namespace tod;

namespace {

std::vector<DiscrepancyScore> make_scores(const std::vector<double>& values) {
    std::vector<DiscrepancyScore> scores;
    for (std::size_t i = 0; i < values.size(); ++i)
        scores.push_back({static_cast<int>(i), values[i]});
    return scores;
}

// O(n^2) average ranks: rank_i = (#smaller) + (#equal + 1) / 2. Independent
// of the sort-based implementation under test.
std::vector<double> brute_force_ranks(const std::vector<double>& v) {
    std::vector<double> ranks(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        int smaller = 0, equal = 0;
        for (std::size_t j = 0; j < v.size(); ++j) {
            if (v[j] < v[i]) ++smaller;
            if (v[j] == v[i]) ++equal;
        }
        ranks[i] = smaller + (equal + 1) / 2.0;
    }
    return ranks;
}

double brute_force_pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sa += a[i];
        sb += b[i];
        saa += a[i] * a[i];
        sbb += b[i] * b[i];
        sab += a[i] * b[i];
    }
    const double cov = sab / n - (sa / n) * (sb / n);
    const double va = saa / n - (sa / n) * (sa / n);
    const double vb = sbb / n - (sb / n) * (sb / n);
    return cov / std::sqrt(va * vb);
}

}  // namespace

TEST_CASE("spearman endpoints") {
    const std::vector<double> up = {1, 2, 3, 4, 5};
    const std::vector<double> up2 = {10, 20, 30, 40, 50};
    const std::vector<double> down = {5, 4, 3, 2, 1};
    CHECK(spearman(up, up2).value == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(spearman(up, down).value == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("spearman on constant input is explicitly undefined") {
    const std::vector<double> flat = {2, 2, 2, 2};
    const std::vector<double> other = {1, 2, 3, 4};
    const SpearmanResult r = spearman(flat, other);
    CHECK_FALSE(r.defined);
    CHECK_THROWS_AS(spearman({1.0}, {2.0}), ArgumentError);
    CHECK_THROWS_AS(spearman({1, 2}, {1, 2, 3}), ArgumentError);
}

TEST_CASE("spearman matches a brute-force rank-then-Pearson oracle") {
    Rng rng(77);
    for (int trial = 0; trial < 500; ++trial) {
        const int n = 3 + static_cast<int>(rng.below(40));
        std::vector<double> a(static_cast<std::size_t>(n)), b(static_cast<std::size_t>(n));
        for (double& v : a) v = rng.below(10) * 0.5;  // coarse values force ties
        for (double& v : b) v = rng.unit();
        const SpearmanResult r = spearman(a, b);
        const std::vector<double> ra = brute_force_ranks(a);
        if (*std::min_element(ra.begin(), ra.end()) == *std::max_element(ra.begin(), ra.end())) {
            CHECK_FALSE(r.defined);
            continue;
        }
        REQUIRE(r.defined);
        const double expected = brute_force_pearson(ra, brute_force_ranks(b));
        CHECK(r.value == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("bucket_mean_loss") {
    SUBCASE("perfect estimator splits high above low") {
        std::vector<double> losses = {0.9, 0.1, 0.7, 0.3, 0.5, 0.2};
        const BucketReport r = bucket_mean_loss(make_scores(losses), losses, 2);
        REQUIRE(r.buckets.size() == 2);
        CHECK(r.buckets[0].mean_loss > r.buckets[1].mean_loss);
        CHECK(r.buckets[0].count == 3);
        CHECK(r.buckets[1].count == 3);
        CHECK(r.buckets[0].top_fraction_lo == 0.0);
        CHECK(r.buckets[1].top_fraction_hi == 1.0);
    }
    SUBCASE("constant losses level every bucket") {
        Rng rng(5);
        std::vector<double> scores(30);
        for (double& v : scores) v = rng.unit();
        const std::vector<double> losses(30, 0.4);
        const BucketReport r = bucket_mean_loss(make_scores(scores), losses, 5);
        for (const Bucket& b : r.buckets) CHECK(b.mean_loss == doctest::Approx(0.4));
    }
    SUBCASE("matches a brute-force recomputation") {
        Rng rng(6);
        const int n = 47;
        std::vector<double> scores(static_cast<std::size_t>(n)), losses(static_cast<std::size_t>(n));
        for (double& v : scores) v = rng.unit();
        for (double& v : losses) v = rng.unit();
        const int nb = 5;
        const BucketReport r = bucket_mean_loss(make_scores(scores), losses, nb);

        // Oracle: pair, sort descending by score, walk buckets by count.
        std::vector<std::pair<double, double>> pairs;
        for (int i = 0; i < n; ++i)
            pairs.push_back({scores[static_cast<std::size_t>(i)], losses[static_cast<std::size_t>(i)]});
        std::sort(pairs.begin(), pairs.end(),
                  [](const auto& a, const auto& b) { return a.first > b.first; });
        std::size_t pos = 0;
        int total = 0;
        for (const Bucket& b : r.buckets) {
            double sum = 0.0;
            for (int i = 0; i < b.count; ++i) sum += pairs[pos++].second;
            CHECK(b.mean_loss == doctest::Approx(sum / b.count).epsilon(1e-12));
            total += b.count;
        }
        CHECK(total == n);
        // near-equal bucket sizes
        int lo = n, hi = 0;
        for (const Bucket& b : r.buckets) {
            lo = std::min(lo, b.count);
            hi = std::max(hi, b.count);
        }
        CHECK(hi - lo <= 1);
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(bucket_mean_loss(make_scores({1, 2}), {1.0}, 2), ArgumentError);
        CHECK_THROWS_AS(bucket_mean_loss(make_scores({1, 2}), {1, 2}, 1), ArgumentError);
        CHECK_THROWS_AS(bucket_mean_loss(make_scores({1, 2}), {1, 2}, 3), ArgumentError);
    }
}

TEST_CASE("capture_curve") {
    SUBCASE("perfect estimator captures everything at p = q") {
        Rng rng(8);
        std::vector<double> losses(100);
        for (double& v : losses) v = rng.unit();
        const CaptureCurve c = capture_curve(make_scores(losses), losses, 0.25, {0.25});
        CHECK(c.capture[0] == doctest::Approx(1.0));
    }
    SUBCASE("p = 1 captures everything regardless of scores") {
        Rng rng(9);
        std::vector<double> scores(100), losses(100);
        for (double& v : scores) v = rng.unit();
        for (double& v : losses) v = rng.unit();
        const CaptureCurve c = capture_curve(make_scores(scores), losses, 0.25, {1.0});
        CHECK(c.capture[0] == 1.0);
    }
    SUBCASE("independent scores capture about the sampled fraction") {
        Rng rng(10);
        std::vector<double> scores(10000), losses(10000);
        for (double& v : scores) v = rng.unit();
        for (double& v : losses) v = rng.unit();
        const CaptureCurve c = capture_curve(make_scores(scores), losses, 0.25, {0.25});
        CHECK(c.capture[0] == doctest::Approx(0.25).epsilon(0.12));  // +/- 0.03 absolute
        CHECK(std::abs(c.capture[0] - 0.25) <= 0.03);
    }
    SUBCASE("monotone non-decreasing in the sampling fraction") {
        Rng rng(11);
        std::vector<double> scores(500), losses(500);
        for (double& v : scores) v = rng.unit();
        for (double& v : losses) v = rng.unit();
        std::vector<double> fractions;
        for (int i = 1; i <= 20; ++i) fractions.push_back(i * 0.05);
        const CaptureCurve c = capture_curve(make_scores(scores), losses, 0.25, fractions);
        for (std::size_t i = 1; i < c.capture.size(); ++i) CHECK(c.capture[i] >= c.capture[i - 1]);
        CHECK(c.capture.back() == 1.0);
    }
    SUBCASE("invariant under strictly increasing score transforms") {
        Rng rng(12);
        std::vector<double> scores(200), losses(200);
        for (double& v : scores) v = rng.unit();
        for (double& v : losses) v = rng.unit();
        std::vector<double> warped = scores;
        for (double& v : warped) v = std::exp(3.0 * v) + 1.0;
        const std::vector<double> fractions = {0.1, 0.3, 0.6};
        const CaptureCurve a = capture_curve(make_scores(scores), losses, 0.25, fractions);
        const CaptureCurve b = capture_curve(make_scores(warped), losses, 0.25, fractions);
        CHECK(a.capture == b.capture);
        const BucketReport ba = bucket_mean_loss(make_scores(scores), losses, 10);
        const BucketReport bb = bucket_mean_loss(make_scores(warped), losses, 10);
        for (std::size_t i = 0; i < ba.buckets.size(); ++i)
            CHECK(ba.buckets[i].mean_loss == bb.buckets[i].mean_loss);
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(capture_curve(make_scores({1, 2}), {1, 2}, 0.0, {0.5}), ArgumentError);
        CHECK_THROWS_AS(capture_curve(make_scores({1, 2}), {1, 2}, 0.5, {1.5}), ArgumentError);
    }
}
