#include <catch2/catch_amalgamated.hpp>

#include "gfsvi/metrics.hpp"
#include "gfsvi/rng.hpp"
#include "test_support.hpp"

using namespace gfsvi;
using Catch::Matchers::WithinAbs;

namespace {

GridSpec flat_spec(int n) {
    GridSpec s;
    s.nrows = 1;
    s.ncols = n;
    s.cellsize = 1.0;
    return s;
}

Raster from_values(const std::vector<double>& values) {
    Raster r(flat_spec(static_cast<int>(values.size())));
    r.values = values;
    return r;
}

}  // namespace

TEST_CASE("confusion counts follow the score >= tau rule") {
    SECTION("perfect scores means no errors") {
        const Raster truth = from_values({1, 0, 1, 0});
        const ConfusionCounts cc = confusion_at_threshold(truth, truth, 0.5);
        CHECK(cc.fp == 0);
        CHECK(cc.fn == 0);
        CHECK(cc.tp == 2);
        CHECK(cc.tn == 2);
    }

    SECTION("threshold at the minimum score predicts everything positive") {
        const Raster scores = from_values({0.1, 0.4, 0.7});
        const Raster truth = from_values({0, 1, 1});
        const ConfusionCounts cc = confusion_at_threshold(scores, truth, 0.1);
        CHECK(cc.fn == 0);
        CHECK(cc.tn == 0);
        CHECK(cc.tp == 2);
        CHECK(cc.fp == 1);
    }

    SECTION("constructed fourteen-cell example gives tpr 0.75 and fpr 0.2") {
        const Raster scores =
            from_values({0.9, 0.4, 0.8, 0.1, 0.7, 0.2, 0.3, 0.55, 0.05, 0.15, 0.25, 0.35, 0.65, 0.05});
        const Raster truth = from_values({1, 1, 1, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0});
        const ConfusionCounts cc = confusion_at_threshold(scores, truth, 0.5);
        CHECK(cc.tp == 3);
        CHECK(cc.fn == 1);
        CHECK(cc.fp == 2);
        CHECK(cc.tn == 8);
        CHECK_THAT(cc.tpr(), WithinAbs(0.75, 1e-15));
        CHECK_THAT(cc.fpr(), WithinAbs(0.2, 1e-15));
        CHECK(cc.total() == 14);
    }

    SECTION("nodata cells are excluded and grids must match") {
        Raster scores = from_values({0.9, 0.1, 0.5});
        scores.values[2] = scores.spec.nodata_value;
        const Raster truth = from_values({1, 0, 1});
        const ConfusionCounts cc = confusion_at_threshold(scores, truth, 0.5);
        CHECK(cc.total() == 2);
        const Raster small = from_values({1, 0});
        CHECK_THROWS_AS(confusion_at_threshold(small, truth, 0.5), std::invalid_argument);
    }
}

TEST_CASE("counts conserve the evaluated cells at every threshold") {
    Rng rng(15);
    std::vector<double> s(200), g(200);
    for (std::size_t i = 0; i < s.size(); ++i) {
        s[i] = rng.uniform01();
        g[i] = rng.bernoulli(0.3) ? 1.0 : 0.0;
    }
    const Raster scores = from_values(s);
    const Raster truth = from_values(g);
    double prev_tpr = 1.0, prev_fpr = 1.0;
    for (double tau : {0.0, 0.2, 0.4, 0.6, 0.8, 1.0}) {
        const ConfusionCounts cc = confusion_at_threshold(scores, truth, tau);
        CHECK(cc.total() == 200);
        // tpr and fpr are non-increasing in tau
        CHECK(cc.tpr() <= prev_tpr + 1e-15);
        CHECK(cc.fpr() <= prev_fpr + 1e-15);
        prev_tpr = cc.tpr();
        prev_fpr = cc.fpr();
    }
}

TEST_CASE("roc curves span the unit box and integrate as expected") {
    SECTION("perfect separation reaches the (0,1) corner") {
        const Raster scores = from_values({0.9, 0.8, 0.2, 0.1});
        const Raster truth = from_values({1, 1, 0, 0});
        const RocCurve curve = roc_curve(scores, truth, 64);
        bool corner = false;
        for (const auto& p : curve.points) corner |= (p.fpr == 0.0 && p.tpr == 1.0);
        CHECK(corner);
        CHECK_THAT(auc(curve), WithinAbs(1.0, 1e-12));
    }

    SECTION("reversed perfect scores give zero area") {
        const Raster scores = from_values({0.1, 0.2, 0.8, 0.9});
        const Raster truth = from_values({1, 1, 0, 0});
        CHECK_THAT(auc(roc_curve(scores, truth, 64)), WithinAbs(0.0, 1e-12));
    }

    SECTION("constant scores collapse to the two sentinel points") {
        const Raster scores = from_values({0.4, 0.4, 0.4, 0.4});
        const Raster truth = from_values({1, 0, 1, 0});
        const RocCurve curve = roc_curve(scores, truth, 64);
        REQUIRE(curve.points.size() == 2);
        CHECK(curve.points[0].tpr == 0.0);
        CHECK(curve.points[0].fpr == 0.0);
        CHECK(curve.points[1].tpr == 1.0);
        CHECK(curve.points[1].fpr == 1.0);
        CHECK_THAT(auc(curve), WithinAbs(0.5, 1e-15));
    }

    SECTION("thresholds strictly decrease and rates never do") {
        Rng rng(7);
        std::vector<double> s(500), g(500);
        for (std::size_t i = 0; i < s.size(); ++i) {
            s[i] = rng.uniform01();
            g[i] = rng.bernoulli(0.4) ? 1.0 : 0.0;
        }
        const RocCurve curve = roc_curve(from_values(s), from_values(g), 128);
        for (std::size_t i = 1; i < curve.points.size(); ++i) {
            CHECK(curve.points[i].threshold < curve.points[i - 1].threshold);
            CHECK(curve.points[i].tpr >= curve.points[i - 1].tpr);
            CHECK(curve.points[i].fpr >= curve.points[i - 1].fpr);
        }
    }

    SECTION("degenerate truth is rejected") {
        const Raster scores = from_values({0.2, 0.8});
        const Raster all_pos = from_values({1, 1});
        CHECK_THROWS_AS(roc_curve(scores, all_pos, 16), std::invalid_argument);
    }
}

TEST_CASE("uninformative scores give chance-level area") {
    Rng rng(99);
    const int n = 10000;
    std::vector<double> s(n), g(n);
    for (int i = 0; i < n; ++i) {
        s[i] = rng.uniform01();
        g[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
    }
    const double area = auc(roc_curve(from_values(s), from_values(g), 512));
    CHECK_THAT(area, WithinAbs(0.5, 0.03));
}

TEST_CASE("area is invariant under monotone rescoring") {
    // scores on a lattice fine enough that the threshold sweep separates all
    // distinct values in both parameterizations
    Rng rng(21);
    const int n = 400;
    std::vector<double> s(n), g(n);
    for (int i = 0; i < n; ++i) {
        s[i] = static_cast<double>(rng.below(11)) / 10.0;
        g[i] = rng.bernoulli(0.4) ? 1.0 : 0.0;
    }
    std::vector<double> cubed(n);
    for (int i = 0; i < n; ++i) cubed[i] = s[i] * s[i] * s[i];
    const Raster truth = from_values(g);
    const double a1 = auc(roc_curve(from_values(s), truth, 2048));
    const double a2 = auc(roc_curve(from_values(cubed), truth, 2048));
    CHECK_THAT(a1, WithinAbs(a2, 1e-12));
}

TEST_CASE("score normalization stretches to the unit interval with clamps") {
    const Raster two = from_values({0.2, 0.7});
    const Raster out = normalize_scores(two);
    CHECK(out.values[0] == 1e-6);
    CHECK(out.values[1] == 1.0 - 1e-6);

    const Raster endpoints = from_values({0.0, 0.5, 1.0});
    const Raster kept = normalize_scores(endpoints);
    CHECK(kept.values[0] == 1e-6);
    CHECK(kept.values[1] == 0.5);
    CHECK(kept.values[2] == 1.0 - 1e-6);

    bool constant = false;
    const Raster flat = normalize_scores(from_values({0.3, 0.3, 0.3}), &constant);
    CHECK(constant);
    for (double v : flat.values) CHECK(v == 0.5);
}

TEST_CASE("cross entropy matches the frozen example and its bounds") {
    const Raster q = from_values({0.9, 0.1, 0.2, 0.8});
    const Raster g = from_values({1, 0, 0, 1});
    CHECK_THAT(cross_entropy_loss(q, g), WithinAbs(0.16425203348601803, 1e-6));

    const Raster half = from_values({0.5, 0.5, 0.5, 0.5});
    CHECK_THAT(cross_entropy_loss(half, g), WithinAbs(std::log(2.0), 1e-12));

    // truth itself, after normalization clamping, is near-zero loss
    const Raster clamped_truth = normalize_scores(g);
    CHECK(cross_entropy_loss(clamped_truth, g) <= 1e-5);

    // and no other predictor beats the clamped truth
    Rng rng(33);
    const double best = cross_entropy_loss(clamped_truth, g);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> probe(4);
        for (double& v : probe) v = 1e-6 + (1.0 - 2e-6) * rng.uniform01();
        CHECK(cross_entropy_loss(from_values(probe), g) >= best);
    }

    const Raster small = from_values({0.5});
    CHECK_THROWS_AS(cross_entropy_loss(small, g), std::invalid_argument);
}
