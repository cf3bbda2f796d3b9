#include <catch2/catch_amalgamated.hpp>

#include "gfsvi/model.hpp"
#include "gfsvi/rng.hpp"
#include "test_support.hpp"

using namespace gfsvi;
using Catch::Matchers::WithinAbs;

TEST_CASE("latent_logit sums bias, noise and parent terms") {
    CHECK(latent_logit(0.0, 0.0, 0.0, {}) == 0.0);
    CHECK_THAT(latent_logit(0.0, 0.0, 0.0, {{2.0, 0.5}}), WithinAbs(1.0, 1e-15));
    CHECK_THAT(sigmoid(latent_logit(0.0, 0.0, 0.0, {{2.0, 0.5}})), WithinAbs(0.73105857863000488, 1e-12));
    CHECK_THAT(latent_logit(-3.0, 1.0, 0.5, {{4.0, 1.0}}), WithinAbs(1.5, 1e-15));
}

TEST_CASE("latent_activation_prob complements sum to one") {
    CHECK(latent_activation_prob(0.0, 1) == 0.5);
    CHECK_THAT(latent_activation_prob(1.0, 0), WithinAbs(0.26894142136999512, 1e-12));
    const double sat = latent_activation_prob(50.0, 1);
    CHECK(sat > 1.0 - 1e-9);
    CHECK(sat <= 1.0);
    CHECK(std::isfinite(latent_activation_prob(700.0, 0)));
    Rng rng(5);
    for (int i = 0; i < 200; ++i) {
        const double logit = (rng.uniform01() - 0.5) * 1400.0;
        const double sum = latent_activation_prob(logit, 1) + latent_activation_prob(logit, 0);
        CHECK(sum == 1.0);
    }
    CHECK_THROWS_AS(latent_activation_prob(0.0, 2), std::invalid_argument);
}

TEST_CASE("dpm_log_density matches hand-computed reference points") {
    WeightSet w;
    w.w0_y = 0.0;
    w.w_ls_y = w.w_lf_y = w.w_bd_y = 0.0;
    w.we_y = 1.0;
    const double y = std::exp(-1.0);
    CHECK_THAT(dpm_log_density(y, 0, 0, 0, w, 1e-12, false), WithinAbs(-0.41893853320467274, 1e-9));
    CHECK_THAT(dpm_log_density(y, 0, 0, 0, w, 1e-12, true), WithinAbs(0.27420864735447468, 1e-9));
    CHECK_THAT(dpm_log_density(1.0, 0, 0, 0, w, 1e-4, false), WithinAbs(-0.9190385332045061, 1e-9));
    CHECK_THROWS_AS(dpm_log_density(1e-13, 0, 0, 0, w, 1e-4, false), std::invalid_argument);
    CHECK_THROWS_AS(dpm_log_density(1.5, 0, 0, 0, w, 1e-4, false), std::invalid_argument);
}

TEST_CASE("truncated dpm density integrates to one over its support") {
    // The support is capped above at log(1+delta); the sliver of mass below
    // y = delta is negligible as long as the log-mean stays well above
    // log(2*delta), so the draws keep |w_*_y| <= 1 and we_y <= 1.
    Rng rng(2024);
    const double delta = 1e-4;
    auto u = [&](double lo, double hi) { return lo + (hi - lo) * rng.uniform01(); };
    for (int trial = 0; trial < 100; ++trial) {
        WeightSet w;
        w.w0_y = u(-1.0, 0.0);
        w.w_ls_y = u(-1.0, 1.0);
        w.w_lf_y = u(-1.0, 1.0);
        w.w_bd_y = u(-1.0, 1.0);
        w.we_y = u(0.5, 1.0);
        const int x1 = rng.bernoulli(0.5) ? 1 : 0;
        const int x2 = x1 ? 0 : (rng.bernoulli(0.5) ? 1 : 0);
        const int x3 = rng.bernoulli(0.5) ? 1 : 0;
        auto density = [&](double y) {
            return std::exp(dpm_log_density(y, x1, x2, x3, w, delta, true));
        };
        const double mass = gfsvi_test::adaptive_simpson(density, delta, 1.0, 1e-8);
        CHECK_THAT(mass, WithinAbs(1.0, 1e-4));
    }
}

TEST_CASE("xor potential matches reference values and normalizes over u") {
    CHECK_THAT(xor_log_potential(0.0, 1, 0, 0.1), WithinAbs(1.3836465597893729, 1e-12));
    CHECK_THAT(xor_log_potential(0.0, 1, 1, 0.1), WithinAbs(1.3836465597893729 - 50.0, 1e-10));
    CHECK_THAT(xor_log_potential(0.0, 0, 0, 0.1), WithinAbs(1.3836465597893729, 1e-12));
    CHECK_THROWS_AS(xor_log_potential(0.0, 0, 0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(xor_log_potential(0.0, 0, 0, -1.0), std::invalid_argument);

    for (int x1 = 0; x1 <= 1; ++x1) {
        for (int x2 = 0; x2 <= 1; ++x2) {
            const double sigma = 0.2;
            const double center = x1 * x2;
            auto density = [&](double u) { return std::exp(xor_log_potential(u, x1, x2, sigma)); };
            const double mass =
                gfsvi_test::adaptive_simpson(density, center - 12 * sigma, center + 12 * sigma, 1e-12);
            CHECK_THAT(mass, WithinAbs(1.0, 1e-9));
        }
    }

    // maximized exactly on exclusive parent configurations
    const double best = xor_log_potential(0.0, 0, 0, 0.1);
    CHECK(xor_log_potential(0.0, 1, 0, 0.1) == best);
    CHECK(xor_log_potential(0.0, 0, 1, 0.1) == best);
    CHECK(xor_log_potential(0.0, 1, 1, 0.1) < best);
}

TEST_CASE("build_location_graph mirrors the footprint flag") {
    const LocationRecord with_bd = LocationRecord::make(0, 0, 0.5, 0.2, 0.1, true, 1e-4);
    const LocalGraph g1 = build_location_graph(with_bd);
    CHECK(g1.nodes.size() == 6);
    CHECK(g1.y_parents.size() == 3);
    CHECK(g1.has_bd);

    const LocationRecord no_bd = LocationRecord::make(0, 0, 0.5, 0.2, 0.1, false, 1e-4);
    const LocalGraph g2 = build_location_graph(no_bd);
    CHECK(g2.nodes.size() == 5);
    CHECK(g2.y_parents.size() == 2);
    CHECK_FALSE(g2.has_bd);

    LocationRecord bad;
    bad.valid = false;
    CHECK_THROWS_AS(build_location_graph(bad), std::invalid_argument);
}

TEST_CASE("weight set constraints are enforced") {
    WeightSet w;
    CHECK_NOTHROW(w.validate());
    w.we_y = 1e-4;
    CHECK_THROWS_AS(w.validate(), std::invalid_argument);
    w.we_y = 1.0;
    w.w0_y = 0.1;
    CHECK_THROWS_AS(w.validate(), std::invalid_argument);
    w.w0_y = 0.0;
    w.we_ls = -0.1;
    CHECK_THROWS_AS(w.validate(), std::invalid_argument);
    w.we_ls = 0.1;
    w.wa_ls = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(w.validate(), std::invalid_argument);
}

TEST_CASE("location records clamp and validate inputs") {
    const double delta = 1e-4;
    const LocationRecord r = LocationRecord::make(3, 4, 0.0, 1.0 + 5e-7, -5e-7, true, delta);
    CHECK(r.y == delta);
    CHECK(r.alpha_ls == 1.0);
    CHECK(r.alpha_lf == 0.0);
    CHECK(r.valid);
    CHECK_THROWS_AS(LocationRecord::make(0, 0, 0.5, 1.1, 0.0, false, delta), io_error);

    HyperParams h;
    CHECK_NOTHROW(h.validate());
    h.sigma_xor = 1.5;
    CHECK_THROWS_AS(h.validate(), config_error);
    h.sigma_xor = 0.1;
    h.delta = 0.02;
    CHECK_THROWS_AS(h.validate(), config_error);
    h.delta = 1e-4;
    h.batch_size = 0;
    CHECK_THROWS_AS(h.validate(), config_error);
}
