#pragma once

#include <functional>
#include <map>

#include "gfsvi/bound.hpp"
#include "gfsvi/gauss_hermite.hpp"
#include "gfsvi/model.hpp"
#include "gfsvi/parallel.hpp"
#include "gfsvi/raster.hpp"
#include "gfsvi/rng.hpp"

namespace gfsvi {

// Forward-sampled event: per-cell true states (-1 marks cells without the
// state), the observation raster, and the weights that generated them.
struct SyntheticEvent {
    GridSpec grid;
    std::vector<int> x_ls;  // -1 invalid, else 0/1
    std::vector<int> x_lf;
    std::vector<int> x_bd;  // -1 where no footprint
    Raster dpm;
    WeightSet true_weights;
    std::uint64_t seed = 0;
    std::vector<std::size_t> forced_cells;  // hit the exclusivity retry cap
};

namespace detail {

inline const GaussHermiteRule& cached_gh_rule(int order) {
    thread_local std::map<int, GaussHermiteRule> cache;
    auto it = cache.find(order);
    if (it == cache.end()) it = cache.emplace(order, gauss_hermite(order)).first;
    return it->second;
}

}  // namespace detail

// Noise-marginal activation probability E_eps[ p(x=1 | eta + we*eps) ].
inline double noise_marginal_activation(double eta, double we, const GaussHermiteRule& rule) {
    if (we == 0.0) return sigmoid(eta);
    return gauss_hermite_expect(rule, [&](double eps) { return sigmoid(eta + we * eps); });
}

// Samples one event from the generative model on the prior grid. Ground
// failures are rejection-resampled until mutually exclusive (cap 100, then
// the higher-prior node wins); the observation is a truncated lognormal
// drawn by inverse CDF.
inline SyntheticEvent sample_event(const Raster& prior_ls, const Raster& prior_lf,
                                   const Raster* footprint, const WeightSet& w,
                                   const HyperParams& h, std::uint64_t seed) {
    if (!prior_ls.spec.same_geometry(prior_lf.spec) ||
        (footprint && !prior_ls.spec.same_geometry(footprint->spec))) {
        throw io_error("sample_event: prior rasters are not aligned");
    }
    w.validate();

    SyntheticEvent ev;
    ev.grid = prior_ls.spec;
    ev.seed = seed;
    ev.true_weights = w;
    const std::size_t n = ev.grid.cell_count();
    ev.x_ls.assign(n, -1);
    ev.x_lf.assign(n, -1);
    ev.x_bd.assign(n, -1);
    ev.dpm = Raster(ev.grid, ev.grid.nodata_value);

    for (std::size_t i = 0; i < n; ++i) {
        const double als = prior_ls.values[i];
        const double alf = prior_lf.values[i];
        if (!prior_ls.is_nodata(als) && (als < -1e-6 || als > 1.0 + 1e-6)) {
            throw io_error("sample_event: landslide prior outside [0,1]");
        }
        if (!prior_lf.is_nodata(alf) && (alf < -1e-6 || alf > 1.0 + 1e-6)) {
            throw io_error("sample_event: liquefaction prior outside [0,1]");
        }
    }

    std::vector<char> forced(n, 0);
    parallel_for(n, [&](std::size_t i) {
        const double als = prior_ls.values[i];
        const double alf = prior_lf.values[i];
        if (prior_ls.is_nodata(als) || prior_lf.is_nodata(alf)) return;
        const double a1 = std::min(std::max(als, 0.0), 1.0);
        const double a2 = std::min(std::max(alf, 0.0), 1.0);
        bool has_building = false;
        if (footprint) {
            const double f = footprint->values[i];
            has_building = !footprint->is_nodata(f) && f > 0.0;
        }

        Rng rng = cell_rng(seed, i);
        int x1 = 0, x2 = 0;
        bool ok = false;
        for (int attempt = 0; attempt < 100; ++attempt) {
            const double l1 = w.w0_ls + w.wa_ls * a1 + w.we_ls * rng.normal();
            const double l2 = w.w0_lf + w.wa_lf * a2 + w.we_lf * rng.normal();
            x1 = rng.bernoulli(sigmoid(l1)) ? 1 : 0;
            x2 = rng.bernoulli(sigmoid(l2)) ? 1 : 0;
            if (x1 * x2 == 0) {
                ok = true;
                break;
            }
        }
        if (!ok) {
            x1 = a1 >= a2 ? 1 : 0;
            x2 = 1 - x1;
            forced[i] = 1;
        }
        ev.x_ls[i] = x1;
        ev.x_lf[i] = x2;

        double mu = w.w0_y + w.w_ls_y * x1 + w.w_lf_y * x2;
        if (has_building) {
            const double l3 = w.w0_bd + w.w_ls_bd * x1 + w.w_lf_bd * x2 + w.we_bd * rng.normal();
            const int x3 = rng.bernoulli(sigmoid(l3)) ? 1 : 0;
            ev.x_bd[i] = x3;
            mu += w.w_bd_y * x3;
        }

        const double zmax = (std::log1p(h.delta) - mu) / w.we_y;
        const double pmax = norm_cdf(zmax);
        double p = rng.uniform_open() * pmax;
        p = std::max(p, 1e-300);
        const double t = mu + w.we_y * norm_inv_cdf(p);
        const double y = std::min(std::max(std::exp(t) - h.delta, h.delta), 1.0);
        ev.dpm.values[i] = y;
    });
    for (std::size_t i = 0; i < n; ++i) {
        if (forced[i]) ev.forced_cells.push_back(i);
    }
    return ev;
}

// Exact log P(y, u=0) for one location by enumerating the binary latent
// configurations; exclusivity violations keep their Gaussian penalty. Each
// noise expectation is a Gauss-Hermite sum of the given order.
inline double exact_log_evidence(const LocationRecord& rec, const WeightSet& w,
                                 const HyperParams& h, int quad_order, bool truncated = true) {
    if (!rec.valid) throw std::invalid_argument("exact_log_evidence: invalid record");
    if (quad_order < 5) throw std::invalid_argument("exact_log_evidence: quad_order must be >= 5");
    const GaussHermiteRule& rule = detail::cached_gh_rule(quad_order);

    const double eta1 = w.w0_ls + w.wa_ls * rec.alpha_ls;
    const double eta2 = w.w0_lf + w.wa_lf * rec.alpha_lf;
    const double p1 = noise_marginal_activation(eta1, w.we_ls, rule);
    const double p2 = noise_marginal_activation(eta2, w.we_lf, rule);

    std::vector<double> terms;
    for (int x1 = 0; x1 <= 1; ++x1) {
        for (int x2 = 0; x2 <= 1; ++x2) {
            const double base = std::log(x1 ? p1 : 1.0 - p1) + std::log(x2 ? p2 : 1.0 - p2) +
                                xor_log_potential(0.0, x1, x2, h.sigma_xor);
            if (rec.has_building) {
                const double eta3 = w.w0_bd + w.w_ls_bd * x1 + w.w_lf_bd * x2;
                const double p3 = noise_marginal_activation(eta3, w.we_bd, rule);
                for (int x3 = 0; x3 <= 1; ++x3) {
                    terms.push_back(base + std::log(x3 ? p3 : 1.0 - p3) +
                                    dpm_log_density(rec.y, x1, x2, x3, w, h.delta, truncated, true));
                }
            } else {
                terms.push_back(base + dpm_log_density(rec.y, x1, x2, 0, w, h.delta, truncated, false));
            }
        }
    }
    return log_sum_exp(terms);
}

struct ExactMarginals {
    double p_ls = 0.0;
    double p_lf = 0.0;
    std::optional<double> p_bd;
};

// Exact posterior marginals from the same enumeration.
inline ExactMarginals exact_posterior(const LocationRecord& rec, const WeightSet& w,
                                      const HyperParams& h, int quad_order, bool truncated = true) {
    if (!rec.valid) throw std::invalid_argument("exact_posterior: invalid record");
    if (quad_order < 5) throw std::invalid_argument("exact_posterior: quad_order must be >= 5");
    const GaussHermiteRule& rule = detail::cached_gh_rule(quad_order);

    const double eta1 = w.w0_ls + w.wa_ls * rec.alpha_ls;
    const double eta2 = w.w0_lf + w.wa_lf * rec.alpha_lf;
    const double p1 = noise_marginal_activation(eta1, w.we_ls, rule);
    const double p2 = noise_marginal_activation(eta2, w.we_lf, rule);

    struct Config {
        int x1, x2, x3;
        double logw;
    };
    std::vector<Config> configs;
    for (int x1 = 0; x1 <= 1; ++x1) {
        for (int x2 = 0; x2 <= 1; ++x2) {
            const double base = std::log(x1 ? p1 : 1.0 - p1) + std::log(x2 ? p2 : 1.0 - p2) +
                                xor_log_potential(0.0, x1, x2, h.sigma_xor);
            if (rec.has_building) {
                const double eta3 = w.w0_bd + w.w_ls_bd * x1 + w.w_lf_bd * x2;
                const double p3 = noise_marginal_activation(eta3, w.we_bd, rule);
                for (int x3 = 0; x3 <= 1; ++x3) {
                    configs.push_back({x1, x2, x3,
                                       base + std::log(x3 ? p3 : 1.0 - p3) +
                                           dpm_log_density(rec.y, x1, x2, x3, w, h.delta, truncated, true)});
                }
            } else {
                configs.push_back({x1, x2, 0,
                                   base + dpm_log_density(rec.y, x1, x2, 0, w, h.delta, truncated, false)});
            }
        }
    }
    std::vector<double> logs;
    logs.reserve(configs.size());
    for (const auto& c : configs) logs.push_back(c.logw);
    const double lse = log_sum_exp(logs);

    ExactMarginals m;
    double pbd = 0.0;
    for (const auto& c : configs) {
        const double p = std::exp(c.logw - lse);
        if (c.x1) m.p_ls += p;
        if (c.x2) m.p_lf += p;
        if (c.x3) pbd += p;
    }
    if (rec.has_building) m.p_bd = pbd;
    return m;
}

// Central finite differences of a scalar function of the weights, falling
// back to one-sided differences at the projection boundaries.
inline BoundGradient finite_diff_gradient(const std::function<double(const WeightSet&)>& fn,
                                          const WeightSet& w, double step) {
    if (!(step > 0.0)) throw std::invalid_argument("finite_diff_gradient: step must be > 0");
    BoundGradient g;
    for (int i = 0; i < WeightSet::kCount; ++i) {
        const double v = w.get(i);
        double lo_limit = -std::numeric_limits<double>::infinity();
        double hi_limit = std::numeric_limits<double>::infinity();
        const char* name = WeightSet::field_name(i);
        const std::string nm(name);
        if (nm == "we_y") lo_limit = kWeyFloor;
        if (nm == "we_ls" || nm == "we_lf" || nm == "we_bd") lo_limit = 0.0;
        if (nm == "w0_y") hi_limit = 0.0;

        WeightSet wp = w, wm = w;
        if (v - step < lo_limit) {
            wp.set(i, v + step);
            g.set(i, (fn(wp) - fn(w)) / step);
        } else if (v + step > hi_limit) {
            wm.set(i, v - step);
            g.set(i, (fn(w) - fn(wm)) / step);
        } else {
            wp.set(i, v + step);
            wm.set(i, v - step);
            g.set(i, (fn(wp) - fn(wm)) / (2.0 * step));
        }
    }
    return g;
}

}  // namespace gfsvi
