#pragma once

#include <numeric>

#include "gfsvi/bound.hpp"
#include "gfsvi/parallel.hpp"
#include "gfsvi/raster.hpp"
#include "gfsvi/rng.hpp"

namespace gfsvi {

// Knobs beyond the core hyperparameters; defaults match the CLI.
struct InferenceOptions {
    bool prune = false;          // drop cells with no evidence anywhere
    double y_floor = -1.0;       // < 0 means "use delta"
    double alpha_floor = 1e-3;
    int conv_window = 8;
    double conv_rel_tol = 1e-6;
    bool rho_decay = false;      // 1/sqrt(t) schedule instead of constant
};

// Cyclic coordinate updates in fixed order LS -> LF -> BD until the largest
// per-sweep change drops below e_tol or the sweep cap is reached.
inline PosteriorState e_step(const LocationRecord& rec, PosteriorState q, const WeightSet& w,
                             const HyperParams& h) {
    for (int sweep = 0; sweep < h.e_sweeps_max; ++sweep) {
        double max_change = 0.0;
        {
            const double next = clamp_unit(sigmoid(posterior_logit_T(rec, NodeKind::LandslideLS, q, w, h)));
            max_change = std::max(max_change, std::abs(next - q.q_ls));
            q.q_ls = next;
        }
        {
            const double next = clamp_unit(sigmoid(posterior_logit_T(rec, NodeKind::LiquefactionLF, q, w, h)));
            max_change = std::max(max_change, std::abs(next - q.q_lf));
            q.q_lf = next;
        }
        if (rec.has_building) {
            const double next = clamp_unit(sigmoid(posterior_logit_T(rec, NodeKind::BuildingDamageBD, q, w, h)));
            max_change = std::max(max_change, std::abs(next - *q.q_bd));
            q.q_bd = next;
        }
        if (max_change < h.e_tol) break;
    }
    return q;
}

// Uniform sample without replacement; the whole population (shuffled) when
// batch_size covers it.
inline std::vector<std::size_t> sample_minibatch(const std::vector<std::size_t>& valid_cells,
                                                 int batch_size, Rng& rng) {
    if (batch_size < 1) throw std::invalid_argument("sample_minibatch: batch_size must be >= 1");
    if (valid_cells.empty()) throw std::invalid_argument("sample_minibatch: empty population");
    const std::size_t n = valid_cells.size();
    const std::size_t k = std::min<std::size_t>(batch_size, n);
    std::vector<std::size_t> pool = valid_cells;
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + rng.below(n - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
}

// One ascent step on the weights from a mini-batch gradient, rescaled by
// population/batch so the stochastic gradient is unbiased for the full-map
// bound, then projected onto the weight constraints.
template <typename Records, typename Posteriors>
WeightSet m_step(const Records& batch, const Posteriors& q_batch, const WeightSet& w,
                 const HyperParams& h, std::size_t population_size, double rho_override = -1.0) {
    if (batch.size() == 0) throw std::invalid_argument("m_step: empty batch");
    const double rho = rho_override >= 0.0 ? rho_override : h.rho;
    WeightSet out = w;
    if (rho == 0.0) return out;
    const BoundGradient g = weight_gradient(batch, q_batch, w, h);
    const double scale = rho * static_cast<double>(population_size) / static_cast<double>(batch.size());
    for (int i = 0; i < WeightSet::kCount; ++i) {
        out.set(i, w.get(i) + scale * g.get(i));
    }
    out.we_y = std::max(out.we_y, kWeyFloor);
    out.w0_y = std::min(out.w0_y, 0.0);
    out.we_ls = std::max(out.we_ls, 0.0);
    out.we_lf = std::max(out.we_lf, 0.0);
    out.we_bd = std::max(out.we_bd, 0.0);
    out.validate();
    return out;
}

// Relative change of the windowed moving average over the last two windows.
inline bool check_convergence(const std::vector<double>& bound_history, int window, double rel_tol) {
    if (window < 2) throw std::invalid_argument("check_convergence: window must be >= 2");
    const std::size_t n = bound_history.size();
    if (n < static_cast<std::size_t>(2 * window)) return false;
    double prev = 0.0, last = 0.0;
    for (int i = 0; i < window; ++i) {
        prev += bound_history[n - 2 * window + i];
        last += bound_history[n - window + i];
    }
    prev /= window;
    last /= window;
    const double rel = std::abs(last - prev) / std::max(1.0, std::abs(prev));
    return rel < rel_tol;
}

struct MaskResult {
    std::vector<std::size_t> indices;   // record indices entering inference
    std::size_t pruned_by_floor = 0;    // data cells dropped by the floors
};

// Validity mask plus the optional evidence-floor heuristic: a data cell is
// dropped only when the observation and both priors all sit below their
// floors.
inline MaskResult mask_locations(const LocationTable& table, const HyperParams& h,
                                 const InferenceOptions& opts = {}) {
    const double y_floor = opts.y_floor < 0.0 ? h.delta : opts.y_floor;
    MaskResult out;
    for (std::size_t i = 0; i < table.records.size(); ++i) {
        const LocationRecord& rec = table.records[i];
        if (!rec.valid) continue;
        if (opts.prune && rec.y < y_floor && rec.alpha_ls < opts.alpha_floor &&
            rec.alpha_lf < opts.alpha_floor) {
            ++out.pruned_by_floor;
            continue;
        }
        out.indices.push_back(i);
    }
    return out;
}

// Mutable state of one EM run: per-cell marginals, current weights, the
// per-epoch bound trace and the batch-sampling stream.
struct InferenceRunState {
    int epoch = 0;
    std::vector<PosteriorState> q_table;
    WeightSet weights;
    std::vector<double> bound_history;
    Rng rng{0};
};

struct InferenceResult {
    Raster posterior_ls;
    Raster posterior_lf;
    Raster posterior_bd;
    WeightSet weights;
    std::vector<double> bound_history;
    int epochs = 0;
    bool converged = false;
    std::size_t valid_cells = 0;
    std::size_t pruned_cells = 0;
};

namespace detail {

// locate the first non-finite per-location bound for the diagnostic
template <typename Records, typename Posteriors>
[[noreturn]] void report_nonfinite(const Records& recs, const Posteriors& qs, const WeightSet& w,
                                   const HyperParams& h) {
    for (std::size_t i = 0; i < recs.size(); ++i) {
        const double lb = location_bound(recs[i], qs[i], w, h);
        if (!std::isfinite(lb)) {
            std::string msg = "non-finite bound at cell (" + std::to_string(recs[i].row) + "," +
                              std::to_string(recs[i].col) + "); weights:";
            for (int k = 0; k < WeightSet::kCount; ++k) {
                msg += std::string(" ") + WeightSet::field_name(k) + "=" + std::to_string(w.get(k));
            }
            throw numeric_error(msg);
        }
    }
    throw numeric_error("non-finite total bound with finite per-location terms");
}

}  // namespace detail

// Full EM loop: per epoch, one pass worth of mini-batches, each doing an
// E-step on the batch followed by an M-step; the full-population bound is
// evaluated once per epoch for the convergence check. Finishes with a
// full-population E-step under the final weights.
inline InferenceResult run_inference(const LocationTable& table, const HyperParams& h,
                                     const WeightSet& init, const InferenceOptions& opts = {}) {
    init.validate();
    const MaskResult mask = mask_locations(table, h, opts);
    if (mask.indices.empty()) throw io_error("run_inference: no valid cells to process");

    const std::size_t n = mask.indices.size();
    std::vector<LocationRecord> recs;
    recs.reserve(n);
    for (std::size_t idx : mask.indices) recs.push_back(table.records[idx]);

    InferenceRunState state;
    state.weights = init;
    state.rng = Rng(h.seed);
    state.q_table.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        state.q_table[i].q_ls = clamp_unit(recs[i].alpha_ls);
        state.q_table[i].q_lf = clamp_unit(recs[i].alpha_lf);
        if (recs[i].has_building) state.q_table[i].q_bd = 0.5;
    }

    std::vector<std::size_t> local(n);
    std::iota(local.begin(), local.end(), std::size_t{0});
    const std::size_t iters_per_epoch = (n + h.batch_size - 1) / h.batch_size;

    InferenceResult result;
    result.converged = false;
    std::size_t step = 0;
    for (state.epoch = 0; state.epoch < h.max_epochs; ++state.epoch) {
        for (std::size_t it = 0; it < iters_per_epoch; ++it) {
            const std::vector<std::size_t> batch = sample_minibatch(local, h.batch_size, state.rng);
            parallel_for(batch.size(), [&](std::size_t b) {
                const std::size_t i = batch[b];
                state.q_table[i] = e_step(recs[i], state.q_table[i], state.weights, h);
            });
            if (h.rho > 0.0) {
                std::vector<LocationRecord> brecs;
                std::vector<PosteriorState> bqs;
                brecs.reserve(batch.size());
                bqs.reserve(batch.size());
                for (std::size_t i : batch) {
                    brecs.push_back(recs[i]);
                    bqs.push_back(state.q_table[i]);
                }
                ++step;
                const double rho = opts.rho_decay ? h.rho / std::sqrt(static_cast<double>(step)) : h.rho;
                state.weights = m_step(brecs, bqs, state.weights, h, n, rho);
            }
        }
        const double bound = total_bound(recs, state.q_table, state.weights, h);
        if (!std::isfinite(bound)) detail::report_nonfinite(recs, state.q_table, state.weights, h);
        state.bound_history.push_back(bound);
        if (check_convergence(state.bound_history, opts.conv_window, opts.conv_rel_tol)) {
            result.converged = true;
            ++state.epoch;
            break;
        }
    }

    parallel_for(n, [&](std::size_t i) {
        state.q_table[i] = e_step(recs[i], state.q_table[i], state.weights, h);
    });

    const GridSpec& spec = table.spec;
    result.posterior_ls = Raster(spec, spec.nodata_value);
    result.posterior_lf = Raster(spec, spec.nodata_value);
    result.posterior_bd = Raster(spec, spec.nodata_value);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t cell = static_cast<std::size_t>(recs[i].row) * spec.ncols + recs[i].col;
        result.posterior_ls.values[cell] = state.q_table[i].q_ls;
        result.posterior_lf.values[cell] = state.q_table[i].q_lf;
        if (state.q_table[i].q_bd) result.posterior_bd.values[cell] = *state.q_table[i].q_bd;
    }
    result.weights = state.weights;
    result.bound_history = std::move(state.bound_history);
    result.epochs = state.epoch;
    result.valid_cells = n;
    result.pruned_cells = mask.pruned_by_floor;
    return result;
}

}  // namespace gfsvi
