#pragma once

#include <chrono>
#include <filesystem>
#include <iostream>

#include "gfsvi/config.hpp"
#include "gfsvi/inference.hpp"
#include "gfsvi/metrics.hpp"
#include "gfsvi/oracle.hpp"

namespace gfsvi {

namespace detail {

inline nlohmann::ordered_json grid_to_json(const GridSpec& g) {
    nlohmann::ordered_json j;
    j["ncols"] = g.ncols;
    j["nrows"] = g.nrows;
    j["xllcorner"] = g.xllcorner;
    j["yllcorner"] = g.yllcorner;
    j["cellsize"] = g.cellsize;
    j["nodata_value"] = g.nodata_value;
    return j;
}

inline void write_json_file(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open for writing: " + path.string());
    out << j.dump(2) << "\n";
    if (!out) throw io_error("write failed: " + path.string());
}

inline std::vector<InventoryPoint> states_to_points(const GridSpec& grid, const std::vector<int>& states,
                                                    HazardCategory cat) {
    std::vector<InventoryPoint> pts;
    for (int r = 0; r < grid.nrows; ++r) {
        for (int c = 0; c < grid.ncols; ++c) {
            const std::size_t i = static_cast<std::size_t>(r) * grid.ncols + c;
            if (states[i] != 1) continue;
            InventoryPoint p;
            p.lon = grid.xllcorner + (c + 0.5) * grid.cellsize;
            p.lat = grid.yllcorner + (grid.nrows - 1 - r + 0.5) * grid.cellsize;
            p.category = cat;
            pts.push_back(p);
        }
    }
    return pts;
}

inline Raster aligned_to(const Raster& src, const GridSpec& target) {
    return src.spec.same_geometry(target) ? src : align_to_grid(src, target);
}

inline std::string format_csv_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

}  // namespace detail

// Draws a synthetic event on the prior grid and writes the observation
// raster, per-hazard truth inventories, the generating weights and the
// event metadata into out_dir.
inline void cmd_simulate(const RunConfig& cfg) {
    namespace fs = std::filesystem;
    require_path(cfg.paths.prior_ls, "prior_ls");
    require_path(cfg.paths.prior_lf, "prior_lf");
    require_path(cfg.paths.out_dir, "out_dir");
    cfg.hyper.validate();

    const Raster prior_ls = read_ascii_grid(cfg.paths.prior_ls);
    const Raster prior_lf_raw = read_ascii_grid(cfg.paths.prior_lf);
    const Raster prior_lf = detail::aligned_to(prior_lf_raw, prior_ls.spec);
    std::optional<Raster> footprint;
    if (!cfg.paths.footprint.empty()) {
        footprint = detail::aligned_to(read_ascii_grid(cfg.paths.footprint), prior_ls.spec);
    }

    const SyntheticEvent ev = sample_event(prior_ls, prior_lf, footprint ? &*footprint : nullptr,
                                           cfg.weights, cfg.hyper, cfg.hyper.seed);

    const fs::path out(cfg.paths.out_dir);
    fs::create_directories(out);
    write_ascii_grid(ev.dpm, (out / "dpm.asc").string(), 6);
    write_inventory((out / "truth_ls.csv").string(),
                    detail::states_to_points(ev.grid, ev.x_ls, HazardCategory::landslide));
    write_inventory((out / "truth_lf.csv").string(),
                    detail::states_to_points(ev.grid, ev.x_lf, HazardCategory::liquefaction));
    write_inventory((out / "truth_bd.csv").string(),
                    detail::states_to_points(ev.grid, ev.x_bd, HazardCategory::building_damage));
    detail::write_json_file(out / "true_weights.json", weights_to_json(ev.true_weights));

    nlohmann::ordered_json meta;
    meta["seed"] = ev.seed;
    meta["grid"] = detail::grid_to_json(ev.grid);
    meta["forced_cell_count"] = ev.forced_cells.size();
    meta["has_footprint"] = footprint.has_value();
    detail::write_json_file(out / "event_meta.json", meta);
}

// Aligns all inputs to the observation grid, runs the EM loop and writes
// posterior rasters, fitted weights, the bound trace and a run report.
inline void cmd_infer(const RunConfig& cfg) {
    namespace fs = std::filesystem;
    require_path(cfg.paths.dpm, "dpm");
    require_path(cfg.paths.prior_ls, "prior_ls");
    require_path(cfg.paths.prior_lf, "prior_lf");
    require_path(cfg.paths.out_dir, "out_dir");
    cfg.hyper.validate();

    const auto t0 = std::chrono::steady_clock::now();

    const Raster dpm_raw = read_ascii_grid(cfg.paths.dpm);
    const Raster dpm = normalize_dpm(dpm_raw, cfg.hyper.delta, cfg.flags.assume_normalized);
    const Raster prior_ls = detail::aligned_to(read_ascii_grid(cfg.paths.prior_ls), dpm.spec);
    const Raster prior_lf = detail::aligned_to(read_ascii_grid(cfg.paths.prior_lf), dpm.spec);
    std::optional<Raster> footprint;
    if (!cfg.paths.footprint.empty()) {
        footprint = detail::aligned_to(read_ascii_grid(cfg.paths.footprint), dpm.spec);
    }

    const LocationTable table =
        build_dataset(dpm, prior_ls, prior_lf, footprint ? &*footprint : nullptr, cfg.hyper.delta);

    InferenceOptions opts;
    opts.prune = cfg.flags.prune;
    const InferenceResult res = run_inference(table, cfg.hyper, cfg.weights, opts);

    const fs::path out(cfg.paths.out_dir);
    fs::create_directories(out);
    write_ascii_grid(res.posterior_ls, (out / "posterior_ls.asc").string(), 6);
    write_ascii_grid(res.posterior_lf, (out / "posterior_lf.asc").string(), 6);
    write_ascii_grid(res.posterior_bd, (out / "posterior_bd.asc").string(), 6);
    detail::write_json_file(out / "weights_fitted.json", weights_to_json(res.weights));

    {
        std::ofstream bh(out / "bound_history.csv");
        if (!bh) throw io_error("cannot open for writing: " + (out / "bound_history.csv").string());
        bh << "epoch,bound\n";
        for (std::size_t i = 0; i < res.bound_history.size(); ++i) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.17g", res.bound_history[i]);
            bh << (i + 1) << "," << buf << "\n";
        }
    }

    const auto t1 = std::chrono::steady_clock::now();
    const double secs = std::chrono::duration<double>(t1 - t0).count();
    nlohmann::ordered_json report;
    report["epochs"] = res.epochs;
    report["converged"] = res.converged;
    report["valid_cells"] = res.valid_cells;
    report["pruned_cells"] = res.pruned_cells;
    // zeroed in deterministic mode so replays are byte-identical
    report["wall_time_seconds"] = cfg.flags.deterministic ? 0.0 : secs;
    detail::write_json_file(out / "run_report.json", report);
}

inline void write_roc_csv(const std::string& path, const RocCurve& curve) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open for writing: " + path);
    out << "threshold,tpr,fpr\n";
    for (const auto& p : curve.points) {
        out << detail::format_csv_double(p.threshold) << ',' << detail::format_csv_double(p.tpr)
            << ',' << detail::format_csv_double(p.fpr) << "\n";
    }
    if (!out) throw io_error("write failed: " + path);
}

namespace detail {

struct HazardEval {
    const char* key;
    HazardCategory category;
    const Raster* prior;  // null when no prior model exists for the hazard
};

}  // namespace detail

// Compares prior and posterior maps against the truth inventory: CEL, ROC
// and AUC per hazard, plus a single-threshold TPR/FPR report. Hazards with
// no truth points are skipped with a notice.
inline void cmd_evaluate(const RunConfig& cfg) {
    namespace fs = std::filesystem;
    require_path(cfg.paths.prior_ls, "prior_ls");
    require_path(cfg.paths.prior_lf, "prior_lf");
    require_path(cfg.paths.truth_csv, "truth_csv");
    require_path(cfg.paths.out_dir, "out_dir");

    const fs::path out(cfg.paths.out_dir);
    const Raster post_ls = read_ascii_grid((out / "posterior_ls.asc").string());
    const Raster post_lf = read_ascii_grid((out / "posterior_lf.asc").string());
    std::optional<Raster> post_bd;
    if (fs::exists(out / "posterior_bd.asc")) {
        post_bd = read_ascii_grid((out / "posterior_bd.asc").string());
    }

    const GridSpec grid = post_ls.spec;
    const Raster prior_ls = detail::aligned_to(read_ascii_grid(cfg.paths.prior_ls), grid);
    const Raster prior_lf = detail::aligned_to(read_ascii_grid(cfg.paths.prior_lf), grid);
    const std::vector<InventoryPoint> points = read_inventory(cfg.paths.truth_csv);

    constexpr double kThreshold = 0.5;
    constexpr int kRocThresholds = 256;

    std::vector<detail::HazardEval> evals = {
        {"ls", HazardCategory::landslide, &prior_ls},
        {"lf", HazardCategory::liquefaction, &prior_lf},
    };
    if (post_bd) evals.push_back({"bd", HazardCategory::building_damage, nullptr});

    nlohmann::ordered_json metrics;
    for (const auto& ev : evals) {
        std::size_t n_points = 0;
        for (const auto& p : points) n_points += p.category == ev.category ? 1 : 0;
        if (n_points == 0) {
            std::cerr << "evaluate: no ground truth for " << ev.key << "; skipping\n";
            continue;
        }
        std::size_t outside = 0;
        const Raster truth = rasterize_points(points, grid, ev.category, &outside);
        if (outside > 0) {
            std::cerr << "evaluate: " << outside << " " << ev.key << " points outside the grid\n";
        }

        const Raster& post = ev.category == HazardCategory::landslide ? post_ls
                             : ev.category == HazardCategory::liquefaction ? post_lf
                                                                           : *post_bd;
        // skip hazards whose evaluable truth is single-class
        {
            std::vector<double> s;
            std::vector<int> g;
            detail::gather_scored_cells(post, truth, s, g);
            std::size_t pos = 0;
            for (int v : g) pos += v;
            if (g.empty() || pos == 0 || pos == g.size()) {
                std::cerr << "evaluate: degenerate truth for " << ev.key << "; skipping\n";
                continue;
            }
        }

        const Raster post_n = normalize_scores(post);
        nlohmann::ordered_json block;

        if (ev.prior) {
            const Raster prior_n = normalize_scores(*ev.prior);
            const double cel_prior = cross_entropy_loss(prior_n, truth);
            const double cel_post = cross_entropy_loss(post_n, truth);
            const RocCurve roc_prior = roc_curve(prior_n, truth, kRocThresholds);
            const RocCurve roc_post = roc_curve(post_n, truth, kRocThresholds);
            block["prior_cel"] = cel_prior;
            block["posterior_cel"] = cel_post;
            block["cel_reduction_pct"] = 100.0 * (1.0 - cel_post / cel_prior);
            block["prior_auc"] = auc(roc_prior);
            block["posterior_auc"] = auc(roc_post);
            write_roc_csv((out / (std::string("roc_") + ev.key + "_prior.csv")).string(), roc_prior);
            write_roc_csv((out / (std::string("roc_") + ev.key + "_posterior.csv")).string(), roc_post);
        } else {
            const double cel_post = cross_entropy_loss(post_n, truth);
            const RocCurve roc_post = roc_curve(post_n, truth, kRocThresholds);
            block["posterior_cel"] = cel_post;
            block["posterior_auc"] = auc(roc_post);
            write_roc_csv((out / (std::string("roc_") + ev.key + "_posterior.csv")).string(), roc_post);
        }

        const ConfusionCounts cc = confusion_at_threshold(post_n, truth, kThreshold);
        block["threshold"] = kThreshold;
        block["tpr_at_threshold"] = cc.tpr();
        block["fpr_at_threshold"] = cc.fpr();
        block["evaluated_cells"] = cc.total();
        block["truth_points"] = n_points;
        metrics[ev.key] = block;
    }
    detail::write_json_file(out / "metrics.json", metrics);
}

// Emits per-hazard heatmap CSVs and a text summary of the posterior maps
// for external plotting.
inline void cmd_export(const RunConfig& cfg) {
    namespace fs = std::filesystem;
    require_path(cfg.paths.out_dir, "out_dir");
    const fs::path out(cfg.paths.out_dir);

    const char* hazards[3] = {"ls", "lf", "bd"};
    bool any = false;
    std::ofstream summary(out / "summary.txt");
    if (!summary) throw io_error("cannot open for writing: " + (out / "summary.txt").string());

    for (const char* hz : hazards) {
        const fs::path raster_path = out / (std::string("posterior_") + hz + ".asc");
        if (!fs::exists(raster_path)) continue;
        any = true;
        const Raster raster = read_ascii_grid(raster_path.string());

        const fs::path csv_path = out / (std::string("heatmap_") + hz + ".csv");
        std::ofstream csv(csv_path);
        if (!csv) throw io_error("cannot open for writing: " + csv_path.string());
        csv << "row,col,value\n";
        std::vector<double> vals;
        for (int r = 0; r < raster.spec.nrows; ++r) {
            for (int c = 0; c < raster.spec.ncols; ++c) {
                const double v = raster.at(r, c);
                if (raster.is_nodata(v)) continue;
                csv << r << ',' << c << ',' << detail::format_value(v, 6) << "\n";
                vals.push_back(v);
            }
        }

        if (vals.empty()) {
            summary << hz << ": no data cells\n";
            continue;
        }
        std::sort(vals.begin(), vals.end());
        auto quantile = [&](double p) {
            const double idx = p * (vals.size() - 1);
            const std::size_t lo = static_cast<std::size_t>(std::floor(idx));
            const std::size_t hi = std::min(lo + 1, vals.size() - 1);
            const double frac = idx - lo;
            return vals[lo] * (1.0 - frac) + vals[hi] * frac;
        };
        double mean = 0.0;
        for (double v : vals) mean += v;
        mean /= static_cast<double>(vals.size());
        summary << hz << ": n=" << vals.size() << " min=" << detail::format_value(vals.front(), 6)
                << " max=" << detail::format_value(vals.back(), 6)
                << " mean=" << detail::format_value(mean, 6)
                << " p05=" << detail::format_value(quantile(0.05), 6)
                << " p25=" << detail::format_value(quantile(0.25), 6)
                << " p50=" << detail::format_value(quantile(0.50), 6)
                << " p75=" << detail::format_value(quantile(0.75), 6)
                << " p95=" << detail::format_value(quantile(0.95), 6) << "\n";
    }
    if (!any) throw io_error("export: no posterior rasters found in " + out.string());
}

}  // namespace gfsvi
