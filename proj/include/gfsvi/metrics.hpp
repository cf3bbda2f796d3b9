#pragma once

#include <algorithm>
#include <iostream>

#include "gfsvi/raster.hpp"

namespace gfsvi {

struct ConfusionCounts {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

    std::size_t total() const { return tp + fp + tn + fn; }
    double tpr() const { return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / (tp + fn); }
    double fpr() const { return fp + tn == 0 ? 0.0 : static_cast<double>(fp) / (fp + tn); }
};

struct RocPoint {
    double threshold = 0.0;
    double tpr = 0.0;
    double fpr = 0.0;
};

struct RocCurve {
    std::vector<RocPoint> points;  // thresholds strictly decreasing
};

namespace detail {

// paired (score, truth) over cells that carry data in both rasters
inline void gather_scored_cells(const Raster& scores, const Raster& truth,
                                std::vector<double>& s_out, std::vector<int>& g_out) {
    if (!scores.spec.same_geometry(truth.spec)) {
        throw std::invalid_argument("metrics: score and truth grids do not match");
    }
    s_out.clear();
    g_out.clear();
    for (std::size_t i = 0; i < scores.values.size(); ++i) {
        const double s = scores.values[i];
        const double g = truth.values[i];
        if (scores.is_nodata(s) || truth.is_nodata(g)) continue;
        s_out.push_back(s);
        g_out.push_back(g > 0.5 ? 1 : 0);
    }
}

}  // namespace detail

// Predicted positive iff score >= tau, over cells with data in both rasters.
inline ConfusionCounts confusion_at_threshold(const Raster& scores, const Raster& truth, double tau) {
    std::vector<double> s;
    std::vector<int> g;
    detail::gather_scored_cells(scores, truth, s, g);
    ConfusionCounts cc;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const bool pred = s[i] >= tau;
        if (pred && g[i]) ++cc.tp;
        else if (pred && !g[i]) ++cc.fp;
        else if (!pred && g[i]) ++cc.fn;
        else ++cc.tn;
    }
    return cc;
}

// Threshold sweep: n_thresholds evenly spaced values over the score range
// plus sentinels outside it; consecutive duplicate (fpr, tpr) points are
// collapsed so the curve is the set of distinct operating points.
inline RocCurve roc_curve(const Raster& scores, const Raster& truth, int n_thresholds = 256) {
    if (n_thresholds < 1) throw std::invalid_argument("roc_curve: n_thresholds must be >= 1");
    std::vector<double> s;
    std::vector<int> g;
    detail::gather_scored_cells(scores, truth, s, g);
    std::size_t pos = 0;
    for (int v : g) pos += v;
    if (pos == 0 || pos == g.size()) {
        throw std::invalid_argument("roc_curve: truth is degenerate (single class)");
    }

    const double lo = *std::min_element(s.begin(), s.end());
    const double hi = *std::max_element(s.begin(), s.end());
    const double span = hi - lo;
    const double pad = span > 0.0 ? span / n_thresholds : 1.0;

    std::vector<double> taus;
    taus.push_back(hi + pad);
    if (span > 0.0 && n_thresholds >= 2) {
        for (int k = 0; k < n_thresholds; ++k) {
            taus.push_back(hi - span * k / (n_thresholds - 1));
        }
    } else {
        taus.push_back(hi);
    }
    taus.push_back(lo - pad);

    const std::size_t neg = g.size() - pos;
    RocCurve curve;
    for (double tau : taus) {
        std::size_t tp = 0, fp = 0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] >= tau) {
                if (g[i]) ++tp;
                else ++fp;
            }
        }
        RocPoint p;
        p.threshold = tau;
        p.tpr = static_cast<double>(tp) / pos;
        p.fpr = static_cast<double>(fp) / neg;
        if (!curve.points.empty() && curve.points.back().tpr == p.tpr &&
            curve.points.back().fpr == p.fpr) {
            continue;
        }
        if (!curve.points.empty() && tau >= curve.points.back().threshold) continue;
        curve.points.push_back(p);
    }
    return curve;
}

// Trapezoidal area under tpr over fpr.
inline double auc(const RocCurve& curve) {
    double area = 0.0;
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
        const auto& a = curve.points[i - 1];
        const auto& b = curve.points[i];
        area += (b.fpr - a.fpr) * 0.5 * (a.tpr + b.tpr);
    }
    return area;
}

// Min-max rescale to [0,1] then clamp into [1e-6, 1-1e-6]; a constant
// raster maps to all 0.5 (with a notice) so downstream losses stay defined.
inline Raster normalize_scores(const Raster& scores, bool* constant_input = nullptr) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    std::size_t n_valid = 0;
    for (double v : scores.values) {
        if (scores.is_nodata(v)) continue;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        ++n_valid;
    }
    if (n_valid == 0) throw std::invalid_argument("normalize_scores: raster has no data cells");

    constexpr double kClamp = 1e-6;
    Raster out = scores;
    const bool constant = !(hi - lo > 0.0);
    if (constant_input) *constant_input = constant;
    if (constant) {
        std::cerr << "normalize_scores: constant raster, emitting all 0.5\n";
        for (double& v : out.values) {
            if (!scores.is_nodata(v)) v = 0.5;
        }
        return out;
    }
    for (double& v : out.values) {
        if (scores.is_nodata(v)) continue;
        v = std::min(std::max((v - lo) / (hi - lo), kClamp), 1.0 - kClamp);
    }
    return out;
}

// Mean binary cross-entropy of (already normalized) scores against the
// binary truth raster.
inline double cross_entropy_loss(const Raster& scores, const Raster& truth) {
    std::vector<double> s;
    std::vector<int> g;
    detail::gather_scored_cells(scores, truth, s, g);
    if (s.empty()) throw std::invalid_argument("cross_entropy_loss: empty evaluation set");
    double total = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        total += g[i] ? std::log(s[i]) : std::log1p(-s[i]);
    }
    return -total / static_cast<double>(s.size());
}

}  // namespace gfsvi
