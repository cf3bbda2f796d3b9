#pragma once

#include <optional>
#include <vector>

#include "gfsvi/model.hpp"
#include "gfsvi/parallel.hpp"

namespace gfsvi {

// Per-cell variational marginals. The bias node is fixed active and not
// stored; q_bd is absent on cells without a building footprint.
struct PosteriorState {
    double q_ls = 0.5;
    double q_lf = 0.5;
    std::optional<double> q_bd;
};

// One entry per WeightSet field, same order.
struct BoundGradient {
    double w0_ls = 0.0, w0_lf = 0.0, w0_bd = 0.0;
    double wa_ls = 0.0, wa_lf = 0.0;
    double we_ls = 0.0, we_lf = 0.0, we_bd = 0.0;
    double w_ls_bd = 0.0, w_lf_bd = 0.0;
    double w0_y = 0.0;
    double w_ls_y = 0.0, w_lf_y = 0.0, w_bd_y = 0.0;
    double we_y = 0.0;

    static constexpr int kCount = WeightSet::kCount;

    static constexpr double BoundGradient::* field(int i) {
        constexpr double BoundGradient::* fields[kCount] = {
            &BoundGradient::w0_ls,   &BoundGradient::w0_lf,   &BoundGradient::w0_bd,
            &BoundGradient::wa_ls,   &BoundGradient::wa_lf,   &BoundGradient::we_ls,
            &BoundGradient::we_lf,   &BoundGradient::we_bd,   &BoundGradient::w_ls_bd,
            &BoundGradient::w_lf_bd, &BoundGradient::w0_y,    &BoundGradient::w_ls_y,
            &BoundGradient::w_lf_y,  &BoundGradient::w_bd_y,  &BoundGradient::we_y};
        return fields[i];
    }
    double get(int i) const { return this->*field(i); }
    void set(int i, double v) { this->*field(i) = v; }
    void add(int i, double v) { this->*field(i) += v; }
};

namespace detail {

inline void check_q_range(double q, const char* what) {
    if (!(q >= kQMin - 1e-12 && q <= 1.0 - kQMin + 1e-12)) {
        throw std::invalid_argument(std::string("posterior out of range: ") + what);
    }
}

inline void check_state(const LocationRecord& rec, const PosteriorState& q) {
    if (!rec.valid) throw std::invalid_argument("invalid record passed to bound evaluation");
    check_q_range(q.q_ls, "q_ls");
    check_q_range(q.q_lf, "q_lf");
    if (rec.has_building != q.q_bd.has_value()) {
        throw std::invalid_argument("posterior state does not match footprint flag");
    }
    if (q.q_bd) check_q_range(*q.q_bd, "q_bd");
}

// Building-damage block: the two exclusive parents are expanded over the
// three feasible configurations {none, LS-only, LF-only}, with mean-field
// coefficients renormalized by their sum.
struct BdBlock {
    double pi[3];    // config probabilities: 00, 10, 01
    double g1[3];    // softplus terms for x_bd = 1
    double g0[3];    // softplus terms for x_bd = 0
    double big_g[3]; // q_bd-weighted combination
    double c[3];     // unnormalized coefficients
    double z;        // normalizer 1 - q_ls*q_lf

    BdBlock(double q1, double q2, double q3, const WeightSet& w) {
        const double half_e2 = 0.5 * w.we_bd * w.we_bd;
        const double m[3] = {0.0, w.w_ls_bd, w.w_lf_bd};
        c[0] = (1.0 - q1) * (1.0 - q2);
        c[1] = q1 * (1.0 - q2);
        c[2] = (1.0 - q1) * q2;
        z = 1.0 - q1 * q2;
        for (int k = 0; k < 3; ++k) {
            pi[k] = c[k] / z;
            g1[k] = softplus(-(w.w0_bd + m[k]) + half_e2);
            g0[k] = softplus(w.w0_bd + m[k] + half_e2);
            big_g[k] = q3 * g1[k] + (1.0 - q3) * g0[k];
        }
    }

    double value() const { return -(pi[0] * big_g[0] + pi[1] * big_g[1] + pi[2] * big_g[2]); }
};

inline double entropy(double q) {
    return -(q * std::log(q) + (1.0 - q) * std::log(1.0 - q));
}

}  // namespace detail

// Components of the per-location bound; their sum is location_bound.
struct BoundTerms {
    double dpm = 0.0;
    double prior_ls = 0.0;
    double prior_lf = 0.0;
    double bd = 0.0;
    double xor_term = 0.0;
    double entropy = 0.0;

    double total() const { return dpm + prior_ls + prior_lf + bd + xor_term + entropy; }
};

// Per-location contribution to the variational lower bound, written against
// the expanded Gaussian observation terms, the noise-inflated prior and
// damage terms, the exclusivity penalty at u = 0, and the entropy of q.
inline BoundTerms location_bound_terms(const LocationRecord& rec, const PosteriorState& q,
                                       const WeightSet& w, const HyperParams& h) {
    detail::check_state(rec, q);
    const double q1 = q.q_ls;
    const double q2 = q.q_lf;
    const bool bd = rec.has_building;
    const double q3 = bd ? *q.q_bd : 0.0;

    BoundTerms out;

    const double t = std::log(rec.y + h.delta);
    const double s = w.we_y;
    double s1 = w.w_ls_y * q1 + w.w_lf_y * q2;
    double var = w.w_ls_y * w.w_ls_y * q1 * (1.0 - q1) + w.w_lf_y * w.w_lf_y * q2 * (1.0 - q2);
    if (bd) {
        s1 += w.w_bd_y * q3;
        var += w.w_bd_y * w.w_bd_y * q3 * (1.0 - q3);
    }
    const double resid = t - w.w0_y - s1;
    out.dpm = -t - std::log(s) - (resid * resid + var) / (2.0 * s * s);

    const double eta_ls = w.w0_ls + w.wa_ls * rec.alpha_ls;
    const double eta_lf = w.w0_lf + w.wa_lf * rec.alpha_lf;
    const double infl_ls = 0.5 * w.we_ls * w.we_ls;
    const double infl_lf = 0.5 * w.we_lf * w.we_lf;
    out.prior_ls = -q1 * softplus(-eta_ls + infl_ls) - (1.0 - q1) * softplus(eta_ls + infl_ls);
    out.prior_lf = -q2 * softplus(-eta_lf + infl_lf) - (1.0 - q2) * softplus(eta_lf + infl_lf);

    if (bd) {
        out.bd = detail::BdBlock(q1, q2, q3, w).value();
    }

    out.xor_term = -(q1 * q2) / (2.0 * h.sigma_xor * h.sigma_xor);

    out.entropy = detail::entropy(q1) + detail::entropy(q2);
    if (bd) out.entropy += detail::entropy(q3);

    return out;
}

inline double location_bound(const LocationRecord& rec, const PosteriorState& q,
                             const WeightSet& w, const HyperParams& h) {
    return location_bound_terms(rec, q, w, h).total();
}

template <typename Records, typename Posteriors>
double total_bound(const Records& records, const Posteriors& q_table, const WeightSet& w,
                   const HyperParams& h) {
    const std::size_t n = records.size();
    if (q_table.size() != n) throw std::invalid_argument("total_bound: table size mismatch");
    return parallel_sum(n, [&](std::size_t i) { return location_bound(records[i], q_table[i], w, h); });
}

// Derivative of the entropy-free part of the per-location bound with
// respect to one marginal; sigmoid of this value is the optimal coordinate
// update for that node.
inline double posterior_logit_T(const LocationRecord& rec, NodeKind node, const PosteriorState& q,
                                const WeightSet& w, const HyperParams& h) {
    detail::check_state(rec, q);
    const double q1 = q.q_ls;
    const double q2 = q.q_lf;
    const bool bd = rec.has_building;
    const double q3 = bd ? *q.q_bd : 0.0;

    const double t = std::log(rec.y + h.delta);
    const double s2 = w.we_y * w.we_y;
    double s1 = w.w_ls_y * q1 + w.w_lf_y * q2;
    if (bd) s1 += w.w_bd_y * q3;
    const double resid = t - w.w0_y - s1;

    auto dpm_part = [&](double a, double qi) {
        return a * resid / s2 - a * a * (1.0 - 2.0 * qi) / (2.0 * s2);
    };

    switch (node) {
        case NodeKind::LandslideLS:
        case NodeKind::LiquefactionLF: {
            const bool is_ls = node == NodeKind::LandslideLS;
            const double a = is_ls ? w.w_ls_y : w.w_lf_y;
            const double qi = is_ls ? q1 : q2;
            const double qo = is_ls ? q2 : q1;  // spouse marginal
            const double eta = is_ls ? w.w0_ls + w.wa_ls * rec.alpha_ls
                                     : w.w0_lf + w.wa_lf * rec.alpha_lf;
            const double infl = is_ls ? 0.5 * w.we_ls * w.we_ls : 0.5 * w.we_lf * w.we_lf;
            double T = dpm_part(a, qi);
            T += -softplus(-eta + infl) + softplus(eta + infl);
            T += -qo / (2.0 * h.sigma_xor * h.sigma_xor);
            if (bd) {
                const detail::BdBlock blk(q1, q2, q3, w);
                // d(c)/dq for this node, configs 00/10/01
                double dc[3], dz;
                if (is_ls) {
                    dc[0] = -(1.0 - q2);
                    dc[1] = (1.0 - q2);
                    dc[2] = -q2;
                    dz = -q2;
                } else {
                    dc[0] = -(1.0 - q1);
                    dc[1] = -q1;
                    dc[2] = (1.0 - q1);
                    dz = -q1;
                }
                double num = 0.0, nval = 0.0;
                for (int k = 0; k < 3; ++k) {
                    num += dc[k] * blk.big_g[k];
                    nval += blk.c[k] * blk.big_g[k];
                }
                T += -(num * blk.z - nval * dz) / (blk.z * blk.z);
            }
            return T;
        }
        case NodeKind::BuildingDamageBD: {
            if (!bd) throw std::invalid_argument("posterior_logit_T: no damage node at this location");
            const detail::BdBlock blk(q1, q2, q3, w);
            double T = dpm_part(w.w_bd_y, q3);
            for (int k = 0; k < 3; ++k) T += blk.pi[k] * (blk.g0[k] - blk.g1[k]);
            return T;
        }
        default:
            throw std::invalid_argument("posterior_logit_T: node has no variational marginal");
    }
}

// Analytic gradient of the summed bound over a batch with respect to every
// weight; verified against central finite differences in the test suite.
template <typename Records, typename Posteriors>
BoundGradient weight_gradient(const Records& records, const Posteriors& q_table,
                              const WeightSet& w, const HyperParams& h) {
    const std::size_t n = records.size();
    if (n == 0) throw std::invalid_argument("weight_gradient: empty batch");
    if (q_table.size() != n) throw std::invalid_argument("weight_gradient: table size mismatch");

    BoundGradient g;
    for (std::size_t i = 0; i < n; ++i) {
        const LocationRecord& rec = records[i];
        const PosteriorState& q = q_table[i];
        detail::check_state(rec, q);
        const double q1 = q.q_ls;
        const double q2 = q.q_lf;
        const bool bd = rec.has_building;
        const double q3 = bd ? *q.q_bd : 0.0;

        // observation block
        const double t = std::log(rec.y + h.delta);
        const double s = w.we_y;
        const double s2 = s * s;
        double s1 = w.w_ls_y * q1 + w.w_lf_y * q2;
        double var = w.w_ls_y * w.w_ls_y * q1 * (1.0 - q1) + w.w_lf_y * w.w_lf_y * q2 * (1.0 - q2);
        if (bd) {
            s1 += w.w_bd_y * q3;
            var += w.w_bd_y * w.w_bd_y * q3 * (1.0 - q3);
        }
        const double resid = t - w.w0_y - s1;
        g.w0_y += resid / s2;
        g.w_ls_y += (resid * q1 - w.w_ls_y * q1 * (1.0 - q1)) / s2;
        g.w_lf_y += (resid * q2 - w.w_lf_y * q2 * (1.0 - q2)) / s2;
        if (bd) g.w_bd_y += (resid * q3 - w.w_bd_y * q3 * (1.0 - q3)) / s2;
        g.we_y += -1.0 / s + (resid * resid + var) / (s2 * s);

        // ground-failure prior blocks
        {
            const double eta = w.w0_ls + w.wa_ls * rec.alpha_ls;
            const double infl = 0.5 * w.we_ls * w.we_ls;
            const double sp = sigmoid(-eta + infl);
            const double sm = sigmoid(eta + infl);
            const double deta = q1 * sp - (1.0 - q1) * sm;
            g.w0_ls += deta;
            g.wa_ls += rec.alpha_ls * deta;
            g.we_ls += -(q1 * sp + (1.0 - q1) * sm) * w.we_ls;
        }
        {
            const double eta = w.w0_lf + w.wa_lf * rec.alpha_lf;
            const double infl = 0.5 * w.we_lf * w.we_lf;
            const double sp = sigmoid(-eta + infl);
            const double sm = sigmoid(eta + infl);
            const double deta = q2 * sp - (1.0 - q2) * sm;
            g.w0_lf += deta;
            g.wa_lf += rec.alpha_lf * deta;
            g.we_lf += -(q2 * sp + (1.0 - q2) * sm) * w.we_lf;
        }

        // damage block, footprint cells only
        if (bd) {
            const double half_e2 = 0.5 * w.we_bd * w.we_bd;
            const double m[3] = {0.0, w.w_ls_bd, w.w_lf_bd};
            const detail::BdBlock blk(q1, q2, q3, w);
            for (int k = 0; k < 3; ++k) {
                const double sp = sigmoid(-(w.w0_bd + m[k]) + half_e2);
                const double sm = sigmoid(w.w0_bd + m[k] + half_e2);
                const double dm = blk.pi[k] * (q3 * sp - (1.0 - q3) * sm);
                g.w0_bd += dm;
                if (k == 1) g.w_ls_bd += dm;
                if (k == 2) g.w_lf_bd += dm;
                g.we_bd += -blk.pi[k] * (q3 * sp + (1.0 - q3) * sm) * w.we_bd;
            }
        }
    }
    return g;
}

}  // namespace gfsvi
