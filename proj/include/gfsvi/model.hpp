#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "gfsvi/common.hpp"

namespace gfsvi {

// Node family of the per-location causal graph: two mutually exclusive
// ground-failure nodes, an optional building-damage node gated by the
// footprint, the observed surface-change value, the exclusivity node, and
// the always-on bias input.
enum class NodeKind {
    LandslideLS,
    LiquefactionLF,
    BuildingDamageBD,
    ObservationY,
    ExclusivityU,
    BiasX0,
};

// All edge weights, noise scales and bias terms of the graph.
//
// The defaults are the cold-start initialization: the ground-failure bias
// and prior weights linearize logit(alpha) over the working prior range,
// and the observation couplings start neutral so the marginals stay
// anchored to the priors until the observation bias has calibrated.
// Starting the couplings positive can collapse one hazard channel.
struct WeightSet {
    double w0_ls = -3.5, w0_lf = -3.5, w0_bd = 0.0;  // bias weights (logit units)
    double wa_ls = 6.0, wa_lf = 6.0;                 // prior-input weights
    double we_ls = 0.1, we_lf = 0.1, we_bd = 0.1;    // latent noise scales, >= 0
    double w_ls_bd = 0.5, w_lf_bd = 0.5;             // ground failure -> damage
    double w0_y = -0.1;                              // observation bias, <= 0
    double w_ls_y = 0.0, w_lf_y = 0.0, w_bd_y = 0.0;
    double we_y = 1.0;                               // observation noise scale, >= 1e-3

    static constexpr int kCount = 15;

    // fixed field order, shared with BoundGradient
    static constexpr double WeightSet::* field(int i) {
        constexpr double WeightSet::* fields[kCount] = {
            &WeightSet::w0_ls,   &WeightSet::w0_lf,  &WeightSet::w0_bd, &WeightSet::wa_ls,
            &WeightSet::wa_lf,   &WeightSet::we_ls,  &WeightSet::we_lf, &WeightSet::we_bd,
            &WeightSet::w_ls_bd, &WeightSet::w_lf_bd, &WeightSet::w0_y, &WeightSet::w_ls_y,
            &WeightSet::w_lf_y,  &WeightSet::w_bd_y, &WeightSet::we_y};
        return fields[i];
    }

    static const char* field_name(int i) {
        static const char* names[kCount] = {
            "w0_ls", "w0_lf", "w0_bd", "wa_ls", "wa_lf", "we_ls", "we_lf", "we_bd",
            "w_ls_bd", "w_lf_bd", "w0_y", "w_ls_y", "w_lf_y", "w_bd_y", "we_y"};
        return names[i];
    }

    double get(int i) const { return this->*field(i); }
    void set(int i, double v) { this->*field(i) = v; }

    void validate() const {
        for (int i = 0; i < kCount; ++i) {
            if (!std::isfinite(get(i))) throw std::invalid_argument("WeightSet: non-finite entry");
        }
        if (we_y < kWeyFloor) throw std::invalid_argument("WeightSet: we_y below 1e-3 floor");
        if (w0_y > 0.0) throw std::invalid_argument("WeightSet: w0_y must be <= 0");
        if (we_ls < 0.0 || we_lf < 0.0 || we_bd < 0.0) {
            throw std::invalid_argument("WeightSet: noise scales must be >= 0");
        }
    }
};

struct HyperParams {
    double sigma_xor = 0.1;    // width of the exclusivity relaxation, (0,1]
    double delta = 1e-4;       // log-offset for the observation, (0,0.01]
    double rho = 1e-3;         // learning rate (0 disables the M-step)
    int batch_size = 128;
    int e_sweeps_max = 50;
    double e_tol = 1e-8;
    int max_epochs = 200;
    std::uint64_t seed = 12345;

    void validate() const {
        if (!(sigma_xor > 0.0 && sigma_xor <= 1.0)) {
            throw config_error("HyperParams: sigma_xor must be in (0,1]");
        }
        if (!(delta > 0.0 && delta <= 0.01)) {
            throw config_error("HyperParams: delta must be in (0,0.01]");
        }
        if (!(rho >= 0.0) || !std::isfinite(rho)) {
            throw config_error("HyperParams: rho must be >= 0");
        }
        if (batch_size < 1) throw config_error("HyperParams: batch_size must be >= 1");
        if (e_sweeps_max < 1) throw config_error("HyperParams: e_sweeps_max must be >= 1");
        if (!(e_tol > 0.0)) throw config_error("HyperParams: e_tol must be > 0");
        if (max_epochs < 1) throw config_error("HyperParams: max_epochs must be >= 1");
    }
};

// One grid cell: observation, priors and footprint flag. Invalid records
// (NODATA in any mandatory input) never enter inference.
struct LocationRecord {
    int row = 0, col = 0;
    double y = 0.0;         // surface-change observation, clamped to [delta,1]
    double alpha_ls = 0.0;  // prior probability inputs in [0,1]
    double alpha_lf = 0.0;
    bool has_building = false;
    bool valid = false;

    static LocationRecord make(int row, int col, double y, double alpha_ls, double alpha_lf,
                               bool has_building, double delta) {
        LocationRecord r;
        r.row = row;
        r.col = col;
        if (alpha_ls < -1e-6 || alpha_ls > 1.0 + 1e-6 || alpha_lf < -1e-6 || alpha_lf > 1.0 + 1e-6) {
            throw io_error("LocationRecord: prior probability outside [0,1]");
        }
        r.y = std::min(std::max(y, delta), 1.0);
        r.alpha_ls = std::min(std::max(alpha_ls, 0.0), 1.0);
        r.alpha_lf = std::min(std::max(alpha_lf, 0.0), 1.0);
        r.has_building = has_building;
        r.valid = true;
        return r;
    }
};

// log-odds that a latent node is active given noise and parent states;
// the always-on bias input is folded into bias_w
inline double latent_logit(double bias_w, double noise_w, double noise_value,
                           const std::vector<std::pair<double, double>>& parent_terms) {
    double z = bias_w + noise_w * noise_value;
    for (const auto& [weight, state] : parent_terms) z += weight * state;
    return z;
}

// Complement computed as 1 - p so the two states sum to one exactly.
inline double latent_activation_prob(double logit, int state) {
    if (state != 0 && state != 1) {
        throw std::invalid_argument("latent_activation_prob: state must be 0 or 1");
    }
    const double p = sigmoid(logit);
    return state == 1 ? p : 1.0 - p;
}

// Log-density of the observation y given its latent parents:
// log(y+delta) is normal with mean w0_y + sum of active parent weights and
// sd we_y, with the change-of-variables term; `truncated` adds the
// normalizer for support capped at log(1+delta).
inline double dpm_log_density(double y, int x_ls, int x_lf, int x_bd, const WeightSet& w,
                              double delta, bool truncated, bool has_building = true) {
    if (y < delta || y > 1.0) {
        throw std::invalid_argument("dpm_log_density: y outside [delta, 1]");
    }
    double mu = w.w0_y + w.w_ls_y * x_ls + w.w_lf_y * x_lf;
    if (has_building) mu += w.w_bd_y * x_bd;
    const double s = w.we_y;
    const double t = std::log(y + delta);
    const double z = (t - mu) / s;
    double lp = -t - std::log(s) - 0.5 * kLogTwoPi - 0.5 * z * z;
    if (truncated) {
        lp -= norm_log_cdf((std::log1p(delta) - mu) / s);
    }
    return lp;
}

// Gaussian relaxation of the exclusivity constraint between the two
// ground-failure nodes; u is identically 0 in the pipeline.
inline double xor_log_potential(double u, int x_ls, int x_lf, double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("xor_log_potential: sigma must be > 0");
    const double d = u - static_cast<double>(x_ls * x_lf);
    return -std::log(kSqrtTwoPi * sigma) - d * d / (2.0 * sigma * sigma);
}

struct LocalGraph {
    std::vector<NodeKind> nodes;
    std::vector<std::pair<NodeKind, NodeKind>> edges;  // latent/observation edges
    std::vector<NodeKind> y_parents;                   // latent parents of Y
    bool has_bd = false;
};

inline LocalGraph build_location_graph(const LocationRecord& rec) {
    if (!rec.valid) throw std::invalid_argument("build_location_graph: invalid record");
    using NK = NodeKind;
    LocalGraph g;
    g.has_bd = rec.has_building;
    g.nodes = {NK::LandslideLS, NK::LiquefactionLF, NK::ObservationY, NK::ExclusivityU, NK::BiasX0};
    g.edges = {{NK::LandslideLS, NK::ObservationY},  {NK::LiquefactionLF, NK::ObservationY},
               {NK::LandslideLS, NK::ExclusivityU},  {NK::LiquefactionLF, NK::ExclusivityU},
               {NK::BiasX0, NK::LandslideLS},        {NK::BiasX0, NK::LiquefactionLF},
               {NK::BiasX0, NK::ObservationY}};
    g.y_parents = {NK::LandslideLS, NK::LiquefactionLF};
    if (rec.has_building) {
        g.nodes.push_back(NK::BuildingDamageBD);
        g.edges.push_back({NK::LandslideLS, NK::BuildingDamageBD});
        g.edges.push_back({NK::LiquefactionLF, NK::BuildingDamageBD});
        g.edges.push_back({NK::BuildingDamageBD, NK::ObservationY});
        g.edges.push_back({NK::BiasX0, NK::BuildingDamageBD});
        g.y_parents.push_back(NK::BuildingDamageBD);
    }
    return g;
}

}  // namespace gfsvi
