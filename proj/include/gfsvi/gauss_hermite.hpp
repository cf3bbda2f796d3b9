#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace gfsvi {

struct GaussHermiteRule {
    std::vector<double> nodes;    // roots of H_n, ascending
    std::vector<double> weights;  // for weight function exp(-x^2)
};

// Nodes and weights by Newton iteration on the orthonormal Hermite
// recurrence; standard initial guesses track the largest roots inward.
inline GaussHermiteRule gauss_hermite(int n) {
    if (n < 1) throw std::invalid_argument("gauss_hermite: order must be >= 1");
    constexpr double kTol = 1e-14;
    const double pim4 = 0.7511255444649425;  // pi^{-1/4}
    GaussHermiteRule rule;
    rule.nodes.assign(n, 0.0);
    rule.weights.assign(n, 0.0);
    const int m = (n + 1) / 2;
    double z = 0.0;
    for (int i = 0; i < m; ++i) {
        if (i == 0) {
            z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
        } else if (i == 1) {
            z -= 1.14 * std::pow(n, 0.426) / z;
        } else if (i == 2) {
            z = 1.86 * z - 0.86 * rule.nodes[n - 1];
        } else if (i == 3) {
            z = 1.91 * z - 0.91 * rule.nodes[n - 2];
        } else {
            z = 2.0 * z - rule.nodes[n - i + 1];
        }
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p1 = pim4;
            double p2 = 0.0;
            for (int j = 1; j <= n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / j) * p2 - std::sqrt((j - 1.0) / j) * p3;
            }
            pp = std::sqrt(2.0 * n) * p2;
            const double dz = p1 / pp;
            z -= dz;
            if (std::abs(dz) <= kTol) break;
        }
        rule.nodes[n - 1 - i] = z;
        rule.nodes[i] = -z;
        rule.weights[n - 1 - i] = 2.0 / (pp * pp);
        rule.weights[i] = rule.weights[n - 1 - i];
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
    return rule;
}

// E[f(eps)] for eps ~ N(0,1) via the substitution eps = sqrt(2) x.
template <typename Fn>
double gauss_hermite_expect(const GaussHermiteRule& rule, Fn&& f) {
    constexpr double inv_sqrt_pi = 0.5641895835477563;
    double s = 0.0;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
        s += rule.weights[k] * f(std::sqrt(2.0) * rule.nodes[k]);
    }
    return inv_sqrt_pi * s;
}

}  // namespace gfsvi
