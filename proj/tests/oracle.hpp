#pragma once

// Reference recurrences written directly from the update rules, sharing no
// code with the library. Powers of beta are kept as running products.

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;
using GradFn = std::function<Vec(const Vec&)>;

struct Trace {
    std::vector<Vec> theta;  // theta[0] is the start
    std::vector<Vec> eta;    // per step (LyAm only)
};

inline Trace lyam(Vec theta, const GradFn& grad, std::size_t steps, double eta0, double b1,
                  double b2) {
    const std::size_t n = theta.size();
    Vec m(n, 0.0), v(n, 0.0);
    double p1 = 1.0, p2 = 1.0;
    Trace tr;
    tr.theta.push_back(theta);
    for (std::size_t t = 1; t <= steps; ++t) {
        const Vec g = grad(theta);
        p1 *= b1;
        p2 *= b2;
        Vec eta(n);
        for (std::size_t i = 0; i < n; ++i) {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * (g[i] * g[i]);
            const double mh = m[i] / (1.0 - p1);
            const double vh = v[i] / (1.0 - p2);
            eta[i] = eta0 / (1.0 + vh);
            theta[i] = theta[i] - eta[i] * mh;
        }
        tr.theta.push_back(theta);
        tr.eta.push_back(eta);
    }
    return tr;
}

inline Trace adam(Vec theta, const GradFn& grad, std::size_t steps, double eta0, double b1,
                  double b2, double eps) {
    const std::size_t n = theta.size();
    Vec m(n, 0.0), v(n, 0.0);
    double p1 = 1.0, p2 = 1.0;
    Trace tr;
    tr.theta.push_back(theta);
    for (std::size_t t = 1; t <= steps; ++t) {
        const Vec g = grad(theta);
        p1 *= b1;
        p2 *= b2;
        for (std::size_t i = 0; i < n; ++i) {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * (g[i] * g[i]);
            const double mh = m[i] / (1.0 - p1);
            const double vh = v[i] / (1.0 - p2);
            const double rate = eta0 / (std::sqrt(vh) + eps);
            theta[i] = theta[i] - rate * mh;
        }
        tr.theta.push_back(theta);
    }
    return tr;
}

/// |a - b| / max(|a|, |b|), zero when both are zero.
inline double rel_err(double a, double b) {
    const double d = std::max(std::abs(a), std::abs(b));
    return d == 0.0 ? 0.0 : std::abs(a - b) / d;
}

inline double max_rel_err(const Vec& a, const Vec& b) {
    double e = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) e = std::max(e, rel_err(a[i], b[i]));
    return e;
}

}  // namespace oracle
