#pragma once

// Shared test oracles. These stay independent of the implementation paths
// they check: the matrix exponential comes from Eigen's scaling-and-squaring,
// scalar roots from plain bisection.

#include "fbl/types.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <functional>
#include <random>

namespace fbl_test {

inline fbl::Mat expm(const fbl::Mat& A) { return A.exp(); }

/// Bisection root of a scalar function on [lo, hi]; requires a sign change.
inline double bisect_root(const std::function<double(double)>& f, double lo, double hi,
                          double tol = 1e-12) {
    double flo = f(lo);
    for (int i = 0; i < 200 && hi - lo > tol; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if ((flo < 0) == (fm < 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

inline fbl::Vec random_vec(std::mt19937_64& rng, int n, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    fbl::Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = u(rng);
    return v;
}

}  // namespace fbl_test
