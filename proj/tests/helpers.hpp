#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "boxplus/measure.hpp"
#include "boxplus/rng.hpp"

// Shared generators for randomized property tests. Everything is driven by
// the library's own deterministic Rng so failures reproduce exactly.

inline boxplus::DiscreteMeasure random_measure(boxplus::Rng& rng,
                                               int max_atoms = 6,
                                               double span = 4.0) {
    const std::size_t n = 1 + rng.below(std::uint64_t(max_atoms));
    std::vector<double> xs(n), ws(n);
    double total = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        xs[k] = span * (rng.uniform01() - 0.5);
        ws[k] = 0.05 + rng.uniform01();
        total += ws[k];
    }
    for (double& w : ws) w /= total;
    return boxplus::DiscreteMeasure(std::move(xs), std::move(ws));
}

inline boxplus::HalfPlanePoint random_upper_point(boxplus::Rng& rng,
                                                  double span = 6.0) {
    // Heights spread over several decades to exercise both macroscopic and
    // nearly real spectral parameters.
    const double eta = std::pow(10.0, -6.0 * rng.uniform01() + 0.5);
    return boxplus::HalfPlanePoint(span * (rng.uniform01() - 0.5), eta);
}
