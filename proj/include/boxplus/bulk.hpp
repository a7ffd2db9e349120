#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "boxplus/errors.hpp"
#include "boxplus/measure.hpp"
#include "boxplus/subordination.hpp"

namespace boxplus {

// One row of a spectral scan at fixed probe height.
struct BulkPoint {
    double E;
    double eta;
    complex_t m;
    double density;  // Im m / pi at the probe height
    complex_t omega1;
    complex_t omega2;
    double gamma;  // +inf where the stability system is singular
    bool in_bulk;
    bool converged;
    int iterations;
};

struct BulkScan {
    std::vector<BulkPoint> rows;
    // Maximal runs of consecutive in_bulk grid points, as (E_first, E_last).
    std::vector<std::pair<double, double>> intervals;
    double density_floor;
    double im_floor;
};

/**
 * Scan [lo, hi] with n_grid equally spaced points at probe height
 * eta_probe and flag the regular bulk: points where the convolution has
 * genuine absolutely continuous density (above density_floor) and both
 * subordination functions sit clear of the real axis (Im omega - eta
 * above im_floor).
 *
 * The height margin matters: a point mass of the convolution also shows
 * huge smoothed density at the probe height, but drags one subordination
 * function down to height exactly eta, so the margin test rejects it.
 *
 * Each grid column is continued in eta: the solve starts at height
 * max(1, eta_probe) and walks down a geometric ladder, warm starting
 * every rung from the previous one, which keeps the solver in its
 * contraction basin even at eta_probe = 1e-6. Columns additionally warm
 * start from their left neighbour's top rung.
 */
inline BulkScan regular_bulk_scan(const DiscreteMeasure& mu1,
                                  const DiscreteMeasure& mu2, double lo,
                                  double hi, int n_grid, double eta_probe,
                                  double density_floor = 1e-3,
                                  double im_floor = 1e-3,
                                  const SolveOptions& base_opts = {}) {
    if (!(hi > lo)) throw DomainError("bulk scan needs hi > lo");
    if (n_grid < 2) throw DomainError("bulk scan needs at least two points");
    if (!(eta_probe > 0.0)) throw DomainError("probe height must be positive");

    BulkScan scan;
    scan.density_floor = density_floor;
    scan.im_floor = im_floor;
    scan.rows.reserve(std::size_t(n_grid));

    const double eta_top = std::max(1.0, eta_probe);
    // Geometric ladder from eta_top down to eta_probe, ~3 rungs per decade.
    std::vector<double> ladder{eta_top};
    while (ladder.back() > eta_probe * 1.0000001)
        ladder.push_back(std::max(eta_probe, ladder.back() * 0.46415888336));

    SolveOptions opts = base_opts;
    std::optional<complex_t> top_w1, top_w2;

    for (int g = 0; g < n_grid; ++g) {
        const double E = lo + (hi - lo) * double(g) / double(n_grid - 1);

        opts.omega1_init = top_w1;
        opts.omega2_init = top_w2;
        SubordinationPair pair{};
        int iters = 0;
        for (std::size_t r = 0; r < ladder.size(); ++r) {
            pair = solve_subordination(mu1, mu2, HalfPlanePoint(E, ladder[r]),
                                       opts);
            iters += pair.iterations;
            if (r == 0) {
                top_w1 = pair.omega1;  // seed for the next column
                top_w2 = pair.omega2;
            }
            opts.omega1_init = pair.omega1;
            opts.omega2_init = pair.omega2;
        }

        BulkPoint row;
        row.E = E;
        row.eta = eta_probe;
        row.m = stieltjes(mu1, HalfPlanePoint(pair.omega2.real(),
                                              pair.omega2.imag()));
        row.density = density_from_stieltjes(row.m);
        row.omega1 = pair.omega1;
        row.omega2 = pair.omega2;
        row.converged = pair.converged;
        row.iterations = iters;
        try {
            row.gamma =
                stability_gamma(mu1, mu2, pair.omega1, pair.omega2).gamma;
        } catch (const SingularJacobian&) {
            row.gamma = std::numeric_limits<double>::infinity();
        }
        const double margin =
            std::min(pair.omega1.imag(), pair.omega2.imag()) - eta_probe;
        row.in_bulk = pair.converged && row.density > density_floor &&
                      margin > im_floor;
        scan.rows.push_back(row);
    }

    // Collapse flagged runs into intervals.
    for (std::size_t i = 0; i < scan.rows.size(); ++i) {
        if (!scan.rows[i].in_bulk) continue;
        std::size_t j = i;
        while (j + 1 < scan.rows.size() && scan.rows[j + 1].in_bulk) ++j;
        scan.intervals.emplace_back(scan.rows[i].E, scan.rows[j].E);
        i = j;
    }
    return scan;
}

/**
 * Spectral band endpoints for the free additive convolution of two
 * two-point measures
 *
 *   mu_a = xi * d_1 + (1 - xi) * d_0,
 *   mu_b = zeta * d_theta + (1 - zeta) * d_0,
 *
 * in closed form. Admissible parameters: theta != 0, xi and zeta in
 * (0, 1/2] with xi <= zeta, excluding (theta, xi, zeta) = (-1, 1/2, 1/2)
 * (that convolution is a pure point mass). With
 *
 *   r_pm = xi + zeta - 2 xi zeta +- 2 sqrt(xi zeta (1-xi) (1-zeta))
 *
 * the four numbers are the sorted values of
 *
 *   (1 + theta -+ sqrt((1-theta)^2 + 4 theta r_pm)) / 2,
 *
 * returned as {l1, l2, l3, l4} with l1 <= l2 <= l3 <= l4. The absolutely
 * continuous spectrum fills (l1, l2) u (l3, l4); when the two measures
 * coincide (theta = 1, xi = zeta) the inner pair merges and the single
 * band (l1, l4) remains.
 */
inline std::array<double, 4> two_point_endpoints(double xi, double zeta,
                                                 double theta) {
    if (!std::isfinite(xi) || !std::isfinite(zeta) || !std::isfinite(theta))
        throw DomainError("endpoint parameters must be finite");
    if (theta == 0.0)
        throw DomainError("theta = 0 collapses the second measure to a "
                          "point mass");
    if (!(xi > 0.0 && xi <= 0.5) || !(zeta > 0.0 && zeta <= 0.5))
        throw DomainError("weights must lie in (0, 1/2]");
    if (xi > zeta)
        throw DomainError("weights must be ordered xi <= zeta");
    if (theta == -1.0 && xi == 0.5 && zeta == 0.5)
        throw DomainError("(theta, xi, zeta) = (-1, 1/2, 1/2) is purely "
                          "atomic and has no band endpoints");

    const double root = 2.0 * std::sqrt(xi * zeta * (1.0 - xi) * (1.0 - zeta));
    const double base = xi + zeta - 2.0 * xi * zeta;
    const double r_plus = base + root;
    const double r_minus = base - root;

    auto edge_pair = [theta](double r) -> std::array<double, 2> {
        const double disc = (1.0 - theta) * (1.0 - theta) + 4.0 * theta * r;
        if (disc < 0.0)
            throw DomainError("edge discriminant is negative; parameters "
                              "outside the admissible region");
        const double s = std::sqrt(disc);
        return {0.5 * (1.0 + theta - s), 0.5 * (1.0 + theta + s)};
    };

    const auto ep = edge_pair(r_plus);
    const auto em = edge_pair(r_minus);
    return {std::min(ep[0], em[0]), std::max(ep[0], em[0]),
            std::min(ep[1], em[1]), std::max(ep[1], em[1])};
}

// Band structure implied by the endpoints: one interval when the two
// two-point measures coincide, two otherwise.
inline std::vector<std::pair<double, double>> two_point_bulk(
    double xi, double zeta, double theta) {
    const auto l = two_point_endpoints(xi, zeta, theta);
    if (theta == 1.0 && xi == zeta) return {{l[0], l[3]}};
    return {{l[0], l[1]}, {l[2], l[3]}};
}

}  // namespace boxplus
