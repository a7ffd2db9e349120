#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>

#include "boxplus/errors.hpp"
#include "boxplus/measure.hpp"

namespace boxplus {

// The subordination system for the free additive convolution of two
// measures. Writing F1, F2 for the negative reciprocals of the Stieltjes
// transforms, the subordination functions omega1, omega2 solve
//
//     F1(omega2) = omega1 + omega2 - z
//     F2(omega1) = omega1 + omega2 - z
//
// and the convolved transform is m(z) = m1(omega2) = -1 / (omega1 +
// omega2 - z). Both omegas live in the upper half plane with
// Im omega_j >= Im z.

struct SolveOptions {
    double tol = 1e-12;  // absolute residual target for the 2-vector
    int max_iter = 10000;
    double switch_threshold = 1e-3;  // residual below which Newton engages
    // Warm starts; both must be supplied to take effect.
    std::optional<complex_t> omega1_init;
    std::optional<complex_t> omega2_init;
};

struct SubordinationPair {
    complex_t omega1;
    complex_t omega2;
    double residual;  // Euclidean norm of the two defining equations
    int iterations;
    bool converged;
};

namespace detail {

inline complex_t F_of(const DiscreteMeasure& mu, complex_t w) {
    return neg_recip(mu, HalfPlanePoint(w.real(), w.imag()));
}

inline complex_t Fprime_of(const DiscreteMeasure& mu, complex_t w) {
    return neg_recip_derivative(mu, HalfPlanePoint(w.real(), w.imag()));
}

inline double norm2(complex_t a, complex_t b) {
    return std::sqrt(std::norm(a) + std::norm(b));
}

}  // namespace detail

// Residual of the defining system at an arbitrary point pair.
inline std::array<complex_t, 2> phi_residual(const DiscreteMeasure& mu1,
                                             const DiscreteMeasure& mu2,
                                             complex_t omega1, complex_t omega2,
                                             HalfPlanePoint z) {
    const complex_t sum = omega1 + omega2 - z.value();
    return {detail::F_of(mu1, omega2) - sum, detail::F_of(mu2, omega1) - sum};
}

/**
 * Solve the subordination system at one spectral parameter.
 *
 * The first equation is substituted into the second: with
 *
 *     u(w) = z + F1(w) - w        (the candidate omega1 given omega2 = w)
 *     g(w) = z + F2(u(w)) - u(w) - w
 *
 * a zero of g is exactly a solution pair (u(w), w), and the first
 * residual component vanishes identically along the way. Working in the
 * reduced variable matters: the full 2x2 iteration has a soft mode near
 * points where (F1'-1)(F2'-1) approaches 1, along which a pair can drift
 * far from the solution while both residuals stay small. The reduction
 * removes that direction entirely.
 *
 * Globally, w <- w + damp * g(w) is damped alternating substitution
 * (omega1 <- z + F1(omega2) - omega2, then omega2 <- z + F2(omega1) -
 * omega1, blended with the previous iterate). It is a self-map of the
 * upper half plane: Im F(w) >= Im w keeps every iterate at height
 * >= Im z, so the iteration cannot leave the domain, and the undamped
 * orbit provably converges to the unique fixed point. Full steps are the
 * default; near-parabolic points (band edges, merging bands at small
 * eta) make |g| nearly constant over long stretches of the orbit, so a
 * monotonicity line search must not interfere there. Damping kicks in
 * only when a step grows |g| outright, and relaxes right back. Once
 * |g| < 1e-3, Newton on g takes over and polishes to full precision;
 * its derivative
 *
 *     g'(w) = (F2'(u)-1)(F1'(w)-1) - 1
 *
 * is minus the determinant of the 2x2 system Jacobian, so this is still
 * Newton with the exact Jacobian, just block-eliminated. Near-singular
 * points (band merges) turn the root into a near-double root, where the
 * safeguarded Newton degrades gracefully to its classic linear rate-1/2
 * behaviour instead of stalling.
 *
 * Cold starts begin at omega2 = z + i*1e-8, the nudge keeping the start
 * off the real-axis corner at eta -> 0. A cold start close to the real
 * axis (Im z < 0.1) does not attack the target height directly: the
 * fixed point is only marginally attracting there and the plain orbit
 * would need O(1/eta) steps. Instead the solver walks a geometric ladder
 * of heights from 1 down to Im z at fixed Re z, warm starting each rung
 * from the previous one, which is the standard continuation strategy for
 * these systems. Explicit warm starts skip the ladder.
 *
 * The tolerance is an absolute bound on the Euclidean norm of the two
 * defining residuals, appropriate for spectral parameters of order one;
 * at |z| >> 1 the attainable floor is |z|*eps. On failure the best pair
 * is returned with converged = false; callers that cannot proceed from
 * that should treat it as an error (free_convolution_stieltjes does).
 */
namespace detail {

inline SubordinationPair solve_at_height(const DiscreteMeasure& mu1,
                                         const DiscreteMeasure& mu2,
                                         HalfPlanePoint z,
                                         const SolveOptions& opts) {
    const complex_t zz = z.value();
    // Below this height the iterate is considered to have left the domain;
    // allows for last-bit rounding but never reaches the real axis.
    const double im_slack =
        z.im - std::min(1e-13 * (1.0 + std::abs(zz)), 0.5 * z.im);

    complex_t w;  // the reduced variable, omega2
    if (opts.omega1_init && opts.omega2_init &&
        opts.omega2_init->imag() > 0.0) {
        w = *opts.omega2_init;
    } else {
        w = zz + complex_t(0.0, 1e-8);
    }

    auto u_of = [&](complex_t v) { return zz + detail::F_of(mu1, v) - v; };
    auto g_of = [&](complex_t v) {
        const complex_t u = u_of(v);
        return zz + detail::F_of(mu2, u) - u - v;
    };

    // |g| is the second residual component; the first is zero by
    // construction, so |g| <= tol implies the pair residual meets tol up
    // to rounding. Target half the tolerance to leave room for it.
    const double target = 0.5 * opts.tol;

    complex_t g = g_of(w);
    double damp = 1.0;
    int iter = 0;

    while (std::abs(g) > target && iter < opts.max_iter) {
        ++iter;

        if (std::abs(g) < opts.switch_threshold) {
            // Newton polish on the reduced equation.
            const complex_t u = u_of(w);
            const complex_t gp = (detail::Fprime_of(mu2, u) - 1.0) *
                                     (detail::Fprime_of(mu1, w) - 1.0) -
                                 1.0;
            if (std::abs(gp) > 1e-14) {
                complex_t step = -g / gp;
                // A nearly vanishing derivative can suggest an absurd
                // jump; the line search would reject it slowly, so cap.
                const double cap = 1.0 + std::abs(w);
                if (std::abs(step) > cap) step *= cap / std::abs(step);
                bool accepted = false;
                double s = 1.0;
                for (int half = 0; half < 40; ++half, s *= 0.5) {
                    const complex_t cand = w + s * step;
                    if (cand.imag() < im_slack) continue;
                    const complex_t gc = g_of(cand);
                    if (std::abs(gc) < std::abs(g)) {
                        w = cand;
                        g = gc;
                        accepted = true;
                        break;
                    }
                }
                if (accepted) continue;
            }
            // fall through to a substitution step
        }

        // Substitution step: w + g(w) is exactly the alternating update.
        for (;;) {
            const complex_t cand = w + damp * g;
            const complex_t gc = g_of(cand);
            if (std::abs(gc) <= 1.001 * std::abs(g) || damp <= 0.05) {
                w = cand;
                g = gc;
                damp = std::min(1.0, damp * 2.0);
                break;
            }
            damp *= 0.5;
        }
    }

    const complex_t w1 = u_of(w);
    const auto r = phi_residual(mu1, mu2, w1, w, z);
    const double res = norm2(r[0], r[1]);
    return {w1, w, res, iter, res <= opts.tol};
}

}  // namespace detail

inline SubordinationPair solve_subordination(const DiscreteMeasure& mu1,
                                             const DiscreteMeasure& mu2,
                                             HalfPlanePoint z,
                                             const SolveOptions& opts = {}) {
    const bool warm = opts.omega1_init && opts.omega2_init &&
                      opts.omega2_init->imag() > 0.0;
    if (warm || z.im >= 0.1)
        return detail::solve_at_height(mu1, mu2, z, opts);

    // Continuation ladder for cold starts near the real axis.
    SolveOptions rung_opts = opts;
    int iters = 0;
    SubordinationPair pair{};
    double eta = 1.0;
    for (;;) {
        pair = detail::solve_at_height(mu1, mu2, HalfPlanePoint(z.re, eta),
                                       rung_opts);
        iters += pair.iterations;
        rung_opts.omega1_init = pair.omega1;
        rung_opts.omega2_init = pair.omega2;
        if (eta == z.im) break;
        eta = std::max(z.im, eta * 0.1);
    }
    pair.iterations = iters;
    return pair;
}

// Stieltjes transform of the free additive convolution, evaluated through
// the subordination functions: m(z) = m1(omega2(z)).
//
// Throws NotConverged if the solver gives up; pair_out (optional)
// receives the solved pair, e.g. to warm start a neighbouring z.
inline complex_t free_convolution_stieltjes(const DiscreteMeasure& mu1,
                                            const DiscreteMeasure& mu2,
                                            HalfPlanePoint z,
                                            const SolveOptions& opts = {},
                                            SubordinationPair* pair_out = nullptr) {
    const SubordinationPair pair = solve_subordination(mu1, mu2, z, opts);
    if (pair_out) *pair_out = pair;
    if (!pair.converged)
        throw NotConverged("subordination solve stalled at residual " +
                           std::to_string(pair.residual));
    return stieltjes(mu1, HalfPlanePoint(pair.omega2.real(), pair.omega2.imag()));
}

// ---------------------------------------------------------------------------
// Linear stability of the subordination system.

struct StabilityReport {
    double gamma;        // operator norm of the inverted 2x2 system
    complex_t f1_prime;  // F1'(omega2)
    complex_t f2_prime;  // F2'(omega1)
    complex_t det;       // determinant of the 2x2 system
};

/**
 * Stability constant Gamma = || J^{-1} ||_2 of the 2x2 Jacobian
 *
 *   J = [ -1        F1'(w2)-1 ]
 *       [ F2'(w1)-1     -1    ]
 *
 * evaluated at a (solved) subordination pair. Gamma controls how far the
 * solution moves under a perturbation of the defining equations; it blows
 * up where (F1'-1)(F2'-1) approaches 1, e.g. at interior points where
 * two spectral bands of the convolution are about to merge.
 *
 * The norm comes from the closed-form singular values of a 2x2 matrix:
 * with t = ||J||_F^2 and d = |det J|^2,
 *
 *   sigma_max^2 = (t + sqrt(t^2 - 4d)) / 2,   sigma_min^2 = d / sigma_max^2,
 *
 * the second form avoiding the cancellation in t - sqrt(...).
 */
inline StabilityReport stability_gamma(const DiscreteMeasure& mu1,
                                       const DiscreteMeasure& mu2,
                                       complex_t omega1, complex_t omega2) {
    const complex_t f1p = detail::Fprime_of(mu1, omega2);
    const complex_t f2p = detail::Fprime_of(mu2, omega1);
    const complex_t b = f1p - 1.0;
    const complex_t c = f2p - 1.0;
    const complex_t det = 1.0 - b * c;
    if (std::abs(det) <= 1e-12)
        throw SingularJacobian("stability system is singular (|det| = " +
                               std::to_string(std::abs(det)) + ")");
    const double t = 2.0 + std::norm(b) + std::norm(c);
    const double d = std::norm(det);
    const double disc = std::sqrt(std::max(0.0, t * t - 4.0 * d));
    const double smax2 = 0.5 * (t + disc);
    const double smin2 = d / smax2;
    return {1.0 / std::sqrt(smin2), f1p, f2p, det};
}

// ---------------------------------------------------------------------------
// A posteriori perturbation bound.

struct PerturbationCheck {
    double lhs;          // max_j |omega~_j - omega_j|
    double rhs;          // 2 * Gamma * || residual at the perturbed pair ||
    double gamma;
    bool hypotheses_ok;  // height conditions under which the bound is proven
    bool holds;          // lhs <= rhs (meaningful when hypotheses_ok)
};

/**
 * Check the stability bound |omega~_j - omega_j| <= 2 Gamma ||r~|| for a
 * perturbed pair (omega~_1, omega~_2), where r~ is the residual of the
 * exact system at the perturbed pair.
 *
 * The bound is proven under closeness and height conditions: writing
 * delta for the observed lhs, k and K for the min and max heights of the
 * exact omegas, it needs delta <= 1, k > delta and k^2 > delta * K *
 * Gamma. The first is promoted to an error (a "perturbation" further
 * than distance 1 is not a perturbation); the height conditions are
 * evaluated and reported in hypotheses_ok.
 */
inline PerturbationCheck perturbation_bound_check(
    const DiscreteMeasure& mu1, const DiscreteMeasure& mu2, HalfPlanePoint z,
    const SubordinationPair& exact, complex_t omega1_tilde,
    complex_t omega2_tilde) {
    if (omega1_tilde.imag() <= 0.0 || omega2_tilde.imag() <= 0.0)
        throw HypothesisFailed("perturbed pair left the upper half plane");

    const double delta = std::max(std::abs(omega1_tilde - exact.omega1),
                                  std::abs(omega2_tilde - exact.omega2));
    if (delta > 1.0)
        throw HypothesisFailed("perturbed pair is not within unit distance "
                               "of the solution (delta = " +
                               std::to_string(delta) + ")");

    const auto r = phi_residual(mu1, mu2, omega1_tilde, omega2_tilde, z);
    const double rnorm = detail::norm2(r[0], r[1]);
    const StabilityReport st =
        stability_gamma(mu1, mu2, exact.omega1, exact.omega2);

    const double k = std::min(exact.omega1.imag(), exact.omega2.imag());
    const double K = std::max(exact.omega1.imag(), exact.omega2.imag());
    const bool hyp = (k > delta) && (k * k > delta * K * st.gamma);

    return {delta, 2.0 * st.gamma * rnorm, st.gamma, hyp,
            delta <= 2.0 * st.gamma * rnorm};
}

}  // namespace boxplus
