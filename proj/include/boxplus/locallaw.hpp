#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "boxplus/ensemble.hpp"
#include "boxplus/errors.hpp"
#include "boxplus/measure.hpp"
#include "boxplus/subordination.hpp"

namespace boxplus {

// Monte Carlo verification of the pointwise resolvent approximation for
// H = A + U B U*: on the upper half plane the diagonal entries track
// 1/(a_i - omega_B(z)) and the off-diagonal entries vanish, with errors
// of order 1/sqrt(n eta). Everything here is measured against the
// subordination solution for the *empirical* diagonal measures, so the
// comparison isolates the matrix fluctuation from the deterministic
// discretization gap.

struct SpectralGrid {
    double lo = 0.0, hi = 0.0;  // energy window
    std::vector<double> energies;
    std::vector<double> etas;  // strictly descending, starts at 1
    double gamma = 0.0;
};

// Energies uniform over [lo, hi]; eta log-spaced from 1 down to
// n^(gamma - 1), the smallest scale at which a dimension-n matrix can
// resolve its spectrum with polynomial accuracy. One eta point means
// eta = 1; one energy point means the window midpoint.
inline SpectralGrid make_grid(double lo, double hi, Eigen::Index n,
                              double gamma, std::size_t n_e,
                              std::size_t n_eta) {
    if (!(lo < hi)) throw DomainError("energy window must satisfy lo < hi");
    if (n < 2) throw DimensionError("grid needs a dimension n >= 2");
    if (!(gamma > 0.0 && gamma < 1.0))
        throw DomainError("gamma must lie in (0, 1)");
    if (n_e < 1 || n_eta < 1)
        throw DomainError("grid needs at least one point per axis");

    SpectralGrid grid;
    grid.lo = lo;
    grid.hi = hi;
    grid.gamma = gamma;

    grid.energies.resize(n_e);
    if (n_e == 1) {
        grid.energies[0] = 0.5 * (lo + hi);
    } else {
        for (std::size_t i = 0; i < n_e; ++i)
            grid.energies[i] =
                lo + (hi - lo) * double(i) / double(n_e - 1);
    }

    grid.etas.resize(n_eta);
    const double log_min = (gamma - 1.0) * std::log(double(n));
    if (n_eta == 1) {
        grid.etas[0] = 1.0;
    } else {
        for (std::size_t j = 0; j < n_eta; ++j)
            grid.etas[j] =
                std::exp(log_min * double(j) / double(n_eta - 1));
    }
    return grid;
}

// Subordination solution at one grid point for the empirical pair,
// shared by every sample.
struct GridPointPrediction {
    double e = 0.0, eta = 0.0;
    complex_t omega1{}, omega2{};
    complex_t m{};  // predicted Stieltjes transform
    int iterations = 0;
    bool converged = false;
};

struct LocalLawRow {
    std::size_t sample = 0;
    double e = 0.0, eta = 0.0;
    double err_diag = 0.0;     // max_i |G_ii - 1/(a_i - omega_B)|
    double err_offdiag = 0.0;  // max |G_ij|, i != j (scan or subsample)
    double err_trace = 0.0;    // |m_H - m_pred|
    double err_omegab = 0.0;   // |(z - tr(B~G)/m_H) - omega_B|
    int solver_iters = 0;
    bool converged = false;  // subordination solve at this point
};

// Medians over the converged samples at one grid point.
struct GridMedians {
    double e = 0.0, eta = 0.0;
    double med_diag = 0.0, med_offdiag = 0.0;
    double med_trace = 0.0, med_omegab = 0.0;
    std::size_t n_ok = 0;
};

struct LocalLawReport {
    EnsembleConfig config;
    SpectralGrid grid;
    std::size_t n_samples = 0;
    std::uint64_t master_seed = 0;
    std::vector<GridPointPrediction> predictions;  // energy-major
    std::vector<LocalLawRow> rows;                 // sample-major
    std::vector<GridMedians> medians;              // energy-major
};

namespace detail {

inline double median_of(std::vector<double>& v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

}  // namespace detail

/**
 * Draw n_samples matrices and measure the four local-law error channels
 * at every grid point. The subordination system is solved once per grid
 * point (the empirical pair is the same for every sample), warm-started
 * down each eta column. A solver failure at a point marks that point's
 * rows as not converged and excludes them from the medians; it never
 * aborts the run.
 *
 * Determinism: sample k uses generator stream (master_seed, k), so the
 * first k rows of a longer run coincide bitwise with a shorter one.
 */
inline LocalLawReport verify_local_law(const EnsembleConfig& cfg,
                                       const SpectralGrid& grid,
                                       std::size_t n_samples,
                                       std::uint64_t master_seed,
                                       const SolveOptions& solver_opts = {}) {
    if (n_samples < 1) throw DomainError("need at least one sample");
    if (grid.energies.empty() || grid.etas.empty())
        throw DomainError("grid is empty");

    LocalLawReport rep;
    rep.config = cfg;
    rep.grid = grid;
    rep.n_samples = n_samples;
    rep.master_seed = master_seed;

    const auto mu_a = DiscreteMeasure::uniform_atoms(cfg.a);
    const auto mu_b = DiscreteMeasure::uniform_atoms(cfg.b);

    // Solve the subordination system over the grid, one eta column at a
    // time, warm-starting each rung from the one above it.
    const std::size_t n_e = grid.energies.size();
    const std::size_t n_eta = grid.etas.size();
    rep.predictions.reserve(n_e * n_eta);
    for (std::size_t ie = 0; ie < n_e; ++ie) {
        SolveOptions opts = solver_opts;
        opts.omega1_init.reset();
        opts.omega2_init.reset();
        for (std::size_t je = 0; je < n_eta; ++je) {
            const HalfPlanePoint z{grid.energies[ie], grid.etas[je]};
            GridPointPrediction pred;
            pred.e = z.re;
            pred.eta = z.im;
            const SubordinationPair pair =
                solve_subordination(mu_a, mu_b, z, opts);
            pred.iterations = pair.iterations;
            pred.converged = pair.converged;
            if (pair.converged) {
                pred.omega1 = pair.omega1;
                pred.omega2 = pair.omega2;
                pred.m = stieltjes(mu_a, HalfPlanePoint(pair.omega2.real(),
                                                        pair.omega2.imag()));
                opts.omega1_init = pair.omega1;
                opts.omega2_init = pair.omega2;
            } else {
                // Cold-start the next rung rather than chain a bad seed.
                opts.omega1_init.reset();
                opts.omega2_init.reset();
            }
            rep.predictions.push_back(pred);
        }
    }

    // One sample at a time: the eigendecomposition dominates, the grid
    // sweep reuses it.
    rep.rows.reserve(n_samples * n_e * n_eta);
    for (std::size_t k = 0; k < n_samples; ++k) {
        const EnsembleSample s = build_ensemble(cfg, master_seed, k);
        for (const auto& pred : rep.predictions) {
            LocalLawRow row;
            row.sample = k;
            row.e = pred.e;
            row.eta = pred.eta;
            row.solver_iters = pred.iterations;
            row.converged = pred.converged;
            if (!pred.converged) {
                const double nan = std::numeric_limits<double>::quiet_NaN();
                row.err_diag = row.err_offdiag = nan;
                row.err_trace = row.err_omegab = nan;
                rep.rows.push_back(row);
                continue;
            }
            const HalfPlanePoint z{pred.e, pred.eta};
            const ResolventStats st = resolvent_stats(s, z);

            double worst = 0.0;
            for (Eigen::Index i = 0; i < s.n; ++i)
                worst = std::max(
                    worst, std::abs(st.diag(i) -
                                    1.0 / (s.a(i) - pred.omega2)));
            row.err_diag = worst;
            row.err_offdiag = st.max_offdiag;
            row.err_trace = std::abs(st.m - pred.m);
            row.err_omegab =
                std::abs((z.value() - st.tr_bg / st.m) - pred.omega2);
            rep.rows.push_back(row);
        }
    }

    // Per grid-point medians across samples.
    const std::size_t n_points = n_e * n_eta;
    rep.medians.resize(n_points);
    std::vector<double> d, o, t, w;
    for (std::size_t p = 0; p < n_points; ++p) {
        d.clear(), o.clear(), t.clear(), w.clear();
        for (std::size_t k = 0; k < n_samples; ++k) {
            const auto& row = rep.rows[k * n_points + p];
            if (!row.converged) continue;
            d.push_back(row.err_diag);
            o.push_back(row.err_offdiag);
            t.push_back(row.err_trace);
            w.push_back(row.err_omegab);
        }
        GridMedians& med = rep.medians[p];
        med.e = rep.predictions[p].e;
        med.eta = rep.predictions[p].eta;
        med.n_ok = d.size();
        med.med_diag = detail::median_of(d);
        med.med_offdiag = detail::median_of(o);
        med.med_trace = detail::median_of(t);
        med.med_omegab = detail::median_of(w);
    }
    return rep;
}

enum class ErrorKind { diag, offdiag, trace, omegab };

struct ExponentFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    std::size_t n_points = 0;
};

// Least squares line through (x, y) pairs; r2 defined as 1 - SSres/SStot
// (taken as 1 when the responses are constant).
inline ExponentFit fit_loglog(const std::vector<double>& x,
                              const std::vector<double>& y) {
    if (x.size() != y.size()) throw DimensionError("fit inputs must pair up");
    const std::size_t n = x.size();
    if (n < 3) throw InsufficientData("need at least 3 points for a fit");

    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < n; ++i) sx += x[i], sy += y[i];
    const double mx = sx / double(n), my = sy / double(n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0.0)
        throw InsufficientData("fit abscissae are all identical");

    ExponentFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    const double ss_res = syy - fit.slope * sxy;
    fit.r2 = syy > 1e-30 ? 1.0 - ss_res / syy : 1.0;
    fit.n_points = n;
    return fit;
}

/**
 * Fit log(median error) against log(n * eta), pooling every energy
 * column. The local law predicts slope -1/2 for the diagonal channel.
 * Grid points whose median is zero, not finite, or backed by no
 * converged samples are dropped; at least three distinct eta values
 * must survive or the fit is refused.
 */
inline ExponentFit fit_exponent(const LocalLawReport& rep, ErrorKind which) {
    std::vector<double> xs, ys, etas_used;
    for (const auto& med : rep.medians) {
        double v = 0.0;
        switch (which) {
            case ErrorKind::diag: v = med.med_diag; break;
            case ErrorKind::offdiag: v = med.med_offdiag; break;
            case ErrorKind::trace: v = med.med_trace; break;
            case ErrorKind::omegab: v = med.med_omegab; break;
        }
        if (med.n_ok == 0 || !std::isfinite(v) || v <= 0.0) continue;
        xs.push_back(std::log(double(rep.config.n) * med.eta));
        ys.push_back(std::log(v));
        etas_used.push_back(med.eta);
    }

    std::sort(etas_used.begin(), etas_used.end());
    etas_used.erase(std::unique(etas_used.begin(), etas_used.end()),
                    etas_used.end());
    if (etas_used.size() < 3)
        throw InsufficientData(
            "exponent fit needs medians at >= 3 distinct eta values");
    return fit_loglog(xs, ys);
}

// ---------------------------------------------------------------------------
// Eigenvector delocalization. For eigenvalues inside the window the
// rescaled sup norm n * ||u||_inf^2 should stay polylogarithmic in n;
// for b = 0 the eigenvectors are coordinate vectors and every score
// equals n exactly.

struct DelocalizationReport {
    double lo = 0.0, hi = 0.0;
    std::size_t n_samples = 0;
    std::vector<double> scores;  // sample-major, eigenvalues ascending
    double max_score = 0.0;
    double mean_score = 0.0;
};

inline DelocalizationReport delocalization_report(const EnsembleConfig& cfg,
                                                  double lo, double hi,
                                                  std::size_t n_samples,
                                                  std::uint64_t master_seed) {
    if (!(lo < hi)) throw DomainError("energy window must satisfy lo < hi");
    if (n_samples < 1) throw DomainError("need at least one sample");

    DelocalizationReport rep;
    rep.lo = lo;
    rep.hi = hi;
    rep.n_samples = n_samples;

    for (std::size_t k = 0; k < n_samples; ++k) {
        const EnsembleSample s = build_ensemble(cfg, master_seed, k);
        const auto& es = s.eigensystem();
        for (Eigen::Index j = 0; j < s.n; ++j) {
            if (es.evals(j) < lo || es.evals(j) > hi) continue;
            rep.scores.push_back(double(s.n) * es.w.col(j).maxCoeff());
        }
    }
    if (rep.scores.empty())
        throw EmptySelection("no eigenvalue in the requested window");

    rep.max_score = *std::max_element(rep.scores.begin(), rep.scores.end());
    double sum = 0.0;
    for (double v : rep.scores) sum += v;
    rep.mean_score = sum / double(rep.scores.size());
    return rep;
}

// ---------------------------------------------------------------------------
// Continuity of the whole pipeline in its measure inputs. The
// subordination solutions for two nearby input pairs stay close; the
// reported ratio compares the observed gap to the Levy distance between
// the pairs, the scale on which the stability estimates are stated.

struct LevyControl {
    double lhs = 0.0;       // max gap over the grid, all three channels
    double levy_sum = 0.0;  // d(mu_a, mu_alpha) + d(mu_b, mu_beta)
    double bound_ratio = 0.0;  // lhs / levy_sum, or 0 for identical pairs
};

inline LevyControl levy_control_check(const DiscreteMeasure& mu_a,
                                      const DiscreteMeasure& mu_b,
                                      const DiscreteMeasure& mu_alpha,
                                      const DiscreteMeasure& mu_beta,
                                      const SpectralGrid& grid) {
    if (grid.energies.empty() || grid.etas.empty())
        throw DomainError("grid is empty");

    double lhs = 0.0;
    for (double e : grid.energies) {
        SolveOptions o1, o2;
        for (double eta : grid.etas) {
            const HalfPlanePoint z{e, eta};
            SubordinationPair p1{}, p2{};
            const complex_t m1 =
                free_convolution_stieltjes(mu_a, mu_b, z, o1, &p1);
            const complex_t m2 =
                free_convolution_stieltjes(mu_alpha, mu_beta, z, o2, &p2);
            o1.omega1_init = p1.omega1, o1.omega2_init = p1.omega2;
            o2.omega1_init = p2.omega1, o2.omega2_init = p2.omega2;
            lhs = std::max({lhs, std::abs(p1.omega1 - p2.omega1),
                            std::abs(p1.omega2 - p2.omega2),
                            std::abs(m1 - m2)});
        }
    }

    LevyControl out;
    out.lhs = lhs;
    out.levy_sum =
        levy_distance(mu_a, mu_alpha) + levy_distance(mu_b, mu_beta);
    out.bound_ratio = out.levy_sum > 0.0 ? lhs / out.levy_sum : 0.0;
    return out;
}

}  // namespace boxplus
