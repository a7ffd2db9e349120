// Verification-harness checks. The strategy mirrors the rest of the
// suite: every statistic the harness reports is pinned either to a case
// with a closed form (b = 0, identical measure pairs, synthetic fit
// data) or to an invariant that must hold row by row (trace error
// bounded by diagonal error, determinism, prefix property of longer
// runs). The Monte Carlo pieces use dimensions small enough to run in
// seconds while keeping the signal an order of magnitude above the
// sampling noise.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "boxplus/ensemble.hpp"
#include "boxplus/errors.hpp"
#include "boxplus/locallaw.hpp"
#include "boxplus/measure.hpp"
#include "boxplus/rng.hpp"

using namespace boxplus;
using Catch::Approx;

namespace {

DiscreteMeasure coin() {
    return DiscreteMeasure({0.0, 1.0}, {0.5, 0.5});
}

DiscreteMeasure three_point() {
    return DiscreteMeasure({-1.0, 0.5, 2.0}, {0.3, 0.4, 0.3});
}

}  // namespace

TEST_CASE("grid construction pins both axes") {
    const auto g = make_grid(-0.5, 2.5, 1000, 0.2, 9, 12);
    REQUIRE(g.energies.size() == 9);
    REQUIRE(g.etas.size() == 12);

    CHECK(g.energies.front() == Approx(-0.5));
    CHECK(g.energies.back() == Approx(2.5));
    for (std::size_t i = 1; i < 9; ++i)
        CHECK(g.energies[i] - g.energies[i - 1] == Approx(3.0 / 8.0));

    // Top of the ladder is eta = 1, bottom is n^(gamma - 1), strictly
    // log-spaced in between.
    CHECK(g.etas.front() == 1.0);
    CHECK(g.etas.back() == Approx(std::pow(1000.0, -0.8)).epsilon(1e-12));
    for (std::size_t j = 1; j < 12; ++j) {
        CHECK(g.etas[j] < g.etas[j - 1]);
        CHECK(g.etas[j] / g.etas[j - 1] ==
              Approx(g.etas[1] / g.etas[0]).epsilon(1e-12));
    }

    // Single points collapse to the midpoint and to eta = 1.
    const auto g1 = make_grid(0.0, 2.0, 100, 0.5, 1, 1);
    CHECK(g1.energies == std::vector<double>{1.0});
    CHECK(g1.etas == std::vector<double>{1.0});

    CHECK_THROWS_AS(make_grid(1.0, 1.0, 100, 0.5, 3, 3), DomainError);
    CHECK_THROWS_AS(make_grid(0.0, 1.0, 100, 0.0, 3, 3), DomainError);
    CHECK_THROWS_AS(make_grid(0.0, 1.0, 100, 1.0, 3, 3), DomainError);
    CHECK_THROWS_AS(make_grid(0.0, 1.0, 100, 0.5, 0, 3), DomainError);
    CHECK_THROWS_AS(make_grid(0.0, 1.0, 100, 0.5, 3, 0), DomainError);
    CHECK_THROWS_AS(make_grid(0.0, 1.0, 1, 0.5, 3, 3), DimensionError);
}

TEST_CASE("log-log fit recovers synthetic exponents") {
    SECTION("exact power law gives exact slope and r2 = 1") {
        std::vector<double> x, y;
        for (int i = 0; i < 12; ++i) {
            x.push_back(0.3 + 0.55 * i);
            y.push_back(-0.5 * x.back() + 0.7);
        }
        const auto fit = fit_loglog(x, y);
        CHECK(fit.slope == Approx(-0.5).margin(1e-12));
        CHECK(fit.intercept == Approx(0.7).margin(1e-12));
        CHECK(fit.r2 == Approx(1.0).margin(1e-12));
        CHECK(fit.n_points == 12);
    }

    SECTION("five percent multiplicative noise stays near the truth") {
        Rng rng(9);
        std::vector<double> x, y;
        for (int i = 0; i < 36; ++i) {
            x.push_back(0.2 * i);  // seven decades of n*eta
            const double noise = 0.05 * (2.0 * rng.uniform01() - 1.0);
            y.push_back(-0.5 * x.back() + 0.7 + noise);
        }
        const auto fit = fit_loglog(x, y);
        CHECK(fit.slope >= -0.55);
        CHECK(fit.slope <= -0.45);
        CHECK(fit.r2 > 0.9);
    }

    SECTION("refusals") {
        CHECK_THROWS_AS(fit_loglog({1.0, 2.0}, {1.0, 2.0}),
                        InsufficientData);
        CHECK_THROWS_AS(fit_loglog({1.0, 1.0, 1.0}, {1.0, 2.0, 3.0}),
                        InsufficientData);
        CHECK_THROWS_AS(fit_loglog({1.0, 2.0, 3.0}, {1.0, 2.0}),
                        DimensionError);
    }
}

TEST_CASE("b = 0 control: every channel collapses to solver precision") {
    // H = diag(a) exactly, so G_ii = 1/(a_i - z) and the subordination
    // prediction must match it to the tolerance of the omega solve.
    const auto cfg = ensemble_config(32, coin(),
                                     DiscreteMeasure({0.0}, {1.0}));
    const auto grid = make_grid(-0.5, 1.5, 32, 0.5, 3, 4);
    const auto rep = verify_local_law(cfg, grid, 2, 77);

    REQUIRE(rep.rows.size() == 2 * 3 * 4);
    for (const auto& row : rep.rows) {
        REQUIRE(row.converged);
        CHECK(row.err_diag < 1e-9);
        CHECK(row.err_offdiag < 1e-10);
        CHECK(row.err_trace < 1e-9);
        CHECK(row.err_omegab < 1e-7);  // divides by eta^2 worth of signal
    }
    for (const auto& med : rep.medians) CHECK(med.n_ok == 2);

    // Delocalization degenerates to coordinate vectors: score exactly n.
    const auto deloc = delocalization_report(cfg, -0.5, 1.5, 2, 77);
    REQUIRE(deloc.scores.size() == 2 * 32);
    for (double s : deloc.scores) CHECK(s == Approx(32.0).margin(1e-9));
}

TEST_CASE("trace error never exceeds the diagonal error") {
    // The prediction for m is the average of the diagonal predictions,
    // so the deviation of the average is at most the worst entry.
    const auto cfg = ensemble_config(60, three_point(), coin());
    const auto grid = make_grid(-1.2, 3.2, 60, 0.4, 3, 3);
    const auto rep = verify_local_law(cfg, grid, 5, 3);
    for (const auto& row : rep.rows) {
        REQUIRE(row.converged);
        CHECK(row.err_trace <= row.err_diag + 1e-12);
    }
}

TEST_CASE("runs are deterministic and longer runs extend shorter ones") {
    const auto cfg = ensemble_config(24, coin(), coin());
    const auto grid = make_grid(0.2, 1.8, 24, 0.5, 2, 3);

    const auto r1 = verify_local_law(cfg, grid, 4, 123);
    const auto r2 = verify_local_law(cfg, grid, 4, 123);
    REQUIRE(r1.rows.size() == r2.rows.size());
    for (std::size_t i = 0; i < r1.rows.size(); ++i) {
        CHECK(r1.rows[i].err_diag == r2.rows[i].err_diag);
        CHECK(r1.rows[i].err_offdiag == r2.rows[i].err_offdiag);
        CHECK(r1.rows[i].err_trace == r2.rows[i].err_trace);
        CHECK(r1.rows[i].err_omegab == r2.rows[i].err_omegab);
    }

    // Doubling the sample count reproduces the first half bitwise:
    // sample k always draws from stream (seed, k).
    const auto r8 = verify_local_law(cfg, grid, 8, 123);
    REQUIRE(r8.rows.size() == 2 * r1.rows.size());
    for (std::size_t i = 0; i < r1.rows.size(); ++i) {
        CHECK(r8.rows[i].sample == r1.rows[i].sample);
        CHECK(r8.rows[i].err_diag == r1.rows[i].err_diag);
        CHECK(r8.rows[i].err_trace == r1.rows[i].err_trace);
    }

    // Different seed, different numbers.
    const auto r3 = verify_local_law(cfg, grid, 4, 124);
    bool any_differs = false;
    for (std::size_t i = 0; i < r1.rows.size(); ++i)
        any_differs |= (r1.rows[i].err_diag != r3.rows[i].err_diag);
    CHECK(any_differs);
}

TEST_CASE("median diagonal error grows as eta shrinks through the top decade") {
    // coin + coin at the bulk center: the error scale is 1/(n eta), so
    // each factor 10^(1/5) down in eta should raise the median well
    // beyond its sampling noise at ten samples.
    const auto cfg = ensemble_config(120, coin(), coin());
    SpectralGrid grid;
    grid.lo = 0.999, grid.hi = 1.001;
    grid.gamma = 0.5;
    grid.energies = {1.0};
    for (int j = 0; j < 6; ++j)
        grid.etas.push_back(std::pow(10.0, -double(j) / 5.0));

    const auto rep = verify_local_law(cfg, grid, 10, 2026);
    REQUIRE(rep.medians.size() == 6);
    for (std::size_t j = 1; j < 6; ++j) {
        CHECK(rep.medians[j].n_ok == 10);
        CHECK(rep.medians[j].med_diag > rep.medians[j - 1].med_diag);
    }

    // The same report supports an exponent fit with six distinct eta.
    const auto fit = fit_exponent(rep, ErrorKind::diag);
    CHECK(fit.n_points == 6);
    CHECK(fit.slope < 0.0);
}

TEST_CASE("solver failures are flagged per point, not fatal") {
    const auto cfg = ensemble_config(16, three_point(), coin());
    const auto grid = make_grid(-1.0, 3.0, 16, 0.5, 2, 2);

    SolveOptions strangled;
    strangled.max_iter = 2;  // nothing converges in two steps cold
    const auto rep = verify_local_law(cfg, grid, 2, 5, strangled);

    REQUIRE(rep.rows.size() == 8);
    for (const auto& row : rep.rows) {
        CHECK_FALSE(row.converged);
        CHECK(std::isnan(row.err_diag));
        CHECK(std::isnan(row.err_trace));
    }
    for (const auto& med : rep.medians) CHECK(med.n_ok == 0);

    // No usable medians means the exponent fit must refuse.
    CHECK_THROWS_AS(fit_exponent(rep, ErrorKind::diag), InsufficientData);
}

TEST_CASE("delocalization report selects windows and validates input") {
    const auto cfg = ensemble_config(40, coin(), coin());

    const auto rep = delocalization_report(cfg, 0.5, 1.5, 3, 8);
    CHECK(rep.scores.size() > 0);
    CHECK(rep.max_score <= 40.0 + 1e-9);
    for (double s : rep.scores) {
        CHECK(s >= 1.0 - 1e-9);  // sup norm of a unit vector is >= 1/sqrt(n)
        CHECK(s <= 40.0 + 1e-9);
    }
    CHECK(rep.mean_score <= rep.max_score);

    // Window beyond the spectrum selects nothing.
    CHECK_THROWS_AS(delocalization_report(cfg, 50.0, 51.0, 2, 8),
                    EmptySelection);
    CHECK_THROWS_AS(delocalization_report(cfg, 1.0, 0.0, 2, 8),
                    DomainError);
    CHECK_THROWS_AS(delocalization_report(cfg, 0.0, 1.0, 0, 8),
                    DomainError);
}

TEST_CASE("identical measure pairs give zero continuity gap") {
    const auto grid = make_grid(-1.0, 3.0, 100, 0.5, 3, 4);
    const auto ctl =
        levy_control_check(three_point(), coin(), three_point(), coin(),
                           grid);
    CHECK(ctl.levy_sum == 0.0);
    CHECK(ctl.bound_ratio == 0.0);
    CHECK(ctl.lhs <= 1e-10);
}

TEST_CASE("perturbed measures move the solution by a controlled amount") {
    // Shift one input by 0.01: the Levy distance is about that size and
    // the solution gap on a bulk grid stays within a moderate multiple
    // of it (the stability factor of the system at eta >= 0.1).
    const auto shifted = DiscreteMeasure({-0.99, 0.51, 2.01},
                                         {0.3, 0.4, 0.3});
    const auto grid = make_grid(-1.0, 3.0, 100, 0.5, 3, 4);
    const auto ctl =
        levy_control_check(three_point(), coin(), shifted, coin(), grid);

    CHECK(ctl.levy_sum > 0.0);
    // A location shift moves the Levy distance by at most the shift;
    // the distance itself is computed by bisection to ~1e-10.
    CHECK(ctl.levy_sum <= 0.01 + 1e-9);
    CHECK(ctl.lhs > 0.0);
    CHECK(ctl.lhs < 0.1);
    CHECK(ctl.bound_ratio == Approx(ctl.lhs / ctl.levy_sum));
    CHECK(ctl.bound_ratio < 100.0);
}

TEST_CASE("verification input validation") {
    const auto cfg = ensemble_config(16, coin(), coin());
    const auto grid = make_grid(0.0, 2.0, 16, 0.5, 2, 2);
    CHECK_THROWS_AS(verify_local_law(cfg, grid, 0, 1), DomainError);

    SpectralGrid empty;
    CHECK_THROWS_AS(verify_local_law(cfg, empty, 1, 1), DomainError);
    CHECK_THROWS_AS(
        levy_control_check(coin(), coin(), coin(), coin(), empty),
        DomainError);
}
