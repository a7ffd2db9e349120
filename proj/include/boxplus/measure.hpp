#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "boxplus/errors.hpp"

namespace boxplus {

using complex_t = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

// Spectral parameter z = E + i*eta, constrained to the open upper half
// plane where Stieltjes transforms are defined.
struct HalfPlanePoint {
    double re;
    double im;

    HalfPlanePoint(double real_part, double imag_part)
        : re(real_part), im(imag_part) {
        if (!std::isfinite(re) || !std::isfinite(im))
            throw DomainError("half-plane point must be finite");
        if (im <= 0.0)
            throw DomainError("half-plane point needs Im z > 0, got Im z = " +
                              std::to_string(im));
    }

    complex_t value() const { return {re, im}; }
};

/**
 * Purely atomic probability measure: finitely many atoms with positive
 * weights summing to one.
 *
 * Construction canonicalizes the input: atoms are sorted by location,
 * locations closer than 1e-12 are merged (weights added, location set to
 * the weighted mean), and the weight total is renormalized to exactly 1
 * when it is within 1e-9 of 1. Anything further off than that is rejected
 * as a data error rather than silently rescaled.
 */
class DiscreteMeasure {
  public:
    DiscreteMeasure(std::vector<double> locations, std::vector<double> weights)
        : x_(std::move(locations)), w_(std::move(weights)) {
        if (x_.size() != w_.size())
            throw DimensionError("measure needs one weight per location");
        if (x_.empty()) throw DomainError("measure needs at least one atom");
        for (std::size_t k = 0; k < x_.size(); ++k) {
            if (!std::isfinite(x_[k]) || !std::isfinite(w_[k]))
                throw DomainError("measure atoms must be finite");
            if (w_[k] <= 0.0)
                throw DomainError("atom weights must be positive");
        }
        canonicalize();
    }

    static DiscreteMeasure point_mass(double x) { return {{x}, {1.0}}; }

    static DiscreteMeasure uniform_atoms(std::vector<double> xs) {
        std::vector<double> w(xs.size(), 1.0 / double(xs.size()));
        return {std::move(xs), std::move(w)};
    }

    std::size_t size() const { return x_.size(); }
    const std::vector<double>& locations() const { return x_; }
    const std::vector<double>& weights() const { return w_; }
    double support_min() const { return x_.front(); }
    double support_max() const { return x_.back(); }

    // Weight of the atom at x, or 0 if there is none. Exact lookup; the
    // constructor already merged anything within 1e-12.
    double mass_at(double x) const {
        auto it = std::lower_bound(x_.begin(), x_.end(), x);
        if (it != x_.end() && *it == x) return w_[std::size_t(it - x_.begin())];
        return 0.0;
    }

    // Right-continuous distribution function.
    double cdf(double x) const {
        auto it = std::upper_bound(x_.begin(), x_.end(), x);
        return cum_[std::size_t(it - x_.begin())];
    }

    // Smallest atom location whose cdf reaches p (generalized inverse).
    double quantile(double p) const {
        if (!(p >= 0.0 && p <= 1.0))
            throw DomainError("quantile level must lie in [0,1]");
        for (std::size_t k = 0; k < x_.size(); ++k)
            if (cum_[k + 1] >= p) return x_[k];
        return x_.back();
    }

    // Shift the measure by c: atoms move, weights stay.
    DiscreteMeasure shifted(double c) const {
        std::vector<double> xs(x_);
        for (double& x : xs) x += c;
        return {std::move(xs), std::vector<double>(w_)};
    }

    // Mean of the measure, used for optional ensemble centering.
    double mean() const {
        double s = 0.0;
        for (std::size_t k = 0; k < x_.size(); ++k) s += x_[k] * w_[k];
        return s;
    }

  private:
    void canonicalize() {
        std::vector<std::size_t> order(x_.size());
        std::iota(order.begin(), order.end(), std::size_t(0));
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return x_[a] < x_[b]; });

        std::vector<double> xs, ws;
        xs.reserve(x_.size());
        ws.reserve(x_.size());
        for (std::size_t idx : order) {
            const double x = x_[idx], w = w_[idx];
            if (!xs.empty() && x - xs.back() < 1e-12) {
                // Merge into the previous cluster at the weighted mean.
                const double wt = ws.back() + w;
                xs.back() = (xs.back() * ws.back() + x * w) / wt;
                ws.back() = wt;
            } else {
                xs.push_back(x);
                ws.push_back(w);
            }
        }

        double total = std::accumulate(ws.begin(), ws.end(), 0.0);
        if (std::abs(total - 1.0) > 1e-9)
            throw DomainError("atom weights sum to " + std::to_string(total) +
                              ", not a probability measure");
        for (double& w : ws) w /= total;

        x_ = std::move(xs);
        w_ = std::move(ws);
        cum_.assign(x_.size() + 1, 0.0);
        for (std::size_t k = 0; k < x_.size(); ++k)
            cum_[k + 1] = cum_[k] + w_[k];
        cum_.back() = 1.0;
    }

    std::vector<double> x_;
    std::vector<double> w_;
    std::vector<double> cum_;  // cum_[k] = weight of first k atoms
};

// m(z) = sum_k w_k / (x_k - z), holomorphic self-map of the upper half
// plane (with a sign: Im m > 0 for Im z > 0).
inline complex_t stieltjes(const DiscreteMeasure& mu, HalfPlanePoint z) {
    const complex_t zz = z.value();
    complex_t m = 0.0;
    for (std::size_t k = 0; k < mu.size(); ++k)
        m += mu.weights()[k] / (mu.locations()[k] - zz);
    return m;
}

// m'(z) = sum_k w_k / (x_k - z)^2.
inline complex_t stieltjes_derivative(const DiscreteMeasure& mu,
                                      HalfPlanePoint z) {
    const complex_t zz = z.value();
    complex_t d = 0.0;
    for (std::size_t k = 0; k < mu.size(); ++k) {
        const complex_t q = mu.locations()[k] - zz;
        d += mu.weights()[k] / (q * q);
    }
    return d;
}

// Negative reciprocal F(z) = -1/m(z). Maps the upper half plane into
// itself with Im F(z) >= Im z.
inline complex_t neg_recip(const DiscreteMeasure& mu, HalfPlanePoint z) {
    return -1.0 / stieltjes(mu, z);
}

// F'(z) = m'(z) / m(z)^2, the derivative of the negative reciprocal.
inline complex_t neg_recip_derivative(const DiscreteMeasure& mu,
                                      HalfPlanePoint z) {
    const complex_t m = stieltjes(mu, z);
    return stieltjes_derivative(mu, z) / (m * m);
}

// Boundary density reconstruction: the density of the measure smoothed at
// scale eta is Im m(E + i eta) / pi.
inline double density_from_stieltjes(complex_t m) { return m.imag() / kPi; }

namespace detail {

// Feasibility of one epsilon in the Levy-distance definition
//   F(x - eps) - eps <= G(x) <= F(x + eps) + eps   for all real x.
// Both cdfs are right-continuous steps, so the left inequality can only
// be tight right at x = (jump of F) + eps and the right inequality right
// at x = jump of G. Checking those finitely many points is exact.
inline bool levy_feasible(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                          double eps) {
    for (double j : mu.locations())
        if (nu.cdf(j + eps) < mu.cdf(j) - eps) return false;
    for (double j : nu.locations())
        if (nu.cdf(j) > mu.cdf(j + eps) + eps) return false;
    return true;
}

}  // namespace detail

// Levy distance between two atomic measures, computed by bisection on
// epsilon to absolute tolerance 1e-10. Always in [0, 1].
inline double levy_distance(const DiscreteMeasure& mu,
                            const DiscreteMeasure& nu) {
    if (detail::levy_feasible(mu, nu, 0.0)) return 0.0;
    double lo = 0.0, hi = 1.0;
    while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        if (detail::levy_feasible(mu, nu, mid))
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

// Atoms of the free additive convolution. c = a + b carries an atom
// exactly when mu1({a}) + mu2({b}) > 1, with mass mu1({a}) + mu2({b}) - 1.
// At most one pair (a, b) can qualify per target location (two qualifying
// pairs would need total weight > 2), so no merging is required.
inline std::vector<std::pair<double, double>> convolution_atoms(
    const DiscreteMeasure& mu1, const DiscreteMeasure& mu2) {
    std::vector<std::pair<double, double>> atoms;
    for (std::size_t i = 0; i < mu1.size(); ++i)
        for (std::size_t j = 0; j < mu2.size(); ++j) {
            const double s = mu1.weights()[i] + mu2.weights()[j];
            if (s > 1.0)
                atoms.emplace_back(mu1.locations()[i] + mu2.locations()[j],
                                   s - 1.0);
        }
    std::sort(atoms.begin(), atoms.end());
    return atoms;
}

// ---------------------------------------------------------------------------
// Measure files: plain text, one "location weight" pair per line, '#'
// starts a comment, blank lines ignored.

inline DiscreteMeasure read_measure(std::istream& in,
                                    const std::string& origin = "<stream>") {
    std::vector<double> xs, ws;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream fields(line);
        double x, w;
        if (!(fields >> x)) {
            std::istringstream probe(line);
            std::string leftover;
            if (probe >> leftover)
                throw ParseError(origin + ":" + std::to_string(lineno) +
                                 ": expected 'location weight', got '" + line +
                                 "'");
            continue;  // blank or comment-only line
        }
        if (!(fields >> w))
            throw ParseError(origin + ":" + std::to_string(lineno) +
                             ": missing weight after location");
        std::string extra;
        if (fields >> extra)
            throw ParseError(origin + ":" + std::to_string(lineno) +
                             ": trailing token '" + extra + "'");
        if (!std::isfinite(x) || !std::isfinite(w))
            throw ParseError(origin + ":" + std::to_string(lineno) +
                             ": non-finite entry");
        xs.push_back(x);
        ws.push_back(w);
    }
    if (xs.empty()) throw ParseError(origin + ": no atoms found");
    try {
        return DiscreteMeasure(std::move(xs), std::move(ws));
    } catch (const Error& e) {
        throw ParseError(origin + ": " + e.what());
    }
}

inline DiscreteMeasure read_measure_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open measure file '" + path + "'");
    return read_measure(in, path);
}

inline void write_measure(std::ostream& out, const DiscreteMeasure& mu) {
    char buf[64];
    for (std::size_t k = 0; k < mu.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g\n", mu.locations()[k],
                      mu.weights()[k]);
        out << buf;
    }
}

}  // namespace boxplus
