#pragma once

#include <Eigen/Core>
#include <Eigen/QR>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "boxplus/errors.hpp"
#include "boxplus/measure.hpp"
#include "boxplus/rng.hpp"

namespace boxplus {

// Which compact group a matrix is (or is to be) drawn from. Matrices are
// stored with complex entries in both cases; orthogonal ones carry exactly
// zero imaginary parts, and that invariant is validated and preserved.
enum class Field : std::uint8_t { unitary = 0, orthogonal = 1 };

inline const char* field_name(Field f) {
    return f == Field::unitary ? "unitary" : "orthogonal";
}

struct HaarMatrix {
    Field field;
    std::uint64_t seed;  // generator seed when sampled, 0 otherwise
    Eigen::MatrixXcd m;

    HaarMatrix(Field f, std::uint64_t s, Eigen::MatrixXcd mat)
        : field(f), seed(s), m(std::move(mat)) {
        if (m.rows() == 0 || m.rows() != m.cols())
            throw DimensionError("matrix must be square and nonempty, got " +
                                 std::to_string(m.rows()) + "x" +
                                 std::to_string(m.cols()));
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            for (Eigen::Index i = 0; i < m.rows(); ++i) {
                const complex_t e = m(i, j);
                if (!std::isfinite(e.real()) || !std::isfinite(e.imag()))
                    throw DomainError("matrix entries must be finite");
                if (field == Field::orthogonal && e.imag() != 0.0)
                    throw DomainError(
                        "orthogonal matrix has a nonzero imaginary part at "
                        "(" + std::to_string(i) + ", " + std::to_string(j) +
                        ")");
            }
    }

    Eigen::Index dim() const { return m.rows(); }
};

// Standard Gaussian vector over the given field, in complex storage. For
// the unitary field entries are complex with E|z|^2 = 1; for the
// orthogonal field they are real with unit variance.
inline Eigen::VectorXcd gaussian_vector(Eigen::Index n, Field field,
                                        Rng& rng) {
    if (n <= 0) throw DimensionError("vector length must be positive");
    Eigen::VectorXcd v(n);
    for (Eigen::Index i = 0; i < n; ++i)
        v(i) = field == Field::unitary ? rng.normal_complex()
                                       : complex_t(rng.normal(), 0.0);
    return v;
}

/**
 * Draw a Haar-distributed matrix from U(n) or O(n).
 *
 * Classic Ginibre + QR recipe: fill a matrix with iid standard Gaussians
 * over the field, take its QR decomposition, and fix the gauge by making
 * the diagonal of R positive, i.e. multiply column j of Q by the phase
 * (resp. sign) of R_jj. Without the gauge fix Q is *not* Haar: the QR
 * routine's own sign conventions bias it. With it, invariance under left
 * multiplication by any fixed group element is exact.
 *
 * Entries are consumed from the generator row by row, so a given seed
 * pins the sample bit for bit across runs and platforms with IEEE
 * doubles.
 */
inline HaarMatrix sample_haar(Eigen::Index n, Field field, Rng& rng,
                              std::uint64_t recorded_seed = 0) {
    if (n <= 0) throw DimensionError("matrix dimension must be positive");

    if (field == Field::orthogonal) {
        Eigen::MatrixXd g(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) g(i, j) = rng.normal();
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
        Eigen::MatrixXd q = qr.householderQ();
        const Eigen::VectorXd diag = qr.matrixQR().diagonal();
        for (Eigen::Index j = 0; j < n; ++j)
            if (diag(j) < 0.0) q.col(j) = -q.col(j);
        return HaarMatrix(field, recorded_seed, q.cast<complex_t>());
    }

    Eigen::MatrixXcd g(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) g(i, j) = rng.normal_complex();
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g);
    Eigen::MatrixXcd q = qr.householderQ();
    const Eigen::VectorXcd diag = qr.matrixQR().diagonal();
    for (Eigen::Index j = 0; j < n; ++j) {
        const double a = std::abs(diag(j));
        if (a > 0.0) q.col(j) *= diag(j) / a;
    }
    return HaarMatrix(field, recorded_seed, q);
}

inline HaarMatrix sample_haar(Eigen::Index n, Field field,
                              std::uint64_t seed) {
    Rng rng(seed);
    return sample_haar(n, field, rng, seed);
}

// ---------------------------------------------------------------------------
// Partial decomposition along one column.

/**
 * Split a unitary U into a reflection carrying its i-th column and a
 * remainder that does not touch the i-th coordinate.
 *
 * Write v = U e_i (a unit vector) and let phase = v_i / |v_i|. With
 *
 *   r = (v + phase * e_i) / sqrt(1 + |v_i|),     so ||r||^2 = 2,
 *   R = I - r r*,                                 a reflection, R^2 = I,
 *
 * one has R v = -phase * e_i, hence
 *
 *   rest = -conj(phase) * R U     satisfies   rest e_i = e_i
 *
 * and U reconstructs as U = -phase * R * rest. Because rest is unitary
 * and fixes e_i, its i-th row is e_i^T as well: all dependence of U on
 * its i-th column has been pushed into (phase, r). For Haar U this is the
 * standard device for resampling one column while conditioning on the
 * rest, which is how the ensemble checks isolate a single column's
 * contribution.
 *
 * Orthogonal matrices use phase = sign(v_i), keeping every intermediate
 * exactly real in complex storage. theta is the phase angle wrapped to
 * [0, 2 pi). Throws DegenerateColumn when |v_i| <= 1e-14: the reflection
 * direction is ill-defined there (a Haar column hits that set with
 * probability zero, but a caller-supplied matrix can).
 */
struct PartialDecomposition {
    double theta;          // phase angle in [0, 2 pi)
    complex_t phase;       // exp(i theta), exact
    Eigen::VectorXcd r;    // reflection direction, ||r||^2 = 2
    Eigen::MatrixXcd rest; // unitary remainder fixing e_i
};

inline PartialDecomposition partial_decompose(const HaarMatrix& u,
                                              Eigen::Index i) {
    const Eigen::Index n = u.dim();
    if (i < 0 || i >= n)
        throw DimensionError("column index " + std::to_string(i) +
                             " out of range for dimension " +
                             std::to_string(n));

    const Eigen::VectorXcd v = u.m.col(i);
    const complex_t vi = v(i);
    const double avi = std::abs(vi);
    if (avi <= 1e-14)
        throw DegenerateColumn("entry (" + std::to_string(i) + ", " +
                               std::to_string(i) + ") has modulus " +
                               std::to_string(avi) +
                               "; reflection direction undefined");

    complex_t phase;
    double theta;
    if (u.field == Field::orthogonal) {
        const bool neg = vi.real() < 0.0;
        phase = complex_t(neg ? -1.0 : 1.0, 0.0);
        theta = neg ? kPi : 0.0;
    } else {
        phase = vi / avi;
        theta = std::arg(vi);
        if (theta < 0.0) theta += 2.0 * kPi;
    }

    Eigen::VectorXcd r = v;
    r(i) += phase;
    r /= std::sqrt(1.0 + avi);

    // rest = -conj(phase) * (U - r (r* U)) without forming R.
    const Eigen::RowVectorXcd rstar_u = r.adjoint() * u.m;
    Eigen::MatrixXcd rest = u.m - r * rstar_u;
    rest *= -std::conj(phase);

    return {theta, phase, std::move(r), std::move(rest)};
}

// ---------------------------------------------------------------------------
// Binary serialization.
//
// Layout (native little-endian host assumed, which covers every platform
// this project targets): the magic bytes "HAAR", a format version byte
// (1), the field tag byte, then dimension and seed as uint64, then the
// n^2 entries row-major as (re, im) double pairs.

inline void save_haar(std::ostream& out, const HaarMatrix& u) {
    const char magic[4] = {'H', 'A', 'A', 'R'};
    out.write(magic, 4);
    const std::uint8_t version = 1;
    const std::uint8_t tag = static_cast<std::uint8_t>(u.field);
    out.write(reinterpret_cast<const char*>(&version), 1);
    out.write(reinterpret_cast<const char*>(&tag), 1);
    const std::uint64_t n = static_cast<std::uint64_t>(u.dim());
    out.write(reinterpret_cast<const char*>(&n), 8);
    out.write(reinterpret_cast<const char*>(&u.seed), 8);
    for (Eigen::Index i = 0; i < u.dim(); ++i)
        for (Eigen::Index j = 0; j < u.dim(); ++j) {
            const double re = u.m(i, j).real(), im = u.m(i, j).imag();
            out.write(reinterpret_cast<const char*>(&re), 8);
            out.write(reinterpret_cast<const char*>(&im), 8);
        }
    if (!out) throw Error("write failed while saving matrix");
}

inline HaarMatrix load_haar(std::istream& in) {
    char magic[4];
    in.read(magic, 4);
    if (!in || magic[0] != 'H' || magic[1] != 'A' || magic[2] != 'A' ||
        magic[3] != 'R')
        throw ParseError("not a HAAR file (bad magic)");
    std::uint8_t version = 0, tag = 0;
    in.read(reinterpret_cast<char*>(&version), 1);
    in.read(reinterpret_cast<char*>(&tag), 1);
    if (!in || version != 1)
        throw ParseError("unsupported HAAR format version " +
                         std::to_string(int(version)));
    if (tag > 1)
        throw ParseError("unknown field tag " + std::to_string(int(tag)));
    std::uint64_t n = 0, seed = 0;
    in.read(reinterpret_cast<char*>(&n), 8);
    in.read(reinterpret_cast<char*>(&seed), 8);
    if (!in || n == 0 || n > 100000)
        throw ParseError("implausible matrix dimension");

    Eigen::MatrixXcd m(static_cast<Eigen::Index>(n),
                       static_cast<Eigen::Index>(n));
    for (std::uint64_t i = 0; i < n; ++i)
        for (std::uint64_t j = 0; j < n; ++j) {
            double re = 0.0, im = 0.0;
            in.read(reinterpret_cast<char*>(&re), 8);
            in.read(reinterpret_cast<char*>(&im), 8);
            if (!in) throw ParseError("truncated HAAR payload");
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                complex_t(re, im);
        }
    if (in.peek() != std::istream::traits_type::eof())
        throw ParseError("trailing bytes after HAAR payload");

    // The constructor re-validates finiteness and, for the orthogonal
    // tag, exact realness; a corrupted file fails loudly here.
    try {
        return HaarMatrix(static_cast<Field>(tag), seed, std::move(m));
    } catch (const Error& e) {
        throw ParseError(std::string("invalid HAAR payload: ") + e.what());
    }
}

}  // namespace boxplus
