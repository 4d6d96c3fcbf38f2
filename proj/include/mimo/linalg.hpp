#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "errors.hpp"
#include "matrix.hpp"

namespace mimo {

/// A pivot below this fraction of the largest pivot marks the system as
/// numerically singular.
inline constexpr double kSingularityRelTol = 1e-12;

/// Lower-triangular Cholesky factor of a real symmetric positive definite
/// matrix: a = l * l^T. Throws SingularityError when a is not positive
/// definite within working precision.
inline RealMatrix cholesky_lower(const RealMatrix& a) {
    if (a.rows != a.cols || a.rows == 0)
        throw ParameterError("cholesky_lower: matrix must be square and non-empty");
    const std::size_t n = a.rows;
    RealMatrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double s = a(j, j);
        for (std::size_t k = 0; k < j; ++k) s -= l(j, k) * l(j, k);
        if (s <= 0.0) throw SingularityError("cholesky_lower: matrix not positive definite");
        l(j, j) = std::sqrt(s);
        for (std::size_t i = j + 1; i < n; ++i) {
            double t = a(i, j);
            for (std::size_t k = 0; k < j; ++k) t -= l(i, k) * l(j, k);
            l(i, j) = t / l(j, j);
        }
    }
    return l;
}

/// Solves a * x = b for Hermitian positive (semi)definite a via LDL^H with
/// symmetric diagonal pivoting. b may hold several right-hand sides as
/// columns. A pivot that is non-positive or smaller than kSingularityRelTol
/// times the largest pivot raises SingularityError; no partial result is
/// returned in that case.
inline ComplexMatrix solve_hermitian(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.rows != a.cols) throw ParameterError("solve_hermitian: matrix must be square");
    if (a.rows == 0) throw ParameterError("solve_hermitian: empty system");
    if (b.rows != a.rows) throw ParameterError("solve_hermitian: right-hand side height disagrees");

    const std::size_t n = a.rows;
    ComplexMatrix m = a;
    std::vector<std::size_t> swaps(n);
    std::vector<double> diag(n);
    double max_pivot = 0.0;

    for (std::size_t k = 0; k < n; ++k) {
        // Move the largest remaining diagonal entry into position k. For a
        // Hermitian PSD matrix the largest magnitude in the trailing block
        // sits on the diagonal, so this is complete pivoting in effect.
        std::size_t p = k;
        for (std::size_t j = k + 1; j < n; ++j)
            if (m(j, j).real() > m(p, p).real()) p = j;
        swaps[k] = p;
        if (p != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(m(k, j), m(p, j));
            for (std::size_t i = 0; i < n; ++i) std::swap(m(i, k), m(i, p));
        }

        const double pivot = m(k, k).real();
        max_pivot = std::max(max_pivot, pivot);
        if (pivot <= 0.0 || pivot < kSingularityRelTol * max_pivot)
            throw SingularityError("solve_hermitian: system is numerically singular");
        diag[k] = pivot;

        for (std::size_t i = k + 1; i < n; ++i) m(i, k) /= pivot;
        for (std::size_t i = k + 1; i < n; ++i) {
            for (std::size_t j = k + 1; j < n; ++j)
                m(i, j) -= m(i, k) * std::conj(m(j, k)) * pivot;
        }
    }

    ComplexMatrix x = b;
    for (std::size_t k = 0; k < n; ++k) {
        if (swaps[k] != k)
            for (std::size_t c = 0; c < x.cols; ++c) std::swap(x(k, c), x(swaps[k], c));
    }
    // Forward substitution with the unit lower factor.
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = k + 1; i < n; ++i)
            for (std::size_t c = 0; c < x.cols; ++c) x(i, c) -= m(i, k) * x(k, c);
    // Diagonal scaling.
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t c = 0; c < x.cols; ++c) x(k, c) /= diag[k];
    // Back substitution with L^H.
    for (std::size_t k = n; k-- > 0;)
        for (std::size_t i = k + 1; i < n; ++i)
            for (std::size_t c = 0; c < x.cols; ++c) x(k, c) -= std::conj(m(i, k)) * x(i, c);
    // Undo the row permutation in reverse order.
    for (std::size_t k = n; k-- > 0;) {
        if (swaps[k] != k)
            for (std::size_t c = 0; c < x.cols; ++c) std::swap(x(k, c), x(swaps[k], c));
    }
    return x;
}

}  // namespace mimo
