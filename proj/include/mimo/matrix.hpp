#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "errors.hpp"

namespace mimo {

using Complex = std::complex<double>;
using CVec = std::vector<Complex>;
using RVec = std::vector<double>;

/// Dense row-major complex matrix. Sized for link-level work (a handful of
/// antennas), so operations are plain loops rather than blocked kernels.
struct ComplexMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<Complex> data;  // row-major, rows*cols entries

    ComplexMatrix() = default;
    ComplexMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c) {}

    Complex& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    const Complex& operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    static ComplexMatrix identity(std::size_t n) {
        ComplexMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }
};

/// Dense row-major real matrix. Also serves as the batch container for the
/// neural network (one sample per row).
struct RealMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    RealMatrix() = default;
    RealMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    const double& operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    double* row(std::size_t i) { return data.data() + i * cols; }
    const double* row(std::size_t i) const { return data.data() + i * cols; }

    static RealMatrix identity(std::size_t n) {
        RealMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }
};

inline ComplexMatrix adjoint(const ComplexMatrix& a) {
    ComplexMatrix out(a.cols, a.rows);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j) out(j, i) = std::conj(a(i, j));
    return out;
}

inline RealMatrix transpose(const RealMatrix& a) {
    RealMatrix out(a.cols, a.rows);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j) out(j, i) = a(i, j);
    return out;
}

inline ComplexMatrix multiply(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.cols != b.rows) throw ParameterError("multiply: inner dimensions disagree");
    ComplexMatrix out(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t k = 0; k < a.cols; ++k) {
            const Complex aik = a(i, k);
            for (std::size_t j = 0; j < b.cols; ++j) out(i, j) += aik * b(k, j);
        }
    }
    return out;
}

inline RealMatrix multiply(const RealMatrix& a, const RealMatrix& b) {
    if (a.cols != b.rows) throw ParameterError("multiply: inner dimensions disagree");
    RealMatrix out(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = a(i, k);
            for (std::size_t j = 0; j < b.cols; ++j) out(i, j) += aik * b(k, j);
        }
    }
    return out;
}

inline CVec multiply(const ComplexMatrix& a, const CVec& x) {
    if (a.cols != x.size()) throw ParameterError("multiply: vector length disagrees");
    CVec out(a.rows);
    for (std::size_t i = 0; i < a.rows; ++i) {
        Complex acc = 0.0;
        for (std::size_t j = 0; j < a.cols; ++j) acc += a(i, j) * x[j];
        out[i] = acc;
    }
    return out;
}

inline RVec multiply(const RealMatrix& a, const RVec& x) {
    if (a.cols != x.size()) throw ParameterError("multiply: vector length disagrees");
    RVec out(a.rows);
    for (std::size_t i = 0; i < a.rows; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < a.cols; ++j) acc += a(i, j) * x[j];
        out[i] = acc;
    }
    return out;
}

/// a += s * I
inline void add_scaled_identity(ComplexMatrix& a, double s) {
    if (a.rows != a.cols) throw ParameterError("add_scaled_identity: matrix must be square");
    for (std::size_t i = 0; i < a.rows; ++i) a(i, i) += s;
}

/// Real embedding of a complex vector: [Re(v); Im(v)], length 2n.
inline RVec real_embed_vector(const CVec& v) {
    if (v.empty()) throw ParameterError("real_embed_vector: empty vector");
    const std::size_t n = v.size();
    RVec out(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = v[i].real();
        out[n + i] = v[i].imag();
    }
    return out;
}

/// Real embedding of a complex matrix:
///
///   [ Re(H)  -Im(H) ]
///   [ Im(H)   Re(H) ]
///
/// chosen so that real_embed_matrix(H) * real_embed_vector(x) equals
/// real_embed_vector(H * x) for every compatible x.
inline RealMatrix real_embed_matrix(const ComplexMatrix& h) {
    if (h.rows == 0 || h.cols == 0) throw ParameterError("real_embed_matrix: empty matrix");
    const std::size_t r = h.rows;
    const std::size_t c = h.cols;
    RealMatrix out(2 * r, 2 * c);
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            const double re = h(i, j).real();
            const double im = h(i, j).imag();
            out(i, j) = re;
            out(i, j + c) = -im;
            out(i + r, j) = im;
            out(i + r, j + c) = re;
        }
    }
    return out;
}

}  // namespace mimo
