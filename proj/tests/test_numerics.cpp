#include <catch2/catch_amalgamated.hpp>

#include <mimo/linalg.hpp>
#include <mimo/matrix.hpp>
#include <mimo/rng.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

using namespace mimo;

namespace {

// Oracle matrix product written independently of mimo::multiply: different
// loop order, accumulates into a flat buffer indexed by hand.
std::vector<Complex> oracle_product(const ComplexMatrix& a, const ComplexMatrix& b) {
    std::vector<Complex> out(a.rows * b.cols, Complex{0.0, 0.0});
    for (std::size_t j = 0; j < b.cols; ++j) {
        for (std::size_t k = 0; k < a.cols; ++k) {
            const Complex scale = b(k, j);
            for (std::size_t i = 0; i < a.rows; ++i) {
                out[i * b.cols + j] += a(i, k) * scale;
            }
        }
    }
    return out;
}

std::vector<double> oracle_real_product(const RealMatrix& a, const RealMatrix& b) {
    std::vector<double> out(a.rows * b.cols, 0.0);
    for (std::size_t j = 0; j < b.cols; ++j) {
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double scale = b(k, j);
            for (std::size_t i = 0; i < a.rows; ++i) {
                out[i * b.cols + j] += a(i, k) * scale;
            }
        }
    }
    return out;
}

ComplexMatrix random_matrix(SeededRng& rng, std::size_t rows, std::size_t cols) {
    ComplexMatrix m(rows, cols);
    for (auto& z : m.data) z = rng.complex_gaussian(1.0);
    return m;
}

// Hermitian positive definite matrix with condition number <= cond:
// A = Q D Q^H where Q = I - 2 v v^H / (v^H v) is a Householder reflector.
ComplexMatrix spd_with_condition(SeededRng& rng, std::size_t n, double cond) {
    CVec v(n);
    for (auto& z : v) z = rng.complex_gaussian(1.0);
    double vnorm = 0.0;
    for (const auto& z : v) vnorm += std::norm(z);

    ComplexMatrix q = ComplexMatrix::identity(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            q(i, j) -= 2.0 * v[i] * std::conj(v[j]) / vnorm;
        }
    }
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = (n == 1) ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
        d[i] = std::pow(cond, t);  // eigenvalues from 1 up to cond
    }
    ComplexMatrix a(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            Complex acc{0.0, 0.0};
            for (std::size_t k = 0; k < n; ++k) {
                acc += q(i, k) * d[k] * std::conj(q(j, k));
            }
            a(i, j) = acc;
        }
    }
    return a;
}

}  // namespace

TEST_CASE("real embedding of vectors matches the stacked layout") {
    CVec y = {Complex{1.0, 2.0}, Complex{3.0, -1.0}};
    RVec e = real_embed_vector(y);
    REQUIRE(e.size() == 4);
    CHECK(e[0] == 1.0);
    CHECK(e[1] == 3.0);
    CHECK(e[2] == 2.0);
    CHECK(e[3] == -1.0);

    CVec z(4, Complex{0.0, 0.0});
    RVec ez = real_embed_vector(z);
    REQUIRE(ez.size() == 8);
    for (double v : ez) CHECK(v == 0.0);

    CHECK_THROWS_AS(real_embed_vector(CVec{}), ParameterError);
}

TEST_CASE("real embedding of matrices has the block structure") {
    SECTION("complex identity embeds to real identity") {
        ComplexMatrix id = ComplexMatrix::identity(2);
        RealMatrix e = real_embed_matrix(id);
        REQUIRE(e.rows == 4);
        REQUIRE(e.cols == 4);
        for (std::size_t i = 0; i < 4; ++i) {
            for (std::size_t j = 0; j < 4; ++j) {
                CHECK(e(i, j) == (i == j ? 1.0 : 0.0));
            }
        }
    }
    SECTION("i times identity embeds to the rotation blocks") {
        ComplexMatrix m(2, 2);
        m(0, 0) = Complex{0.0, 1.0};
        m(1, 1) = Complex{0.0, 1.0};
        RealMatrix e = real_embed_matrix(m);
        // top-left Re = 0, top-right -Im = -I, bottom-left Im = I, bottom-right Re = 0
        for (std::size_t i = 0; i < 2; ++i) {
            for (std::size_t j = 0; j < 2; ++j) {
                const double expect_tr = (i == j) ? -1.0 : 0.0;
                const double expect_bl = (i == j) ? 1.0 : 0.0;
                CHECK(e(i, j) == 0.0);
                CHECK(e(i, j + 2) == expect_tr);
                CHECK(e(i + 2, j) == expect_bl);
                CHECK(e(i + 2, j + 2) == 0.0);
            }
        }
    }
    CHECK_THROWS_AS(real_embed_matrix(ComplexMatrix{}), ParameterError);
}

TEST_CASE("real embedding is a homomorphism for matrix-vector products") {
    SeededRng rng(101);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t rows = 1 + rng.next_below(5);
        const std::size_t cols = 1 + rng.next_below(5);
        ComplexMatrix h = random_matrix(rng, rows, cols);
        CVec x(cols);
        for (auto& z : x) z = rng.complex_gaussian(1.0);

        // Complex product computed with an explicit Re/Im oracle, no library call.
        RVec expect(2 * rows, 0.0);
        for (std::size_t i = 0; i < rows; ++i) {
            double re = 0.0;
            double im = 0.0;
            for (std::size_t j = 0; j < cols; ++j) {
                const double hr = h(i, j).real();
                const double hi = h(i, j).imag();
                re += hr * x[j].real() - hi * x[j].imag();
                im += hr * x[j].imag() + hi * x[j].real();
            }
            expect[i] = re;
            expect[i + rows] = im;
        }

        RealMatrix eh = real_embed_matrix(h);
        RVec ex = real_embed_vector(x);
        RVec got = multiply(eh, ex);
        REQUIRE(got.size() == expect.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(std::abs(got[i] - expect[i]) < 1e-12);
        }
    }
}

TEST_CASE("matrix primitives agree with oracle arithmetic") {
    SeededRng rng(202);
    ComplexMatrix a = random_matrix(rng, 3, 4);
    ComplexMatrix b = random_matrix(rng, 4, 2);
    ComplexMatrix c = multiply(a, b);
    auto expect = oracle_product(a, b);
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
            CHECK(std::abs(c(i, j) - expect[i * 2 + j]) < 1e-13);
        }
    }

    ComplexMatrix ah = adjoint(a);
    REQUIRE(ah.rows == 4);
    REQUIRE(ah.cols == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
            CHECK(ah(j, i) == std::conj(a(i, j)));
        }
    }

    RealMatrix ra(2, 3);
    RealMatrix rb(3, 2);
    SeededRng rng2(203);
    for (auto& v : ra.data) v = rng2.uniform01() - 0.5;
    for (auto& v : rb.data) v = rng2.uniform01() - 0.5;
    RealMatrix rc = multiply(ra, rb);
    auto rexpect = oracle_real_product(ra, rb);
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
            CHECK(std::abs(rc(i, j) - rexpect[i * 2 + j]) < 1e-14);
        }
    }

    CHECK_THROWS_AS(multiply(a, ComplexMatrix(3, 3)), ParameterError);
}

TEST_CASE("hermitian solve recovers simple closed forms") {
    SECTION("identity system returns the right-hand side") {
        ComplexMatrix id = ComplexMatrix::identity(3);
        SeededRng rng(7);
        ComplexMatrix b = random_matrix(rng, 3, 2);
        ComplexMatrix x = solve_hermitian(id, b);
        for (std::size_t i = 0; i < 3; ++i) {
            for (std::size_t j = 0; j < 2; ++j) {
                CHECK(std::abs(x(i, j) - b(i, j)) < 1e-15);
            }
        }
    }
    SECTION("A = 2I maps the identity to 0.5 I") {
        ComplexMatrix a = ComplexMatrix::identity(4);
        for (std::size_t i = 0; i < 4; ++i) a(i, i) = Complex{2.0, 0.0};
        ComplexMatrix x = solve_hermitian(a, ComplexMatrix::identity(4));
        for (std::size_t i = 0; i < 4; ++i) {
            for (std::size_t j = 0; j < 4; ++j) {
                CHECK(x(i, j) == (i == j ? Complex{0.5, 0.0} : Complex{0.0, 0.0}));
            }
        }
    }
}

TEST_CASE("hermitian solve residuals stay small on random Gram systems") {
    SeededRng rng(303);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 2 + rng.next_below(5);
        ComplexMatrix g = random_matrix(rng, n + 2, n);
        ComplexMatrix a = multiply(adjoint(g), g);
        for (std::size_t i = 0; i < n; ++i) a(i, i) += 1.0;  // keep well conditioned
        ComplexMatrix b = random_matrix(rng, n, 3);
        ComplexMatrix x = solve_hermitian(a, b);
        auto ax = oracle_product(a, x);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < 3; ++j) {
                CHECK(std::abs(ax[i * 3 + j] - b(i, j)) < 1e-10);
            }
        }
    }
}

TEST_CASE("hermitian solve recovers solutions up to condition 1e6") {
    SeededRng rng(404);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 2 + rng.next_below(7);
        ComplexMatrix a = spd_with_condition(rng, n, 1e6);
        ComplexMatrix x0 = random_matrix(rng, n, 2);
        ComplexMatrix b(n, 2);
        auto prod = oracle_product(a, x0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < 2; ++j) b(i, j) = prod[i * 2 + j];
        }
        ComplexMatrix x = solve_hermitian(a, b);
        double err = 0.0;
        double ref = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < 2; ++j) {
                err = std::max(err, std::abs(x(i, j) - x0(i, j)));
                ref = std::max(ref, std::abs(x0(i, j)));
            }
        }
        CHECK(err / ref <= 1e-9);
    }
}

TEST_CASE("singular and near-singular systems are rejected") {
    SECTION("zero matrix") {
        ComplexMatrix a(3, 3);
        CHECK_THROWS_AS(solve_hermitian(a, ComplexMatrix::identity(3)), SingularityError);
    }
    SECTION("gram matrix of duplicated columns") {
        SeededRng rng(505);
        ComplexMatrix h = random_matrix(rng, 4, 4);
        for (std::size_t i = 0; i < 4; ++i) h(i, 3) = h(i, 2);
        ComplexMatrix a = multiply(adjoint(h), h);
        CHECK_THROWS_AS(solve_hermitian(a, ComplexMatrix::identity(4)), SingularityError);
    }
    SECTION("pivot below the relative tolerance") {
        ComplexMatrix a = ComplexMatrix::identity(2);
        a(1, 1) = Complex{1e-13, 0.0};
        CHECK_THROWS_AS(solve_hermitian(a, ComplexMatrix::identity(2)), SingularityError);
        a(1, 1) = Complex{1e-11, 0.0};
        CHECK_NOTHROW(solve_hermitian(a, ComplexMatrix::identity(2)));
    }
    SECTION("cholesky rejects indefinite input") {
        RealMatrix a = RealMatrix::identity(2);
        a(1, 1) = -1.0;
        CHECK_THROWS_AS(cholesky_lower(a), SingularityError);
    }
    SECTION("cholesky factor reproduces the input") {
        RealMatrix r(3, 3);
        const double vals[9] = {4.0, 2.0, -1.0, 2.0, 5.0, 3.0, -1.0, 3.0, 6.0};
        for (std::size_t i = 0; i < 9; ++i) r.data[i] = vals[i];
        RealMatrix l = cholesky_lower(r);
        RealMatrix back = multiply(l, transpose(l));
        for (std::size_t i = 0; i < 9; ++i) {
            CHECK(std::abs(back.data[i] - vals[i]) < 1e-12);
        }
        for (std::size_t i = 0; i < 3; ++i) {
            for (std::size_t j = i + 1; j < 3; ++j) CHECK(l(i, j) == 0.0);
        }
    }
    SECTION("shape errors") {
        CHECK_THROWS_AS(solve_hermitian(ComplexMatrix(2, 3), ComplexMatrix(2, 1)), ParameterError);
        CHECK_THROWS_AS(solve_hermitian(ComplexMatrix::identity(2), ComplexMatrix(3, 1)), ParameterError);
    }
}

TEST_CASE("seeded rng streams are deterministic and derivable") {
    SeededRng a(42);
    SeededRng b(42);
    for (int i = 0; i < 1000; ++i) {
        REQUIRE(a.next_u64() == b.next_u64());
    }
    SeededRng c(42);
    SeededRng d(43);
    bool differs = false;
    for (int i = 0; i < 16; ++i) {
        if (c.next_u64() != d.next_u64()) differs = true;
    }
    CHECK(differs);

    SeededRng base1 = SeededRng::derive(9, 4);
    SeededRng base2 = SeededRng::derive(9, 4);
    CHECK(base1.next_u64() == base2.next_u64());
    SeededRng other = SeededRng::derive(9, 5);
    CHECK(SeededRng::derive(9, 4).next_u64() != other.next_u64());
}

TEST_CASE("uniform01 and next_below respect their ranges") {
    SeededRng rng(77);
    double lo = 1.0;
    double hi = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double u = rng.uniform01();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    CHECK(lo < 0.01);
    CHECK(hi > 0.99);

    std::vector<int> counts(7, 0);
    for (int i = 0; i < 70000; ++i) {
        const std::uint64_t v = rng.next_below(7);
        REQUIRE(v < 7);
        ++counts[static_cast<std::size_t>(v)];
    }
    for (int c : counts) {
        CHECK(c > 9000);
        CHECK(c < 11000);
    }
}

TEST_CASE("gaussian pairs have unit variance and near-zero correlation") {
    SeededRng rng(88);
    const int n = 500000;
    double sum = 0.0;
    double sum_sq = 0.0;
    double cross = 0.0;
    for (int i = 0; i < n; ++i) {
        auto [z0, z1] = rng.gaussian_pair();
        sum += z0 + z1;
        sum_sq += z0 * z0 + z1 * z1;
        cross += z0 * z1;
    }
    const double mean = sum / (2.0 * n);
    const double var = sum_sq / (2.0 * n) - mean * mean;
    CHECK(std::abs(mean) < 0.005);
    CHECK(var > 0.98);
    CHECK(var < 1.02);
    CHECK(std::abs(cross / n) < 0.01);
}

TEST_CASE("complex gaussian samples have the requested variance") {
    SeededRng rng(99);
    const int n = 1000000;
    double energy = 0.0;
    double re_im = 0.0;
    for (int i = 0; i < n; ++i) {
        const Complex z = rng.complex_gaussian(1.0);
        energy += std::norm(z);
        re_im += z.real() * z.imag();
    }
    CHECK(energy / n > 0.98);
    CHECK(energy / n < 1.02);
    CHECK(std::abs(re_im / n) < 0.01);

    SeededRng rng2(99);
    CVec v = sample_complex_gaussian(rng2, 8, 0.0);
    for (const auto& z : v) CHECK(z == Complex{0.0, 0.0});
    CHECK_THROWS_AS(sample_complex_gaussian(rng2, 4, -1.0), ParameterError);

    SeededRng ra(123);
    SeededRng rb(123);
    CVec va = sample_complex_gaussian(ra, 64, 2.5);
    CVec vb = sample_complex_gaussian(rb, 64, 2.5);
    for (std::size_t i = 0; i < va.size(); ++i) {
        REQUIRE(va[i] == vb[i]);
    }
}

TEST_CASE("random bits are unbiased and deterministic") {
    SeededRng rng(111);
    auto bits = random_bits(rng, 100000);
    std::size_t ones = 0;
    for (auto b : bits) {
        REQUIRE((b == 0 || b == 1));
        ones += b;
    }
    const double freq = static_cast<double>(ones) / static_cast<double>(bits.size());
    CHECK(freq > 0.495);
    CHECK(freq < 0.505);

    SeededRng r1(5);
    SeededRng r2(5);
    CHECK(random_bits(r1, 256) == random_bits(r2, 256));
}

TEST_CASE("deterministic shuffle is a permutation and reproducible") {
    std::vector<std::size_t> idx(100);
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    auto copy = idx;

    SeededRng r1(314);
    deterministic_shuffle(idx, r1);
    CHECK(idx != copy);  // astronomically unlikely to be identity
    auto sorted = idx;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == copy);

    auto again = copy;
    SeededRng r2(314);
    deterministic_shuffle(again, r2);
    CHECK(again == idx);
}
