#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "qlert/dense.hpp"
#include "qlert/error.hpp"

using namespace qlert;

namespace {

DenseMatrix random_symmetric(std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    DenseMatrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) a(i, j) = a(j, i) = g(rng);
    return a;
}

}  // namespace

TEST_CASE("jacobi: reconstruction and orthogonality (property)") {
    std::mt19937_64 rng(21);
    for (std::size_t n : {1u, 2u, 5u, 16u, 31u}) {
        CAPTURE(n);
        const DenseMatrix a = random_symmetric(n, rng);
        const SymmetricEigen es = jacobi_eigen(a);
        DenseMatrix lambda(n, n);
        for (std::size_t k = 0; k < n; ++k) lambda(k, k) = es.values[k];
        const DenseMatrix& v = es.vectors;
        const DenseMatrix back = v * lambda * v.transposed();
        CHECK((back - a).max_abs() <= 1e-12 * std::max(1.0, a.max_abs()));
        CHECK((v.transposed() * v - DenseMatrix::identity(n)).max_abs() <= 1e-12);
        for (std::size_t k = 1; k < n; ++k) CHECK(es.values[k] >= es.values[k - 1]);
        double trace = 0.0, sum = 0.0;
        for (std::size_t k = 0; k < n; ++k) trace += a(k, k), sum += es.values[k];
        CHECK(sum == doctest::Approx(trace).scale(1.0).epsilon(1e-12));
    }
}

TEST_CASE("jacobi: second-difference matrix") {
    for (std::size_t n : {3u, 8u}) {
        DenseMatrix t(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            t(i, i) = 2.0;
            if (i + 1 < n) t(i, i + 1) = t(i + 1, i) = -1.0;
        }
        const SymmetricEigen es = jacobi_eigen(t);
        for (std::size_t k = 0; k < n; ++k) {
            const double exact = 2.0 - 2.0 * std::cos((k + 1.0) * std::numbers::pi / (n + 1.0));
            CHECK(es.values[k] == doctest::Approx(exact).epsilon(1e-13));
        }
        if (n == 3) CHECK(es.values[0] == doctest::Approx(2.0 - std::sqrt(2.0)).epsilon(1e-14));
    }
    CHECK_THROWS_AS(jacobi_eigen(DenseMatrix(2, 3)), InvalidArgument);
}

TEST_CASE("zero-mean basis is orthonormal and sums to zero") {
    for (std::size_t n : {2u, 7u, 16u}) {
        const DenseMatrix q = zero_mean_basis(n);
        REQUIRE(q.rows() == n);
        REQUIRE(q.cols() == n - 1);
        CHECK((q.transposed() * q - DenseMatrix::identity(n - 1)).max_abs() <= 1e-13);
        for (std::size_t k = 0; k + 1 < n; ++k) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += q(i, k);
            CHECK(std::abs(s) <= 1e-13);
        }
    }
}

TEST_CASE("spectral norm and elementary operations") {
    DenseMatrix d(2, 2);
    d(0, 0) = -5.0;
    d(1, 1) = 3.0;
    CHECK(spectral_norm_symmetric(d) == doctest::Approx(5.0));
    CHECK(d.frobenius() == doctest::Approx(std::sqrt(34.0)));
    DenseMatrix a(2, 2);
    a(0, 1) = 1.0;
    CHECK(a.asymmetry() == 1.0);
    CHECK(a.symmetric_part()(1, 0) == 0.5);
    CHECK((2.0 * a)(0, 1) == 2.0);
    CHECK((a + a - a) == a);
}
