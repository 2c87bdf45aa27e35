#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numeric>
#include <set>

#include "privsnn/errors.hpp"
#include "privsnn/matrix.hpp"
#include "privsnn/rng.hpp"

using namespace privsnn;

namespace {

// Independent oracle: naive triple loop, ijk order.
Matrix matmul_oracle(const Matrix& a, const Matrix& b) {
    Matrix c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < b.cols; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols; ++k) acc += a(i, k) * b(k, j);
            c(i, j) = acc;
        }
    return c;
}

Matrix random_matrix(SeededRng& rng, std::size_t r, std::size_t c, double lo = -1.0, double hi = 1.0) {
    Matrix m(r, c);
    for (auto& v : m.data) v = lo + (hi - lo) * rng.next_double();
    return m;
}

}  // namespace

TEST_CASE("matmul identity and scalar cases") {
    Matrix eye(2, 2);
    eye(0, 0) = eye(1, 1) = 1.0;
    Matrix m(2, 2);
    m(0, 0) = 1; m(0, 1) = 2; m(1, 0) = 3; m(1, 1) = 4;
    Matrix r = matmul(eye, m);
    CHECK(r(0, 0) == 1.0);
    CHECK(r(0, 1) == 2.0);
    CHECK(r(1, 0) == 3.0);
    CHECK(r(1, 1) == 4.0);

    Matrix a(1, 1, 2.0), b(1, 1, 3.0);
    CHECK(matmul(a, b)(0, 0) == 6.0);
}

TEST_CASE("matmul matches triple-loop oracle on random 7x5 * 5x3") {
    SeededRng rng(42);
    Matrix a = random_matrix(rng, 7, 5);
    Matrix b = random_matrix(rng, 5, 3);
    Matrix got = matmul(a, b);
    Matrix want = matmul_oracle(a, b);
    for (std::size_t i = 0; i < got.data.size(); ++i)
        CHECK(std::abs(got.data[i] - want.data[i]) < 1e-12);
}

TEST_CASE("matmul rejects dimension mismatch") {
    Matrix a(2, 3), b(2, 3);
    CHECK_THROWS_AS(matmul(a, b), ShapeError);
}

TEST_CASE("matmul associativity on random conformable triples") {
    SeededRng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t m = 1 + rng.next_below(6);
        const std::size_t k = 1 + rng.next_below(6);
        const std::size_t p = 1 + rng.next_below(6);
        const std::size_t n = 1 + rng.next_below(6);
        Matrix a = random_matrix(rng, m, k);
        Matrix b = random_matrix(rng, k, p);
        Matrix c = random_matrix(rng, p, n);
        Matrix left = matmul(matmul(a, b), c);
        Matrix right = matmul(a, matmul(b, c));
        for (std::size_t i = 0; i < left.data.size(); ++i) {
            const double scale = std::max({1.0, std::abs(left.data[i]), std::abs(right.data[i])});
            CHECK(std::abs(left.data[i] - right.data[i]) / scale < 1e-9);
        }
    }
}

TEST_CASE("transpose-variant products agree with explicit oracle") {
    SeededRng rng(11);
    Matrix a = random_matrix(rng, 6, 4);
    Matrix b = random_matrix(rng, 6, 5);
    // a^T * b
    Matrix got = matmul_transpose_a(a, b);
    REQUIRE(got.rows == 4);
    REQUIRE(got.cols == 5);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 5; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < 6; ++k) acc += a(k, i) * b(k, j);
            CHECK(got(i, j) == doctest::Approx(acc).epsilon(1e-12));
        }
    // a * c^T
    Matrix c = random_matrix(rng, 5, 4);
    Matrix got2 = matmul_transpose_b(a, c);
    REQUIRE(got2.rows == 6);
    REQUIRE(got2.cols == 5);
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 5; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < 4; ++k) acc += a(i, k) * c(j, k);
            CHECK(got2(i, j) == doctest::Approx(acc).epsilon(1e-12));
        }
}

TEST_CASE("softmax uniform, shift invariance, extreme input") {
    std::vector<double> z{0.0, 0.0, 0.0};
    auto p = softmax(z);
    for (double v : p) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-15));

    SeededRng rng(3);
    for (int t = 0; t < 50; ++t) {
        std::vector<double> a(5), b(5);
        const double shift = 10.0 * (rng.next_double() - 0.5);
        for (int i = 0; i < 5; ++i) {
            a[i] = 100.0 * (rng.next_double() - 0.5);
            b[i] = a[i] + shift;
        }
        auto pa = softmax(a);
        auto pb = softmax(b);
        for (int i = 0; i < 5; ++i) CHECK(std::abs(pa[i] - pb[i]) < 1e-12);
    }

    std::vector<double> hot{1000.0, 0.0};
    auto ph = softmax(hot);
    CHECK(std::isfinite(ph[0]));
    CHECK(std::isfinite(ph[1]));
    CHECK(ph[0] == doctest::Approx(1.0));
    CHECK(ph[1] == doctest::Approx(0.0));
}

TEST_CASE("softmax sums to one for 1000 random vectors in [-50, 50]") {
    SeededRng rng(99);
    for (int t = 0; t < 1000; ++t) {
        const std::size_t n = 1 + rng.next_below(12);
        std::vector<double> z(n);
        for (auto& v : z) v = -50.0 + 100.0 * rng.next_double();
        auto p = softmax(z);
        double sum = std::accumulate(p.begin(), p.end(), 0.0);
        CHECK(std::abs(sum - 1.0) <= 1e-12);
        for (double v : p) CHECK(v > 0.0);
    }
}

TEST_CASE("gaussian degenerate and error cases") {
    SeededRng rng(5);
    CHECK(rng.gaussian(3.25, 0.0) == 3.25);
    CHECK_THROWS_AS(rng.gaussian(0.0, -1.0), ArgumentError);
}

TEST_CASE("gaussian sample mean of 1e6 draws of N(0,1) within 4/sqrt(n)") {
    SeededRng rng(2024);
    const int n = 1'000'000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += rng.gaussian(0.0, 1.0);
    CHECK(std::abs(sum / n) < 4.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("gaussian sample variance of 1e6 draws of N(0,4) within 5%") {
    SeededRng rng(77);
    const int n = 1'000'000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.gaussian(0.0, 2.0);
        sum += x;
        sumsq += x * x;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    CHECK(var == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("identical seeds reproduce bit-identical gaussian streams") {
    SeededRng a(123456789), b(123456789);
    for (int i = 0; i < 1000; ++i) {
        CHECK(a.gaussian(0.0, 1.0) == b.gaussian(0.0, 1.0));
    }
}

TEST_CASE("derived streams differ from parent and are reproducible") {
    SeededRng parent(1);
    SeededRng c1 = parent.derive(7);
    SeededRng c2 = parent.derive(7);
    SeededRng c3 = parent.derive(8);
    const auto a = c1.next_u64();
    CHECK(a == c2.next_u64());
    CHECK(a != c3.next_u64());
}

TEST_CASE("shuffle_indices edge cases and determinism") {
    SeededRng rng(10);
    CHECK(shuffle_indices(rng, 0).empty());
    auto one = shuffle_indices(rng, 1);
    REQUIRE(one.size() == 1);
    CHECK(one[0] == 0);

    SeededRng r1(55), r2(55);
    auto p1 = shuffle_indices(r1, 10);
    auto p2 = shuffle_indices(r2, 10);
    CHECK(p1 == p2);
}

TEST_CASE("shuffle_indices is a bijection") {
    SeededRng rng(31);
    for (int t = 0; t < 20; ++t) {
        const std::size_t n = rng.next_below(200);
        auto p = shuffle_indices(rng, n);
        REQUIRE(p.size() == n);
        std::set<std::size_t> seen(p.begin(), p.end());
        CHECK(seen.size() == n);
        if (n > 0) {
            CHECK(*seen.begin() == 0);
            CHECK(*seen.rbegin() == n - 1);
        }
    }
}

TEST_CASE("next_below stays in range and hits all values") {
    SeededRng rng(13);
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 1000; ++i) seen.insert(rng.next_below(7));
    CHECK(seen.size() == 7);
    CHECK(*seen.rbegin() == 6);
}
