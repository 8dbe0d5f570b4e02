#include "doctest.h"

#include "mlat/fourier.hpp"
#include "mlat/io.hpp"

#include <complex>
#include <random>

using namespace mlat;

TEST_CASE("fft matches a direct sum")
{
    const int N = 6;
    const int d = 2;
    std::mt19937_64 rng(11);
    std::normal_distribution<double> nd;
    CMat x(2, N * N);
    for (auto& v : x.reshaped()) {
        v = {nd(rng), nd(rng)};
    }
    const CMat X = fft_forward(x, d, N);
    for (int a = 0; a < N; ++a) {
        for (int b = 0; b < N; ++b) {
            std::complex<double> s = 0.0;
            for (int i = 0; i < N; ++i) {
                for (int j = 0; j < N; ++j) {
                    s += x(1, i + N * j) * std::polar(1.0, -2.0 * M_PI * (a * i + b * j) / N);
                }
            }
            CHECK(std::abs(X(1, a + N * b) - s) < 1e-12);
        }
    }
    CHECK((fft_inverse(X, d, N) - x).norm() < 1e-12);
}

TEST_CASE("grid nodes are centred and indexed consistently")
{
    const Crystal c = preset("hex2d");
    const BrillouinGrid g(c.spec, 8);
    CHECK(g.count() == 64);
    int zeros = 0;
    for (int i = 0; i < g.count(); ++i) {
        CHECK(g.linear(g.index(i)) == i);
        const IVec m = g.index(i);
        CHECK(m.maxCoeff() <= 4);
        CHECK(m.minCoeff() > -4);
        zeros += g.is_zero(i) ? 1 : 0;
    }
    CHECK(zeros == 1);
}

TEST_CASE("voronoi reduction picks the shortest representative")
{
    const Crystal c = preset("hex2d");
    const Mat& B = c.spec.B;
    const Vec k = 0.3 * B.col(0) - 0.1 * B.col(1);
    const Vec far = k + 2.0 * B.col(0) - 3.0 * B.col(1);
    CHECK((reduce_to_voronoi(B, far) - k).norm() < 1e-12);
}

TEST_CASE("semi-discrete transform round trip")
{
    const Crystal c = preset("hex2d");
    const auto cell = LatticeWindow::periodic(c.spec, c.range.range, 8);
    DisplacementField u(cell, 2, c.spec.n);
    u.values.setRandom();
    const KField uk = sdft(u, c.spec);
    CHECK((isdft(uk, cell).values - u.values).norm() < 1e-12);
}
