#include "doctest.h"

#include "mlat/greens.hpp"
#include "mlat/io.hpp"

#include <cmath>

using namespace mlat;

TEST_CASE("decay fit recovers a planted power law")
{
    const int m = 4000;
    Vec r(m);
    Vec v(m);
    for (int i = 0; i < m; ++i) {
        r[i] = 1.0 + 0.05 * i;
        v[i] = 3.0 * std::pow(r[i], -2.5);
    }
    const DecayFit f = decay_fit(r, v, 4.0, 150.0, -2.5);
    CHECK(f.exponent == doctest::Approx(-2.5).epsilon(1e-3));
    CHECK(f.radii.size() >= 5);
    CHECK_THROWS_AS(decay_fit(r, v, 4.0, 5.0, -2.5), ValidationError);
}

TEST_CASE("green blocks invert H(k) away from the origin")
{
    const Crystal c = preset("hex2d");
    const PhononModel m = phonon_model(c.spec, *c.pot);
    const int N = 16;
    const GreensBlocks G = greens_blocks(c.spec, m, N);
    const auto n = static_cast<Eigen::Index>(G.n);
    const Eigen::Index np = G.np();
    for (int lin : {1, 17, 100}) {
        const BlockHermitian H = assemble_H(m, G.grid.node(lin));
        CMat inv(n + np, n + np);
        inv.topLeftCorner(n, n) = G.Q_inv.col(lin).reshaped(n, n);
        inv.topRightCorner(n, np) = G.X.col(lin).reshaped(n, np);
        inv.bottomLeftCorner(np, n) = G.X.col(lin).reshaped(n, np).adjoint();
        inv.bottomRightCorner(np, np) = G.Y.col(lin).reshaped(np, np);
        CHECK((inv * H.M - CMat::Identity(n + np, n + np)).norm() < 1e-9);
    }
    // origin: U sector dropped, Y = Hpp(0)^-1
    const int o = G.grid.linear(IVec::Zero(2));
    CHECK(G.Q_inv.col(o).norm() == 0.0);
    const CMat Hpp0 = assemble_H(m, Vec::Zero(2)).hpp();
    CHECK((G.Y.col(o).reshaped(np, np) * Hpp0 - CMat::Identity(np, np)).norm() < 1e-10);
}

TEST_CASE("real-space blocks are real")
{
    const Crystal c = preset("hex2d");
    const GreensBlocks G = greens_blocks(c.spec, phonon_model(c.spec, *c.pot), 32);
    const RealBlock Y = real_space(G.Y, G.grid);
    CHECK(Y.max_imag < 1e-12 * Y.values.cwiseAbs().maxCoeff());
}

TEST_CASE("difference magnitudes of a linear profile")
{
    const Crystal c = preset("square1");
    const BrillouinGrid g(c.spec, 8);
    Mat vals(1, g.count());
    for (int i = 0; i < g.count(); ++i) {
        vals(0, i) = g.index(i)[0];  // jumps at the periodic seam
    }
    const Vec d1 = difference_magnitude(vals, g, 1);
    const Vec d2 = difference_magnitude(vals, g, 2);
    const int o = g.linear(IVec::Zero(2));
    CHECK(d1[o] == doctest::Approx(1.0));
    CHECK(d2[o] == doctest::Approx(0.0));
}
