#include "doctest.h"

#include "mlat/io.hpp"
#include "mlat/lattice.hpp"

#include <random>

using namespace mlat;

TEST_CASE("cell is normalised to unit volume")
{
    Mat F(2, 2);
    F << 2, 1, 0, 2;
    const Multilattice s = build_multilattice(F, {Vec::Zero(2)}, 2);
    CHECK(s.F.determinant() == doctest::Approx(1.0));
    CHECK(s.scale == doctest::Approx(2.0));
    CHECK((s.B.transpose() * s.F - Mat::Identity(2, 2)).norm() < 1e-14);
}

TEST_CASE("kuhn edges are the nonempty 0/1 vectors")
{
    CHECK(kuhn_edges(2).size() == 3);
    CHECK(kuhn_edges(3).size() == 7);
}

TEST_CASE("range closure adds reversals, on-site couplings and mesh edges")
{
    const Crystal c = preset("hex2d");
    const auto& R = c.range.range;
    for (const auto& t : R.triplets) {
        CHECK(R.index_of(t.reversed()).has_value());
    }
    for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
            if (a != b) {
                CHECK(R.index_of(BondTriplet{IVec::Zero(2), a, b}).has_value());
            }
        }
    }
    for (const auto& e : kuhn_edges(2)) {
        CHECK(R.index_of(BondTriplet{e, 0, 0}).has_value());
    }
}

TEST_CASE("ball window counts lattice points in the disc")
{
    const Crystal c = preset("square1");
    const auto w = LatticeWindow::ball(c.spec, c.range.range, 5.0);
    int free = 0;
    for (int i = 0; i < w->count(); ++i) {
        free += w->is_free(i) ? 1 : 0;
    }
    int expect = 0;
    for (int x = -5; x <= 5; ++x) {
        for (int y = -5; y <= 5; ++y) {
            expect += (x * x + y * y <= 25) ? 1 : 0;
        }
    }
    CHECK(free == expect);
    CHECK(w->index_of(IVec::Zero(2)).has_value());
}

TEST_CASE("finite differences of an affine field are exact")
{
    const Crystal c = preset("hex2d");
    const auto w = LatticeWindow::ball(c.spec, c.range.range, 4.0);
    Mat G = Mat::Random(c.spec.n, c.spec.d);
    DisplacementField u(w, 2, c.spec.n);
    const Vec p1 = Vec::Random(c.spec.n);
    for (int i = 0; i < w->count(); ++i) {
        u.at(i, 0) = G * w->position(i);
        u.at(i, 1) = G * w->position(i) + p1;
    }
    const int o = *w->index_of(IVec::Zero(2));
    for (const auto& t : c.range.range.triplets) {
        Vec expect = G * (c.spec.F * t.rho.cast<double>());
        expect += (t.beta == 1 ? p1 : Vec::Zero(c.spec.n)) - (t.alpha == 1 ? p1 : Vec::Zero(c.spec.n));
        CHECK((finite_difference(u, t, o) - expect).norm() < 1e-12);
    }
}

TEST_CASE("scatter_transpose is the adjoint of the stencil on a periodic cell")
{
    const Crystal c = preset("hex2d");
    const auto w = LatticeWindow::periodic(c.spec, c.range.range, 6);
    DisplacementField u(w, 2, c.spec.n);
    std::mt19937_64 rng(7);
    std::normal_distribution<double> nd;
    for (auto& x : u.values) {
        x = nd(rng);
    }
    const Eigen::Index R = c.range.range.size() * c.spec.n;
    Mat T(R, w->count());
    for (auto& x : T.reshaped()) {
        x = nd(rng);
    }
    double lhs = 0.0;
    for (int i = 0; i < w->count(); ++i) {
        lhs += stencil_apply(u, i).dot(T.col(i));
    }
    Vec out;
    scatter_transpose(*w, 2, c.spec.n, T, out);
    CHECK(lhs == doctest::Approx(out.dot(u.values)).epsilon(1e-12));
}
