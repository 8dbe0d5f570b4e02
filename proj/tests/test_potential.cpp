#include "doctest.h"

#include "mlat/io.hpp"

#include <random>

using namespace mlat;

TEST_CASE("morse bond at its minimum")
{
    const MorseBond<double> b{1.5, 2.0, 0.8};
    CHECK(b.phi(0.8) == doctest::Approx(-1.5));
    CHECK(b.dphi(0.8) == doctest::Approx(0.0));
    CHECK(b.d2phi(0.8) == doctest::Approx(2.0 * 1.5 * 4.0));
    CHECK(b.d3phi(0.8) == doctest::Approx(-6.0 * 1.5 * 8.0));
}

TEST_CASE("harmonic potential is one half k |g|^2")
{
    const Crystal c = preset("square1");
    const auto& V = *c.pot;
    Vec g = Vec::Random(V.tuple_size());
    const auto* h = dynamic_cast<const HarmonicPotential*>(&V);
    REQUIRE(h != nullptr);
    double expect = 0.0;
    for (int t = 0; t < V.range().size(); ++t) {
        expect += 0.5 * h->stiffness()[t] * g.segment(t * V.dim(), V.dim()).squaredNorm();
    }
    CHECK(V.value(g) == doctest::Approx(expect));
    CHECK(V.quadratic());
    CHECK(V.third_contract(g, g).norm() == 0.0);
}

TEST_CASE("negative stiffness needs allow_unstable")
{
    const Crystal c = preset("square1");
    Vec k = Vec::Ones(c.range.range.size());
    k[0] = -1.0;
    k[c.range.range.reversal[0]] = -1.0;
    CHECK_THROWS_AS(make_harmonic(c.range.range, 2, k), ValidationError);
    CHECK_NOTHROW(make_harmonic(c.range.range, 2, k, true));
}

TEST_CASE("morse site energy is a sum over bonds around the reference tuple")
{
    const Crystal c = preset("hex2d");
    const auto* m = dynamic_cast<const MorsePairPotential*>(c.pot.get());
    REQUIRE(m != nullptr);
    const Vec g = 0.01 * Vec::Random(m->tuple_size());
    double expect = 0.0;
    const int n = m->dim();
    for (int t = 0; t < m->range().size(); ++t) {
        const Vec r = m->reference_tuple().segment(t * n, n);
        expect += m->bond(t).phi((r + g.segment(t * n, n)).norm()) - m->bond(t).phi(r.norm());
    }
    CHECK(m->value(g) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(m->value(Vec::Zero(m->tuple_size())) == doctest::Approx(0.0));
}

TEST_CASE("third derivative contraction matches finite differences of the Hessian")
{
    const Crystal c = preset("diamond3d");
    const auto& V = *c.pot;
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd;
    Vec g(V.tuple_size());
    Vec w(V.tuple_size());
    for (Eigen::Index i = 0; i < g.size(); ++i) {
        g[i] = 0.05 * nd(rng);
        w[i] = nd(rng);
    }
    const double h = 1e-5;
    const Vec fd = (V.hessian(g + h * w) - V.hessian(g - h * w)) * w / (2 * h);
    CHECK((V.third_contract(g, w) - fd).norm() <= 1e-6 * fd.norm());
}
