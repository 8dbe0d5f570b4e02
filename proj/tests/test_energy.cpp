#include "doctest.h"

#include "mlat/energy.hpp"
#include "mlat/io.hpp"

#include <random>

using namespace mlat;

namespace {

DisplacementField random_field(const std::shared_ptr<const LatticeWindow>& w, int S, int n, double amp,
                               std::uint64_t seed)
{
    DisplacementField u(w, S, n);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    for (auto& x : u.values) {
        x = amp * nd(rng);
    }
    u.clamp();
    return u;
}

}  // namespace

TEST_CASE("energy gradient and Hessian match finite differences")
{
    const Crystal c = preset("hex2d");
    const auto w = LatticeWindow::ball(c.spec, c.range.range, 3.0);
    const DisplacementField u = random_field(w, 2, c.spec.n, 0.02, 1);
    const DisplacementField v = random_field(w, 2, c.spec.n, 1.0, 2);
    const double h = 1e-6;
    DisplacementField up = u;
    DisplacementField um = u;
    up.values += h * v.values;
    um.values -= h * v.values;
    const double fd = (energy_renormalized(up, *c.pot, c.defect) - energy_renormalized(um, *c.pot, c.defect)) / (2 * h);
    CHECK(energy_gradient(u, *c.pot, c.defect).dot(v.values) == doctest::Approx(fd).epsilon(1e-7));
    CHECK(first_variation(u, v, *c.pot, c.defect) == doctest::Approx(fd).epsilon(1e-7));

    const Vec gfd = (energy_gradient(up, *c.pot, c.defect) - energy_gradient(um, *c.pot, c.defect)) / (2 * h);
    const Vec Hv = hessian_apply(u, v, *c.pot);
    CHECK((Hv - gfd).norm() <= 1e-6 * gfd.norm());
    CHECK(hessian_form(u, v, *c.pot) == doctest::Approx(Hv.dot(v.values)));
}

TEST_CASE("renormalised energy vanishes at zero and is linear in the dipole near zero")
{
    const Crystal c = preset("square1");
    const auto w = LatticeWindow::ball(c.spec, c.range.range, 4.0);
    DisplacementField u(w, 1, 2);
    CHECK(energy_renormalized(u, *c.pot, c.defect) == 0.0);
    const DisplacementField v = random_field(w, 1, 2, 1.0, 5);
    // harmonic: E(v) = 1/2 <Hv, v> + sum_xi g_xi . Dv(xi)
    double linear = 0.0;
    for (const auto& [i, g] : locate_dipoles(*w, c.defect)) {
        linear += g.dot(stencil_apply(v, i));
    }
    CHECK(energy_renormalized(v, *c.pot, c.defect) ==
          doctest::Approx(0.5 * hessian_form(u, v, *c.pot) + linear).epsilon(1e-12));
}

TEST_CASE("a1 norm of an affine field counts the bonds")
{
    const Crystal c = preset("square1");
    const auto w = LatticeWindow::periodic(c.spec, c.range.range, 4);
    DisplacementField u(w, 1, 2);
    u.values.setConstant(3.0);
    CHECK(norm_a1(u) == doctest::Approx(0.0));
    // one displaced site: each of the R bonds touching it, in and out
    u.values.setZero();
    u.at(0, 0) << 1.0, 0.0;
    const int R = c.range.range.size();
    CHECK(norm_a1(u) == doctest::Approx(std::sqrt(2.0 * R)));
}

TEST_CASE("a2 and a3 of a single displaced site")
{
    const Crystal c = preset("square1");
    const auto w = LatticeWindow::ball(c.spec, c.range.range, 6.0);
    DisplacementField u(w, 1, 2);
    const int o = *w->index_of(IVec::Zero(2));
    u.at(o, 0) << 1.0, 0.0;
    // P1 hat on the Kuhn mesh: |grad|^2 integrates to 4, the five-point stencil diagonal
    CHECK(norm_a2(u, c.spec) == doctest::Approx(2.0));
    // unit point field: hat U = 1, so a3^2 = int over [-1/2, 1/2]^2 of (2 pi |k|)^2 = 4 pi^2 / 6
    CHECK(norm_a3(u, c.spec, 32) == doctest::Approx(std::sqrt(4.0 * M_PI * M_PI / 6.0)).epsilon(2e-3));
}
