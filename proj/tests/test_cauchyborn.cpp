#include "doctest.h"

#include "mlat/cauchyborn.hpp"
#include "mlat/io.hpp"

using namespace mlat;

TEST_CASE("harmonic square lattice tensor is sum_t k_t (F rho)_i (F rho)_j delta_ab")
{
    const Crystal c = preset("square1");
    const ElasticTensor et = elastic_tensor(c.spec, *c.pot, reference_G(c.spec));
    const auto* h = dynamic_cast<const HarmonicPotential*>(c.pot.get());
    REQUIRE(h != nullptr);
    Mat expect = Mat::Zero(4, 4);
    const auto& R = c.range.range;
    for (int t = 0; t < R.size(); ++t) {
        const Vec r = c.spec.F * R.triplets[static_cast<std::size_t>(t)].rho.cast<double>();
        for (int a = 0; a < 2; ++a) {
            for (int i = 0; i < 2; ++i) {
                for (int j = 0; j < 2; ++j) {
                    expect(a + 2 * i, a + 2 * j) += h->stiffness()[t] * r[i] * r[j];
                }
            }
        }
    }
    CHECK((et.A - expect).norm() < 1e-12);
    CHECK(et.lh_min == doctest::Approx(2.0));
}

TEST_CASE("calibrated presets sit at shift equilibrium")
{
    for (const char* name : {"hex2d", "diamond3d"}) {
        const Crystal c = preset(name);
        const Mat G0 = reference_G(c.spec);
        const CBState st = W_hat(c.spec, *c.pot, G0, reference_shifts(c.spec));
        CHECK(st.dW_p.norm() < 1e-10);
        const ShiftEquilibrium eq = shift_equilibrium(c.spec, *c.pot, G0, reference_shifts(c.spec));
        CHECK(eq.converged);
        CHECK(eq.iterations <= 1);
    }
}

TEST_CASE("W-hat derivatives match finite differences")
{
    const Crystal c = preset("hex2d");
    const Mat G = reference_G(c.spec) + 0.03 * Mat::Random(c.spec.n, c.spec.d);
    auto p = reference_shifts(c.spec);
    p[1] += 0.02 * Vec::Random(c.spec.n);
    const CBState st = W_hat(c.spec, *c.pot, G, p);
    const double h = 1e-6;
    for (int a = 0; a < c.spec.n; ++a) {
        for (int i = 0; i < c.spec.d; ++i) {
            Mat Gp = G;
            Mat Gm = G;
            Gp(a, i) += h;
            Gm(a, i) -= h;
            const double fd = (W_hat(c.spec, *c.pot, Gp, p).W - W_hat(c.spec, *c.pot, Gm, p).W) / (2 * h);
            CHECK(st.dW_G[a + c.spec.n * i] == doctest::Approx(fd).epsilon(1e-6));
        }
    }
    for (int a = 0; a < c.spec.n; ++a) {
        auto pp = p;
        auto pm = p;
        pp[1][a] += h;
        pm[1][a] -= h;
        const double fd = (W_hat(c.spec, *c.pot, G, pp).W - W_hat(c.spec, *c.pot, G, pm).W) / (2 * h);
        CHECK(st.dW_p[a] == doctest::Approx(fd).epsilon(1e-6));
    }
}

TEST_CASE("W-bar is stationary in the shifts")
{
    const Crystal c = preset("hex2d");
    const Mat G = reference_G(c.spec) + 0.02 * Mat::Random(c.spec.n, c.spec.d);
    std::vector<Vec> p;
    const double wb = W_bar(c.spec, *c.pot, G, &p);
    CHECK(wb <= W_hat(c.spec, *c.pot, G, reference_shifts(c.spec)).W + 1e-14);
}

TEST_CASE("affine fields give zero consistency error")
{
    const Crystal c = preset("square1");
    Mat G0 = 0.01 * Mat::Random(2, 2);
    const ConsistencyReport r = cb_consistency(c.spec, *c.pot, affine_fields(G0, {Vec::Zero(2)}), {8, 16});
    for (const auto& row : r.rows) {
        CHECK(row.gap <= 1e-12 * std::max(1.0, std::abs(row.continuum)));
    }
}
