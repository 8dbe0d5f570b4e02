#pragma once

#include "mlat/potential.hpp"

#include <memory>
#include <vector>

namespace mlat {

struct RelaxOptions {
    double tol = 1e-9;         // on the l2 norm of the free-site gradient
    int max_iter = 50;         // Newton steps per continuation stage
    int cg_max_iter = 5000;
    bool check_stability = true;
    int stability_grid = 32;
    bool continuation = false;
    int continuation_steps = 4;
    bool dual_norm = true;     // report the a1-dual norm of the final gradient
};

struct SolveReport {
    int iterations = 0;
    int cg_iterations = 0;
    double gradient_norm = 0.0;
    double gradient_dual_norm = -1.0;
    double energy = 0.0;
    bool converged = false;
    double wall_time = 0.0;
    std::vector<double> history;  // gradient norm per Newton step
};

struct RelaxResult {
    DisplacementField u;
    SolveReport report;
};

/// Newton-CG on the renormalized defect energy over the free sites of `window`, starting from zero.
/// Throws StabilityError when the homogeneous lattice fails the phonon certificate.
RelaxResult relax(const Multilattice& spec, const PotentialPtr& pot, const DefectModel& defect,
                  std::shared_ptr<const LatticeWindow> window, const RelaxOptions& opt = {});

/// sup over test fields of <g, v> / ||v||_a1 for fields on the free sites, by CG on the a1 Gram operator.
double a1_dual_norm(const DisplacementField& shape, const Vec& g, double rtol = 1e-8, int max_iter = 5000);

/// Per-site tuples f(xi) with <delta^2 E_hom(0) u, v> = <f, Dv> at an equilibrium u.
struct ResidualField {
    std::shared_ptr<const LatticeWindow> window;
    int n = 2;
    Mat tuples;  // (R n) x sites
    int order = 0;

    /// sum_xi f(xi) . Dv(xi)
    double pair(const DisplacementField& v) const;
    /// |f(xi)| per site
    Vec site_norms() const;
};

/// f = -int_0^1 (1 - t) V'''(t Du)[Du, Du] dt - g_xi, Gauss-Legendre of the given order in t.
ResidualField residual_f(const DisplacementField& u, const SitePotential& pot, const DefectModel& defect, int order = 8);

struct ResidualCheck {
    ResidualField f;
    double max_gap = 0.0;  // max over probes of |<H u, v> - <f, Dv>| / ||v||_a1
    bool met = false;
};

/// Doubles the quadrature order from 8 until the defining identity holds to `tol` on
/// random free-site probes (or the order cap is reached).
ResidualCheck residual_f_checked(const DisplacementField& u, const SitePotential& pot, const DefectModel& defect,
                                 unsigned long long seed, int probes = 50, double tol = 1e-8, int max_order = 64);

}  // namespace mlat
