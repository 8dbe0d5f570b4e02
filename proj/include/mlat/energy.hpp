#pragma once

#include "mlat/lattice.hpp"
#include "mlat/potential.hpp"

#include <utility>
#include <vector>

namespace mlat {

/// Du(xi) for every stored site, one column per site.
Mat stencil_tuples(const DisplacementField& u);

/// (site index, dipole tuple) for every dipole of `defect`; throws when a dipole site is not stored in `w`.
std::vector<std::pair<int, Vec>> locate_dipoles(const LatticeWindow& w, const DefectModel& defect);

/// sum_xi [V(Du) + g_xi . Du - V'(0) . Du], summed in site order.
double energy_renormalized(const DisplacementField& u, const SitePotential& pot, const DefectModel& defect);

/// Gradient in the flat (site, species, component) layout; zero on clamped sites.
Vec energy_gradient(const DisplacementField& u, const SitePotential& pot, const DefectModel& defect);

/// <grad E(u), v>
double first_variation(const DisplacementField& u, const DisplacementField& v, const SitePotential& pot,
                       const DefectModel& defect);

/// delta^2 E(u) v, matrix free. Dipoles do not enter.
Vec hessian_apply(const DisplacementField& u, const DisplacementField& v, const SitePotential& pot);
Vec hessian_apply(const DisplacementField& u, const Vec& v, const SitePotential& pot);

/// <delta^2 E(u) v, v>
double hessian_form(const DisplacementField& u, const DisplacementField& v, const SitePotential& pot);

/// (sum_xi |Du(xi)|^2)^(1/2) over the window's range.
double norm_a1(const DisplacementField& u);

/// (||grad I U||^2 + sum_alpha ||I p_alpha||^2)^(1/2) with P1 interpolation on the Kuhn
/// triangulation of the cells F(m + [0,1]^d).
double norm_a2(const DisplacementField& u, const Multilattice& spec);

/// (||2 pi |k| hat U||^2 + sum_alpha ||hat p_alpha||^2)^(1/2), L^2 over the Brillouin zone
/// approximated by the mean over an N^d grid; |k| is taken in the Voronoi cell.
double norm_a3(const DisplacementField& u, const Multilattice& spec, int N);

}  // namespace mlat
