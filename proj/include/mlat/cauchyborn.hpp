#pragma once

#include "mlat/potential.hpp"
#include "mlat/spectral.hpp"

#include <functional>
#include <vector>

namespace mlat {

/// Reference deformation gradient: I (n = d) or [I; 0] (n = d + 1).
Mat reference_G(const Multilattice& spec);
/// Reference shifts embedded in R^n.
std::vector<Vec> reference_shifts(const Multilattice& spec);

/// W-hat(G, p) with its derivative blocks. Variables: vec(G) with G_{ai} at a + n i,
/// then p_1, ..., p_{S-1} (p_0 = 0).
struct CBState {
    Mat G;
    std::vector<Vec> p;
    double W = 0.0;
    Vec dW_G;
    Vec dW_p;
    Mat W_GG;
    Mat W_Gp;
    Mat W_pp;
};

CBState W_hat(const Multilattice& spec, const SitePotential& pot, const Mat& G, const std::vector<Vec>& p);

struct ShiftEquilibrium {
    std::vector<Vec> p;
    int iterations = 0;
    double residual = 0.0;
    bool converged = false;
    bool indefinite = false;
};

/// Newton iteration on d_p W-hat = 0 starting from p_init.
ShiftEquilibrium shift_equilibrium(const Multilattice& spec, const SitePotential& pot, const Mat& G,
                                   const std::vector<Vec>& p_init, double tol = 1e-12, int max_iter = 50);

/// Lattice first variation of the homogeneous energy at the affine state (G, p), tested
/// against the single-site function v_gamma(0) = e_i; returns the n components.
Vec lattice_site_force(const Multilattice& spec, const SitePotential& pot, const Mat& G, const std::vector<Vec>& p,
                       int gamma);

struct ElasticTensor {
    Mat A;  // (n d) x (n d), index a + n i
    std::vector<Vec> p;
    double lh_min = 0.0;
    Vec lh_a;
    Vec lh_k;
};

/// A = W_GG - W_Gp W_pp^-1 W_pG at shifts equilibrated for G.
ElasticTensor elastic_tensor(const Multilattice& spec, const SitePotential& pot, const Mat& G);

/// Minimum of A[a (x) k, a (x) k] over unit a, k (eigenvalues of the acoustic tensor on a sphere sample).
double legendre_hadamard_min(const Mat& A, int n, int d, Vec* a_out = nullptr, Vec* k_out = nullptr);

/// W-bar(G) = W-hat(G, p*(G)); a nonempty *p_guess seeds the shift solve and receives p*.
double W_bar(const Multilattice& spec, const SitePotential& pot, const Mat& G, std::vector<Vec>* p_guess = nullptr);

BlockHermitian assemble_J(const PhononModel& m, const Vec& k);
/// J00 - J0p Jpp^-1 Jp0.
CMat cb_M(const BlockHermitian& J);

struct ClaimantCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    double rel_gap = 0.0;
};

ClaimantCheck claimant_check(const PhononModel& m, const Mat& A, const Vec& k, const Vec& a);

/// Periodic test fields on the cell F(-1/2, 1/2]^d plus an optional affine part G0 x.
struct SmoothFields {
    Mat G0;                                            // n x d
    std::function<Vec(const Vec&)> U;                  // periodic part
    std::function<Mat(const Vec&)> grad_U;             // n x d, physical gradient of the periodic part
    std::function<Vec(const Vec&, int)> p;             // p_alpha(x), alpha >= 1
};

/// Sum of a few random Fourier modes with the given amplitudes.
SmoothFields trig_fields(const Multilattice& spec, double amp_U, double amp_p, unsigned long long seed, int modes = 3);
/// U = G0 x, p_alpha constant.
SmoothFields affine_fields(const Mat& G0, const std::vector<Vec>& p_const);

struct ConsistencyRow {
    int N = 0;
    double eps = 0.0;
    double atomistic = 0.0;
    double continuum = 0.0;
    double gap = 0.0;
};

struct ConsistencyReport {
    std::vector<ConsistencyRow> rows;
    double slope = 0.0;  // least-squares slope of log gap against log eps
};

/// Scaled atomistic energy on the eps-grid of the cell vs the Cauchy-Born integral
/// (tensor Gauss rule of the given order on quad_cells^d subcells).
ConsistencyReport cb_consistency(const Multilattice& spec, const SitePotential& pot, const SmoothFields& f,
                                 const std::vector<int>& Ns, int quad_cells = 32, int quad_order = 6);

}  // namespace mlat
