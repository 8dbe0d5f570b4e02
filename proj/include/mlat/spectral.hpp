#pragma once

#include "mlat/fourier.hpp"
#include "mlat/potential.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mlat {

/// Reference-state Hessian of a homogeneous potential, kept as its nonzero n x n blocks.
struct PhononModel {
    int d = 2;
    int n = 2;
    int S = 1;
    Mat F;
    Mat B;
    std::vector<BondTriplet> triplets;
    struct Block {
        int t;
        int s;
        Mat K;
    };
    std::vector<Block> blocks;
};

PhononModel phonon_model(const Multilattice& spec, const SitePotential& pot);

/// Sn x Sn Hermitian matrix in (U, p_1, ..., p_{S-1}) variables with block views.
struct BlockHermitian {
    Vec k;
    int n = 2;
    int S = 1;
    CMat M;

    Eigen::Index np() const { return static_cast<Eigen::Index>(S - 1) * n; }
    CMat h00() const { return M.topLeftCorner(n, n); }
    CMat h0p() const { return M.topRightCorner(n, np()); }
    CMat hp0() const { return M.bottomLeftCorner(np(), n); }
    CMat hpp() const { return M.bottomRightCorner(np(), np()); }
};

/// Per-triplet coefficient vectors c_t in C^S with D-hat v = sum_a c_t[a] v-hat_a.
/// Lattice: c[0] = e^{2 pi i k.F rho} - 1. Continuum: c[0] = 2 pi i k.F rho.
std::vector<CVec> stencil_symbols(const PhononModel& m, const Vec& k, bool continuum);

/// H(k) = sum_{t,s} c_t^* K_ts c_s.
BlockHermitian assemble_H(const PhononModel& m, const Vec& k);

struct BlockInverse {
    CMat Q;        // H00 - H0p Hpp^-1 Hp0
    CMat Q_inv;
    CMat Hpp_inv;  // empty when S = 1
    CMat inv;      // full inverse via the Q formula
    CMat P;        // Hpp - Hp0 H00^-1 H0p, only when H00 is invertible
    CMat inv_alt;  // full inverse via the P formula, only when P is defined
};

/// Throws SingularPointError at k = 0 (mod the dual lattice).
BlockInverse schur_inverse(const BlockHermitian& H);

struct QuadraticFormCheck {
    double real_space = 0.0;
    double k_space = 0.0;
    double rel_gap = 0.0;
};

/// <delta^2 E(0) u, v> computed in real space and as the grid mean of [Z;q]^* H [U;p].
/// Both fields must live on the same periodic cell.
QuadraticFormCheck quadratic_form_check(const Multilattice& spec, const SitePotential& pot, const PhononModel& m,
                                        const DisplacementField& u, const DisplacementField& v);

struct PhononSpectrum {
    BrillouinGrid grid;
    int n = 2;
    std::vector<Vec> eigenvalues;  // ascending; first n acoustic
};

PhononSpectrum phonons(const PhononModel& m, const BrillouinGrid& grid);

struct StabilityCertificate {
    double gamma_acoustic_low = 0.0;
    double gamma_acoustic_high = 0.0;
    std::optional<double> gamma_optical;  // absent when S = 1
    bool pass = false;
    double min_eigenvalue = 0.0;
    Vec worst_k;  // node of the smallest eigenvalue ratio
    std::string failure;
};

StabilityCertificate stability_certificate(const PhononModel& m, const BrillouinGrid& grid, double eps_acoustic = 1e-8,
                                           double eps_optical = 1e-8);

enum class GreensBlock { Q_inv, Q_inv_H0p_Hpp_inv, Hpp_terms };

/// Decay exponent of the order-t difference of a Green's block in dimension d.
int predict_exponent(GreensBlock block, int t, int d);

std::string to_string(GreensBlock b);

}  // namespace mlat
