#pragma once

#include "mlat/relax.hpp"
#include "mlat/spectral.hpp"

#include <string>
#include <vector>

namespace mlat {

/// Blocks of H(k)^-1 on an N^d grid. Entry (a, b) of a block is row a + rows * b.
///   Q_inv          = Q^-1                                   (n x n)
///   X              = -Q^-1 H0p Hpp^-1                       (n x np)
///   Y              = Hpp^-1 Hp0 Q^-1 H0p Hpp^-1 + Hpp^-1     (np x np)
///   Hpp_inv        = Hpp^-1                                 (np x np)
/// At k = 0 the U sector (Q_inv, X) is set to zero and Y = Hpp(0)^-1.
struct GreensBlocks {
    BrillouinGrid grid;
    int n = 2;
    int S = 1;
    CMat Q_inv;
    CMat X;
    CMat Y;
    CMat Hpp_inv;

    Eigen::Index np() const { return static_cast<Eigen::Index>(S - 1) * n; }
};

GreensBlocks greens_blocks(const Multilattice& spec, const PhononModel& m, int N, bool check_stability = true);

struct RealBlock {
    Mat values;            // entries x sites (FFT order, centred coordinates)
    double max_imag = 0.0; // largest imaginary part before discarding it
};

/// Inverse transform of one k-space block family.
RealBlock real_space(const CMat& kblock, const BrillouinGrid& grid);

/// Per-site magnitude of the order-t difference along basis directions:
/// max over tuples (e_{i1}, ..., e_{it}) of the Frobenius norm of D_rho G(xi).
Vec difference_magnitude(const Mat& values, const BrillouinGrid& grid, int t);

struct DecayFit {
    std::vector<double> radii;  // argmax radius per annulus
    std::vector<double> sups;
    double exponent = 0.0;
    double residual = 0.0;      // rms of the log-log fit
    double predicted = 0.0;
    double r_min = 0.0;
    double r_max = 0.0;
    std::string label;
};

/// Geometric annuli on [r_min, r_max] (ratio `growth`), sup per annulus, least-squares slope of
/// log sup against log r. Throws ValidationError with fewer than 5 annuli.
DecayFit decay_fit(const Vec& radii, const Vec& magnitudes, double r_min, double r_max, double predicted,
                   double growth = 1.15);

/// Radii |F m| of the centred grid sites.
Vec grid_radii(const Multilattice& spec, const BrillouinGrid& grid);

/// Fit of the order-t difference of a real-space block; r_max is capped at N/4.
DecayFit block_decay(const Multilattice& spec, const GreensBlocks& G, GreensBlock which, int t, double r_min,
                     double r_max);

struct Reconstruction {
    DisplacementField u;           // on the N-periodic cell, u_0 = U, u_a = U + p_a
    double max_linear_residual = 0.0;  // max over k of |H [U;p] - [F;g]| / max(|[F;g]|)
};

/// Solves H(k)[U;p] = [F;g] with [F;g] = sum_t c_t^* f_t-hat and transforms back.
Reconstruction reconstruct_solution(const Multilattice& spec, const PhononModel& m, const ResidualField& f,
                                    const GreensBlocks& G);

/// Fits for D^j U (j = 1..3, target 1 - d - j) and D^j p_a (j = 0..2, target -d - j) on a relaxed field.
std::vector<DecayFit> solution_decay_report(const Multilattice& spec, const DisplacementField& u, double r_min,
                                            double r_max);

/// Per-site magnitude of the order-j basis-direction differences of U (alpha = 0) or p_alpha on a window;
/// sites whose stencil leaves the stored set get NaN.
Vec field_difference_magnitude(const DisplacementField& u, int alpha, int j);

}  // namespace mlat
