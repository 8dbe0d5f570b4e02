#pragma once

#include "mlat/lattice.hpp"

namespace mlat {

/// Nodes k = B m / N, m in (-N/2, N/2]^d, stored in FFT order (axis 0 fastest).
struct BrillouinGrid {
    int d = 2;
    int N = 2;
    Mat B;

    BrillouinGrid() = default;
    BrillouinGrid(const Multilattice& spec, int order);

    int count() const;
    IVec index(int lin) const;
    Vec node(int lin) const { return B * index(lin).cast<double>() / static_cast<double>(N); }
    bool is_zero(int lin) const { return index(lin).isZero(); }
    int linear(const IVec& m) const;
};

/// Shortest representative of k modulo the dual lattice B Z^d (Voronoi cell).
Vec reduce_to_voronoi(const Mat& B, const Vec& k);

/// Forward transform of each row of `data` (rows = components, cols = N^d grid points in FFT order):
/// hat u(k) = sum_xi exp(-2 pi i xi.k) u(xi).
CMat fft_forward(const CMat& data, int d, int N);
/// Inverse transform including the 1/N^d factor.
CMat fft_inverse(const CMat& data, int d, int N);

/// Transform of a field on an N-periodic cell; rows are (species, component) pairs.
struct KField {
    BrillouinGrid grid;
    int species = 1;
    int n = 2;
    CMat values;  // (S*n) x N^d
};

KField sdft(const DisplacementField& u, const Multilattice& spec);
DisplacementField isdft(const KField& uk, std::shared_ptr<const LatticeWindow> cell);

/// Copies a field on a ball window into an N-periodic cell (values outside the window are zero).
/// Throws ValidationError when the window does not fit inside the cell without overlap.
DisplacementField embed_periodic(const DisplacementField& u, const Multilattice& spec, int N);

}  // namespace mlat
