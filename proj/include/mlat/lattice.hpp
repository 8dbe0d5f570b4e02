#pragma once

#include "mlat/errors.hpp"

#include <Eigen/Dense>

#include <compare>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mlat {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using IVec = Eigen::VectorXi;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

/// Geometry of a multilattice: S shifted copies of the Bravais lattice F Z^d.
///
/// F is normalised to det F = 1 on construction; `scale` is the factor the
/// input cell (and shifts) were divided by.
struct Multilattice {
    int d = 2;
    int n = 2;
    Mat F;
    Mat B;  // F^{-T}
    std::vector<Vec> shifts;
    double scale = 1.0;

    int species() const { return static_cast<int>(shifts.size()); }

    Vec position(const IVec& m) const { return F * m.cast<double>(); }

    /// R^d -> R^n, zero-padding the out-of-plane slot when n = d + 1.
    Vec embed(const Vec& x) const
    {
        Vec y = Vec::Zero(n);
        y.head(d) = x;
        return y;
    }
};

Multilattice build_multilattice(const Mat& F, const std::vector<Vec>& shifts, int n);

/// Finite-difference stencil entry (rho, alpha, beta); rho in lattice coordinates.
struct BondTriplet {
    IVec rho;
    int alpha = 0;
    int beta = 0;

    BondTriplet reversed() const { return {(-rho).eval(), beta, alpha}; }
    bool is_null() const { return alpha == beta && rho.isZero(); }
};

bool operator==(const BondTriplet& a, const BondTriplet& b);
bool operator<(const BondTriplet& a, const BondTriplet& b);
std::string to_string(const BondTriplet& t);

/// Ordered interaction range. Canonical order is lexicographic in (rho, alpha, beta).
struct InteractionRange {
    std::vector<BondTriplet> triplets;
    std::vector<IVec> r1;        // distinct rho values, sorted
    std::vector<int> reversal;   // index of (-rho, beta, alpha)

    int size() const { return static_cast<int>(triplets.size()); }
    std::optional<int> index_of(const BondTriplet& t) const;
};

struct RangeValidation {
    InteractionRange range;
    std::vector<BondTriplet> added;
};

/// Edge vectors of the Kuhn triangulation of the unit cube: all nonempty 0/1 sums of basis vectors.
std::vector<IVec> kuhn_edges(int d);

/// Enlarges `triplets` minimally so that the spanning, on-site coupling,
/// mesh-edge and reversal conditions hold. Throws ValidationError when the
/// same-species bonds of some species cannot span R^d.
RangeValidation validate_range(const Multilattice& spec, const std::vector<BondTriplet>& triplets);

/// Finite site set with per-triplet neighbour tables.
///
/// Two flavours: a Euclidean ball of free sites surrounded by a clamped halo,
/// and an N^d periodic supercell whose sites are stored in FFT order (axis 0
/// fastest) with centred (minimum image) coordinates.
class LatticeWindow {
public:
    enum class Kind { Ball, Periodic };

    static std::shared_ptr<const LatticeWindow> ball(const Multilattice& spec,
                                                     const InteractionRange& range, double radius);
    static std::shared_ptr<const LatticeWindow> periodic(const Multilattice& spec,
                                                         const InteractionRange& range, int N);
    /// Ball-kind window over an explicit site list (e.g. read back from a file); sites with
    /// |F m| <= radius are free.
    static std::shared_ptr<const LatticeWindow> from_sites(const Multilattice& spec, const InteractionRange& range,
                                                           const Eigen::MatrixXi& coords, double radius);

    Kind kind() const { return kind_; }
    int dim() const { return d_; }
    int count() const { return static_cast<int>(coords_.cols()); }
    int period() const { return N_; }
    double radius() const { return radius_; }
    double halo() const { return halo_; }
    const Mat& cell() const { return F_; }

    IVec site(int i) const { return coords_.col(i); }
    const Eigen::MatrixXi& coords() const { return coords_; }
    Vec position(int i) const { return F_ * coords_.col(i).cast<double>(); }
    double distance(int i) const { return position(i).norm(); }
    bool is_free(int i) const { return free_[static_cast<std::size_t>(i)] != 0; }

    /// Index of site xi + rho_t (or -1 if it falls outside the stored set).
    int forward(int t, int i) const { return fwd_(t, i); }
    /// Index of site xi - rho_t (or -1).
    int backward(int t, int i) const { return bwd_(t, i); }

    std::optional<int> index_of(const IVec& m) const;
    /// Index of m + offset, wrapping for periodic cells; -1 when absent.
    int shifted(int i, const IVec& offset) const;

    const InteractionRange& range() const { return range_; }

private:
    LatticeWindow() = default;
    void build_tables();
    void build_lookup();

    Kind kind_ = Kind::Ball;
    int d_ = 2;
    int N_ = 0;
    double radius_ = 0.0;
    double halo_ = 0.0;
    Mat F_;
    InteractionRange range_;
    Eigen::MatrixXi coords_;
    std::vector<char> free_;
    Eigen::MatrixXi fwd_;
    Eigen::MatrixXi bwd_;
    // dense lookup box for ball windows
    IVec box_lo_;
    IVec box_ext_;
    std::vector<int> box_;
};

/// Per-site, per-species R^n values on a window; flat layout (site, species, component).
class DisplacementField {
public:
    DisplacementField() = default;
    DisplacementField(std::shared_ptr<const LatticeWindow> window, int species, int n);

    const LatticeWindow& window() const { return *window_; }
    std::shared_ptr<const LatticeWindow> window_ptr() const { return window_; }
    int species() const { return S_; }
    int dim() const { return n_; }
    int sites() const { return window_->count(); }

    Eigen::Index offset(int site, int alpha) const
    {
        return (static_cast<Eigen::Index>(site) * S_ + alpha) * n_;
    }
    auto at(int site, int alpha) { return values.segment(offset(site, alpha), n_); }
    auto at(int site, int alpha) const { return values.segment(offset(site, alpha), n_); }

    /// U(xi) = u_0(xi)
    Vec base(int site) const { return at(site, 0); }
    /// p_alpha(xi) = u_alpha(xi) - u_0(xi)
    Vec shift(int site, int alpha) const { return at(site, alpha) - at(site, 0); }

    /// Zeroes every value on a clamped (non-free) site.
    void clamp();
    DisplacementField zeros_like() const;

    Vec values;

private:
    std::shared_ptr<const LatticeWindow> window_;
    int S_ = 1;
    int n_ = 2;
};

/// u_beta(xi + rho) - u_alpha(xi); values beyond the stored site set are zero.
Vec finite_difference(const DisplacementField& u, const BondTriplet& t, int site);

/// Stacked finite differences over the window's range, in canonical triplet order.
Vec stencil_apply(const DisplacementField& u, int site);

/// Same as stencil_apply, written into `out` (size R*n) without allocation.
void stencil_apply_into(const DisplacementField& u, int site, Eigen::Ref<Vec> out);

/// Accumulates D^T: out(eta, gamma) = sum_t [beta_t = gamma] T_t(eta - rho_t) - [alpha_t = gamma] T_t(eta).
/// `tuples` holds one stacked tuple per site as columns. Clamped sites receive zero.
void scatter_transpose(const LatticeWindow& w, int species, int n, const Mat& tuples, Vec& out);

}  // namespace mlat
