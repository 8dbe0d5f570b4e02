#pragma once

#include "mlat/lattice.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace mlat {

/// Site potential V(g) = V^(Dy + g) - V^(Dy) on stacked tuples g in (R^n)^R.
///
/// Tuples are flat vectors of length R*n, triplet-major. Third derivatives are
/// only ever needed contracted twice, so they are exposed as third_contract(g, w)
/// = delta^3 V(g)[w, w], itself a tuple.
class SitePotential {
public:
    SitePotential(InteractionRange range, int n) : range_(std::move(range)), n_(n) {}
    virtual ~SitePotential() = default;

    const InteractionRange& range() const { return range_; }
    int dim() const { return n_; }
    Eigen::Index tuple_size() const { return static_cast<Eigen::Index>(range_.size()) * n_; }

    virtual std::string kind() const = 0;
    virtual double value(const Eigen::Ref<const Vec>& g) const = 0;
    virtual Vec gradient(const Eigen::Ref<const Vec>& g) const = 0;
    virtual Mat hessian(const Eigen::Ref<const Vec>& g) const = 0;
    virtual Vec hessian_apply(const Eigen::Ref<const Vec>& g, const Eigen::Ref<const Vec>& w) const
    {
        return hessian(g) * w;
    }
    virtual Vec third_contract(const Eigen::Ref<const Vec>& g, const Eigen::Ref<const Vec>& w) const = 0;

    /// V^(Dy), the absolute site energy of the reference configuration.
    virtual double reference_value() const { return 0.0; }
    virtual bool homogeneous() const { return true; }
    /// True when V is exactly quadratic (third derivatives vanish).
    virtual bool quadratic() const { return false; }

private:
    InteractionRange range_;
    int n_;
};

using PotentialPtr = std::shared_ptr<const SitePotential>;

/// V(g) = 1/2 sum_t k_t |g_t|^2.
class HarmonicPotential final : public SitePotential {
public:
    HarmonicPotential(InteractionRange range, int n, Vec stiffness);

    std::string kind() const override { return "harmonic"; }
    bool quadratic() const override { return true; }
    double value(const Eigen::Ref<const Vec>& g) const override;
    Vec gradient(const Eigen::Ref<const Vec>& g) const override;
    Mat hessian(const Eigen::Ref<const Vec>& g) const override;
    Vec hessian_apply(const Eigen::Ref<const Vec>& g, const Eigen::Ref<const Vec>& w) const override;
    Vec third_contract(const Eigen::Ref<const Vec>& g, const Eigen::Ref<const Vec>& w) const override;

    const Vec& stiffness() const { return k_; }

private:
    Vec k_;
    Vec diag_;  // stiffness repeated per component
};

/// Throws on negative stiffness unless `allow_unstable`, or when the table is not
/// symmetric under triplet reversal.
PotentialPtr make_harmonic(const InteractionRange& range, int n, const Vec& stiffness, bool allow_unstable = false);

/// Morse bond energy phi(r) = D (exp(-2a(r - r0)) - 2 exp(-a(r - r0))) and its first three derivatives.
template <class Scalar>
struct MorseBond {
    Scalar depth;
    Scalar width;
    Scalar r0;

    Scalar phi(Scalar r) const
    {
        const Scalar e = std::exp(-width * (r - r0));
        return depth * (e * e - Scalar(2) * e);
    }
    Scalar dphi(Scalar r) const
    {
        const Scalar e = std::exp(-width * (r - r0));
        return depth * Scalar(2) * width * (e - e * e);
    }
    Scalar d2phi(Scalar r) const
    {
        const Scalar e = std::exp(-width * (r - r0));
        return depth * width * width * (Scalar(4) * e * e - Scalar(2) * e);
    }
    Scalar d3phi(Scalar r) const
    {
        const Scalar e = std::exp(-width * (r - r0));
        return depth * width * width * width * (Scalar(2) * e - Scalar(8) * e * e);
    }
};

struct MorseParams {
    double depth = 1.0;
    double width = 1.0;
    double r0 = 1.0;
};

/// Species-pair keyed Morse parameters; lookup is symmetric in the pair.
using MorseTable = std::map<std::pair<int, int>, MorseParams>;

/// V^(g) = sum_t phi_{alpha beta}(|g_t|) evaluated around the reference bond vectors
/// r_t = F rho + p_beta - p_alpha (embedded in R^n).
class MorsePairPotential final : public SitePotential {
public:
    MorsePairPotential(const Multilattice& spec, InteractionRange range, const MorseTable& table);

    std::string kind() const override { return "morse"; }
    double value(const Eigen::Ref<const Vec>& g) const override;
    Vec gradient(const Eigen::Ref<const Vec>& g) const override;
    Mat hessian(const Eigen::Ref<const Vec>& g) const override;
    Vec hessian_apply(const Eigen::Ref<const Vec>& g, const Eigen::Ref<const Vec>& w) const override;
    Vec third_contract(const Eigen::Ref<const Vec>& g, const Eigen::Ref<const Vec>& w) const override;
    double reference_value() const override { return ref_value_; }

    const Vec& reference_tuple() const { return ref_; }
    const MorseBond<double>& bond(int t) const { return bonds_[static_cast<std::size_t>(t)]; }

private:
    Vec ref_;
    std::vector<MorseBond<double>> bonds_;
    double ref_value_ = 0.0;
};

PotentialPtr make_morse_pair(const Multilattice& spec, const InteractionRange& range, const MorseTable& table);

/// Point defect: linear dipole terms g_xi . Du(xi) on finitely many sites within R_def.
struct Dipole {
    IVec site;
    Vec g;  // full tuple, length R*n
};

struct DefectModel {
    double core_radius = 0.0;
    std::vector<Dipole> dipoles;

    bool empty() const { return dipoles.empty(); }
    const Vec* dipole_at(const IVec& site) const;
    /// Checks tuple sizes and that every dipole sits inside the core radius.
    void validate(const Multilattice& spec, Eigen::Index tuple_size) const;
    DefectModel scaled(double factor) const;
};

/// V + g_xi . (.) wrapping a homogeneous base potential.
class DefectSitePotential final : public SitePotential {
public:
    DefectSitePotential(PotentialPtr base, Vec dipole);

    std::string kind() const override { return base_->kind() + "+dipole"; }
    double value(const Eigen::Ref<const Vec>& g) const override { return base_->value(g) + dipole_.dot(g); }
    Vec gradient(const Eigen::Ref<const Vec>& g) const override { return base_->gradient(g) + dipole_; }
    Mat hessian(const Eigen::Ref<const Vec>& g) const override { return base_->hessian(g); }
    Vec hessian_apply(const Eigen::Ref<const Vec>& g, const Eigen::Ref<const Vec>& w) const override
    {
        return base_->hessian_apply(g, w);
    }
    Vec third_contract(const Eigen::Ref<const Vec>& g, const Eigen::Ref<const Vec>& w) const override
    {
        return base_->third_contract(g, w);
    }
    double reference_value() const override { return base_->reference_value(); }
    bool homogeneous() const override { return false; }
    bool quadratic() const override { return base_->quadratic(); }
    const PotentialPtr& base() const { return base_; }
    const Vec& dipole() const { return dipole_; }

private:
    PotentialPtr base_;
    Vec dipole_;
};

/// V_xi: the base potential outside the core, base plus dipole inside.
PotentialPtr defect_site_potential(const PotentialPtr& base, const DefectModel& defect, const Multilattice& spec,
                                   const IVec& site);

}  // namespace mlat
