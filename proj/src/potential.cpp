#include "mlat/potential.hpp"

#include <algorithm>

namespace mlat {

HarmonicPotential::HarmonicPotential(InteractionRange range, int n, Vec stiffness)
    : SitePotential(std::move(range), n), k_(std::move(stiffness))
{
    diag_.resize(tuple_size());
    for (int t = 0; t < this->range().size(); ++t) {
        diag_.segment(static_cast<Eigen::Index>(t) * n, n).setConstant(k_[t]);
    }
}

double HarmonicPotential::value(const Eigen::Ref<const Vec>& g) const
{
    return 0.5 * g.dot(diag_.cwiseProduct(g));
}

Vec HarmonicPotential::gradient(const Eigen::Ref<const Vec>& g) const
{
    return diag_.cwiseProduct(g);
}

Mat HarmonicPotential::hessian(const Eigen::Ref<const Vec>&) const
{
    return diag_.asDiagonal();
}

Vec HarmonicPotential::hessian_apply(const Eigen::Ref<const Vec>&, const Eigen::Ref<const Vec>& w) const
{
    return diag_.cwiseProduct(w);
}

Vec HarmonicPotential::third_contract(const Eigen::Ref<const Vec>&, const Eigen::Ref<const Vec>&) const
{
    return Vec::Zero(tuple_size());
}

PotentialPtr make_harmonic(const InteractionRange& range, int n, const Vec& stiffness, bool allow_unstable)
{
    if (stiffness.size() != range.size()) {
        throw ValidationError("stiffness table must have one entry per triplet");
    }
    for (int t = 0; t < range.size(); ++t) {
        if (!std::isfinite(stiffness[t])) {
            throw ValidationError("stiffness must be finite");
        }
        if (stiffness[t] < 0.0 && !allow_unstable) {
            throw ValidationError("negative stiffness on triplet " + to_string(range.triplets[static_cast<std::size_t>(t)]));
        }
        if (stiffness[t] != stiffness[range.reversal[static_cast<std::size_t>(t)]]) {
            throw ValidationError("stiffness is not symmetric under triplet reversal at "
                                  + to_string(range.triplets[static_cast<std::size_t>(t)]));
        }
    }
    return std::make_shared<HarmonicPotential>(range, n, stiffness);
}

// ---------------------------------------------------------------------------

MorsePairPotential::MorsePairPotential(const Multilattice& spec, InteractionRange range, const MorseTable& table)
    : SitePotential(std::move(range), spec.n)
{
    const int n = spec.n;
    const auto& trip = this->range().triplets;
    ref_.resize(tuple_size());
    bonds_.reserve(trip.size());
    for (std::size_t t = 0; t < trip.size(); ++t) {
        const auto& b = trip[t];
        const Vec r = spec.embed(spec.F * b.rho.cast<double>() + spec.shifts[static_cast<std::size_t>(b.beta)]
                                 - spec.shifts[static_cast<std::size_t>(b.alpha)]);
        if (r.norm() < 1e-12) {
            throw ValidationError("zero-length reference bond for triplet " + to_string(b));
        }
        ref_.segment(static_cast<Eigen::Index>(t) * n, n) = r;
        auto it = table.find({std::min(b.alpha, b.beta), std::max(b.alpha, b.beta)});
        if (it == table.end()) {
            throw ValidationError("no Morse parameters for species pair (" + std::to_string(b.alpha) + ","
                                  + std::to_string(b.beta) + ")");
        }
        const auto& p = it->second;
        if (!(p.depth >= 0.0) || !(p.width > 0.0) || !(p.r0 > 0.0)) {
            throw ValidationError("Morse parameters must satisfy depth >= 0, width > 0, r0 > 0");
        }
        bonds_.push_back({p.depth, p.width, p.r0});
        ref_value_ += bonds_.back().phi(r.norm());
    }
}

double MorsePairPotential::value(const Eigen::Ref<const Vec>& g) const
{
    const int n = dim();
    double v = 0.0;
    for (std::size_t t = 0; t < bonds_.size(); ++t) {
        const auto off = static_cast<Eigen::Index>(t) * n;
        const double r = (ref_.segment(off, n) + g.segment(off, n)).norm();
        v += bonds_[t].phi(r) - bonds_[t].phi(ref_.segment(off, n).norm());
    }
    return v;
}

Vec MorsePairPotential::gradient(const Eigen::Ref<const Vec>& g) const
{
    const int n = dim();
    Vec out(tuple_size());
    for (std::size_t t = 0; t < bonds_.size(); ++t) {
        const auto off = static_cast<Eigen::Index>(t) * n;
        const Vec x = ref_.segment(off, n) + g.segment(off, n);
        const double r = x.norm();
        out.segment(off, n) = bonds_[t].dphi(r) / r * x;
    }
    return out;
}

Mat MorsePairPotential::hessian(const Eigen::Ref<const Vec>& g) const
{
    const int n = dim();
    Mat H = Mat::Zero(tuple_size(), tuple_size());
    for (std::size_t t = 0; t < bonds_.size(); ++t) {
        const auto off = static_cast<Eigen::Index>(t) * n;
        const Vec x = ref_.segment(off, n) + g.segment(off, n);
        const double r = x.norm();
        const Vec u = x / r;
        const double a = bonds_[t].d2phi(r);
        const double b = bonds_[t].dphi(r) / r;
        H.block(off, off, n, n) = b * Mat::Identity(n, n) + (a - b) * u * u.transpose();
    }
    return H;
}

Vec MorsePairPotential::hessian_apply(const Eigen::Ref<const Vec>& g, const Eigen::Ref<const Vec>& w) const
{
    const int n = dim();
    Vec out(tuple_size());
    for (std::size_t t = 0; t < bonds_.size(); ++t) {
        const auto off = static_cast<Eigen::Index>(t) * n;
        const Vec x = ref_.segment(off, n) + g.segment(off, n);
        const double r = x.norm();
        const Vec u = x / r;
        const double a = bonds_[t].d2phi(r);
        const double b = bonds_[t].dphi(r) / r;
        const auto wt = w.segment(off, n);
        out.segment(off, n) = b * wt + (a - b) * u.dot(wt) * u;
    }
    return out;
}

Vec MorsePairPotential::third_contract(const Eigen::Ref<const Vec>& g, const Eigen::Ref<const Vec>& w) const
{
    const int n = dim();
    Vec out(tuple_size());
    for (std::size_t t = 0; t < bonds_.size(); ++t) {
        const auto off = static_cast<Eigen::Index>(t) * n;
        const Vec x = ref_.segment(off, n) + g.segment(off, n);
        const double r = x.norm();
        const Vec u = x / r;
        const Vec wt = w.segment(off, n);
        const double uw = u.dot(wt);
        const double d1 = bonds_[t].dphi(r);
        const double d2 = bonds_[t].d2phi(r);
        const double d3 = bonds_[t].d3phi(r);
        const double a = d2;
        const double b = d1 / r;
        const double da = d3;
        const double db = d2 / r - d1 / (r * r);
        const Vec du = (wt - uw * u) / r;
        out.segment(off, n) = db * uw * wt + (da - db) * uw * uw * u + (a - b) * (uw * du + du.dot(wt) * u);
    }
    return out;
}

PotentialPtr make_morse_pair(const Multilattice& spec, const InteractionRange& range, const MorseTable& table)
{
    return std::make_shared<MorsePairPotential>(spec, range, table);
}

// ---------------------------------------------------------------------------

const Vec* DefectModel::dipole_at(const IVec& site) const
{
    for (const auto& dp : dipoles) {
        if (dp.site == site) {
            return &dp.g;
        }
    }
    return nullptr;
}

void DefectModel::validate(const Multilattice& spec, Eigen::Index tuple_size) const
{
    if (core_radius < 0.0) {
        throw ValidationError("defect core radius must be nonnegative");
    }
    for (std::size_t i = 0; i < dipoles.size(); ++i) {
        const auto& dp = dipoles[i];
        if (dp.site.size() != spec.d || dp.g.size() != tuple_size) {
            throw ValidationError("dipole has wrong site dimension or tuple length");
        }
        if (spec.position(dp.site).norm() > core_radius + 1e-12) {
            throw ValidationError("dipole site lies outside the defect core radius");
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (dipoles[j].site == dp.site) {
                throw ValidationError("duplicate dipole site");
            }
        }
    }
}

DefectModel DefectModel::scaled(double factor) const
{
    DefectModel out = *this;
    for (auto& dp : out.dipoles) {
        dp.g *= factor;
    }
    return out;
}

DefectSitePotential::DefectSitePotential(PotentialPtr base, Vec dipole)
    : SitePotential(base->range(), base->dim()), base_(std::move(base)), dipole_(std::move(dipole))
{
}

PotentialPtr defect_site_potential(const PotentialPtr& base, const DefectModel& defect, const Multilattice& spec,
                                   const IVec& site)
{
    if (spec.position(site).norm() > defect.core_radius + 1e-12) {
        return base;
    }
    const Vec* g = defect.dipole_at(site);
    return std::make_shared<DefectSitePotential>(base, g ? *g : Vec::Zero(base->tuple_size()));
}

}  // namespace mlat
