#include "mlat/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace mlat {

Multilattice build_multilattice(const Mat& F, const std::vector<Vec>& shifts, int n)
{
    const auto d = static_cast<int>(F.rows());
    if (F.cols() != d) {
        throw ValidationError("cell matrix must be square");
    }
    if (d != 2 && d != 3) {
        throw ValidationError("spatial dimension must be 2 or 3, got " + std::to_string(d));
    }
    if (!(n == d || (d == 2 && n == 3))) {
        throw ValidationError("illegal (d, n) pair (" + std::to_string(d) + ", " + std::to_string(n) + ")");
    }
    if (shifts.empty()) {
        throw ValidationError("at least one species shift is required");
    }
    for (const auto& p : shifts) {
        if (p.size() != d) {
            throw ValidationError("shift vectors must have length d");
        }
    }
    if (!shifts.front().isZero(0.0)) {
        throw ValidationError("the first shift p_0 must be exactly zero");
    }

    const double det = F.determinant();
    const double ref = std::pow(F.norm(), d);
    if (!std::isfinite(det) || std::abs(det) <= 1e-12 * std::max(ref, 1e-300)) {
        throw ValidationError("cell matrix is singular");
    }
    if (det < 0.0) {
        throw ValidationError("cell matrix must be positively oriented (det F > 0)");
    }

    Multilattice spec;
    spec.d = d;
    spec.n = n;
    spec.scale = std::pow(det, 1.0 / d);
    spec.F = F / spec.scale;
    spec.B = spec.F.inverse().transpose();
    spec.shifts.reserve(shifts.size());
    for (const auto& p : shifts) {
        spec.shifts.push_back(p / spec.scale);
    }
    spec.shifts.front().setZero();
    return spec;
}

bool operator==(const BondTriplet& a, const BondTriplet& b)
{
    return a.alpha == b.alpha && a.beta == b.beta && a.rho.size() == b.rho.size() && a.rho == b.rho;
}

bool operator<(const BondTriplet& a, const BondTriplet& b)
{
    const auto ra = std::vector<int>(a.rho.data(), a.rho.data() + a.rho.size());
    const auto rb = std::vector<int>(b.rho.data(), b.rho.data() + b.rho.size());
    if (ra != rb) {
        return ra < rb;
    }
    if (a.alpha != b.alpha) {
        return a.alpha < b.alpha;
    }
    return a.beta < b.beta;
}

std::string to_string(const BondTriplet& t)
{
    std::ostringstream os;
    os << "((";
    for (Eigen::Index i = 0; i < t.rho.size(); ++i) {
        os << (i ? "," : "") << t.rho[i];
    }
    os << ")," << t.alpha << "," << t.beta << ")";
    return os.str();
}

std::optional<int> InteractionRange::index_of(const BondTriplet& t) const
{
    auto it = std::lower_bound(triplets.begin(), triplets.end(), t);
    if (it != triplets.end() && *it == t) {
        return static_cast<int>(it - triplets.begin());
    }
    return std::nullopt;
}

std::vector<IVec> kuhn_edges(int d)
{
    std::vector<IVec> edges;
    for (int mask = 1; mask < (1 << d); ++mask) {
        IVec e = IVec::Zero(d);
        for (int i = 0; i < d; ++i) {
            if (mask & (1 << i)) {
                e[i] = 1;
            }
        }
        edges.push_back(e);
    }
    return edges;
}

namespace {

bool ivec_less(const IVec& a, const IVec& b)
{
    return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

InteractionRange finalize(std::set<BondTriplet>&& set)
{
    InteractionRange r;
    r.triplets.assign(set.begin(), set.end());
    for (const auto& t : r.triplets) {
        r.r1.push_back(t.rho);
    }
    std::sort(r.r1.begin(), r.r1.end(), ivec_less);
    r.r1.erase(std::unique(r.r1.begin(), r.r1.end()), r.r1.end());
    r.reversal.resize(r.triplets.size());
    for (std::size_t i = 0; i < r.triplets.size(); ++i) {
        r.reversal[i] = *r.index_of(r.triplets[i].reversed());
    }
    return r;
}

}  // namespace

RangeValidation validate_range(const Multilattice& spec, const std::vector<BondTriplet>& triplets)
{
    if (triplets.empty()) {
        throw ValidationError("interaction range is empty");
    }
    const int S = spec.species();
    const int d = spec.d;

    std::set<BondTriplet> input;
    for (const auto& t : triplets) {
        if (t.rho.size() != d) {
            throw ValidationError("triplet " + to_string(t) + " has wrong lattice dimension");
        }
        if (t.alpha < 0 || t.alpha >= S || t.beta < 0 || t.beta >= S) {
            throw ValidationError("triplet " + to_string(t) + " references an unknown species");
        }
        if (t.is_null()) {
            throw ValidationError("triplet " + to_string(t) + " is a null (on-site, same-species) bond");
        }
        input.insert(t);
    }

    std::set<BondTriplet> out = input;
    for (const auto& t : input) {
        out.insert(t.reversed());
    }

    // same-species bonds must span R^d; not repairable here
    for (int a = 0; a < S; ++a) {
        std::vector<Vec> cols;
        for (const auto& t : out) {
            if (t.alpha == a && t.beta == a) {
                cols.push_back(spec.F * t.rho.cast<double>());
            }
        }
        Mat M = Mat::Zero(d, static_cast<Eigen::Index>(cols.size()));
        for (std::size_t j = 0; j < cols.size(); ++j) {
            M.col(static_cast<Eigen::Index>(j)) = cols[j];
        }
        Eigen::FullPivLU<Mat> lu(M);
        lu.setThreshold(1e-10);
        if (cols.empty() || lu.rank() < d) {
            throw ValidationError("same-species bonds of species " + std::to_string(a) + " do not span R^"
                                  + std::to_string(d));
        }
    }

    for (int a = 0; a < S; ++a) {
        for (int b = 0; b < S; ++b) {
            if (a != b) {
                out.insert(BondTriplet{IVec::Zero(d), a, b});
            }
        }
    }

    auto has_rho = [&](const IVec& rho) {
        return std::any_of(out.begin(), out.end(), [&](const BondTriplet& t) { return t.rho == rho; });
    };
    for (const auto& e : kuhn_edges(d)) {
        if (!has_rho(e) || !has_rho(-e)) {
            out.insert(BondTriplet{e, 0, 0});
            out.insert(BondTriplet{(-e).eval(), 0, 0});
        }
    }

    RangeValidation result;
    for (const auto& t : out) {
        if (!input.count(t)) {
            result.added.push_back(t);
        }
    }
    result.range = finalize(std::move(out));
    return result;
}

// ---------------------------------------------------------------------------

std::shared_ptr<const LatticeWindow> LatticeWindow::ball(const Multilattice& spec, const InteractionRange& range,
                                                         double radius)
{
    if (!(radius > 0.0)) {
        throw ValidationError("window radius must be positive");
    }
    std::shared_ptr<LatticeWindow> w(new LatticeWindow());
    w->kind_ = Kind::Ball;
    w->d_ = spec.d;
    w->F_ = spec.F;
    w->range_ = range;
    w->radius_ = radius;
    double halo = 0.0;
    for (const auto& t : range.triplets) {
        halo = std::max(halo, (spec.F * t.rho.cast<double>()).norm());
    }
    w->halo_ = halo;

    const double outer = radius + halo;
    const Mat Finv = spec.F.inverse();
    const int d = spec.d;
    IVec lo(d);
    IVec ext(d);
    for (int i = 0; i < d; ++i) {
        const int m = static_cast<int>(std::ceil(outer * Finv.row(i).norm())) + 1;
        lo[i] = -m;
        ext[i] = 2 * m + 1;
    }
    std::size_t total = 1;
    for (int i = 0; i < d; ++i) {
        total *= static_cast<std::size_t>(ext[i]);
    }
    std::vector<IVec> sites;
    for (std::size_t lin = 0; lin < total; ++lin) {
        IVec m(d);
        std::size_t rem = lin;
        for (int i = 0; i < d; ++i) {
            m[i] = lo[i] + static_cast<int>(rem % static_cast<std::size_t>(ext[i]));
            rem /= static_cast<std::size_t>(ext[i]);
        }
        if ((spec.F * m.cast<double>()).norm() <= outer + 1e-9) {
            sites.push_back(m);
        }
    }
    w->coords_.resize(d, static_cast<Eigen::Index>(sites.size()));
    for (std::size_t j = 0; j < sites.size(); ++j) {
        w->coords_.col(static_cast<Eigen::Index>(j)) = sites[j];
    }
    w->build_lookup();
    w->build_tables();
    return w;
}

std::shared_ptr<const LatticeWindow> LatticeWindow::from_sites(const Multilattice& spec, const InteractionRange& range,
                                                               const Eigen::MatrixXi& coords, double radius)
{
    if (coords.rows() != spec.d || coords.cols() == 0) {
        throw ValidationError("site list has the wrong dimension or is empty");
    }
    std::shared_ptr<LatticeWindow> w(new LatticeWindow());
    w->kind_ = Kind::Ball;
    w->d_ = spec.d;
    w->F_ = spec.F;
    w->range_ = range;
    w->radius_ = radius;
    w->coords_ = coords;
    w->build_lookup();
    w->build_tables();
    return w;
}

void LatticeWindow::build_lookup()
{
    const int d = d_;
    box_lo_ = coords_.rowwise().minCoeff();
    box_ext_ = (coords_.rowwise().maxCoeff() - box_lo_).array() + 1;
    std::size_t total = 1;
    for (int i = 0; i < d; ++i) {
        total *= static_cast<std::size_t>(box_ext_[i]);
    }
    box_.assign(total, -1);
    free_.assign(static_cast<std::size_t>(coords_.cols()), 0);
    double halo = 0.0;
    for (Eigen::Index j = 0; j < coords_.cols(); ++j) {
        std::size_t lin = 0;
        std::size_t stride = 1;
        for (int i = 0; i < d; ++i) {
            lin += static_cast<std::size_t>(coords_(i, j) - box_lo_[i]) * stride;
            stride *= static_cast<std::size_t>(box_ext_[i]);
        }
        if (box_[lin] >= 0) {
            throw ValidationError("duplicate site in window");
        }
        box_[lin] = static_cast<int>(j);
        const double r = (F_ * coords_.col(j).cast<double>()).norm();
        free_[static_cast<std::size_t>(j)] = r <= radius_ + 1e-9 ? 1 : 0;
        halo = std::max(halo, r - radius_);
    }
    halo_ = std::max(halo_, halo);
}

std::shared_ptr<const LatticeWindow> LatticeWindow::periodic(const Multilattice& spec, const InteractionRange& range,
                                                             int N)
{
    if (N < 2 || N % 2 != 0) {
        throw ValidationError("periodic cell order must be even and >= 2");
    }
    std::shared_ptr<LatticeWindow> w(new LatticeWindow());
    w->kind_ = Kind::Periodic;
    w->d_ = spec.d;
    w->N_ = N;
    w->F_ = spec.F;
    w->range_ = range;
    const int d = spec.d;
    Eigen::Index total = 1;
    for (int i = 0; i < d; ++i) {
        total *= N;
    }
    w->coords_.resize(d, total);
    for (Eigen::Index lin = 0; lin < total; ++lin) {
        Eigen::Index rem = lin;
        for (int i = 0; i < d; ++i) {
            const int j = static_cast<int>(rem % N);
            rem /= N;
            w->coords_(i, lin) = j <= N / 2 ? j : j - N;
        }
    }
    w->free_.assign(static_cast<std::size_t>(total), 1);
    w->radius_ = 0.5 * N;
    w->build_tables();
    return w;
}

std::optional<int> LatticeWindow::index_of(const IVec& m) const
{
    if (m.size() != d_) {
        return std::nullopt;
    }
    if (kind_ == Kind::Periodic) {
        Eigen::Index lin = 0;
        Eigen::Index stride = 1;
        for (int i = 0; i < d_; ++i) {
            const int j = ((m[i] % N_) + N_) % N_;
            lin += j * stride;
            stride *= N_;
        }
        return static_cast<int>(lin);
    }
    std::size_t lin = 0;
    std::size_t stride = 1;
    for (int i = 0; i < d_; ++i) {
        const int j = m[i] - box_lo_[i];
        if (j < 0 || j >= box_ext_[i]) {
            return std::nullopt;
        }
        lin += static_cast<std::size_t>(j) * stride;
        stride *= static_cast<std::size_t>(box_ext_[i]);
    }
    const int idx = box_[lin];
    if (idx < 0) {
        return std::nullopt;
    }
    return idx;
}

int LatticeWindow::shifted(int i, const IVec& offset) const
{
    return index_of(IVec(coords_.col(i) + offset)).value_or(-1);
}

void LatticeWindow::build_tables()
{
    const int R = range_.size();
    fwd_.resize(R, count());
    bwd_.resize(R, count());
    for (int t = 0; t < R; ++t) {
        const IVec& rho = range_.triplets[static_cast<std::size_t>(t)].rho;
        for (int i = 0; i < count(); ++i) {
            fwd_(t, i) = shifted(i, rho);
            bwd_(t, i) = shifted(i, -rho);
        }
    }
}

// ---------------------------------------------------------------------------

DisplacementField::DisplacementField(std::shared_ptr<const LatticeWindow> window, int species, int n)
    : values(Vec::Zero(static_cast<Eigen::Index>(window->count()) * species * n)),
      window_(std::move(window)),
      S_(species),
      n_(n)
{
}

void DisplacementField::clamp()
{
    for (int i = 0; i < sites(); ++i) {
        if (!window_->is_free(i)) {
            values.segment(offset(i, 0), static_cast<Eigen::Index>(S_) * n_).setZero();
        }
    }
}

DisplacementField DisplacementField::zeros_like() const
{
    return DisplacementField(window_, S_, n_);
}

Vec finite_difference(const DisplacementField& u, const BondTriplet& t, int site)
{
    const auto& w = u.window();
    if (site < 0 || site >= w.count()) {
        throw ValidationError("site outside window");
    }
    const int nb = w.shifted(site, t.rho);
    Vec out = -u.at(site, t.alpha);
    if (nb >= 0) {
        out += u.at(nb, t.beta);
    }
    return out;
}

void stencil_apply_into(const DisplacementField& u, int site, Eigen::Ref<Vec> out)
{
    const auto& w = u.window();
    const auto& trip = w.range().triplets;
    const int n = u.dim();
    for (int t = 0; t < static_cast<int>(trip.size()); ++t) {
        const auto& b = trip[static_cast<std::size_t>(t)];
        const int nb = w.forward(t, site);
        auto seg = out.segment(static_cast<Eigen::Index>(t) * n, n);
        seg = -u.at(site, b.alpha);
        if (nb >= 0) {
            seg += u.at(nb, b.beta);
        }
    }
}

Vec stencil_apply(const DisplacementField& u, int site)
{
    if (site < 0 || site >= u.window().count()) {
        throw ValidationError("site outside window");
    }
    Vec out(static_cast<Eigen::Index>(u.window().range().size()) * u.dim());
    stencil_apply_into(u, site, out);
    return out;
}

void scatter_transpose(const LatticeWindow& w, int species, int n, const Mat& tuples, Vec& out)
{
    const auto& trip = w.range().triplets;
    const int R = static_cast<int>(trip.size());
    const int count = w.count();
    out.setZero(static_cast<Eigen::Index>(count) * species * n);
#pragma omp parallel for schedule(static)
    for (int eta = 0; eta < count; ++eta) {
        if (!w.is_free(eta)) {
            continue;
        }
        const Eigen::Index base = static_cast<Eigen::Index>(eta) * species * n;
        for (int t = 0; t < R; ++t) {
            const auto& b = trip[static_cast<std::size_t>(t)];
            const Eigen::Index row = static_cast<Eigen::Index>(t) * n;
            const int src = w.backward(t, eta);
            if (src >= 0) {
                out.segment(base + static_cast<Eigen::Index>(b.beta) * n, n) += tuples.col(src).segment(row, n);
            }
            out.segment(base + static_cast<Eigen::Index>(b.alpha) * n, n) -= tuples.col(eta).segment(row, n);
        }
    }
}

}  // namespace mlat
