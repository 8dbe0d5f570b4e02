#include "mlat/energy.hpp"

#include "mlat/fourier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mlat {

Mat stencil_tuples(const DisplacementField& u)
{
    const auto& w = u.window();
    const Eigen::Index len = static_cast<Eigen::Index>(w.range().size()) * u.dim();
    Mat out(len, w.count());
#pragma omp parallel for schedule(static)
    for (int i = 0; i < w.count(); ++i) {
        stencil_apply_into(u, i, out.col(i));
    }
    return out;
}

std::vector<std::pair<int, Vec>> locate_dipoles(const LatticeWindow& w, const DefectModel& defect)
{
    std::vector<std::pair<int, Vec>> out;
    for (const auto& dp : defect.dipoles) {
        const auto idx = w.index_of(dp.site);
        if (!idx) {
            throw ValidationError("dipole site lies outside the lattice window");
        }
        out.emplace_back(*idx, dp.g);
    }
    return out;
}

double energy_renormalized(const DisplacementField& u, const SitePotential& pot, const DefectModel& defect)
{
    const auto& w = u.window();
    const Mat Du = stencil_tuples(u);
    const Vec f0 = pot.gradient(Vec::Zero(pot.tuple_size()));
    std::vector<double> site(static_cast<std::size_t>(w.count()));
#pragma omp parallel for schedule(static)
    for (int i = 0; i < w.count(); ++i) {
        const auto g = Du.col(i);
        site[static_cast<std::size_t>(i)] = g.isZero(0.0) ? 0.0 : pot.value(g) - f0.dot(g);
    }
    double e = std::accumulate(site.begin(), site.end(), 0.0);
    for (const auto& [i, g] : locate_dipoles(w, defect)) {
        e += g.dot(Du.col(i));
    }
    return e;
}

Vec energy_gradient(const DisplacementField& u, const SitePotential& pot, const DefectModel& defect)
{
    const auto& w = u.window();
    Mat T = stencil_tuples(u);
    const Vec f0 = pot.gradient(Vec::Zero(pot.tuple_size()));
#pragma omp parallel for schedule(static)
    for (int i = 0; i < w.count(); ++i) {
        if (T.col(i).isZero(0.0)) {
            T.col(i).setZero();
        } else {
            T.col(i) = pot.gradient(T.col(i)) - f0;
        }
    }
    for (const auto& [i, g] : locate_dipoles(w, defect)) {
        T.col(i) += g;
    }
    Vec out;
    scatter_transpose(w, u.species(), u.dim(), T, out);
    return out;
}

double first_variation(const DisplacementField& u, const DisplacementField& v, const SitePotential& pot,
                       const DefectModel& defect)
{
    return energy_gradient(u, pot, defect).dot(v.values);
}

Vec hessian_apply(const DisplacementField& u, const DisplacementField& v, const SitePotential& pot)
{
    const auto& w = u.window();
    const Mat Du = stencil_tuples(u);
    Mat T = stencil_tuples(v);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < w.count(); ++i) {
        if (!T.col(i).isZero(0.0)) {
            T.col(i) = pot.hessian_apply(Du.col(i), T.col(i));
        }
    }
    Vec out;
    scatter_transpose(w, u.species(), u.dim(), T, out);
    return out;
}

Vec hessian_apply(const DisplacementField& u, const Vec& v, const SitePotential& pot)
{
    DisplacementField vf = u.zeros_like();
    vf.values = v;
    return hessian_apply(u, vf, pot);
}

double hessian_form(const DisplacementField& u, const DisplacementField& v, const SitePotential& pot)
{
    const auto& w = u.window();
    const Mat Du = stencil_tuples(u);
    const Mat Dv = stencil_tuples(v);
    std::vector<double> site(static_cast<std::size_t>(w.count()));
#pragma omp parallel for schedule(static)
    for (int i = 0; i < w.count(); ++i) {
        const auto g = Dv.col(i);
        site[static_cast<std::size_t>(i)] = g.isZero(0.0) ? 0.0 : g.dot(pot.hessian_apply(Du.col(i), g));
    }
    return std::accumulate(site.begin(), site.end(), 0.0);
}

double norm_a1(const DisplacementField& u)
{
    const Mat Du = stencil_tuples(u);
    double s = 0.0;
    for (Eigen::Index i = 0; i < Du.cols(); ++i) {
        s += Du.col(i).squaredNorm();
    }
    return std::sqrt(s);
}

double norm_a2(const DisplacementField& u, const Multilattice& spec)
{
    const auto& w = u.window();
    const int d = spec.d;
    const int n = u.dim();
    const int S = u.species();

    std::vector<std::vector<int>> perms;
    std::vector<int> p(static_cast<std::size_t>(d));
    std::iota(p.begin(), p.end(), 0);
    do {
        perms.push_back(p);
    } while (std::next_permutation(p.begin(), p.end()));
    std::vector<Mat> inv;
    for (const auto& pi : perms) {
        Mat E(d, d);
        for (int k = 0; k < d; ++k) {
            E.col(k) = spec.F.col(pi[static_cast<std::size_t>(k)]);
        }
        inv.push_back(E.inverse());
    }
    double vol = 1.0;
    for (int k = 2; k <= d; ++k) {
        vol /= k;
    }
    const double mass = vol / ((d + 1) * (d + 2));

    std::vector<double> grad_sq(static_cast<std::size_t>(w.count()), 0.0);
    std::vector<double> shift_sq(static_cast<std::size_t>(w.count()), 0.0);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < w.count(); ++i) {
        std::vector<int> verts(static_cast<std::size_t>(d + 1));
        Mat dU(n, d);
        for (std::size_t s = 0; s < perms.size(); ++s) {
            IVec off = IVec::Zero(d);
            verts[0] = i;
            for (int k = 0; k < d; ++k) {
                off[perms[s][static_cast<std::size_t>(k)]] += 1;
                verts[static_cast<std::size_t>(k + 1)] = w.shifted(i, off);
            }
            auto val = [&](int v, int a) -> Vec {
                return v >= 0 ? Vec(u.at(v, a)) : Vec(Vec::Zero(n));
            };
            bool any = false;
            for (int k = 0; k <= d; ++k) {
                if (verts[static_cast<std::size_t>(k)] >= 0) {
                    any = true;
                }
            }
            if (!any) {
                continue;
            }
            for (int k = 0; k < d; ++k) {
                dU.col(k) = val(verts[static_cast<std::size_t>(k + 1)], 0) - val(verts[static_cast<std::size_t>(k)], 0);
            }
            grad_sq[static_cast<std::size_t>(i)] += vol * (dU * inv[s]).squaredNorm();
            for (int a = 1; a < S; ++a) {
                Vec sum = Vec::Zero(n);
                double sq = 0.0;
                for (int k = 0; k <= d; ++k) {
                    const int v = verts[static_cast<std::size_t>(k)];
                    const Vec q = val(v, a) - val(v, 0);
                    sum += q;
                    sq += q.squaredNorm();
                }
                shift_sq[static_cast<std::size_t>(i)] += mass * (sq + sum.squaredNorm());
            }
        }
    }
    const double total = std::accumulate(grad_sq.begin(), grad_sq.end(), 0.0)
                         + std::accumulate(shift_sq.begin(), shift_sq.end(), 0.0);
    return std::sqrt(total);
}

double norm_a3(const DisplacementField& u, const Multilattice& spec, int N)
{
    const DisplacementField up = embed_periodic(u, spec, N);
    const KField uk = sdft(up, spec);
    const int n = u.dim();
    const int S = u.species();
    const int count = uk.grid.count();
    double total = 0.0;
    for (int j = 0; j < count; ++j) {
        const double kk = reduce_to_voronoi(spec.B, uk.grid.node(j)).norm();
        const auto col = uk.values.col(j);
        const double w = 2.0 * M_PI * kk;
        total += w * w * col.head(n).squaredNorm();
        for (int a = 1; a < S; ++a) {
            total += (col.segment(static_cast<Eigen::Index>(a) * n, n) - col.head(n)).squaredNorm();
        }
    }
    return std::sqrt(total / count);
}

}  // namespace mlat
