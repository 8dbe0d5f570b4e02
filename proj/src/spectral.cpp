#include "mlat/spectral.hpp"

#include "mlat/energy.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <limits>

namespace mlat {

namespace {
constexpr double two_pi = 2.0 * M_PI;
}

PhononModel phonon_model(const Multilattice& spec, const SitePotential& pot)
{
    if (!pot.homogeneous()) {
        throw ValidationError("phonon model needs the homogeneous potential");
    }
    PhononModel m;
    m.d = spec.d;
    m.n = spec.n;
    m.S = spec.species();
    m.F = spec.F;
    m.B = spec.B;
    m.triplets = pot.range().triplets;
    const int n = m.n;
    const Mat K = pot.hessian(Vec::Zero(pot.tuple_size()));
    const int R = pot.range().size();
    for (int t = 0; t < R; ++t) {
        for (int s = 0; s < R; ++s) {
            const Mat blk = K.block(static_cast<Eigen::Index>(t) * n, static_cast<Eigen::Index>(s) * n, n, n);
            if (!blk.isZero(0.0)) {
                m.blocks.push_back({t, s, blk});
            }
        }
    }
    return m;
}

std::vector<CVec> stencil_symbols(const PhononModel& m, const Vec& k, bool continuum)
{
    const std::complex<double> I(0.0, 1.0);
    std::vector<CVec> c;
    c.reserve(m.triplets.size());
    for (const auto& b : m.triplets) {
        const double theta = two_pi * k.dot(m.F * b.rho.cast<double>());
        const std::complex<double> ph = std::exp(I * theta);
        CVec v = CVec::Zero(m.S);
        v[0] = continuum ? I * theta : ph - 1.0;
        if (b.beta >= 1) {
            v[b.beta] += continuum ? 1.0 : ph;
        }
        if (b.alpha >= 1) {
            v[b.alpha] -= 1.0;
        }
        c.push_back(v);
    }
    return c;
}

BlockHermitian assemble_H(const PhononModel& m, const Vec& k)
{
    const auto c = stencil_symbols(m, k, false);
    BlockHermitian H;
    H.k = k;
    H.n = m.n;
    H.S = m.S;
    const int n = m.n;
    H.M = CMat::Zero(static_cast<Eigen::Index>(m.S) * n, static_cast<Eigen::Index>(m.S) * n);
    for (const auto& blk : m.blocks) {
        const CVec& ct = c[static_cast<std::size_t>(blk.t)];
        const CVec& cs = c[static_cast<std::size_t>(blk.s)];
        for (int a = 0; a < m.S; ++a) {
            if (ct[a] == 0.0) {
                continue;
            }
            for (int b = 0; b < m.S; ++b) {
                if (cs[b] == 0.0) {
                    continue;
                }
                H.M.block(static_cast<Eigen::Index>(a) * n, static_cast<Eigen::Index>(b) * n, n, n)
                    += (std::conj(ct[a]) * cs[b]) * blk.K.cast<std::complex<double>>();
            }
        }
    }
    return H;
}

BlockInverse schur_inverse(const BlockHermitian& H)
{
    if (H.k.isZero(0.0)) {
        throw SingularPointError("block inverse requested at k = 0 (acoustic sector is singular)");
    }
    const int n = H.n;
    const Eigen::Index np = H.np();
    BlockInverse out;
    if (H.S == 1) {
        out.Q = H.h00();
        out.Q_inv = out.Q.inverse();
        out.inv = out.Q_inv;
        out.P = CMat();
        out.inv_alt = out.Q_inv;
        return out;
    }
    const CMat h00 = H.h00();
    const CMat h0p = H.h0p();
    const CMat hp0 = H.hp0();
    const CMat hpp = H.hpp();
    Eigen::LDLT<CMat> pp(hpp);
    out.Hpp_inv = pp.solve(CMat::Identity(np, np));
    out.Q = h00 - h0p * out.Hpp_inv * hp0;
    out.Q_inv = out.Q.inverse();
    const CMat X = -out.Q_inv * h0p * out.Hpp_inv;
    out.inv.resize(H.M.rows(), H.M.cols());
    out.inv.topLeftCorner(n, n) = out.Q_inv;
    out.inv.topRightCorner(n, np) = X;
    out.inv.bottomLeftCorner(np, n) = -out.Hpp_inv * hp0 * out.Q_inv;
    out.inv.bottomRightCorner(np, np) = out.Hpp_inv * hp0 * out.Q_inv * h0p * out.Hpp_inv + out.Hpp_inv;

    Eigen::FullPivLU<CMat> lu00(h00);
    if (lu00.isInvertible()) {
        const CMat h00_inv = lu00.inverse();
        out.P = hpp - hp0 * h00_inv * h0p;
        const CMat P_inv = out.P.inverse();
        out.inv_alt.resize(H.M.rows(), H.M.cols());
        out.inv_alt.topLeftCorner(n, n) = h00_inv + h00_inv * h0p * P_inv * hp0 * h00_inv;
        out.inv_alt.topRightCorner(n, np) = -h00_inv * h0p * P_inv;
        out.inv_alt.bottomLeftCorner(np, n) = -P_inv * hp0 * h00_inv;
        out.inv_alt.bottomRightCorner(np, np) = P_inv;
    }
    return out;
}

QuadraticFormCheck quadratic_form_check(const Multilattice& spec, const SitePotential& pot, const PhononModel& m,
                                        const DisplacementField& u, const DisplacementField& v)
{
    if (u.window().kind() != LatticeWindow::Kind::Periodic || u.window_ptr() != v.window_ptr()) {
        throw ValidationError("quadratic form check needs two fields on the same periodic cell");
    }
    QuadraticFormCheck out;
    const DisplacementField zero = u.zeros_like();
    out.real_space = hessian_apply(zero, u, pot).dot(v.values);

    const KField uk = sdft(u, spec);
    const KField vk = sdft(v, spec);
    const int n = m.n;
    const int S = m.S;
    // (u_0, u_1, ...) -> (U, p_1, ...)
    auto to_up = [&](const CMat& vals, int j) {
        CVec w(static_cast<Eigen::Index>(S) * n);
        w.head(n) = vals.col(j).head(n);
        for (int a = 1; a < S; ++a) {
            w.segment(static_cast<Eigen::Index>(a) * n, n) =
                vals.col(j).segment(static_cast<Eigen::Index>(a) * n, n) - vals.col(j).head(n);
        }
        return w;
    };
    const int count = uk.grid.count();
    std::vector<double> terms(static_cast<std::size_t>(count));
#pragma omp parallel for schedule(static)
    for (int j = 0; j < count; ++j) {
        const BlockHermitian H = assemble_H(m, uk.grid.node(j));
        terms[static_cast<std::size_t>(j)] = (to_up(vk.values, j).dot(H.M * to_up(uk.values, j))).real();
    }
    double s = 0.0;
    for (double t : terms) {
        s += t;
    }
    out.k_space = s / count;
    const double scale = std::max({std::abs(out.real_space), std::abs(out.k_space), 1e-300});
    out.rel_gap = std::abs(out.real_space - out.k_space) / scale;
    return out;
}

PhononSpectrum phonons(const PhononModel& m, const BrillouinGrid& grid)
{
    PhononSpectrum out;
    out.grid = grid;
    out.n = m.n;
    out.eigenvalues.resize(static_cast<std::size_t>(grid.count()));
#pragma omp parallel for schedule(static)
    for (int j = 0; j < grid.count(); ++j) {
        const BlockHermitian H = assemble_H(m, grid.node(j));
        Eigen::SelfAdjointEigenSolver<CMat> es(H.M, Eigen::EigenvaluesOnly);
        out.eigenvalues[static_cast<std::size_t>(j)] = es.eigenvalues();
    }
    return out;
}

StabilityCertificate stability_certificate(const PhononModel& m, const BrillouinGrid& grid, double eps_acoustic,
                                           double eps_optical)
{
    const PhononSpectrum spec = phonons(m, grid);
    StabilityCertificate c;
    const int n = m.n;
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    double opt = std::numeric_limits<double>::infinity();
    double min_eig = std::numeric_limits<double>::infinity();
    Vec worst;
    for (int j = 0; j < grid.count(); ++j) {
        const Vec& ev = spec.eigenvalues[static_cast<std::size_t>(j)];
        const Vec k = grid.node(j);
        if (!grid.is_zero(j)) {
            const double kk = reduce_to_voronoi(m.B, k).squaredNorm();
            const double ratio_lo = ev[0] / kk;
            const double ratio_hi = ev[n - 1] / kk;
            if (ratio_lo < lo) {
                lo = ratio_lo;
                worst = k;
            }
            hi = std::max(hi, ratio_hi);
            min_eig = std::min(min_eig, ev[0]);
        }
        if (m.S > 1) {
            opt = std::min(opt, ev[n]);
            min_eig = std::min(min_eig, ev[n]);
        }
    }
    c.gamma_acoustic_low = lo;
    c.gamma_acoustic_high = hi;
    if (m.S > 1) {
        c.gamma_optical = opt;
    }
    c.min_eigenvalue = min_eig;
    c.worst_k = worst;
    c.pass = lo >= eps_acoustic && (m.S == 1 || opt >= eps_optical);
    if (lo < eps_acoustic) {
        c.failure = "acoustic branch below threshold";
    } else if (!c.pass) {
        c.failure = "optical branch below threshold";
    }
    return c;
}

int predict_exponent(GreensBlock block, int t, int d)
{
    switch (block) {
    case GreensBlock::Q_inv:
        return -d - t + 2;
    case GreensBlock::Q_inv_H0p_Hpp_inv:
        return -d - t + 1;
    case GreensBlock::Hpp_terms:
        return -d - t;
    }
    return 0;
}

std::string to_string(GreensBlock b)
{
    switch (b) {
    case GreensBlock::Q_inv:
        return "Q_inv";
    case GreensBlock::Q_inv_H0p_Hpp_inv:
        return "Q_inv_H0p_Hpp_inv";
    case GreensBlock::Hpp_terms:
        return "Hpp_terms";
    }
    return "?";
}

}  // namespace mlat
