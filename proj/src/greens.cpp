#include "mlat/greens.hpp"

#include <cmath>
#include <complex>
#include <limits>

namespace mlat {

namespace {

void store(CMat& dst, int col, const CMat& blk)
{
    dst.col(col) = Eigen::Map<const CVec>(blk.data(), blk.size());
}

CMat entry(const CMat& src, int col, Eigen::Index rows, Eigen::Index cols)
{
    return Eigen::Map<const CMat>(src.col(col).data(), rows, cols);
}

// ordered tuples i1 <= ... <= it of basis directions (differences commute)
void tuples(int d, int t, int start, std::vector<int>& cur, std::vector<std::vector<int>>& out)
{
    if (static_cast<int>(cur.size()) == t) {
        out.push_back(cur);
        return;
    }
    for (int i = start; i < d; ++i) {
        cur.push_back(i);
        tuples(d, t, i, cur, out);
        cur.pop_back();
    }
}

std::vector<std::vector<int>> basis_tuples(int d, int t)
{
    std::vector<std::vector<int>> out;
    std::vector<int> cur;
    tuples(d, t, 0, cur, out);
    return out;
}

}  // namespace

GreensBlocks greens_blocks(const Multilattice& spec, const PhononModel& m, int N, bool check_stability)
{
    GreensBlocks G;
    G.grid = BrillouinGrid(spec, N);
    if (check_stability) {
        const auto cert = stability_certificate(m, G.grid);
        if (!cert.pass) {
            throw StabilityError("lattice Green's function requested for an unstable lattice: " + cert.failure);
        }
    }
    G.n = m.n;
    G.S = m.S;
    const int n = m.n;
    const Eigen::Index np = G.np();
    const int count = G.grid.count();
    G.Q_inv = CMat::Zero(n * n, count);
    G.X = CMat::Zero(n * np, count);
    G.Y = CMat::Zero(np * np, count);
    G.Hpp_inv = CMat::Zero(np * np, count);
#pragma omp parallel for schedule(static)
    for (int j = 0; j < count; ++j) {
        const BlockHermitian H = assemble_H(m, G.grid.node(j));
        if (G.grid.is_zero(j)) {
            if (np > 0) {
                const CMat inv = H.hpp().inverse();
                store(G.Y, j, inv);
                store(G.Hpp_inv, j, inv);
            }
            continue;
        }
        const BlockInverse B = schur_inverse(H);
        store(G.Q_inv, j, B.Q_inv);
        if (np > 0) {
            store(G.X, j, B.inv.topRightCorner(n, np));
            store(G.Y, j, B.inv.bottomRightCorner(np, np));
            store(G.Hpp_inv, j, B.Hpp_inv);
        }
    }
    return G;
}

RealBlock real_space(const CMat& kblock, const BrillouinGrid& grid)
{
    const CMat back = fft_inverse(kblock, grid.d, grid.N);
    RealBlock r;
    r.values = back.real();
    r.max_imag = back.size() ? back.imag().cwiseAbs().maxCoeff() : 0.0;
    return r;
}

Vec difference_magnitude(const Mat& values, const BrillouinGrid& grid, int t)
{
    const int d = grid.d;
    const int N = grid.N;
    const int count = grid.count();
    if (t == 0) {
        Vec out(count);
        for (int j = 0; j < count; ++j) {
            out[j] = values.col(j).norm();
        }
        return out;
    }
    std::vector<int> stride(static_cast<std::size_t>(d));
    int s = 1;
    for (int i = 0; i < d; ++i) {
        stride[static_cast<std::size_t>(i)] = s;
        s *= N;
    }
    auto step = [&](int lin, int axis) {
        const int si = stride[static_cast<std::size_t>(axis)];
        const int j = (lin / si) % N;
        return j + 1 < N ? lin + si : lin - (N - 1) * si;
    };
    Vec out = Vec::Zero(count);
    for (const auto& tup : basis_tuples(d, t)) {
        Mat cur = values;
        for (int axis : tup) {
            Mat next(cur.rows(), cur.cols());
#pragma omp parallel for schedule(static)
            for (int j = 0; j < count; ++j) {
                next.col(j) = cur.col(step(j, axis)) - cur.col(j);
            }
            cur = std::move(next);
        }
        for (int j = 0; j < count; ++j) {
            out[j] = std::max(out[j], cur.col(j).norm());
        }
    }
    return out;
}

DecayFit decay_fit(const Vec& radii, const Vec& magnitudes, double r_min, double r_max, double predicted,
                   double growth)
{
    if (!(r_min > 0.0) || !(r_max > r_min) || !(growth > 1.0)) {
        throw ValidationError("decay fit needs 0 < r_min < r_max and growth > 1");
    }
    DecayFit fit;
    fit.predicted = predicted;
    fit.r_min = r_min;
    fit.r_max = r_max;
    std::vector<double> edges{r_min};
    while (edges.back() < r_max) {
        edges.push_back(std::min(r_max, std::max(edges.back() * growth, edges.back() + 1.0)));
    }
    const std::size_t bins = edges.size() - 1;
    std::vector<double> sup(bins, 0.0);
    std::vector<double> arg(bins, 0.0);
    for (Eigen::Index i = 0; i < radii.size(); ++i) {
        const double r = radii[i];
        const double v = magnitudes[i];
        if (!std::isfinite(v) || r < r_min || r > r_max) {
            continue;
        }
        auto it = std::upper_bound(edges.begin(), edges.end(), r);
        std::size_t b = static_cast<std::size_t>(it - edges.begin());
        b = b == 0 ? 0 : b - 1;
        b = std::min(b, bins - 1);
        if (v > sup[b]) {
            sup[b] = v;
            arg[b] = r;
        }
    }
    for (std::size_t b = 0; b < bins; ++b) {
        if (sup[b] > 0.0) {
            fit.radii.push_back(arg[b]);
            fit.sups.push_back(sup[b]);
        }
    }
    const auto m = static_cast<Eigen::Index>(fit.radii.size());
    if (m < 5) {
        throw ValidationError("decay fit has fewer than 5 populated annuli");
    }
    Mat A(m, 2);
    Vec y(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        A(i, 0) = std::log(fit.radii[static_cast<std::size_t>(i)]);
        A(i, 1) = 1.0;
        y[i] = std::log(fit.sups[static_cast<std::size_t>(i)]);
    }
    const Vec c = A.colPivHouseholderQr().solve(y);
    fit.exponent = c[0];
    fit.residual = std::sqrt((A * c - y).squaredNorm() / static_cast<double>(m));
    return fit;
}

Vec grid_radii(const Multilattice& spec, const BrillouinGrid& grid)
{
    Vec r(grid.count());
    for (int j = 0; j < grid.count(); ++j) {
        r[j] = spec.position(grid.index(j)).norm();
    }
    return r;
}

DecayFit block_decay(const Multilattice& spec, const GreensBlocks& G, GreensBlock which, int t, double r_min,
                     double r_max)
{
    const CMat* src = nullptr;
    switch (which) {
    case GreensBlock::Q_inv:
        src = &G.Q_inv;
        break;
    case GreensBlock::Q_inv_H0p_Hpp_inv:
        src = &G.X;
        break;
    case GreensBlock::Hpp_terms:
        src = &G.Y;
        break;
    }
    if (src->rows() == 0) {
        throw ValidationError("block " + to_string(which) + " is empty for a single-species lattice");
    }
    const RealBlock rb = real_space(*src, G.grid);
    const Vec mag = difference_magnitude(rb.values, G.grid, t);
    DecayFit fit = decay_fit(grid_radii(spec, G.grid), mag, r_min, std::min(r_max, G.grid.N / 4.0),
                             predict_exponent(which, t, spec.d));
    fit.label = to_string(which) + "/t=" + std::to_string(t);
    return fit;
}

Reconstruction reconstruct_solution(const Multilattice& spec, const PhononModel& m, const ResidualField& f,
                                    const GreensBlocks& G)
{
    const int N = G.grid.N;
    const int n = m.n;
    const int S = m.S;
    const Eigen::Index np = G.np();
    const auto& w = *f.window;
    auto cell = LatticeWindow::periodic(spec, w.range(), N);
    const int count = cell->count();

    CMat fk = CMat::Zero(f.tuples.rows(), count);
    std::vector<char> used(static_cast<std::size_t>(count), 0);
    for (int i = 0; i < w.count(); ++i) {
        if (f.tuples.col(i).isZero(0.0)) {
            continue;
        }
        const IVec site = w.site(i);
        for (int a = 0; a < spec.d; ++a) {
            if (site[a] <= -N / 2 || site[a] > N / 2) {
                throw ValidationError("periodic cell is too small for the residual support");
            }
        }
        const int j = *cell->index_of(site);
        if (used[static_cast<std::size_t>(j)]) {
            throw ValidationError("residual support overlaps its periodic image");
        }
        used[static_cast<std::size_t>(j)] = 1;
        fk.col(j) = f.tuples.col(i).cast<std::complex<double>>();
    }
    fk = fft_forward(fk, spec.d, N);

    CMat sol(static_cast<Eigen::Index>(S) * n, count);
    std::vector<double> resid(static_cast<std::size_t>(count), 0.0);
    std::vector<double> rhs_norm(static_cast<std::size_t>(count), 0.0);
    const int R = static_cast<int>(m.triplets.size());
#pragma omp parallel for schedule(static)
    for (int j = 0; j < count; ++j) {
        const Vec k = G.grid.node(j);
        const auto c = stencil_symbols(m, k, false);
        CVec b = CVec::Zero(static_cast<Eigen::Index>(S) * n);
        for (int t = 0; t < R; ++t) {
            const auto ft = fk.col(j).segment(static_cast<Eigen::Index>(t) * n, n);
            const CVec& ct = c[static_cast<std::size_t>(t)];
            for (int a = 0; a < S; ++a) {
                if (ct[a] != 0.0) {
                    b.segment(static_cast<Eigen::Index>(a) * n, n) += std::conj(ct[a]) * ft;
                }
            }
        }
        const CVec F = b.head(n);
        CVec x(static_cast<Eigen::Index>(S) * n);
        x.head(n) = entry(G.Q_inv, j, n, n) * F;
        if (np > 0) {
            const CVec g = b.tail(np);
            const CMat X = entry(G.X, j, n, np);
            x.head(n) += X * g;
            x.tail(np) = X.adjoint() * F + entry(G.Y, j, np, np) * g;
        }
        sol.col(j) = x;
        const BlockHermitian H = assemble_H(m, k);
        resid[static_cast<std::size_t>(j)] = (H.M * x - b).norm();
        rhs_norm[static_cast<std::size_t>(j)] = b.norm();
    }
    double bmax = 0.0;
    double rmax = 0.0;
    for (int j = 0; j < count; ++j) {
        bmax = std::max(bmax, rhs_norm[static_cast<std::size_t>(j)]);
        rmax = std::max(rmax, resid[static_cast<std::size_t>(j)]);
    }
    const Mat real = fft_inverse(sol, spec.d, N).real();

    Reconstruction out{DisplacementField(cell, S, n), bmax > 0.0 ? rmax / bmax : rmax};
    for (int j = 0; j < count; ++j) {
        const Vec U = real.col(j).head(n);
        out.u.at(j, 0) = U;
        for (int a = 1; a < S; ++a) {
            out.u.at(j, a) = U + real.col(j).segment(static_cast<Eigen::Index>(a) * n, n);
        }
    }
    return out;
}

Vec field_difference_magnitude(const DisplacementField& u, int alpha, int j)
{
    const auto& w = u.window();
    const int d = w.dim();
    const int count = w.count();
    auto value = [&](int site) -> Vec {
        return alpha == 0 ? Vec(u.at(site, 0)) : Vec(u.at(site, alpha) - u.at(site, 0));
    };
    Vec out = Vec::Zero(count);
    const auto tups = basis_tuples(d, j);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < count; ++i) {
        double best = 0.0;
        bool ok = true;
        for (const auto& tup : tups) {
            // expand prod (S_e - 1) over the tuple
            Vec acc = Vec::Zero(u.dim());
            const int terms = 1 << tup.size();
            for (int mask = 0; mask < terms && ok; ++mask) {
                IVec off = IVec::Zero(d);
                int ones = 0;
                for (std::size_t q = 0; q < tup.size(); ++q) {
                    if (mask & (1 << q)) {
                        off[tup[q]] += 1;
                        ++ones;
                    }
                }
                const int nb = w.shifted(i, off);
                if (nb < 0) {
                    ok = false;
                    break;
                }
                const double sign = ((static_cast<int>(tup.size()) - ones) % 2 == 0) ? 1.0 : -1.0;
                acc += sign * value(nb);
            }
            if (!ok) {
                break;
            }
            best = std::max(best, acc.norm());
        }
        out[i] = ok ? best : std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

std::vector<DecayFit> solution_decay_report(const Multilattice& spec, const DisplacementField& u, double r_min,
                                            double r_max)
{
    const auto& w = u.window();
    Vec radii(w.count());
    for (int i = 0; i < w.count(); ++i) {
        radii[i] = w.distance(i);
    }
    const int d = spec.d;
    std::vector<DecayFit> fits;
    for (int j = 1; j <= 3; ++j) {
        DecayFit f = decay_fit(radii, field_difference_magnitude(u, 0, j), r_min, r_max, 1 - d - j);
        f.label = "D^" + std::to_string(j) + " U";
        fits.push_back(std::move(f));
    }
    for (int a = 1; a < spec.species(); ++a) {
        for (int j = 0; j <= 2; ++j) {
            DecayFit f = decay_fit(radii, field_difference_magnitude(u, a, j), r_min, r_max, -d - j);
            f.label = "D^" + std::to_string(j) + " p_" + std::to_string(a);
            fits.push_back(std::move(f));
        }
    }
    return fits;
}

}  // namespace mlat
