#include "mlat/cauchyborn.hpp"

#include "mlat/energy.hpp"
#include "mlat/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <random>

namespace mlat {

namespace {

constexpr double two_pi = 2.0 * M_PI;

// d g / d vec(G) and d g / d p for g_t = G F rho + p_beta - p_alpha
struct ChainMaps {
    Mat LG;
    Mat Lp;
};

ChainMaps chain_maps(const Multilattice& spec, const InteractionRange& range)
{
    const int n = spec.n;
    const int d = spec.d;
    const int S = spec.species();
    const int R = range.size();
    ChainMaps c;
    c.LG = Mat::Zero(static_cast<Eigen::Index>(R) * n, static_cast<Eigen::Index>(n) * d);
    c.Lp = Mat::Zero(static_cast<Eigen::Index>(R) * n, static_cast<Eigen::Index>(S - 1) * n);
    for (int t = 0; t < R; ++t) {
        const auto& b = range.triplets[static_cast<std::size_t>(t)];
        const Vec x = spec.F * b.rho.cast<double>();
        for (int a = 0; a < n; ++a) {
            const Eigen::Index row = static_cast<Eigen::Index>(t) * n + a;
            for (int i = 0; i < d; ++i) {
                c.LG(row, a + n * i) = x[i];
            }
            if (b.beta >= 1) {
                c.Lp(row, static_cast<Eigen::Index>(b.beta - 1) * n + a) += 1.0;
            }
            if (b.alpha >= 1) {
                c.Lp(row, static_cast<Eigen::Index>(b.alpha - 1) * n + a) -= 1.0;
            }
        }
    }
    return c;
}

Vec tuple_offset(const Multilattice& spec, const InteractionRange& range, const Mat& G, const std::vector<Vec>& p)
{
    const int n = spec.n;
    const Mat G0 = reference_G(spec);
    const auto p0 = reference_shifts(spec);
    Vec g(static_cast<Eigen::Index>(range.size()) * n);
    for (int t = 0; t < range.size(); ++t) {
        const auto& b = range.triplets[static_cast<std::size_t>(t)];
        const Vec x = spec.F * b.rho.cast<double>();
        const auto ub = static_cast<std::size_t>(b.beta);
        const auto ua = static_cast<std::size_t>(b.alpha);
        g.segment(static_cast<Eigen::Index>(t) * n, n) =
            (G - G0) * x + (p[ub] - p0[ub]) - (p[ua] - p0[ua]);
    }
    return g;
}

Vec pack_shifts(const std::vector<Vec>& p, int n)
{
    Vec v(static_cast<Eigen::Index>(p.size() - 1) * n);
    for (std::size_t a = 1; a < p.size(); ++a) {
        v.segment(static_cast<Eigen::Index>(a - 1) * n, n) = p[a];
    }
    return v;
}

std::vector<Vec> unpack_shifts(const Vec& v, int S, int n)
{
    std::vector<Vec> p(static_cast<std::size_t>(S), Vec::Zero(n));
    for (int a = 1; a < S; ++a) {
        p[static_cast<std::size_t>(a)] = v.segment(static_cast<Eigen::Index>(a - 1) * n, n);
    }
    return p;
}

}  // namespace

Mat reference_G(const Multilattice& spec)
{
    Mat G = Mat::Zero(spec.n, spec.d);
    G.topRows(spec.d).setIdentity();
    return G;
}

std::vector<Vec> reference_shifts(const Multilattice& spec)
{
    std::vector<Vec> p;
    for (const auto& s : spec.shifts) {
        p.push_back(spec.embed(s));
    }
    return p;
}

CBState W_hat(const Multilattice& spec, const SitePotential& pot, const Mat& G, const std::vector<Vec>& p)
{
    if (G.rows() != spec.n || G.cols() != spec.d || static_cast<int>(p.size()) != spec.species()) {
        throw ValidationError("W_hat: G must be n x d and one shift per species is required");
    }
    const auto maps = chain_maps(spec, pot.range());
    const Vec g = tuple_offset(spec, pot.range(), G, p);
    const Vec dV = pot.gradient(g);
    const Mat K = pot.hessian(g);
    CBState s;
    s.G = G;
    s.p = p;
    s.W = pot.reference_value() + pot.value(g);
    s.dW_G = maps.LG.transpose() * dV;
    s.dW_p = maps.Lp.transpose() * dV;
    s.W_GG = maps.LG.transpose() * K * maps.LG;
    s.W_Gp = maps.LG.transpose() * K * maps.Lp;
    s.W_pp = maps.Lp.transpose() * K * maps.Lp;
    return s;
}

ShiftEquilibrium shift_equilibrium(const Multilattice& spec, const SitePotential& pot, const Mat& G,
                                   const std::vector<Vec>& p_init, double tol, int max_iter)
{
    const int n = spec.n;
    const int S = spec.species();
    ShiftEquilibrium out;
    out.p = p_init;
    out.p[0].setZero();
    if (S == 1) {
        out.converged = true;
        return out;
    }
    for (int it = 0; it <= max_iter; ++it) {
        const CBState st = W_hat(spec, pot, G, out.p);
        out.residual = st.dW_p.norm();
        out.iterations = it;
        Eigen::SelfAdjointEigenSolver<Mat> es(st.W_pp, Eigen::EigenvaluesOnly);
        out.indefinite = es.eigenvalues().minCoeff() <= 0.0;
        if (out.residual <= tol) {
            out.converged = true;
            return out;
        }
        if (it == max_iter) {
            break;
        }
        const Vec step = st.W_pp.ldlt().solve(st.dW_p);
        out.p = unpack_shifts(pack_shifts(out.p, n) - step, S, n);
    }
    return out;
}

Vec lattice_site_force(const Multilattice& spec, const SitePotential& pot, const Mat& G, const std::vector<Vec>& p,
                       int gamma)
{
    const auto& range = pot.range();
    double reach = 0.0;
    for (const auto& t : range.triplets) {
        reach = std::max(reach, (spec.F * t.rho.cast<double>()).norm());
    }
    auto w = LatticeWindow::ball(spec, range, 2.0 * reach + 1.0);
    DisplacementField u(w, spec.species(), spec.n);
    const Mat G0 = reference_G(spec);
    const auto p0 = reference_shifts(spec);
    for (int i = 0; i < w->count(); ++i) {
        const Vec x = w->position(i);
        for (int a = 0; a < spec.species(); ++a) {
            const auto ua = static_cast<std::size_t>(a);
            u.at(i, a) = (G - G0) * x + p[ua] - p0[ua];
        }
    }
    Mat T = stencil_tuples(u);
    for (Eigen::Index i = 0; i < T.cols(); ++i) {
        T.col(i) = pot.gradient(T.col(i));
    }
    Vec out;
    scatter_transpose(*w, spec.species(), spec.n, T, out);
    const int origin = *w->index_of(IVec::Zero(spec.d));
    return out.segment(u.offset(origin, gamma), spec.n);
}

double legendre_hadamard_min(const Mat& A, int n, int d, Vec* a_out, Vec* k_out)
{
    std::vector<Vec> dirs;
    if (d == 2) {
        const int m = 3600;
        for (int j = 0; j < m; ++j) {
            const double th = M_PI * j / m;
            Vec k(2);
            k << std::cos(th), std::sin(th);
            dirs.push_back(k);
        }
    } else {
        // Fibonacci sphere; antipodes give the same form
        const int m = 20000;
        const double golden = M_PI * (3.0 - std::sqrt(5.0));
        for (int j = 0; j < m; ++j) {
            const double z = 1.0 - 2.0 * (j + 0.5) / m;
            const double r = std::sqrt(1.0 - z * z);
            Vec k(3);
            k << r * std::cos(golden * j), r * std::sin(golden * j), z;
            dirs.push_back(k);
        }
    }
    double best = std::numeric_limits<double>::infinity();
    for (const auto& k : dirs) {
        Mat Ak = Mat::Zero(n, n);
        for (int a = 0; a < n; ++a) {
            for (int b = 0; b < n; ++b) {
                for (int i = 0; i < d; ++i) {
                    for (int j = 0; j < d; ++j) {
                        Ak(a, b) += A(a + n * i, b + n * j) * k[i] * k[j];
                    }
                }
            }
        }
        Eigen::SelfAdjointEigenSolver<Mat> es(Ak);
        if (es.eigenvalues()[0] < best) {
            best = es.eigenvalues()[0];
            if (a_out) {
                *a_out = es.eigenvectors().col(0);
            }
            if (k_out) {
                *k_out = k;
            }
        }
    }
    return best;
}

ElasticTensor elastic_tensor(const Multilattice& spec, const SitePotential& pot, const Mat& G)
{
    const auto eq = shift_equilibrium(spec, pot, G, reference_shifts(spec));
    if (!eq.converged) {
        throw ConvergenceError("shift equilibration did not converge");
    }
    if (eq.indefinite) {
        throw StabilityError("inner shift Hessian is not positive definite");
    }
    const CBState st = W_hat(spec, pot, G, eq.p);
    ElasticTensor out;
    out.p = eq.p;
    out.A = st.W_GG;
    if (spec.species() > 1) {
        out.A -= st.W_Gp * st.W_pp.ldlt().solve(st.W_Gp.transpose());
    }
    out.lh_min = legendre_hadamard_min(out.A, spec.n, spec.d, &out.lh_a, &out.lh_k);
    return out;
}

double W_bar(const Multilattice& spec, const SitePotential& pot, const Mat& G, std::vector<Vec>* p_guess)
{
    const bool guess = p_guess && !p_guess->empty();
    const auto eq = shift_equilibrium(spec, pot, G, guess ? *p_guess : reference_shifts(spec));
    if (!eq.converged) {
        throw ConvergenceError("shift equilibration did not converge");
    }
    if (p_guess) {
        *p_guess = eq.p;
    }
    return W_hat(spec, pot, G, eq.p).W;
}

BlockHermitian assemble_J(const PhononModel& m, const Vec& k)
{
    const auto c = stencil_symbols(m, k, true);
    BlockHermitian J;
    J.k = k;
    J.n = m.n;
    J.S = m.S;
    const int n = m.n;
    J.M = CMat::Zero(static_cast<Eigen::Index>(m.S) * n, static_cast<Eigen::Index>(m.S) * n);
    for (const auto& blk : m.blocks) {
        const CVec& ct = c[static_cast<std::size_t>(blk.t)];
        const CVec& cs = c[static_cast<std::size_t>(blk.s)];
        for (int a = 0; a < m.S; ++a) {
            for (int b = 0; b < m.S; ++b) {
                const std::complex<double> w = std::conj(ct[a]) * cs[b];
                if (w != 0.0) {
                    J.M.block(static_cast<Eigen::Index>(a) * n, static_cast<Eigen::Index>(b) * n, n, n)
                        += w * blk.K.cast<std::complex<double>>();
                }
            }
        }
    }
    return J;
}

CMat cb_M(const BlockHermitian& J)
{
    if (J.S == 1) {
        return J.h00();
    }
    return J.h00() - J.h0p() * J.hpp().ldlt().solve(J.hp0());
}

ClaimantCheck claimant_check(const PhononModel& m, const Mat& A, const Vec& k, const Vec& a)
{
    const int n = m.n;
    const int d = m.d;
    ClaimantCheck c;
    for (int p = 0; p < n; ++p) {
        for (int q = 0; q < n; ++q) {
            for (int i = 0; i < d; ++i) {
                for (int j = 0; j < d; ++j) {
                    c.lhs += A(p + n * i, q + n * j) * a[p] * a[q] * (two_pi * k[i]) * (two_pi * k[j]);
                }
            }
        }
    }
    const CMat M = cb_M(assemble_J(m, k));
    const CVec ac = a.cast<std::complex<double>>();
    c.rhs = ac.dot(M * ac).real();
    const double scale = std::max({std::abs(c.lhs), std::abs(c.rhs), 1e-300});
    c.rel_gap = std::abs(c.lhs - c.rhs) / scale;
    return c;
}

SmoothFields trig_fields(const Multilattice& spec, double amp_U, double amp_p, unsigned long long seed, int modes)
{
    struct Mode {
        Vec wave;  // B m, physical
        double phase;
        Vec amp;   // R^n
    };
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_int_distribution<int> freq(-2, 2);
    const int n = spec.n;
    const int d = spec.d;
    const int S = spec.species();
    auto draw = [&](double amp) {
        std::vector<Mode> ms;
        for (int j = 0; j < modes; ++j) {
            IVec m(d);
            do {
                for (int i = 0; i < d; ++i) {
                    m[i] = freq(rng);
                }
            } while (m.isZero());
            Vec a(n);
            for (int c = 0; c < n; ++c) {
                a[c] = amp * unit(rng) / modes;
            }
            ms.push_back({spec.B * m.cast<double>(), M_PI * unit(rng), a});
        }
        return ms;
    };
    const auto mu = draw(amp_U);
    std::vector<std::vector<Mode>> mp(static_cast<std::size_t>(S));
    for (int a = 1; a < S; ++a) {
        mp[static_cast<std::size_t>(a)] = draw(amp_p);
    }
    SmoothFields f;
    f.G0 = Mat::Zero(n, d);
    f.U = [mu, n](const Vec& x) {
        Vec u = Vec::Zero(n);
        for (const auto& m : mu) {
            u += std::sin(two_pi * m.wave.dot(x) + m.phase) * m.amp;
        }
        return u;
    };
    f.grad_U = [mu, n, d](const Vec& x) {
        Mat g = Mat::Zero(n, d);
        for (const auto& m : mu) {
            g += (two_pi * std::cos(two_pi * m.wave.dot(x) + m.phase)) * m.amp * m.wave.transpose();
        }
        return g;
    };
    f.p = [mp, n](const Vec& x, int alpha) {
        Vec p = Vec::Zero(n);
        for (const auto& m : mp[static_cast<std::size_t>(alpha)]) {
            p += std::cos(two_pi * m.wave.dot(x) + m.phase) * m.amp;
        }
        return p;
    };
    return f;
}

SmoothFields affine_fields(const Mat& G0, const std::vector<Vec>& p_const)
{
    const auto n = G0.rows();
    const auto d = G0.cols();
    SmoothFields f;
    f.G0 = G0;
    f.U = [n](const Vec&) { return Vec(Vec::Zero(n)); };
    f.grad_U = [n, d](const Vec&) { return Mat(Mat::Zero(n, d)); };
    f.p = [p_const](const Vec&, int alpha) { return p_const[static_cast<std::size_t>(alpha)]; };
    return f;
}

ConsistencyReport cb_consistency(const Multilattice& spec, const SitePotential& pot, const SmoothFields& f,
                                 const std::vector<int>& Ns, int quad_cells, int quad_order)
{
    const auto& range = pot.range();
    const int n = spec.n;
    const int d = spec.d;
    const int R = range.size();
    auto shift = [&](const Vec& x, int alpha) { return alpha == 0 ? Vec(Vec::Zero(n)) : f.p(x, alpha); };

    // continuum: integrate over s in (-1/2, 1/2]^d, x = F s, |det F| = 1
    const GaussRule rule = gauss_legendre(quad_order);
    const int per_axis = quad_cells * quad_order;
    long long total = 1;
    for (int i = 0; i < d; ++i) {
        total *= per_axis;
    }
    std::vector<double> cvals(static_cast<std::size_t>(total));
#pragma omp parallel for schedule(static)
    for (long long lin = 0; lin < total; ++lin) {
        long long rem = lin;
        Vec s(d);
        double wgt = 1.0;
        for (int i = 0; i < d; ++i) {
            const int j = static_cast<int>(rem % per_axis);
            rem /= per_axis;
            const int cell = j / quad_order;
            const int q = j % quad_order;
            s[i] = -0.5 + (cell + rule.nodes[q]) / quad_cells;
            wgt *= rule.weights[q] / quad_cells;
        }
        const Vec x = spec.F * s;
        const Mat grad = f.G0 + f.grad_U(x);
        Vec g(static_cast<Eigen::Index>(R) * n);
        for (int t = 0; t < R; ++t) {
            const auto& b = range.triplets[static_cast<std::size_t>(t)];
            g.segment(static_cast<Eigen::Index>(t) * n, n) =
                grad * (spec.F * b.rho.cast<double>()) + shift(x, b.beta) - shift(x, b.alpha);
        }
        cvals[static_cast<std::size_t>(lin)] = wgt * pot.value(g);
    }
    double continuum = 0.0;
    for (double v : cvals) {
        continuum += v;
    }

    ConsistencyReport rep;
    for (int N : Ns) {
        const double eps = 1.0 / N;
        long long sites = 1;
        for (int i = 0; i < d; ++i) {
            sites *= N;
        }
        auto u = [&](const Vec& x, int alpha) { return Vec(f.G0 * x + f.U(x) + eps * shift(x, alpha)); };
        std::vector<double> avals(static_cast<std::size_t>(sites));
#pragma omp parallel for schedule(static)
        for (long long lin = 0; lin < sites; ++lin) {
            long long rem = lin;
            Vec m(d);
            for (int i = 0; i < d; ++i) {
                m[i] = -N / 2 + 1 + static_cast<int>(rem % N);
                rem /= N;
            }
            const Vec xi = eps * (spec.F * m);
            Vec g(static_cast<Eigen::Index>(R) * n);
            for (int t = 0; t < R; ++t) {
                const auto& b = range.triplets[static_cast<std::size_t>(t)];
                const Vec nb = xi + eps * (spec.F * b.rho.cast<double>());
                g.segment(static_cast<Eigen::Index>(t) * n, n) = (u(nb, b.beta) - u(xi, b.alpha)) / eps;
            }
            avals[static_cast<std::size_t>(lin)] = pot.value(g);
        }
        double atom = 0.0;
        for (double v : avals) {
            atom += v;
        }
        atom /= static_cast<double>(sites);
        rep.rows.push_back({N, eps, atom, continuum, std::abs(atom - continuum)});
    }
    // least-squares slope, skipping exact zeros
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int cnt = 0;
    for (const auto& r : rep.rows) {
        if (r.gap <= 0.0) {
            continue;
        }
        const double lx = std::log(r.eps);
        const double ly = std::log(r.gap);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++cnt;
    }
    if (cnt >= 2) {
        rep.slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
    } else {
        rep.slope = std::numeric_limits<double>::quiet_NaN();
    }
    return rep;
}

}  // namespace mlat
