#include "mlat/relax.hpp"

#include "mlat/energy.hpp"
#include "mlat/quadrature.hpp"
#include "mlat/spectral.hpp"

#include <chrono>
#include <cmath>
#include <random>

namespace mlat {

namespace {

// Per-site diagonal block of D^T K(0) D, inverted.
Mat site_preconditioner(const SitePotential& pot, int S)
{
    const auto& trip = pot.range().triplets;
    const int n = pot.dim();
    const int R = static_cast<int>(trip.size());
    const Mat K = pot.hessian(Vec::Zero(pot.tuple_size()));
    const int d = static_cast<int>(trip.front().rho.size());

    std::vector<IVec> sigmas{IVec::Zero(d)};
    for (const auto& t : trip) {
        const IVec s = -t.rho;
        bool seen = false;
        for (const auto& q : sigmas) {
            seen = seen || q == s;
        }
        if (!seen) {
            sigmas.push_back(s);
        }
    }
    const Eigen::Index dim = static_cast<Eigen::Index>(S) * n;
    Mat P = Mat::Zero(dim, dim);
    for (const auto& sigma : sigmas) {
        Mat C = Mat::Zero(static_cast<Eigen::Index>(R) * n, dim);
        for (int t = 0; t < R; ++t) {
            const auto& b = trip[static_cast<std::size_t>(t)];
            for (int g = 0; g < S; ++g) {
                double c = 0.0;
                if (b.rho == -sigma && b.beta == g) {
                    c += 1.0;
                }
                if (sigma.isZero() && b.alpha == g) {
                    c -= 1.0;
                }
                if (c != 0.0) {
                    C.block(static_cast<Eigen::Index>(t) * n, static_cast<Eigen::Index>(g) * n, n, n) =
                        c * Mat::Identity(n, n);
                }
            }
        }
        P += C.transpose() * K * C;
    }
    // guard against singular or indefinite blocks
    Eigen::SelfAdjointEigenSolver<Mat> es(P);
    Vec ev = es.eigenvalues();
    const double floor = 1e-3 * std::max(ev.cwiseAbs().maxCoeff(), 1e-12);
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        ev[i] = 1.0 / std::max(std::abs(ev[i]), floor);
    }
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

Vec apply_block(const Mat& Pinv, const LatticeWindow& w, const Vec& r)
{
    const Eigen::Index b = Pinv.rows();
    Vec z = Vec::Zero(r.size());
#pragma omp parallel for schedule(static)
    for (int i = 0; i < w.count(); ++i) {
        if (w.is_free(i)) {
            z.segment(i * b, b) = Pinv * r.segment(i * b, b);
        }
    }
    return z;
}

struct CGResult {
    Vec x;
    int iterations = 0;
    bool negative_curvature = false;
};

template <class Apply, class Precond>
CGResult pcg(const Apply& A, const Precond& M, const Vec& b, double abs_tol, int max_iter)
{
    CGResult out;
    out.x = Vec::Zero(b.size());
    Vec r = b;
    if (r.norm() <= abs_tol) {
        return out;
    }
    Vec z = M(r);
    Vec p = z;
    double rz = r.dot(z);
    for (int it = 0; it < max_iter; ++it) {
        const Vec Ap = A(p);
        const double pAp = p.dot(Ap);
        out.iterations = it + 1;
        if (pAp <= 0.0) {
            out.negative_curvature = true;
            if (it == 0) {
                out.x = p;
            }
            return out;
        }
        const double alpha = rz / pAp;
        out.x += alpha * p;
        r -= alpha * Ap;
        if (r.norm() <= abs_tol) {
            return out;
        }
        z = M(r);
        const double rz_new = r.dot(z);
        p = z + (rz_new / rz) * p;
        rz = rz_new;
    }
    return out;
}

Vec gram_apply(const DisplacementField& shape, const Vec& v)
{
    DisplacementField f = shape.zeros_like();
    f.values = v;
    const Mat T = stencil_tuples(f);
    Vec out;
    scatter_transpose(shape.window(), shape.species(), shape.dim(), T, out);
    return out;
}

}  // namespace

double a1_dual_norm(const DisplacementField& shape, const Vec& g, double rtol, int max_iter)
{
    if (g.norm() == 0.0) {
        return 0.0;
    }
    auto A = [&](const Vec& v) { return gram_apply(shape, v); };
    auto M = [](const Vec& v) { return v; };
    const CGResult cg = pcg(A, M, g, rtol * g.norm(), max_iter);
    return std::sqrt(std::max(0.0, g.dot(cg.x)));
}

RelaxResult relax(const Multilattice& spec, const PotentialPtr& pot, const DefectModel& defect,
                  std::shared_ptr<const LatticeWindow> window, const RelaxOptions& opt)
{
    const auto t0 = std::chrono::steady_clock::now();
    if (!(opt.tol > 0.0)) {
        throw ValidationError("relax tolerance must be positive");
    }
    if (!pot->homogeneous()) {
        throw ValidationError("relax expects the homogeneous potential and a separate defect model");
    }
    defect.validate(spec, pot->tuple_size());
    if (opt.check_stability) {
        const PhononModel m = phonon_model(spec, *pot);
        const auto cert = stability_certificate(m, BrillouinGrid(spec, opt.stability_grid));
        if (!cert.pass) {
            throw StabilityError("reference lattice is not phonon stable: " + cert.failure);
        }
    }

    const int S = spec.species();
    DisplacementField u(window, S, spec.n);
    const Mat Pinv = site_preconditioner(*pot, S);
    auto precond = [&](const Vec& r) { return apply_block(Pinv, *window, r); };

    RelaxResult res{u, {}};
    SolveReport& rep = res.report;
    const int stages = opt.continuation ? std::max(1, opt.continuation_steps) : 1;
    bool stage_ok = true;
    for (int stage = 1; stage <= stages && stage_ok; ++stage) {
        const DefectModel def = defect.scaled(static_cast<double>(stage) / stages);
        Vec g = energy_gradient(u, *pot, def);
        double E = energy_renormalized(u, *pot, def);
        stage_ok = false;
        for (int it = 0; it <= opt.max_iter; ++it) {
            const double gn = g.norm();
            rep.history.push_back(gn);
            if (gn <= opt.tol) {
                stage_ok = true;
                break;
            }
            if (it == opt.max_iter) {
                break;
            }
            ++rep.iterations;
            const double eta = pot->quadratic() ? 0.0 : std::min(0.5, std::sqrt(gn));
            const double cg_tol = std::max(eta * gn, 0.1 * opt.tol);
            auto H = [&](const Vec& v) { return hessian_apply(u, v, *pot); };
            const CGResult cg = pcg(H, precond, Vec(-g), cg_tol, opt.cg_max_iter);
            rep.cg_iterations += cg.iterations;
            Vec s = cg.x;
            if (!(g.dot(s) < 0.0)) {
                s = -precond(g);
            }

            auto try_direction = [&](const Vec& dir) {
                const double slope = g.dot(dir);
                double alpha = 1.0;
                for (int ls = 0; ls < 40; ++ls) {
                    DisplacementField trial = u;
                    trial.values += alpha * dir;
                    const double Et = energy_renormalized(trial, *pot, def);
                    const Vec gt = energy_gradient(trial, *pot, def);
                    const bool armijo = Et <= E + 1e-4 * alpha * slope;
                    // near convergence the energy change drowns in rounding; accept a gradient decrease
                    const bool flat = std::abs(Et - E) <= 1e-11 * std::max(1.0, std::abs(E)) && gt.norm() < gn;
                    if (std::isfinite(Et) && (armijo || flat)) {
                        u = std::move(trial);
                        E = Et;
                        g = gt;
                        return true;
                    }
                    alpha *= 0.5;
                }
                return false;
            };
            if (!try_direction(s)) {
                const Vec sd = -precond(g);
                if (!try_direction(sd)) {
                    break;
                }
            }
        }
        rep.gradient_norm = g.norm();
        rep.energy = E;
        if (stage == stages) {
            if (opt.dual_norm) {
                rep.gradient_dual_norm = a1_dual_norm(u, g);
            }
        }
    }
    rep.converged = stage_ok && rep.gradient_norm <= opt.tol;
    rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.u = std::move(u);
    return res;
}

// ---------------------------------------------------------------------------

double ResidualField::pair(const DisplacementField& v) const
{
    const Mat Dv = stencil_tuples(v);
    double s = 0.0;
    for (Eigen::Index i = 0; i < tuples.cols(); ++i) {
        s += tuples.col(i).dot(Dv.col(i));
    }
    return s;
}

Vec ResidualField::site_norms() const
{
    Vec out(tuples.cols());
    for (Eigen::Index i = 0; i < tuples.cols(); ++i) {
        out[i] = tuples.col(i).norm();
    }
    return out;
}

ResidualField residual_f(const DisplacementField& u, const SitePotential& pot, const DefectModel& defect, int order)
{
    const GaussRule rule = gauss_legendre(order);
    ResidualField f;
    f.window = u.window_ptr();
    f.n = u.dim();
    f.order = order;
    f.tuples = stencil_tuples(u);
    const auto& w = u.window();
#pragma omp parallel for schedule(static)
    for (int i = 0; i < w.count(); ++i) {
        const Vec du = f.tuples.col(i);
        Vec acc = Vec::Zero(du.size());
        if (!du.isZero(0.0) && !pot.quadratic()) {
            for (Eigen::Index q = 0; q < rule.nodes.size(); ++q) {
                const double t = rule.nodes[q];
                acc += rule.weights[q] * (1.0 - t) * pot.third_contract(t * du, du);
            }
        }
        f.tuples.col(i) = -acc;
    }
    for (const auto& [i, g] : locate_dipoles(w, defect)) {
        f.tuples.col(i) -= g;
    }
    return f;
}

ResidualCheck residual_f_checked(const DisplacementField& u, const SitePotential& pot, const DefectModel& defect,
                                 unsigned long long seed, int probes, double tol, int max_order)
{
    const DisplacementField zero = u.zeros_like();
    const Vec Hu = hessian_apply(zero, u, pot);
    std::vector<DisplacementField> vs;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    for (int j = 0; j < probes; ++j) {
        DisplacementField v = u.zeros_like();
        for (Eigen::Index i = 0; i < v.values.size(); ++i) {
            v.values[i] = normal(rng);
        }
        v.clamp();
        vs.push_back(std::move(v));
    }
    ResidualCheck out;
    for (int order = 8; order <= max_order; order *= 2) {
        out.f = residual_f(u, pot, defect, order);
        out.max_gap = 0.0;
        for (const auto& v : vs) {
            const double gap = std::abs(Hu.dot(v.values) - out.f.pair(v)) / norm_a1(v);
            out.max_gap = std::max(out.max_gap, gap);
        }
        out.met = out.max_gap <= tol;
        if (out.met || pot.quadratic()) {
            break;
        }
    }
    return out;
}

}  // namespace mlat
