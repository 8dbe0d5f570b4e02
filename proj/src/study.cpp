#include "mlat/study.hpp"

#include "mlat/energy.hpp"

#include <cmath>
#include <limits>

namespace mlat {

json to_json(const Vec& v)
{
    return json(std::vector<double>(v.data(), v.data() + v.size()));
}

json to_json(const Mat& m)
{
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        rows.push_back(to_json(Vec(m.row(r).transpose())));
    }
    return rows;
}

json to_json(const SolveReport& r)
{
    json j{{"iterations", r.iterations},
           {"cg_iterations", r.cg_iterations},
           {"gradient_norm", r.gradient_norm},
           {"energy", r.energy},
           {"converged", r.converged},
           {"wall_time", r.wall_time},
           {"history", r.history}};
    j["gradient_dual_norm"] = r.gradient_dual_norm >= 0.0 ? json(r.gradient_dual_norm) : json(nullptr);
    return j;
}

json to_json(const StabilityCertificate& c)
{
    json j{{"pass", c.pass},
           {"gamma_acoustic_low", c.gamma_acoustic_low},
           {"gamma_acoustic_high", c.gamma_acoustic_high},
           {"min_eigenvalue", c.min_eigenvalue}};
    j["gamma_optical"] = c.gamma_optical ? json(*c.gamma_optical) : json("not applicable");
    if (c.worst_k.size()) {
        j["worst_k"] = to_json(c.worst_k);
    }
    if (!c.pass) {
        j["failure"] = c.failure;
    }
    return j;
}

json to_json(const DecayFit& f)
{
    return json{{"label", f.label},       {"exponent", f.exponent}, {"predicted", f.predicted},
                {"fit_residual", f.residual}, {"r_min", f.r_min}, {"r_max", f.r_max},
                {"radii", f.radii},       {"sups", f.sups}};
}

json to_json(const ConsistencyReport& r)
{
    json rows = json::array();
    for (const auto& row : r.rows) {
        rows.push_back({{"N", row.N},
                        {"eps", row.eps},
                        {"atomistic", row.atomistic},
                        {"continuum", row.continuum},
                        {"gap", row.gap}});
    }
    return json{{"rows", rows}, {"slope", std::isfinite(r.slope) ? json(r.slope) : json(nullptr)}};
}

QuadraticResidualFit quadratic_residual_fit(const ResidualField& f, const DisplacementField& u, double r_min,
                                            double r_max, double growth)
{
    const auto& w = u.window();
    const Mat Du = stencil_tuples(u);
    std::vector<double> edges{r_min};
    while (edges.back() < r_max) {
        edges.push_back(std::min(r_max, std::max(edges.back() * growth, edges.back() + 1.0)));
    }
    const std::size_t bins = edges.size() - 1;
    std::vector<double> fs(bins, 0.0);
    std::vector<double> ds(bins, 0.0);
    for (int i = 0; i < w.count(); ++i) {
        const double r = w.distance(i);
        if (r < r_min || r > r_max) {
            continue;
        }
        auto it = std::upper_bound(edges.begin(), edges.end(), r);
        std::size_t b = static_cast<std::size_t>(it - edges.begin());
        b = std::min(b == 0 ? 0 : b - 1, bins - 1);
        fs[b] = std::max(fs[b], f.tuples.col(i).norm());
        ds[b] = std::max(ds[b], Du.col(i).norm());
    }
    QuadraticResidualFit out;
    for (std::size_t b = 0; b < bins; ++b) {
        if (fs[b] > 0.0 && ds[b] > 0.0) {
            out.strain.push_back(ds[b]);
            out.force.push_back(fs[b]);
        }
    }
    const auto m = static_cast<Eigen::Index>(out.strain.size());
    if (m < 5) {
        throw ValidationError("residual fit has fewer than 5 populated annuli");
    }
    Mat A(m, 2);
    Vec y(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        A(i, 0) = std::log(out.strain[static_cast<std::size_t>(i)]);
        A(i, 1) = 1.0;
        y[i] = std::log(out.force[static_cast<std::size_t>(i)]);
    }
    const Vec c = A.colPivHouseholderQr().solve(y);
    out.slope = c[0];
    out.residual = std::sqrt((A * c - y).squaredNorm() / static_cast<double>(m));
    return out;
}

CrossCheck compare_modulo_translation(const DisplacementField& a, const DisplacementField& b, double radius)
{
    const auto& wa = a.window();
    const auto& wb = b.window();
    const int n = a.dim();
    const int S = a.species();
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < wa.count(); ++i) {
        if (wa.distance(i) <= radius) {
            const auto j = wb.index_of(wa.site(i));
            if (!j) {
                throw ValidationError("comparison site missing from the second field");
            }
            pairs.emplace_back(i, *j);
        }
    }
    CrossCheck out;
    out.radius = radius;
    // best constant in the sup norm, per component: midpoint of the range of differences
    Vec lo = Vec::Constant(n, std::numeric_limits<double>::infinity());
    Vec hi = Vec::Constant(n, -std::numeric_limits<double>::infinity());
    for (const auto& [i, j] : pairs) {
        for (int s = 0; s < S; ++s) {
            const Vec diff = a.at(i, s) - b.at(j, s);
            lo = lo.cwiseMin(diff);
            hi = hi.cwiseMax(diff);
        }
    }
    const Vec c = 0.5 * (lo + hi);
    for (const auto& [i, j] : pairs) {
        for (int s = 0; s < S; ++s) {
            out.sup_gap = std::max(out.sup_gap, (a.at(i, s) - b.at(j, s) - c).norm());
            out.sup_field = std::max(out.sup_field, Vec(a.at(i, s)).norm());
        }
    }
    return out;
}

json pipeline_defect_study(const Crystal& c, const StudyConfig& cfg)
{
    const auto& spec = c.spec;
    json rep{{"schema_version", schema_version}, {"seed", cfg.seed}, {"command", "study"}, {"crystal", c.name}};
    rep["config"] = {{"r_win", cfg.r_win}, {"N", cfg.N}, {"tol", cfg.tol}, {"stability_grid", cfg.stability_grid}};

    const PhononModel model = phonon_model(spec, *c.pot);
    const auto cert = stability_certificate(model, BrillouinGrid(spec, cfg.stability_grid));
    rep["stability"] = to_json(cert);
    if (!cert.pass) {
        throw StabilityError("stability certificate failed: " + cert.failure);
    }

    RelaxOptions ro;
    ro.tol = cfg.tol;
    ro.max_iter = cfg.max_iter;
    ro.continuation = cfg.continuation;
    ro.check_stability = false;
    auto window = LatticeWindow::ball(spec, c.range.range, cfg.r_win);
    const RelaxResult rr = relax(spec, c.pot, c.defect, window, ro);
    rep["relax"] = to_json(rr.report);
    rep["relax"]["sites"] = window->count();
    if (!rr.report.converged) {
        rep["status"] = "relaxation did not converge";
        return rep;
    }

    const ResidualCheck rc = residual_f_checked(rr.u, *c.pot, c.defect, cfg.seed, 20);
    rep["residual"] = {{"quadrature_order", rc.f.order}, {"identity_gap", rc.max_gap}, {"identity_met", rc.met}};

    const double fit_max = cfg.fit_r_max > 0.0 ? cfg.fit_r_max : cfg.r_win / 2.0;
    const bool zero = rr.u.values.isZero(0.0);
    if (zero) {
        rep["decay"] = {{"skipped", "solution is identically zero (no defect forcing)"}};
    } else {
        json fits = json::array();
        for (const auto& f : solution_decay_report(spec, rr.u, cfg.fit_r_min, fit_max)) {
            fits.push_back(to_json(f));
        }
        rep["decay"] = {{"fits", fits}};
        if (c.pot->quadratic()) {
            rep["residual"]["quadratic_fit"] = {{"skipped", "potential is quadratic; f vanishes outside the core"}};
        } else {
            const auto qf = quadratic_residual_fit(rc.f, rr.u, std::max(cfg.fit_r_min, c.defect.core_radius + 2.0),
                                                   fit_max);
            rep["residual"]["quadratic_fit"] = {{"slope", qf.slope}, {"fit_residual", qf.residual}};
        }
    }

    if (spec.d == 2 || cfg.N <= 64) {
        const GreensBlocks G = greens_blocks(spec, model, cfg.N, false);
        const double g_max = cfg.greens_r_max > 0.0 ? cfg.greens_r_max : cfg.N / 4.0;
        json gf = json::array();
        gf.push_back(to_json(block_decay(spec, G, GreensBlock::Q_inv, 1, cfg.greens_r_min, g_max)));
        if (spec.species() > 1) {
            gf.push_back(to_json(block_decay(spec, G, GreensBlock::Q_inv_H0p_Hpp_inv, 0, cfg.greens_r_min, g_max)));
            gf.push_back(to_json(block_decay(spec, G, GreensBlock::Hpp_terms, 0, cfg.greens_r_min, g_max)));
        }
        rep["greens"] = {{"N", cfg.N}, {"fits", gf}};
        if (!zero) {
            const Reconstruction rec = reconstruct_solution(spec, model, rc.f, G);
            const CrossCheck cc = compare_modulo_translation(rr.u, rec.u, cfg.r_win / 2.0);
            rep["reconstruction"] = {{"linear_residual", rec.max_linear_residual},
                                     {"sup_gap", cc.sup_gap},
                                     {"sup_field", cc.sup_field},
                                     {"radius", cc.radius}};
        }
    } else {
        rep["greens"] = {{"skipped", "d = 3 Green's blocks above N = 64 are not run by default"}};
    }
    rep["status"] = "ok";
    return rep;
}

}  // namespace mlat
