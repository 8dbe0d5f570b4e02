#include "mlat/cli.hpp"

#include "mlat/study.hpp"

#include "CLI11.hpp"

#include <omp.h>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

namespace mlat {
namespace {

constexpr int exit_ok = 0;
constexpr int exit_validation = 2;
constexpr int exit_failure = 3;

struct Globals {
    int threads = 0;
    unsigned long long seed = 20240101ULL;
    bool quiet = false;
};

json header(const Globals& g, const std::string& command)
{
    return json{{"schema_version", schema_version}, {"seed", g.seed}, {"command", command}};
}

void emit(const Globals& g, const json& rep, const std::string& path)
{
    if (!path.empty()) {
        std::ofstream out(path);
        if (!out) {
            throw ValidationError("cannot write " + path);
        }
        out << rep.dump(2) << "\n";
    }
    if (!g.quiet && path.empty()) {
        std::cout << rep.dump(2) << "\n";
    }
}

void note(const Globals& g, const std::string& msg)
{
    if (!g.quiet) {
        std::cerr << msg << "\n";
    }
}

std::vector<int> parse_int_list(const std::string& s)
{
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stoi(item));
        } catch (const std::exception&) {
            throw ValidationError("not an integer list: " + s);
        }
    }
    return out;
}

int cmd_relax(const Globals& g, const std::string& crystal, double rwin, double tol, int max_iter, bool continuation,
              const std::string& out, const std::string& report, const std::string& csv)
{
    const Crystal c = resolve_crystal(crystal);
    RelaxOptions opt;
    opt.tol = tol;
    opt.max_iter = max_iter;
    opt.continuation = continuation;
    opt.check_stability = !c.allow_unstable;
    json rep = header(g, "relax");
    rep["crystal"] = c.name;
    rep["rwin"] = rwin;
    auto window = LatticeWindow::ball(c.spec, c.range.range, rwin);
    const RelaxResult r = relax(c.spec, c.pot, c.defect, window, opt);
    rep["solve"] = to_json(r.report);
    rep["sites"] = window->count();
    if (!out.empty()) {
        write_field_binary(out, r.u);
    }
    if (!csv.empty()) {
        write_field_csv(csv, r.u);
    }
    emit(g, rep, report);
    if (!r.report.converged) {
        note(g, "relax: not converged");
        return exit_failure;
    }
    return exit_ok;
}

int cmd_phonon(const Globals& g, const std::string& crystal, int grid_n, const std::string& out,
               const std::string& report)
{
    const Crystal c = resolve_crystal(crystal);
    const PhononModel m = phonon_model(c.spec, *c.pot);
    const BrillouinGrid grid(c.spec, grid_n);
    const PhononSpectrum sp = phonons(m, grid);
    if (!out.empty()) {
        std::ofstream f(out);
        if (!f) {
            throw ValidationError("cannot write " + out);
        }
        f.precision(17);
        for (int i = 0; i < c.spec.d; ++i) {
            f << "k" << i << ",";
        }
        const auto bands = sp.eigenvalues.empty() ? 0 : sp.eigenvalues.front().size();
        for (Eigen::Index b = 0; b < bands; ++b) {
            f << "lambda" << b << (b + 1 < bands ? "," : "\n");
        }
        for (int lin = 0; lin < grid.count(); ++lin) {
            const Vec k = grid.node(lin);
            for (int i = 0; i < k.size(); ++i) {
                f << k[i] << ",";
            }
            const Vec& ev = sp.eigenvalues[static_cast<std::size_t>(lin)];
            for (Eigen::Index b = 0; b < ev.size(); ++b) {
                f << ev[b] << (b + 1 < ev.size() ? "," : "\n");
            }
        }
    }
    json rep = header(g, "phonon");
    rep["crystal"] = c.name;
    rep["grid"] = grid_n;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& ev : sp.eigenvalues) {
        lo = std::min(lo, ev.minCoeff());
        hi = std::max(hi, ev.maxCoeff());
    }
    rep["min_eigenvalue"] = lo;
    rep["max_eigenvalue"] = hi;
    rep["spectrum_csv"] = out;
    emit(g, rep, report);
    return exit_ok;
}

int cmd_stability(const Globals& g, const std::string& crystal, int grid_n, const std::string& out)
{
    const Crystal c = resolve_crystal(crystal);
    const PhononModel m = phonon_model(c.spec, *c.pot);
    const auto cert = stability_certificate(m, BrillouinGrid(c.spec, grid_n));
    json rep = header(g, "stability");
    rep["crystal"] = c.name;
    rep["grid"] = grid_n;
    rep["certificate"] = to_json(cert);
    emit(g, rep, out);
    if (!cert.pass) {
        note(g, "stability: " + cert.failure);
        return exit_failure;
    }
    return exit_ok;
}

int cmd_cb(const Globals& g, const std::string& crystal, const std::string& check, int probes,
           const std::string& out)
{
    const Crystal c = resolve_crystal(crystal);
    const auto& spec = c.spec;
    json rep = header(g, "cb");
    rep["crystal"] = c.name;
    rep["check"] = check;
    std::mt19937_64 rng(g.seed);
    std::normal_distribution<double> normal;
    const Mat G0 = reference_G(spec);
    if (check == "tensor") {
        const ElasticTensor et = elastic_tensor(spec, *c.pot, G0);
        rep["A"] = to_json(et.A);
        rep["legendre_hadamard_min"] = et.lh_min;
        rep["lh_direction_a"] = to_json(et.lh_a);
        rep["lh_direction_k"] = to_json(et.lh_k);
        json shifts = json::array();
        for (const auto& p : et.p) {
            shifts.push_back(to_json(p));
        }
        rep["equilibrium_shifts"] = shifts;
        emit(g, rep, out);
        return et.lh_min > 0.0 ? exit_ok : exit_failure;
    }
    if (check == "claimant") {
        const PhononModel m = phonon_model(spec, *c.pot);
        const ElasticTensor et = elastic_tensor(spec, *c.pot, G0);
        double worst = 0.0;
        for (int i = 0; i < probes; ++i) {
            Vec k(spec.d);
            Vec a(spec.n);
            for (auto& x : k) {
                x = normal(rng);
            }
            for (auto& x : a) {
                x = normal(rng);
            }
            worst = std::max(worst, claimant_check(m, et.A, k, a).rel_gap);
        }
        rep["probes"] = probes;
        rep["max_rel_gap"] = worst;
        emit(g, rep, out);
        return exit_ok;
    }
    if (check == "consistency") {
        const SmoothFields f = trig_fields(spec, 0.02, 0.02, g.seed);
        const ConsistencyReport cr = cb_consistency(spec, *c.pot, f, {8, 16, 32, 64});
        rep["consistency"] = to_json(cr);
        emit(g, rep, out);
        return exit_ok;
    }
    throw ValidationError("unknown --check: " + check);
}

void write_annulus_csv(std::ofstream& f, const DecayFit& fit)
{
    for (std::size_t i = 0; i < fit.radii.size(); ++i) {
        f << fit.label << "," << fit.radii[i] << "," << fit.sups[i] << "," << std::log(fit.radii[i]) << ","
          << std::log(fit.sups[i]) << "\n";
    }
}

int cmd_greens(const Globals& g, const std::string& crystal, int N, const std::string& blocks, bool fit, double r_min,
               double r_max, const std::string& out, const std::string& csv)
{
    const Crystal c = resolve_crystal(crystal);
    const PhononModel m = phonon_model(c.spec, *c.pot);
    const GreensBlocks G = greens_blocks(c.spec, m, N, !c.allow_unstable);
    json rep = header(g, "greens");
    rep["crystal"] = c.name;
    rep["N"] = N;
    std::vector<std::pair<GreensBlock, int>> which;
    if (blocks == "all" || blocks == "Q_inv") {
        which.emplace_back(GreensBlock::Q_inv, 1);
    }
    if (c.spec.species() > 1 && (blocks == "all" || blocks == "X")) {
        which.emplace_back(GreensBlock::Q_inv_H0p_Hpp_inv, 0);
    }
    if (c.spec.species() > 1 && (blocks == "all" || blocks == "Y")) {
        which.emplace_back(GreensBlock::Hpp_terms, 0);
    }
    if (which.empty() && blocks != "all") {
        throw ValidationError("unknown --blocks value: " + blocks + " (all, Q_inv, X, Y)");
    }
    std::ofstream f;
    if (!csv.empty()) {
        f.open(csv);
        if (!f) {
            throw ValidationError("cannot write " + csv);
        }
        f.precision(17);
        f << "block,r,sup,log_r,log_sup\n";
    }
    json arr = json::array();
    for (const auto& [b, t] : which) {
        json e{{"block", to_string(b)}, {"order", t}, {"predicted", predict_exponent(b, t, c.spec.d)}};
        if (fit) {
            const DecayFit df = block_decay(c.spec, G, b, t, r_min, r_max > 0.0 ? r_max : N / 4.0);
            e["fit"] = to_json(df);
            if (f.is_open()) {
                write_annulus_csv(f, df);
            }
        }
        arr.push_back(e);
    }
    rep["blocks"] = arr;
    emit(g, rep, out);
    return exit_ok;
}

int cmd_decay(const Globals& g, const std::string& field, const std::string& orders, double r_min, double r_max,
              const std::string& out, const std::string& csv)
{
    const LoadedField lf = read_field_binary(field);
    const std::vector<int> ords = parse_int_list(orders);
    const double rmax = r_max > 0.0 ? r_max : lf.u.window().radius() / 2.0;
    json rep = header(g, "decay");
    rep["field"] = field;
    if (lf.u.values.isZero(0.0)) {
        rep["skipped"] = "field is identically zero";
        emit(g, rep, out);
        return exit_ok;
    }
    std::ofstream f;
    if (!csv.empty()) {
        f.open(csv);
        f.precision(17);
        f << "field,r,sup,log_r,log_sup\n";
    }
    const Vec radii = [&] {
        Vec r(lf.u.sites());
        for (int i = 0; i < lf.u.sites(); ++i) {
            r[i] = lf.u.window().distance(i);
        }
        return r;
    }();
    const int d = lf.spec.d;
    json fits = json::array();
    for (int j : ords) {
        if (j < 0) {
            throw ValidationError("orders must be nonnegative");
        }
        for (int alpha = 0; alpha < lf.u.species(); ++alpha) {
            if (alpha == 0 && j == 0) {
                continue;  // U itself carries no decay statement
            }
            const Vec mag = field_difference_magnitude(lf.u, alpha, j);
            const double target = alpha == 0 ? 1.0 - d - j : -static_cast<double>(d) - j;
            DecayFit df = decay_fit(radii, mag, r_min, rmax, target);
            df.label = (alpha == 0 ? "D^" + std::to_string(j) + " U" : "D^" + std::to_string(j) + " p_" +
                                                                          std::to_string(alpha));
            if (f.is_open()) {
                write_annulus_csv(f, df);
            }
            fits.push_back(to_json(df));
        }
    }
    rep["fits"] = fits;
    emit(g, rep, out);
    return exit_ok;
}

}  // namespace

int run_cli(int argc, char** argv)
{
    CLI::App app{"multilattice point-defect toolkit"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--threads", g.threads, "OpenMP threads (0: runtime default)");
    app.add_option("--seed", g.seed, "seed for every random draw");
    app.add_flag("--quiet", g.quiet, "suppress stdout/stderr chatter");

    std::string crystal;
    std::string out;
    std::string report;
    std::string csv;

    double rwin = 64.0;
    double tol = 1e-9;
    int max_iter = 50;
    bool continuation = false;
    auto* relax_cmd = app.add_subcommand("relax", "relax a point defect on a ball window");
    relax_cmd->add_option("--crystal", crystal, "crystal JSON file or preset name")->required();
    relax_cmd->add_option("--rwin", rwin, "window radius");
    relax_cmd->add_option("--tol", tol, "gradient tolerance");
    relax_cmd->add_option("--max-iter", max_iter, "Newton iterations");
    relax_cmd->add_flag("--continuation", continuation, "ramp the dipole strength");
    relax_cmd->add_option("--out", out, "binary field output");
    relax_cmd->add_option("--report", report, "JSON report");
    relax_cmd->add_option("--csv", csv, "CSV field dump");

    int grid_n = 32;
    auto* phonon_cmd = app.add_subcommand("phonon", "phonon spectrum on a Brillouin grid");
    phonon_cmd->add_option("--crystal", crystal, "crystal JSON file or preset name")->required();
    phonon_cmd->add_option("--grid", grid_n, "grid order N");
    phonon_cmd->add_option("--out", out, "spectrum CSV");
    phonon_cmd->add_option("--report", report, "JSON summary");

    auto* stab_cmd = app.add_subcommand("stability", "phonon stability certificate");
    stab_cmd->add_option("--crystal", crystal, "crystal JSON file or preset name")->required();
    stab_cmd->add_option("--grid", grid_n, "grid order N");
    stab_cmd->add_option("--out", out, "certificate JSON");

    std::string check = "tensor";
    int probes = 100;
    auto* cb_cmd = app.add_subcommand("cb", "Cauchy-Born checks");
    cb_cmd->add_option("--crystal", crystal, "crystal JSON file or preset name")->required();
    cb_cmd->add_option("--check", check, "claimant, consistency or tensor")
        ->check(CLI::IsMember({"claimant", "consistency", "tensor"}));
    cb_cmd->add_option("--probes", probes, "random probes for claimant");
    cb_cmd->add_option("--out", out, "report JSON");

    int N = 256;
    std::string blocks = "all";
    bool fit = false;
    double r_min = 8.0;
    double r_max = 0.0;
    auto* greens_cmd = app.add_subcommand("greens", "lattice Green's function blocks");
    greens_cmd->add_option("--crystal", crystal, "crystal JSON file or preset name")->required();
    greens_cmd->add_option("--N", N, "periodic cell order");
    greens_cmd->add_option("--blocks", blocks, "all, Q_inv, X or Y");
    greens_cmd->add_flag("--fit", fit, "fit decay exponents");
    greens_cmd->add_option("--rmin", r_min, "fit range lower radius");
    greens_cmd->add_option("--rmax", r_max, "fit range upper radius (default N/4)");
    greens_cmd->add_option("--out", out, "report JSON");
    greens_cmd->add_option("--csv", csv, "annulus data CSV");

    std::string field;
    std::string orders = "1,2,3";
    double d_rmin = 4.0;
    auto* decay_cmd = app.add_subcommand("decay", "decay fits of a stored relaxed field");
    decay_cmd->add_option("--field", field, "binary field from relax --out")->required();
    decay_cmd->add_option("--orders", orders, "difference orders, comma separated");
    decay_cmd->add_option("--rmin", d_rmin, "fit range lower radius");
    decay_cmd->add_option("--rmax", r_max, "fit range upper radius (default window radius / 2)");
    decay_cmd->add_option("--out", out, "report JSON");
    decay_cmd->add_option("--csv", csv, "annulus data CSV");

    StudyConfig sc;
    auto* study_cmd = app.add_subcommand("study", "stability, relax, residual, Green's blocks and decay in one run");
    study_cmd->add_option("--crystal", crystal, "crystal JSON file or preset name")->required();
    study_cmd->add_option("--rwin", sc.r_win, "window radius");
    study_cmd->add_option("--N", sc.N, "periodic cell order");
    study_cmd->add_option("--tol", sc.tol, "gradient tolerance");
    study_cmd->add_option("--grid", sc.stability_grid, "stability grid order");
    study_cmd->add_option("--out", out, "report JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? exit_ok : exit_validation;
    }
    if (g.threads > 0) {
        omp_set_num_threads(g.threads);
    }

    try {
        if (*relax_cmd) {
            return cmd_relax(g, crystal, rwin, tol, max_iter, continuation, out, report, csv);
        }
        if (*phonon_cmd) {
            return cmd_phonon(g, crystal, grid_n, out, report);
        }
        if (*stab_cmd) {
            return cmd_stability(g, crystal, grid_n, out);
        }
        if (*cb_cmd) {
            return cmd_cb(g, crystal, check, probes, out);
        }
        if (*greens_cmd) {
            return cmd_greens(g, crystal, N, blocks, fit, r_min, r_max, out, csv);
        }
        if (*decay_cmd) {
            return cmd_decay(g, field, orders, d_rmin, r_max, out, csv);
        }
        if (*study_cmd) {
            sc.seed = g.seed;
            const Crystal c = resolve_crystal(crystal);
            const json rep = pipeline_defect_study(c, sc);
            emit(g, rep, out);
            return rep.value("status", "") == "ok" ? exit_ok : exit_failure;
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_validation;
    } catch (const StabilityError& e) {
        std::cerr << "stability failure: " << e.what() << "\n";
        return exit_failure;
    } catch (const ConvergenceError& e) {
        std::cerr << "convergence failure: " << e.what() << "\n";
        return exit_failure;
    } catch (const SingularPointError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_validation;
    }
    return exit_validation;
}

}  // namespace mlat
