#include "mlat/io.hpp"

#include "mlat/cauchyborn.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <algorithm>
#include <map>

namespace mlat {

static_assert(std::endian::native == std::endian::little, "field files are written in host byte order");

namespace {

Mat read_matrix(const json& j, const std::string& what)
{
    if (!j.is_array() || j.empty()) {
        throw ValidationError(what + " must be a nonempty array of rows");
    }
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    Mat M(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        if (!j[static_cast<std::size_t>(r)].is_array() || static_cast<Eigen::Index>(j[static_cast<std::size_t>(r)].size()) != cols) {
            throw ValidationError(what + " rows must have equal length");
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
            M(r, c) = j[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].get<double>();
        }
    }
    return M;
}

Vec read_vec(const json& j, const std::string& what)
{
    if (!j.is_array()) {
        throw ValidationError(what + " must be an array");
    }
    Vec v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    }
    return v;
}

BondTriplet read_triplet(const json& j, int d)
{
    if (!j.is_array() || static_cast<int>(j.size()) != d + 2) {
        throw ValidationError("triplet entries must be [rho_1..rho_d, alpha, beta]");
    }
    BondTriplet t;
    t.rho.resize(d);
    for (int i = 0; i < d; ++i) {
        t.rho[i] = j[static_cast<std::size_t>(i)].get<int>();
    }
    t.alpha = j[static_cast<std::size_t>(d)].get<int>();
    t.beta = j[static_cast<std::size_t>(d + 1)].get<int>();
    return t;
}

IVec read_site(const json& j, int d)
{
    if (!j.is_array() || static_cast<int>(j.size()) != d) {
        throw ValidationError("site must be an integer d-vector");
    }
    IVec m(d);
    for (int i = 0; i < d; ++i) {
        m[i] = j[static_cast<std::size_t>(i)].get<int>();
    }
    return m;
}

PotentialPtr build_potential(const json& pj, const Multilattice& spec, const RangeValidation& rv,
                             const std::vector<BondTriplet>& input, bool& allow_unstable)
{
    const std::string kind = pj.value("kind", "");
    const auto& range = rv.range;
    if (kind == "harmonic") {
        allow_unstable = pj.value("allow_unstable", false);
        const double k_in = pj.value("stiffness", 1.0);
        const double k_add = pj.value("added_stiffness", 0.0);
        Vec k = Vec::Constant(range.size(), k_add);
        for (const auto& t : input) {
            k[*range.index_of(t)] = k_in;
            k[*range.index_of(t.reversed())] = k_in;
        }
        if (pj.contains("by_triplet")) {
            for (const auto& e : pj["by_triplet"]) {
                const BondTriplet t = read_triplet(e.at("triplet"), spec.d);
                const auto idx = range.index_of(t);
                if (!idx) {
                    throw ValidationError("stiffness given for a triplet outside the range: " + to_string(t));
                }
                const double v = e.at("k").get<double>();
                k[*idx] = v;
                k[*range.index_of(t.reversed())] = v;
            }
        }
        return make_harmonic(range, spec.n, k, allow_unstable);
    }
    if (kind == "morse") {
        MorseTable table;
        for (const auto& e : pj.at("pairs")) {
            const auto sp = e.at("species");
            int a = sp.at(0).get<int>();
            int b = sp.at(1).get<int>();
            if (a > b) {
                std::swap(a, b);
            }
            // lengths are given in the units of the input cell
            table[{a, b}] = MorseParams{e.value("depth", 1.0), e.at("width").get<double>() * spec.scale,
                                        e.at("r0").get<double>() / spec.scale};
        }
        return make_morse_pair(spec, range, table);
    }
    throw ValidationError("unknown potential kind '" + kind + "'");
}

DefectModel build_defect(const json& dj, const Multilattice& spec, const InteractionRange& range)
{
    DefectModel def;
    def.core_radius = dj.value("R_def", 0.0) / spec.scale;
    const int n = spec.n;
    const Eigen::Index len = static_cast<Eigen::Index>(range.size()) * n;
    std::map<std::vector<int>, Vec> acc;
    std::vector<std::vector<int>> order;
    for (const auto& e : dj.value("dipoles", json::array())) {
        const IVec site = read_site(e.at("site"), spec.d);
        const std::vector<int> key(site.data(), site.data() + site.size());
        if (!acc.count(key)) {
            acc[key] = Vec::Zero(len);
            order.push_back(key);
        }
        Vec& g = acc[key];
        if (e.contains("radial")) {
            const double s = e.at("radial").get<double>() * spec.scale;
            for (int t = 0; t < range.size(); ++t) {
                const auto& b = range.triplets[static_cast<std::size_t>(t)];
                const Vec r = spec.embed(spec.F * b.rho.cast<double>() + spec.shifts[static_cast<std::size_t>(b.beta)]
                                         - spec.shifts[static_cast<std::size_t>(b.alpha)]);
                g.segment(static_cast<Eigen::Index>(t) * n, n) += s * r.normalized();
            }
        } else {
            const BondTriplet t = read_triplet(e.at("triplet"), spec.d);
            const auto idx = range.index_of(t);
            if (!idx) {
                throw ValidationError("dipole given for a triplet outside the range: " + to_string(t));
            }
            const Vec v = read_vec(e.at("g"), "dipole g");
            if (v.size() != n) {
                throw ValidationError("dipole g must have n components");
            }
            g.segment(static_cast<Eigen::Index>(*idx) * n, n) += v * spec.scale;
        }
    }
    for (const auto& key : order) {
        def.dipoles.push_back({Eigen::Map<const IVec>(key.data(), static_cast<Eigen::Index>(key.size())), acc[key]});
    }
    def.validate(spec, len);
    return def;
}

}  // namespace

Crystal load_crystal(const json& doc)
{
    try {
        Crystal c;
        c.source = doc;
        c.name = doc.value("name", "crystal");
        const int n = doc.at("n").get<int>();
        const Mat F = read_matrix(doc.at("F"), "F");
        const int d = doc.value("d", static_cast<int>(F.rows()));
        if (F.rows() != d) {
            throw ValidationError("F does not match d");
        }
        std::vector<Vec> shifts;
        for (const auto& s : doc.at("shifts")) {
            shifts.push_back(read_vec(s, "shift"));
        }
        c.spec = build_multilattice(F, shifts, n);
        std::vector<BondTriplet> trips;
        for (const auto& t : doc.at("triplets")) {
            trips.push_back(read_triplet(t, d));
        }
        c.range = validate_range(c.spec, trips);
        const json pj = doc.value("potential", json{{"kind", "harmonic"}});
        c.pot = build_potential(pj, c.spec, c.range, trips, c.allow_unstable);

        if (c.spec.species() > 1 && pj.value("calibrate", true)) {
            const auto eq = shift_equilibrium(c.spec, *c.pot, reference_G(c.spec), reference_shifts(c.spec));
            const auto st = W_hat(c.spec, *c.pot, reference_G(c.spec), reference_shifts(c.spec));
            c.calibration_residual = st.dW_p.norm();
            if (c.calibration_residual > 1e-10) {
                if (!eq.converged || eq.indefinite) {
                    throw ValidationError("shift calibration failed: reference shifts are not an equilibrium");
                }
                std::vector<Vec> p;
                for (const auto& q : eq.p) {
                    if (q.size() > d && std::abs(q[d]) > 1e-12) {
                        throw ValidationError("equilibrated shifts leave the plane of the lattice");
                    }
                    p.push_back(q.head(d) * c.spec.scale);
                }
                c.spec = build_multilattice(F, p, n);
                c.range = validate_range(c.spec, trips);
                c.pot = build_potential(pj, c.spec, c.range, trips, c.allow_unstable);
                c.calibrated = true;
            }
        }
        if (doc.contains("defect")) {
            c.defect = build_defect(doc["defect"], c.spec, c.range.range);
        }
        return c;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed crystal document: ") + e.what());
    }
}

Crystal load_crystal_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open crystal file '" + path + "'");
    }
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ValidationError("crystal file '" + path + "' is not valid JSON: " + e.what());
    }
    return load_crystal(doc);
}

Crystal preset(const std::string& name)
{
    return load_crystal(preset_document(name));
}

Crystal resolve_crystal(const std::string& arg)
{
    if (std::filesystem::exists(arg)) {
        return load_crystal_file(arg);
    }
    // a bare "name" or "name.json" without a directory part falls back to the embedded preset
    const std::filesystem::path path(arg);
    if (!path.has_parent_path()) {
        const std::string stem = path.extension() == ".json" ? path.stem().string() : arg;
        for (const auto& p : preset_names()) {
            if (p == stem) {
                return preset(p);
            }
        }
    }
    throw ValidationError("crystal '" + arg + "' is neither a file nor a preset");
}

// ---------------------------------------------------------------------------

namespace {

template <class T>
void put(std::ostream& os, T v)
{
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is)
{
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) {
        throw ValidationError("field file is truncated");
    }
    return v;
}

}  // namespace

void write_field_binary(const std::string& path, const DisplacementField& u)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw ValidationError("cannot write field file '" + path + "'");
    }
    const auto& w = u.window();
    os.write("MLDF", 4);
    put<std::uint32_t>(os, 1);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(w.dim()));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(u.dim()));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(u.species()));
    put<double>(os, w.radius());
    put<std::uint64_t>(os, static_cast<std::uint64_t>(w.count()));
    for (int r = 0; r < w.dim(); ++r) {
        for (int c = 0; c < w.dim(); ++c) {
            put<double>(os, w.cell()(r, c));
        }
    }
    for (int i = 0; i < w.count(); ++i) {
        for (int a = 0; a < w.dim(); ++a) {
            put<std::int32_t>(os, w.coords()(a, i));
        }
    }
    os.write(reinterpret_cast<const char*>(u.values.data()),
             static_cast<std::streamsize>(u.values.size() * static_cast<Eigen::Index>(sizeof(double))));
}

LoadedField read_field_binary(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw ValidationError("cannot open field file '" + path + "'");
    }
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "MLDF", 4) != 0) {
        throw ValidationError("'" + path + "' is not a field file");
    }
    if (get<std::uint32_t>(is) != 1) {
        throw ValidationError("unsupported field file version");
    }
    const int d = static_cast<int>(get<std::uint32_t>(is));
    const int n = static_cast<int>(get<std::uint32_t>(is));
    const int S = static_cast<int>(get<std::uint32_t>(is));
    const double radius = get<double>(is);
    const auto count = static_cast<Eigen::Index>(get<std::uint64_t>(is));
    if (d < 2 || d > 3 || S < 1 || count <= 0) {
        throw ValidationError("field file header is inconsistent");
    }
    Mat F(d, d);
    for (int r = 0; r < d; ++r) {
        for (int c = 0; c < d; ++c) {
            F(r, c) = get<double>(is);
        }
    }
    Eigen::MatrixXi coords(d, count);
    for (Eigen::Index i = 0; i < count; ++i) {
        for (int a = 0; a < d; ++a) {
            coords(a, i) = get<std::int32_t>(is);
        }
    }
    std::vector<Vec> shifts(static_cast<std::size_t>(S), Vec::Zero(d));
    LoadedField out{build_multilattice(F, shifts, n), {}};
    std::vector<BondTriplet> edges;
    for (int s = 0; s < S; ++s) {
        for (const auto& e : kuhn_edges(d)) {
            edges.push_back({e, s, s});
        }
    }
    const auto range = validate_range(out.spec, edges).range;
    auto w = LatticeWindow::from_sites(out.spec, range, coords, radius);
    out.u = DisplacementField(w, S, n);
    is.read(reinterpret_cast<char*>(out.u.values.data()),
            static_cast<std::streamsize>(out.u.values.size() * static_cast<Eigen::Index>(sizeof(double))));
    if (!is) {
        throw ValidationError("field file payload is truncated");
    }
    return out;
}

void write_field_csv(const std::string& path, const DisplacementField& u)
{
    std::ofstream os(path);
    if (!os) {
        throw ValidationError("cannot write '" + path + "'");
    }
    const auto& w = u.window();
    const char* axes = "xyz";
    for (int a = 0; a < w.dim(); ++a) {
        os << "m" << a << ",";
    }
    for (int a = 0; a < w.dim(); ++a) {
        os << axes[a] << ",";
    }
    for (int s = 0; s < u.species(); ++s) {
        for (int c = 0; c < u.dim(); ++c) {
            os << "u" << s << "_" << c << (s + 1 == u.species() && c + 1 == u.dim() ? "\n" : ",");
        }
    }
    os.precision(17);
    for (int i = 0; i < w.count(); ++i) {
        const Vec x = w.position(i);
        for (int a = 0; a < w.dim(); ++a) {
            os << w.coords()(a, i) << ",";
        }
        for (int a = 0; a < w.dim(); ++a) {
            os << x[a] << ",";
        }
        for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(u.species()) * u.dim(); ++k) {
            os << u.values[u.offset(i, 0) + k] << (k + 1 == static_cast<Eigen::Index>(u.species()) * u.dim() ? "\n" : ",");
        }
    }
}

}  // namespace mlat
