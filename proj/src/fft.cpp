#include "mlat/fourier.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <limits>
#include <vector>

namespace mlat {

BrillouinGrid::BrillouinGrid(const Multilattice& spec, int order) : d(spec.d), N(order), B(spec.B)
{
    if (N < 2 || N % 2 != 0) {
        throw ValidationError("Brillouin grid order must be even and >= 2");
    }
}

int BrillouinGrid::count() const
{
    int c = 1;
    for (int i = 0; i < d; ++i) {
        c *= N;
    }
    return c;
}

IVec BrillouinGrid::index(int lin) const
{
    IVec m(d);
    for (int i = 0; i < d; ++i) {
        const int j = lin % N;
        lin /= N;
        m[i] = j <= N / 2 ? j : j - N;
    }
    return m;
}

int BrillouinGrid::linear(const IVec& m) const
{
    int lin = 0;
    int stride = 1;
    for (int i = 0; i < d; ++i) {
        lin += (((m[i] % N) + N) % N) * stride;
        stride *= N;
    }
    return lin;
}

Vec reduce_to_voronoi(const Mat& B, const Vec& k)
{
    const auto d = static_cast<int>(B.rows());
    // bring k into the parallelepiped first, then search nearby translates
    Vec frac = B.inverse() * k;
    for (int i = 0; i < d; ++i) {
        frac[i] -= std::round(frac[i]);
    }
    const Vec k0 = B * frac;
    Vec best = k0;
    double best_norm = k0.squaredNorm();
    const int span = 2;
    IVec z = IVec::Constant(d, -span);
    while (true) {
        const Vec cand = k0 + B * z.cast<double>();
        const double nn = cand.squaredNorm();
        if (nn < best_norm - 1e-15) {
            best_norm = nn;
            best = cand;
        }
        int i = 0;
        while (i < d && z[i] == span) {
            z[i] = -span;
            ++i;
        }
        if (i == d) {
            break;
        }
        ++z[i];
    }
    return best;
}

namespace {

CMat transform(const CMat& data, int d, int N, bool forward)
{
    Eigen::Index total = 1;
    for (int i = 0; i < d; ++i) {
        total *= N;
    }
    if (data.cols() != total) {
        throw ValidationError("grid data size does not match N^d");
    }
    CMat out = data;
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> line(static_cast<std::size_t>(N));
    std::vector<std::complex<double>> res(static_cast<std::size_t>(N));
    Eigen::Index stride = 1;
    for (int axis = 0; axis < d; ++axis) {
        const Eigen::Index block = stride * N;
        for (Eigen::Index row = 0; row < out.rows(); ++row) {
            for (Eigen::Index outer = 0; outer < total; outer += block) {
                for (Eigen::Index inner = 0; inner < stride; ++inner) {
                    const Eigen::Index base = outer + inner;
                    for (int j = 0; j < N; ++j) {
                        line[static_cast<std::size_t>(j)] = out(row, base + j * stride);
                    }
                    if (forward) {
                        fft.fwd(res, line);
                    } else {
                        fft.inv(res, line);
                    }
                    for (int j = 0; j < N; ++j) {
                        out(row, base + j * stride) = res[static_cast<std::size_t>(j)];
                    }
                }
            }
        }
        stride = block;
    }
    return out;
}

}  // namespace

CMat fft_forward(const CMat& data, int d, int N)
{
    return transform(data, d, N, true);
}

CMat fft_inverse(const CMat& data, int d, int N)
{
    return transform(data, d, N, false);
}

KField sdft(const DisplacementField& u, const Multilattice& spec)
{
    const auto& w = u.window();
    if (w.kind() != LatticeWindow::Kind::Periodic) {
        throw ValidationError("sdft requires a field on a periodic cell");
    }
    KField out;
    out.grid = BrillouinGrid(spec, w.period());
    out.species = u.species();
    out.n = u.dim();
    const Eigen::Index rows = static_cast<Eigen::Index>(u.species()) * u.dim();
    // values are (site, species, component) contiguous: view as rows x sites
    const Eigen::Map<const Mat> real(u.values.data(), rows, w.count());
    out.values = fft_forward(real.cast<std::complex<double>>(), spec.d, w.period());
    return out;
}

DisplacementField isdft(const KField& uk, std::shared_ptr<const LatticeWindow> cell)
{
    if (cell->kind() != LatticeWindow::Kind::Periodic || cell->period() != uk.grid.N) {
        throw ValidationError("isdft target must be a periodic cell of matching order");
    }
    DisplacementField u(cell, uk.species, uk.n);
    const CMat back = fft_inverse(uk.values, uk.grid.d, uk.grid.N);
    Eigen::Map<Mat>(u.values.data(), back.rows(), back.cols()) = back.real();
    return u;
}

DisplacementField embed_periodic(const DisplacementField& u, const Multilattice& spec, int N)
{
    const auto& w = u.window();
    if (w.kind() == LatticeWindow::Kind::Periodic) {
        if (w.period() != N) {
            throw ValidationError("periodic field has a different period");
        }
        return u;
    }
    auto cell = LatticeWindow::periodic(spec, w.range(), N);
    DisplacementField out(cell, u.species(), u.dim());
    std::vector<int> seen(static_cast<std::size_t>(cell->count()), -1);
    for (int i = 0; i < w.count(); ++i) {
        const IVec m = w.site(i);
        for (int a = 0; a < spec.d; ++a) {
            if (m[a] <= -N / 2 || m[a] > N / 2) {
                throw ValidationError("window does not fit inside the periodic cell");
            }
        }
        const int j = *cell->index_of(m);
        if (seen[static_cast<std::size_t>(j)] >= 0) {
            throw ValidationError("window overlaps its periodic image");
        }
        seen[static_cast<std::size_t>(j)] = i;
        for (int a = 0; a < u.species(); ++a) {
            out.at(j, a) = u.at(i, a);
        }
    }
    return out;
}

}  // namespace mlat
