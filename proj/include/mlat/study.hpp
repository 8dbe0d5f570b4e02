#pragma once

#include "mlat/cauchyborn.hpp"
#include "mlat/greens.hpp"
#include "mlat/io.hpp"
#include "mlat/relax.hpp"
#include "mlat/spectral.hpp"

namespace mlat {

inline constexpr const char* schema_version = "1.0";

json to_json(const Vec& v);
json to_json(const Mat& m);
json to_json(const SolveReport& r);
json to_json(const StabilityCertificate& c);
json to_json(const DecayFit& f);
json to_json(const ConsistencyReport& r);

/// log sup|f| against log sup|Du| over geometric annuli of [r_min, r_max].
struct QuadraticResidualFit {
    double slope = 0.0;
    double residual = 0.0;
    std::vector<double> strain;
    std::vector<double> force;
};

QuadraticResidualFit quadratic_residual_fit(const ResidualField& f, const DisplacementField& u, double r_min,
                                            double r_max, double growth = 1.15);

struct CrossCheck {
    double sup_gap = 0.0;    // sup over |xi| <= radius of |U_relax - U_rec - c|, c the best constant
    double sup_field = 0.0;  // sup of |U_relax| on the same set
    double radius = 0.0;
};

/// Compares a windowed field with a periodic-cell field on the ball of the given radius,
/// modulo a constant translation of all species.
CrossCheck compare_modulo_translation(const DisplacementField& a, const DisplacementField& b, double radius);

struct StudyConfig {
    double r_win = 64.0;
    int N = 256;
    double tol = 1e-9;
    int max_iter = 50;
    bool continuation = false;
    int stability_grid = 32;
    double fit_r_min = 4.0;
    double fit_r_max = 0.0;     // 0: r_win / 2
    double greens_r_min = 8.0;
    double greens_r_max = 0.0;  // 0: N / 4
    unsigned long long seed = 0;
};

/// stability -> relax -> residual -> Green's blocks and reconstruction -> decay fits.
json pipeline_defect_study(const Crystal& c, const StudyConfig& cfg);

}  // namespace mlat
