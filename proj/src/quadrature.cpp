#include "mlat/quadrature.hpp"

#include "mlat/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace mlat {

GaussRule gauss_legendre(int order)
{
    if (order < 1) {
        throw ValidationError("quadrature order must be positive");
    }
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(order, order);
    for (int i = 1; i < order; ++i) {
        const double b = i / std::sqrt(4.0 * i * i - 1.0);
        J(i, i - 1) = b;
        J(i - 1, i) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    GaussRule r;
    r.nodes = (es.eigenvalues().array() + 1.0) * 0.5;
    r.weights = es.eigenvectors().row(0).transpose().array().square();
    return r;
}

}  // namespace mlat
