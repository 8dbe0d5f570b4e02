#pragma once

#include <Eigen/Dense>

namespace mlat {

struct GaussRule {
    Eigen::VectorXd nodes;    // on [0, 1]
    Eigen::VectorXd weights;  // sum to 1
};

/// Gauss-Legendre rule on [0, 1] via the Golub-Welsch eigenproblem.
GaussRule gauss_legendre(int order);

}  // namespace mlat
