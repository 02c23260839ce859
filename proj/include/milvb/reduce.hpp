#pragma once

#include <Eigen/Dense>

#include "milvb/errors.hpp"

namespace milvb {

// Per-dimension centering and unit-variance scaling fitted on a train matrix.
struct Standardizer {
    Eigen::VectorXd mean;
    Eigen::VectorXd scale;  // population standard deviation, floored at 1e-12

    Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
    Eigen::MatrixXd apply(const Eigen::MatrixXd& m) const;
};

// Orthonormal projection retaining a variance fraction. Rows of `components`
// are the principal axes, eigenvalues sorted descending. The sign convention
// (largest-magnitude coefficient positive) makes results reproducible.
struct PCAProjection {
    Eigen::MatrixXd components;  // d_out x d_in
    Eigen::VectorXd eigenvalues; // the d_out kept eigenvalues
    double variance_kept = 0.0;
    double total_variance = 0.0;

    Eigen::Index d_out() const { return components.rows(); }
    Eigen::Index d_in() const { return components.cols(); }
};

Standardizer fit_standardizer(const Eigen::MatrixXd& train);

// Symmetric eigendecomposition of the train covariance; keeps the smallest
// number of leading components whose cumulative eigenvalue share reaches
// `variance`.
PCAProjection fit_pca(const Eigen::MatrixXd& standardized_train, double variance = 0.95);

Eigen::VectorXd reduce_transform(const PCAProjection& proj, const Standardizer& std,
                                 const Eigen::VectorXd& x);
Eigen::MatrixXd reduce_transform(const PCAProjection& proj, const Standardizer& std,
                                 const Eigen::MatrixXd& m);

}  // namespace milvb
