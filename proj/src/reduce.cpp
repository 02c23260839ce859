#include "milvb/reduce.hpp"

#include <cmath>

namespace milvb {

namespace {
constexpr double kScaleFloor = 1e-12;
}

Eigen::VectorXd Standardizer::apply(const Eigen::VectorXd& x) const {
    if (x.size() != mean.size())
        throw ValidationError("standardizer dimension mismatch: " + std::to_string(x.size()) +
                              " vs " + std::to_string(mean.size()));
    return (x - mean).cwiseQuotient(scale);
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& m) const {
    if (m.cols() != mean.size()) throw ValidationError("standardizer dimension mismatch");
    return (m.rowwise() - mean.transpose()).array().rowwise() /
           scale.transpose().array();
}

Standardizer fit_standardizer(const Eigen::MatrixXd& train) {
    if (train.rows() < 2)
        throw ValidationError("standardizer needs >= 2 rows, got " +
                              std::to_string(train.rows()));
    Standardizer s;
    s.mean = train.colwise().mean();
    const Eigen::MatrixXd centered = train.rowwise() - s.mean.transpose();
    s.scale = (centered.array().square().colwise().sum() /
               static_cast<double>(train.rows()))
                  .sqrt()
                  .matrix();
    s.scale = s.scale.cwiseMax(kScaleFloor);
    return s;
}

PCAProjection fit_pca(const Eigen::MatrixXd& standardized_train, double variance) {
    if (standardized_train.rows() < 2) throw ValidationError("PCA needs >= 2 rows");
    if (!(variance > 0.0 && variance <= 1.0))
        throw ValidationError("variance fraction must lie in (0, 1]");

    const double n = static_cast<double>(standardized_train.rows());
    const Eigen::MatrixXd centered =
        standardized_train.rowwise() - standardized_train.colwise().mean();
    const Eigen::MatrixXd cov = centered.transpose() * centered / n;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw DataError("covariance eigendecomposition failed");

    // Eigen returns ascending order; flip to descending and clamp tiny
    // negative values from round-off.
    const Eigen::Index d = cov.rows();
    Eigen::VectorXd eigenvalues(d);
    Eigen::MatrixXd axes(d, d);  // rows = components
    for (Eigen::Index i = 0; i < d; ++i) {
        eigenvalues(i) = std::max(0.0, solver.eigenvalues()(d - 1 - i));
        axes.row(i) = solver.eigenvectors().col(d - 1 - i).transpose();
    }

    const double total = eigenvalues.sum();
    Eigen::Index keep = d;
    if (total > 0.0) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < d; ++i) {
            acc += eigenvalues(i);
            if (acc / total >= variance) {
                keep = i + 1;
                break;
            }
        }
    }

    PCAProjection proj;
    proj.components = axes.topRows(keep);
    proj.eigenvalues = eigenvalues.head(keep);
    proj.total_variance = total;
    proj.variance_kept = total > 0.0 ? proj.eigenvalues.sum() / total : 1.0;

    // Deterministic sign: the largest-magnitude coefficient of each component
    // is positive (ties resolved by the first such index).
    for (Eigen::Index i = 0; i < proj.components.rows(); ++i) {
        Eigen::Index arg = 0;
        proj.components.row(i).cwiseAbs().maxCoeff(&arg);
        if (proj.components(i, arg) < 0.0) proj.components.row(i) *= -1.0;
    }
    return proj;
}

Eigen::VectorXd reduce_transform(const PCAProjection& proj, const Standardizer& std,
                                 const Eigen::VectorXd& x) {
    if (x.size() != proj.d_in()) throw ValidationError("PCA transform dimension mismatch");
    return proj.components * std.apply(x);
}

Eigen::MatrixXd reduce_transform(const PCAProjection& proj, const Standardizer& std,
                                 const Eigen::MatrixXd& m) {
    if (m.cols() != proj.d_in()) throw ValidationError("PCA transform dimension mismatch");
    return std.apply(m) * proj.components.transpose();
}

}  // namespace milvb
