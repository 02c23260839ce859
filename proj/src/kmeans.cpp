#include "milvb/kmeans.hpp"

#include <limits>

#include "milvb/errors.hpp"

namespace milvb {

std::vector<int> kmeans_assign(const Eigen::MatrixXd& rows, int k, int max_iter) {
    const Eigen::Index n = rows.rows();
    if (k < 1) throw ValidationError("k must be >= 1");
    if (n < k) throw ValidationError("fewer rows than clusters");

    // Farthest-point seeding anchored at the mean-nearest row.
    Eigen::MatrixXd centers(k, rows.cols());
    const Eigen::VectorXd mean = rows.colwise().mean();
    Eigen::Index first = 0;
    (rows.rowwise() - mean.transpose()).rowwise().squaredNorm().minCoeff(&first);
    centers.row(0) = rows.row(first);
    Eigen::VectorXd nearest =
        (rows.rowwise() - centers.row(0)).rowwise().squaredNorm();
    for (int c = 1; c < k; ++c) {
        Eigen::Index far = 0;
        nearest.maxCoeff(&far);
        centers.row(c) = rows.row(far);
        nearest = nearest.cwiseMin((rows.rowwise() - centers.row(c)).rowwise().squaredNorm());
    }

    std::vector<int> assignment(static_cast<std::size_t>(n), -1);
    for (int iter = 0; iter < max_iter; ++iter) {
        bool changed = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            int best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                const double d = (rows.row(i) - centers.row(c)).squaredNorm();
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (assignment[static_cast<std::size_t>(i)] != best) {
                assignment[static_cast<std::size_t>(i)] = best;
                changed = true;
            }
        }
        if (!changed) break;

        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, rows.cols());
        Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
        for (Eigen::Index i = 0; i < n; ++i) {
            sums.row(assignment[static_cast<std::size_t>(i)]) += rows.row(i);
            counts(assignment[static_cast<std::size_t>(i)]) += 1.0;
        }
        for (int c = 0; c < k; ++c)
            if (counts(c) > 0.0) centers.row(c) = sums.row(c) / counts(c);
    }
    return assignment;
}

}  // namespace milvb
