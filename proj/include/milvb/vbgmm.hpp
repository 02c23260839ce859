#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "milvb/errors.hpp"

namespace milvb {

// Conjugate prior of the Gaussian mixture: Dirichlet(alpha0) over weights and
// Gauss-Wishart (beta0, m0, W0, nu0) over component means/precisions.
struct VBGMMPrior {
    double alpha0 = 1.0;
    double beta0 = 1.0;
    Eigen::VectorXd m0;
    Eigen::MatrixXd W0;
    double nu0 = 0.0;

    // Weakly informative, scale-adapted default: alpha0 = 1/K encourages
    // weight pruning, m0 the data mean, W0 from the diagonal covariance.
    static VBGMMPrior data_driven(const Eigen::MatrixXd& data, int k_init);

    void validate(Eigen::Index dim) const;
};

struct VBGMMComponent {
    double alpha = 0.0;
    double beta = 0.0;
    Eigen::VectorXd m;
    Eigen::MatrixXd W;
    double nu = 0.0;
};

// Variational posterior over a Gaussian mixture plus the surviving component
// set after weight pruning. Immutable once fitted; safe for concurrent reads.
struct VBGMMModel {
    int k_init = 0;
    VBGMMPrior prior;
    std::vector<VBGMMComponent> components;
    std::vector<int> surviving;  // indices into components, ascending
    std::vector<double> elbo_trace;
    int iterations = 0;
    bool converged = false;

    Eigen::Index dim() const { return components.empty() ? 0 : components.front().m.size(); }
    int k_star() const { return static_cast<int>(surviving.size()); }

    // E[pi_k] = alpha_k / sum(alpha), over all components.
    Eigen::VectorXd expected_weights() const;
};

struct VBGMMFitConfig {
    int k_init = 50;
    double tol = 1e-8;      // relative ELBO change, |delta| < tol*(1+|ELBO|)
    int max_iter = 500;
    std::uint64_t seed = 0;
    std::optional<VBGMMPrior> prior;  // data-driven default when unset
};

// Variational EM per the standard Gauss-Wishart mean-field updates.
// Responsibilities are initialized from a k-means hard assignment; iteration
// stops when the relative ELBO increase drops below tol. The returned model
// has surviving = all components (prune separately).
VBGMMModel vbgmm_fit(const Eigen::MatrixXd& data, const VBGMMFitConfig& cfg);

// Keeps components with E[pi_k] >= threshold; if none qualify the
// largest-weight component survives alone.
VBGMMModel vbgmm_prune(const VBGMMModel& model, double threshold = 0.01);

// Variational responsibilities of one instance, restricted to the surviving
// components and renormalized to sum 1.
Eigen::VectorXd vbgmm_responsibilities(const VBGMMModel& model, const Eigen::VectorXd& x);

}  // namespace milvb
