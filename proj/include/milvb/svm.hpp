#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "milvb/bagcore.hpp"

namespace milvb {

enum class KernelKind { Linear, RBF };

struct KernelSpec {
    KernelKind kind = KernelKind::Linear;
    double gamma = 0.0;  // RBF only, must be positive

    void validate() const;
};

double kernel_eval(const KernelSpec& spec, const Eigen::VectorXd& a, const Eigen::VectorXd& b);
Eigen::MatrixXd gram_matrix(const Eigen::MatrixXd& x, const KernelSpec& spec);

// Soft-margin binary SVM in the dual. Stored coefficients are alpha_i * y_i
// for the support rows only.
struct SVMModel {
    KernelSpec kernel;
    double c = 1.0;
    Eigen::MatrixXd support_vectors;
    Eigen::VectorXd coefficients;
    double bias = 0.0;

    std::size_t n_support() const { return static_cast<std::size_t>(coefficients.size()); }
};

struct DualSolution {
    Eigen::VectorXd alpha;
    double bias = 0.0;
    long iterations = 0;
    bool converged = false;
};

// Sequential maximal-violating-pair ascent on the dual with a precomputed
// Gram matrix; stops when the KKT violation gap drops below tol.
DualSolution solve_svm_dual(const Eigen::MatrixXd& gram, const std::vector<Label>& y, double c,
                            double tol = 1e-3);

// Requires both classes present. Deterministic; the seed parameter is kept
// for interface uniformity (the solver itself is deterministic).
SVMModel train_svm(const Eigen::MatrixXd& x, const std::vector<Label>& y, double c,
                   const KernelSpec& kernel, double tol = 1e-3, std::uint64_t seed = 0);

// f(x) = sum coef_i k(sv_i, x) + b.
double svm_decision(const SVMModel& model, const Eigen::VectorXd& x);
// sign(f), ties at exactly 0 resolved to +1.
Label svm_predict(const SVMModel& model, const Eigen::VectorXd& x);

// --- grid search -------------------------------------------------------------

// Selects the grid point with the best mean accuracy over stratified inner
// cross-validation folds. `fit_predict(point, train_items, eval_items)`
// returns predicted labels for eval_items. Ties keep the earliest grid point,
// so enumerate grids in (smaller C, then smaller gamma) order. Inner folds
// whose training side is single-class are skipped; if every fold is skipped
// the points are scored by resubstitution.
using GridFitPredict = std::function<std::vector<Label>(
    int point, const std::vector<int>& train_items, const std::vector<int>& eval_items)>;

int grid_search_select(int n_grid_points, const std::vector<Label>& item_labels, int inner_k,
                       std::uint64_t seed, const GridFitPredict& fit_predict);

}  // namespace milvb
