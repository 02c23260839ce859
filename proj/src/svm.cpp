#include "milvb/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "milvb/rng.hpp"

namespace milvb {

void KernelSpec::validate() const {
    if (kind == KernelKind::RBF && !(gamma > 0.0))
        throw ValidationError("RBF kernel requires gamma > 0");
}

double kernel_eval(const KernelSpec& spec, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) throw ValidationError("kernel dimension mismatch");
    switch (spec.kind) {
        case KernelKind::Linear:
            return a.dot(b);
        case KernelKind::RBF:
            return std::exp(-spec.gamma * (a - b).squaredNorm());
    }
    throw ValidationError("unknown kernel kind");
}

Eigen::MatrixXd gram_matrix(const Eigen::MatrixXd& x, const KernelSpec& spec) {
    spec.validate();
    if (spec.kind == KernelKind::Linear) return x * x.transpose();
    const Eigen::VectorXd sq = x.rowwise().squaredNorm();
    Eigen::MatrixXd g = -2.0 * (x * x.transpose());
    g.colwise() += sq;
    g.rowwise() += sq.transpose();
    return (-spec.gamma * g.array()).exp();
}

DualSolution solve_svm_dual(const Eigen::MatrixXd& gram, const std::vector<Label>& y, double c,
                            double tol) {
    const auto n = static_cast<Eigen::Index>(y.size());
    if (gram.rows() != n || gram.cols() != n) throw ValidationError("gram/label size mismatch");
    if (!(c > 0.0)) throw ValidationError("C must be positive");
    constexpr double kTau = 1e-12;

    Eigen::VectorXd yv(n);
    for (Eigen::Index t = 0; t < n; ++t) yv(t) = static_cast<double>(y[static_cast<std::size_t>(t)]);

    DualSolution sol;
    sol.alpha = Eigen::VectorXd::Zero(n);
    // Gradient of 1/2 a'Qa - e'a with Q_ij = y_i y_j K_ij; starts at -e.
    Eigen::VectorXd grad = Eigen::VectorXd::Constant(n, -1.0);

    const long max_pair_updates = std::max<long>(10000L * n, 1000000L);
    double m_up = 0.0, m_low = 0.0;
    for (sol.iterations = 0; sol.iterations < max_pair_updates; ++sol.iterations) {
        // Maximal violating pair.
        Eigen::Index i = -1, j = -1;
        m_up = -std::numeric_limits<double>::infinity();
        m_low = std::numeric_limits<double>::infinity();
        for (Eigen::Index t = 0; t < n; ++t) {
            const double v = -yv(t) * grad(t);
            const bool in_up = (yv(t) > 0.0 && sol.alpha(t) < c) || (yv(t) < 0.0 && sol.alpha(t) > 0.0);
            const bool in_low = (yv(t) < 0.0 && sol.alpha(t) < c) || (yv(t) > 0.0 && sol.alpha(t) > 0.0);
            if (in_up && v > m_up) {
                m_up = v;
                i = t;
            }
            if (in_low && v < m_low) {
                m_low = v;
                j = t;
            }
        }
        if (i < 0 || j < 0 || m_up - m_low <= tol) {
            sol.converged = true;
            break;
        }

        const double old_ai = sol.alpha(i), old_aj = sol.alpha(j);
        // In Q-space the two-variable subproblem curvature is always
        // K_ii + K_jj - 2K_ij >= 0 for a PSD kernel.
        double quad = gram(i, i) + gram(j, j) - 2.0 * gram(i, j);
        if (quad <= 0.0) quad = kTau;

        if (yv(i) * yv(j) < 0.0) {
            const double delta = (-grad(i) - grad(j)) / quad;
            const double diff = sol.alpha(i) - sol.alpha(j);
            sol.alpha(i) += delta;
            sol.alpha(j) += delta;
            if (diff > 0.0) {
                if (sol.alpha(j) < 0.0) {
                    sol.alpha(j) = 0.0;
                    sol.alpha(i) = diff;
                }
            } else {
                if (sol.alpha(i) < 0.0) {
                    sol.alpha(i) = 0.0;
                    sol.alpha(j) = -diff;
                }
            }
            if (diff > 0.0) {
                if (sol.alpha(i) > c) {
                    sol.alpha(i) = c;
                    sol.alpha(j) = c - diff;
                }
            } else {
                if (sol.alpha(j) > c) {
                    sol.alpha(j) = c;
                    sol.alpha(i) = c + diff;
                }
            }
        } else {
            const double delta = (grad(i) - grad(j)) / quad;
            const double sum = sol.alpha(i) + sol.alpha(j);
            sol.alpha(i) -= delta;
            sol.alpha(j) += delta;
            if (sum > c) {
                if (sol.alpha(i) > c) {
                    sol.alpha(i) = c;
                    sol.alpha(j) = sum - c;
                }
            } else {
                if (sol.alpha(j) < 0.0) {
                    sol.alpha(j) = 0.0;
                    sol.alpha(i) = sum;
                }
            }
            if (sum > c) {
                if (sol.alpha(j) > c) {
                    sol.alpha(j) = c;
                    sol.alpha(i) = sum - c;
                }
            } else {
                if (sol.alpha(i) < 0.0) {
                    sol.alpha(i) = 0.0;
                    sol.alpha(j) = sum;
                }
            }
        }

        // G_t += dai*Q_ti + daj*Q_tj, Q_ti = y_t y_i K_ti.
        const double dai = sol.alpha(i) - old_ai, daj = sol.alpha(j) - old_aj;
        grad += yv.cwiseProduct(dai * yv(i) * gram.col(i) + daj * yv(j) * gram.col(j));
    }

    // Bias from the free support vectors; midpoint of the violation bounds
    // when none are free.
    double bias_sum = 0.0;
    int n_free = 0;
    for (Eigen::Index t = 0; t < n; ++t)
        if (sol.alpha(t) > 0.0 && sol.alpha(t) < c) {
            bias_sum += -yv(t) * grad(t);
            ++n_free;
        }
    sol.bias = n_free > 0 ? bias_sum / n_free : 0.5 * (m_up + m_low);
    return sol;
}

SVMModel train_svm(const Eigen::MatrixXd& x, const std::vector<Label>& y, double c,
                   const KernelSpec& kernel, double tol, std::uint64_t seed) {
    (void)seed;  // the dual solver is deterministic
    if (x.rows() < 2) throw ValidationError("SVM training needs >= 2 rows");
    if (static_cast<std::size_t>(x.rows()) != y.size())
        throw ValidationError("row/label count mismatch");
    const bool has_pos = std::count(y.begin(), y.end(), kPositive) > 0;
    const bool has_neg = std::count(y.begin(), y.end(), kNegative) > 0;
    if (!has_pos || !has_neg) throw ValidationError("SVM training requires both classes");
    kernel.validate();

    const Eigen::MatrixXd gram = gram_matrix(x, kernel);
    const DualSolution sol = solve_svm_dual(gram, y, c, tol);

    SVMModel model;
    model.kernel = kernel;
    model.c = c;
    std::vector<Eigen::Index> support;
    for (Eigen::Index i = 0; i < sol.alpha.size(); ++i)
        if (sol.alpha(i) > 0.0) support.push_back(i);
    model.support_vectors.resize(static_cast<Eigen::Index>(support.size()), x.cols());
    model.coefficients.resize(static_cast<Eigen::Index>(support.size()));
    for (std::size_t s = 0; s < support.size(); ++s) {
        model.support_vectors.row(static_cast<Eigen::Index>(s)) = x.row(support[s]);
        model.coefficients(static_cast<Eigen::Index>(s)) =
            sol.alpha(support[s]) * static_cast<double>(y[static_cast<std::size_t>(support[s])]);
    }
    model.bias = sol.bias;
    return model;
}

double svm_decision(const SVMModel& model, const Eigen::VectorXd& x) {
    if (x.size() != model.support_vectors.cols() && model.support_vectors.rows() > 0)
        throw ValidationError("decision dimension mismatch");
    double f = model.bias;
    for (Eigen::Index s = 0; s < model.support_vectors.rows(); ++s)
        f += model.coefficients(s) * kernel_eval(model.kernel, model.support_vectors.row(s), x);
    return f;
}

Label svm_predict(const SVMModel& model, const Eigen::VectorXd& x) {
    return svm_decision(model, x) >= 0.0 ? kPositive : kNegative;
}

int grid_search_select(int n_grid_points, const std::vector<Label>& item_labels, int inner_k,
                       std::uint64_t seed, const GridFitPredict& fit_predict) {
    if (n_grid_points < 1) throw ValidationError("grid must be non-empty");
    if (inner_k < 2) throw ValidationError("inner_k must be >= 2");
    const int n_items = static_cast<int>(item_labels.size());

    // Stratified fold assignment: shuffle each class, deal round-robin.
    std::vector<int> fold_of(static_cast<std::size_t>(n_items), 0);
    Rng rng(seed);
    for (const Label cls : {kNegative, kPositive}) {
        std::vector<int> members;
        for (int i = 0; i < n_items; ++i)
            if (item_labels[static_cast<std::size_t>(i)] == cls) members.push_back(i);
        rng.shuffle(members);
        for (std::size_t pos = 0; pos < members.size(); ++pos)
            fold_of[static_cast<std::size_t>(members[pos])] =
                static_cast<int>(pos % static_cast<std::size_t>(inner_k));
    }

    int best_point = 0;
    double best_accuracy = -1.0;
    for (int point = 0; point < n_grid_points; ++point) {
        double correct = 0.0, total = 0.0;
        for (int fold = 0; fold < inner_k; ++fold) {
            std::vector<int> train_items, eval_items;
            for (int i = 0; i < n_items; ++i)
                (fold_of[static_cast<std::size_t>(i)] == fold ? eval_items : train_items)
                    .push_back(i);
            if (train_items.empty() || eval_items.empty()) continue;
            bool pos = false, neg = false;
            for (const int i : train_items) {
                pos |= item_labels[static_cast<std::size_t>(i)] == kPositive;
                neg |= item_labels[static_cast<std::size_t>(i)] == kNegative;
            }
            if (!pos || !neg) continue;
            const auto predicted = fit_predict(point, train_items, eval_items);
            for (std::size_t e = 0; e < eval_items.size(); ++e) {
                total += 1.0;
                if (predicted[e] == item_labels[static_cast<std::size_t>(eval_items[e])])
                    correct += 1.0;
            }
        }
        double accuracy;
        if (total > 0.0) {
            accuracy = correct / total;
        } else {
            // Every fold degenerate: score by resubstitution.
            std::vector<int> all_items(static_cast<std::size_t>(n_items));
            for (int i = 0; i < n_items; ++i) all_items[static_cast<std::size_t>(i)] = i;
            const auto predicted = fit_predict(point, all_items, all_items);
            double c2 = 0.0;
            for (int i = 0; i < n_items; ++i)
                if (predicted[static_cast<std::size_t>(i)] ==
                    item_labels[static_cast<std::size_t>(i)])
                    c2 += 1.0;
            accuracy = c2 / static_cast<double>(n_items);
        }
        if (accuracy > best_accuracy + 1e-12) {
            best_accuracy = accuracy;
            best_point = point;
        }
    }
    return best_point;
}

}  // namespace milvb
