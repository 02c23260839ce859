#include <doctest.h>

#include "milvb/rng.hpp"
#include "milvb/svm.hpp"

using namespace milvb;

namespace {

KernelSpec linear_kernel() { return {KernelKind::Linear, 0.0}; }
KernelSpec rbf_kernel(double gamma) { return {KernelKind::RBF, gamma}; }

// KKT conditions at tolerance for a trained model, checked on the training
// points via the decision function.
void check_kkt(const Eigen::MatrixXd& x, const std::vector<Label>& y, double c,
               const KernelSpec& kernel, double tol) {
    const Eigen::MatrixXd gram = gram_matrix(x, kernel);
    const DualSolution sol = solve_svm_dual(gram, y, c, tol);
    REQUIRE(sol.converged);

    // sum alpha_i y_i = 0.
    double balance = 0.0;
    for (Eigen::Index i = 0; i < sol.alpha.size(); ++i)
        balance += sol.alpha(i) * static_cast<double>(y[static_cast<std::size_t>(i)]);
    CHECK(std::abs(balance) < 1e-6 * std::max(1.0, c));

    Eigen::VectorXd coef(sol.alpha.size());
    for (Eigen::Index i = 0; i < sol.alpha.size(); ++i)
        coef(i) = sol.alpha(i) * static_cast<double>(y[static_cast<std::size_t>(i)]);
    const Eigen::VectorXd f = gram * coef + Eigen::VectorXd::Constant(sol.alpha.size(), sol.bias);

    for (Eigen::Index i = 0; i < sol.alpha.size(); ++i) {
        const double margin = static_cast<double>(y[static_cast<std::size_t>(i)]) * f(i);
        if (sol.alpha(i) <= 1e-12)
            CHECK(margin >= 1.0 - tol - 1e-9);
        else if (sol.alpha(i) >= c - 1e-12)
            CHECK(margin <= 1.0 + tol + 1e-9);
        else
            CHECK(std::abs(margin - 1.0) <= tol + 1e-9);
    }
}

}  // namespace

TEST_CASE("two-point analytic solution: f(x) = x1, b = 0") {
    Eigen::MatrixXd x(2, 2);
    x << -1.0, 0.0, 1.0, 0.0;
    const std::vector<Label> y = {kNegative, kPositive};
    const auto model = train_svm(x, y, 1e6, linear_kernel(), 1e-4);

    CHECK(svm_decision(model, x.row(0).transpose()) == doctest::Approx(-1.0).epsilon(1e-3));
    CHECK(svm_decision(model, x.row(1).transpose()) == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(model.bias == doctest::Approx(0.0).epsilon(1e-3));

    Eigen::Vector2d midpoint(0.0, 0.0);
    CHECK(std::abs(svm_decision(model, midpoint)) < 1e-3);
    Eigen::Vector2d half(0.5, 0.0);
    CHECK(svm_decision(model, half) == doctest::Approx(0.5).epsilon(1e-3));

    // Margin condition at the free support vectors.
    for (Eigen::Index i = 0; i < 2; ++i)
        CHECK(std::abs(std::abs(svm_decision(model, x.row(i).transpose())) - 1.0) < 1e-3);
}

TEST_CASE("XOR with an RBF kernel reaches 100% training accuracy") {
    Eigen::MatrixXd x(4, 2);
    x << 0, 0, 1, 1, 0, 1, 1, 0;
    const std::vector<Label> y = {kPositive, kPositive, kNegative, kNegative};
    const auto model = train_svm(x, y, 1e6, rbf_kernel(1.0), 1e-4);
    for (Eigen::Index i = 0; i < 4; ++i)
        CHECK(svm_predict(model, x.row(i).transpose()) == y[static_cast<std::size_t>(i)]);
}

TEST_CASE("linearly separable blobs: zero hinge loss at the solution") {
    Rng rng(7);
    Eigen::MatrixXd x(40, 3);
    std::vector<Label> y;
    for (int i = 0; i < 40; ++i) {
        const bool positive = i % 2 == 0;
        for (int j = 0; j < 3; ++j)
            x(i, j) = rng.normal() + (positive ? 4.0 : -4.0) * (j == 0 ? 1.0 : 0.0);
        y.push_back(positive ? kPositive : kNegative);
    }
    const auto model = train_svm(x, y, 10.0, linear_kernel(), 1e-3);
    double hinge = 0.0;
    for (Eigen::Index i = 0; i < 40; ++i)
        hinge += std::max(0.0, 1.0 - static_cast<double>(y[static_cast<std::size_t>(i)]) *
                                         svm_decision(model, x.row(i).transpose()));
    CHECK(hinge < 1e-2);
}

TEST_CASE("KKT conditions hold on random separable and inseparable problems") {
    Rng rng(100);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 10 + static_cast<int>(rng.below(30));
        const int d = 2 + static_cast<int>(rng.below(4));
        const bool separable = trial % 2 == 0;
        const double separation = separable ? 6.0 : 0.5;
        Eigen::MatrixXd x(n, d);
        std::vector<Label> y;
        int n_pos = 0;
        for (int i = 0; i < n; ++i) {
            const bool positive = i % 2 == 0;
            n_pos += positive;
            for (int j = 0; j < d; ++j)
                x(i, j) = rng.normal() + (j == 0 ? (positive ? separation : -separation) : 0.0);
            y.push_back(positive ? kPositive : kNegative);
        }
        REQUIRE(n_pos >= 1);
        const double c = std::vector<double>{0.1, 1.0, 10.0}[trial % 3];
        const KernelSpec kernel = trial % 4 < 2 ? linear_kernel() : rbf_kernel(0.5 / d);
        check_kkt(x, y, c, kernel, 1e-3);
    }
}

TEST_CASE("gram matrices are symmetric PSD for both kernels") {
    Rng rng(55);
    Eigen::MatrixXd x(15, 4);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i / 4, i % 4) = rng.normal();
    for (const auto& kernel : {linear_kernel(), rbf_kernel(0.3)}) {
        const Eigen::MatrixXd gram = gram_matrix(x, kernel);
        CHECK((gram - gram.transpose()).cwiseAbs().maxCoeff() < 1e-12);
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
        CHECK(es.eigenvalues().minCoeff() >= -1e-8);
    }
}

TEST_CASE("decision ties at zero resolve to positive") {
    SVMModel empty;
    empty.kernel = linear_kernel();
    empty.support_vectors.resize(0, 2);
    empty.coefficients.resize(0);
    empty.bias = 0.0;
    Eigen::Vector2d x(1.0, 1.0);
    CHECK(svm_predict(empty, x) == kPositive);
}

TEST_CASE("scaling data and C together leaves decision signs unchanged") {
    Rng rng(77);
    const int n = 30;
    Eigen::MatrixXd x(n, 2);
    std::vector<Label> y;
    for (int i = 0; i < n; ++i) {
        const bool positive = i % 2 == 0;
        x(i, 0) = rng.normal() + (positive ? 2.0 : -2.0);
        x(i, 1) = rng.normal();
        y.push_back(positive ? kPositive : kNegative);
    }
    const auto base = train_svm(x, y, 1.0, linear_kernel(), 1e-4);

    // Linear kernel: scaling inputs by s and C by 1/s^2 rescales f by 1.
    const double s = 3.0;
    const auto scaled = train_svm(s * x, y, 1.0 / (s * s), linear_kernel(), 1e-4);
    Eigen::MatrixXd queries(5, 2);
    for (Eigen::Index i = 0; i < queries.size(); ++i)
        queries(i / 2, i % 2) = 4.0 * rng.normal();
    for (Eigen::Index q = 0; q < queries.rows(); ++q) {
        const double f_base = svm_decision(base, queries.row(q).transpose());
        const double f_scaled = svm_decision(scaled, (s * queries.row(q)).transpose());
        CHECK((f_base >= 0) == (f_scaled >= 0));
    }
}

TEST_CASE("train_svm rejects single-class input") {
    Eigen::MatrixXd x(3, 2);
    x.setRandom();
    const std::vector<Label> y = {kPositive, kPositive, kPositive};
    CHECK_THROWS_AS(train_svm(x, y, 1.0, linear_kernel()), ValidationError);
}

TEST_CASE("grid_search_select: single point, constructed winner, tie rule") {
    // 12 items, balanced classes.
    std::vector<Label> labels;
    for (int i = 0; i < 12; ++i) labels.push_back(i % 2 == 0 ? kPositive : kNegative);

    // Single-point grid returns that point.
    CHECK(grid_search_select(1, labels, 3, 5,
                             [&](int, const std::vector<int>&, const std::vector<int>& eval) {
                                 return std::vector<Label>(eval.size(), kPositive);
                             }) == 0);

    // Point 2 predicts perfectly, the others coin-flip to all-positive.
    const int best = grid_search_select(
        4, labels, 3, 5,
        [&](int point, const std::vector<int>&, const std::vector<int>& eval) {
            std::vector<Label> out;
            for (const int e : eval)
                out.push_back(point == 2 ? labels[static_cast<std::size_t>(e)] : kPositive);
            return out;
        });
    CHECK(best == 2);

    // Exact tie between points 0 and 1: the earlier (smaller C) wins.
    const int tie = grid_search_select(
        2, labels, 3, 5, [&](int, const std::vector<int>&, const std::vector<int>& eval) {
            std::vector<Label> out;
            for (const int e : eval) out.push_back(labels[static_cast<std::size_t>(e)]);
            return out;
        });
    CHECK(tie == 0);

    CHECK_THROWS_AS(grid_search_select(0, labels, 3, 5, {}), ValidationError);
}
