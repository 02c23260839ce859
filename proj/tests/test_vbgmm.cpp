#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "milvb/rng.hpp"
#include "milvb/vbgmm.hpp"

using namespace milvb;

namespace {

Eigen::MatrixXd gaussian_blobs(Rng& rng, const std::vector<Eigen::VectorXd>& centers,
                               int per_cluster, double stddev) {
    const auto dim = centers.front().size();
    Eigen::MatrixXd data(static_cast<Eigen::Index>(centers.size()) * per_cluster, dim);
    Eigen::Index row = 0;
    for (const auto& center : centers)
        for (int i = 0; i < per_cluster; ++i) {
            for (Eigen::Index j = 0; j < dim; ++j)
                data(row, j) = center(j) + stddev * rng.normal();
            ++row;
        }
    return data;
}

std::vector<Eigen::VectorXd> separated_centers(int count, int dim, double distance) {
    std::vector<Eigen::VectorXd> centers;
    for (int c = 0; c < count; ++c) {
        Eigen::VectorXd center = Eigen::VectorXd::Zero(dim);
        center(c % dim) = distance * (1 + c / dim);
        centers.push_back(center);
    }
    return centers;
}

void check_elbo_monotone(const VBGMMModel& model) {
    for (std::size_t i = 1; i < model.elbo_trace.size(); ++i) {
        const double slack = 1e-8 * std::abs(model.elbo_trace[i - 1]);
        CHECK(model.elbo_trace[i] >= model.elbo_trace[i - 1] - slack);
    }
}

}  // namespace

TEST_CASE("single Gaussian with K_init=5 collapses to K*=1 after pruning") {
    Rng rng(11);
    const auto data = gaussian_blobs(rng, {Eigen::VectorXd::Zero(3)}, 200, 1.0);
    VBGMMFitConfig cfg;
    cfg.k_init = 5;
    cfg.seed = 1;
    const auto model = vbgmm_fit(data, cfg);
    check_elbo_monotone(model);
    const auto pruned = vbgmm_prune(model, 0.01);
    CHECK(pruned.k_star() == 1);
}

TEST_CASE("three well-separated Gaussians are recovered with K*=3") {
    Rng rng(13);
    const double stddev = 1.0;
    const auto centers = separated_centers(3, 5, 10.0);  // >= 10 sigma apart
    const auto data = gaussian_blobs(rng, centers, 100, stddev);

    VBGMMFitConfig cfg;
    cfg.k_init = 10;
    cfg.seed = 2;
    const auto model = vbgmm_fit(data, cfg);
    check_elbo_monotone(model);
    const auto pruned = vbgmm_prune(model, 0.01);
    REQUIRE(pruned.k_star() == 3);

    // Each true center is matched by a surviving posterior mean within 0.5 sigma.
    for (const auto& center : centers) {
        double best = 1e300;
        for (const int k : pruned.surviving)
            best = std::min(best,
                            (pruned.components[static_cast<std::size_t>(k)].m - center).norm());
        CHECK(best < 0.5 * stddev);
    }
}

TEST_CASE("responsibility mass conservation: sum(alpha_k - alpha0) = N") {
    Rng rng(17);
    const auto data = gaussian_blobs(rng, separated_centers(2, 4, 8.0), 60, 1.0);
    VBGMMFitConfig cfg;
    cfg.k_init = 6;
    const auto model = vbgmm_fit(data, cfg);
    double mass = 0.0;
    for (const auto& c : model.components) mass += c.alpha - model.prior.alpha0;
    CHECK(mass == doctest::Approx(120.0).epsilon(1e-6));

    // Expected weights sum to 1 over all components.
    CHECK(model.expected_weights().sum() == doctest::Approx(1.0));
}

TEST_CASE("training responsibilities sum to one") {
    Rng rng(19);
    const auto data = gaussian_blobs(rng, separated_centers(2, 3, 6.0), 40, 1.0);
    VBGMMFitConfig cfg;
    cfg.k_init = 4;
    const auto model = vbgmm_fit(data, cfg);
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        const auto gamma = vbgmm_responsibilities(model, data.row(i).transpose());
        CHECK(gamma.sum() == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(gamma.minCoeff() >= 0.0);
    }
}

TEST_CASE("fit is permutation-equivariant up to component relabeling") {
    Rng rng(23);
    const auto data = gaussian_blobs(rng, separated_centers(3, 4, 9.0), 50, 1.0);
    VBGMMFitConfig cfg;
    cfg.k_init = 6;
    const auto model_a = vbgmm_fit(data, cfg);

    // Reverse the rows.
    Eigen::MatrixXd reversed = data.colwise().reverse();
    const auto model_b = vbgmm_fit(reversed, cfg);

    auto weights_a = model_a.expected_weights();
    auto weights_b = model_b.expected_weights();
    std::sort(weights_a.begin(), weights_a.end());
    std::sort(weights_b.begin(), weights_b.end());
    for (Eigen::Index k = 0; k < weights_a.size(); ++k)
        CHECK(weights_a(k) == doctest::Approx(weights_b(k)).epsilon(1e-6));

    // Every component mean of A appears among B's means.
    for (const auto& ca : model_a.components) {
        double best = 1e300;
        for (const auto& cb : model_b.components) best = std::min(best, (ca.m - cb.m).norm());
        CHECK(best < 1e-5);
    }
}

TEST_CASE("prune thresholds on expected weights") {
    // Hand-built model: weights are alpha-proportional.
    const auto make_model = [](const std::vector<double>& weights) {
        VBGMMModel model;
        model.k_init = static_cast<int>(weights.size());
        for (const double w : weights) {
            VBGMMComponent c;
            c.alpha = w * 1000.0;
            c.beta = 1.0;
            c.nu = 3.0;
            c.m = Eigen::VectorXd::Zero(2);
            c.W = Eigen::MatrixXd::Identity(2, 2);
            model.components.push_back(c);
        }
        for (int k = 0; k < model.k_init; ++k) model.surviving.push_back(k);
        return model;
    };

    CHECK(vbgmm_prune(make_model({0.5, 0.495, 0.005}), 0.01).k_star() == 2);
    CHECK(vbgmm_prune(make_model({0.25, 0.25, 0.25, 0.25}), 0.01).k_star() == 4);
    const auto dominant = vbgmm_prune(make_model({0.004, 0.003, 0.993}), 0.01);
    REQUIRE(dominant.k_star() == 1);
    CHECK(dominant.surviving[0] == 2);

    // All below threshold: the argmax survives.
    const auto argmax_only = vbgmm_prune(make_model({0.2, 0.5, 0.3}), 0.9);
    REQUIRE(argmax_only.k_star() == 1);
    CHECK(argmax_only.surviving[0] == 1);
}

TEST_CASE("responsibilities: dominant isolated component and K*=1 edge") {
    Rng rng(29);
    const auto centers = separated_centers(2, 3, 12.0);
    const auto data = gaussian_blobs(rng, centers, 80, 1.0);
    VBGMMFitConfig cfg;
    cfg.k_init = 8;
    const auto pruned = vbgmm_prune(vbgmm_fit(data, cfg), 0.01);
    REQUIRE(pruned.k_star() == 2);

    // Query exactly at a component mean: responsibility > 0.99 there.
    for (const int k : pruned.surviving) {
        const auto gamma =
            vbgmm_responsibilities(pruned, pruned.components[static_cast<std::size_t>(k)].m);
        CHECK(gamma.maxCoeff() > 0.99);
    }

    // Restrict to one component: gamma = (1.0).
    auto single = pruned;
    single.surviving = {pruned.surviving[0]};
    const auto gamma = vbgmm_responsibilities(single, data.row(0).transpose());
    REQUIRE(gamma.size() == 1);
    CHECK(gamma(0) == doctest::Approx(1.0));
}

TEST_CASE("input validation: K_init bounds, dimension mismatch, non-PD W0") {
    Rng rng(31);
    const auto data = gaussian_blobs(rng, {Eigen::VectorXd::Zero(3)}, 10, 1.0);

    VBGMMFitConfig too_many;
    too_many.k_init = 11;
    CHECK_THROWS_AS(vbgmm_fit(data, too_many), ValidationError);

    VBGMMFitConfig bad_prior;
    bad_prior.k_init = 2;
    VBGMMPrior prior = VBGMMPrior::data_driven(data, 2);
    prior.W0 = -Eigen::MatrixXd::Identity(3, 3);  // not PD
    bad_prior.prior = prior;
    CHECK_THROWS_AS(vbgmm_fit(data, bad_prior), ValidationError);

    VBGMMFitConfig ok;
    ok.k_init = 2;
    const auto model = vbgmm_fit(data, ok);
    Eigen::VectorXd wrong(4);
    wrong.setZero();
    CHECK_THROWS_AS(vbgmm_responsibilities(model, wrong), ValidationError);
}
