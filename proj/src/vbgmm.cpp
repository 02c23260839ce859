#include "milvb/vbgmm.hpp"

#include <cmath>
#include <iostream>

#include "milvb/kmeans.hpp"

namespace milvb {

namespace {

// digamma via recurrence into the asymptotic region.
double digamma(double x) {
    double result = 0.0;
    while (x < 6.0) {
        result -= 1.0 / x;
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    result += std::log(x) - 0.5 * inv -
              inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 / 252.0));
    return result;
}

// ln of the Wishart normalization constant B(W, nu).
double log_wishart_b(const Eigen::MatrixXd& w, double log_det_w, double nu) {
    const double d = static_cast<double>(w.rows());
    double sum_lgamma = 0.0;
    for (int i = 1; i <= w.rows(); ++i)
        sum_lgamma += std::lgamma(0.5 * (nu + 1.0 - static_cast<double>(i)));
    return -0.5 * nu * log_det_w - 0.5 * nu * d * std::log(2.0) -
           0.25 * d * (d - 1.0) * std::log(M_PI) - sum_lgamma;
}

struct ComponentState {
    double n = 0.0;             // responsibility mass N_k
    Eigen::VectorXd xbar;       // weighted mean
    Eigen::MatrixXd s;          // weighted scatter around xbar
    Eigen::MatrixXd w;          // posterior scale matrix W_k
    double log_det_w = 0.0;
    double log_lambda_tilde = 0.0;
    double log_pi_tilde = 0.0;
};

}  // namespace

VBGMMPrior VBGMMPrior::data_driven(const Eigen::MatrixXd& data, int k_init) {
    const Eigen::Index d = data.cols();
    VBGMMPrior prior;
    prior.alpha0 = 1.0 / static_cast<double>(k_init);
    prior.beta0 = 1.0;
    prior.m0 = data.colwise().mean();
    prior.nu0 = static_cast<double>(d) + 2.0;

    const Eigen::MatrixXd centered = data.rowwise() - prior.m0.transpose();
    Eigen::VectorXd var =
        centered.array().square().colwise().mean().matrix().cwiseMax(1e-12);
    prior.W0 = (var * prior.nu0).cwiseInverse().asDiagonal();
    return prior;
}

void VBGMMPrior::validate(Eigen::Index dim) const {
    if (alpha0 <= 0.0) throw ValidationError("alpha0 must be positive");
    if (beta0 <= 0.0) throw ValidationError("beta0 must be positive");
    if (m0.size() != dim) throw ValidationError("prior mean dimension mismatch");
    if (W0.rows() != dim || W0.cols() != dim) throw ValidationError("W0 dimension mismatch");
    if (!W0.isApprox(W0.transpose(), 1e-8)) throw ValidationError("W0 must be symmetric");
    if (nu0 <= static_cast<double>(dim) - 1.0)
        throw ValidationError("nu0 must exceed dim - 1");
    const Eigen::LLT<Eigen::MatrixXd> llt(W0);
    if (llt.info() != Eigen::Success)
        throw ValidationError("W0 must be positive definite");
}

Eigen::VectorXd VBGMMModel::expected_weights() const {
    Eigen::VectorXd w(static_cast<Eigen::Index>(components.size()));
    double total = 0.0;
    for (std::size_t k = 0; k < components.size(); ++k) total += components[k].alpha;
    for (std::size_t k = 0; k < components.size(); ++k)
        w(static_cast<Eigen::Index>(k)) = components[k].alpha / total;
    return w;
}

VBGMMModel vbgmm_fit(const Eigen::MatrixXd& data, const VBGMMFitConfig& cfg) {
    const Eigen::Index n = data.rows();
    const Eigen::Index d = data.cols();
    const int k = cfg.k_init;
    if (k < 1) throw ValidationError("K_init must be >= 1");
    if (n < k) throw ValidationError("need at least K_init rows, got " + std::to_string(n));

    const VBGMMPrior prior = cfg.prior ? *cfg.prior : VBGMMPrior::data_driven(data, k);
    prior.validate(d);
    const Eigen::MatrixXd w0_inv =
        Eigen::LLT<Eigen::MatrixXd>(prior.W0).solve(Eigen::MatrixXd::Identity(d, d));
    const double dd = static_cast<double>(d);
    const double nn = static_cast<double>(n);

    // Hard k-means assignment as the initial responsibilities.
    Eigen::MatrixXd resp = Eigen::MatrixXd::Zero(n, k);
    const auto assignment = kmeans_assign(data, k);
    for (Eigen::Index i = 0; i < n; ++i) resp(i, assignment[static_cast<std::size_t>(i)]) = 1.0;

    std::vector<ComponentState> states(static_cast<std::size_t>(k));
    std::vector<VBGMMComponent> comps(static_cast<std::size_t>(k));
    double alpha_sum = 0.0;

    const auto m_step = [&]() {
        for (int j = 0; j < k; ++j) {
            auto& st = states[static_cast<std::size_t>(j)];
            st.n = resp.col(j).sum();
            if (st.n > 1e-12) {
                st.xbar = (resp.col(j).transpose() * data).transpose() / st.n;
                const Eigen::MatrixXd centered = data.rowwise() - st.xbar.transpose();
                st.s = centered.transpose() *
                       resp.col(j).asDiagonal() * centered / st.n;
            } else {
                st.xbar = prior.m0;
                st.s = Eigen::MatrixXd::Zero(d, d);
            }

            auto& c = comps[static_cast<std::size_t>(j)];
            c.alpha = prior.alpha0 + st.n;
            c.beta = prior.beta0 + st.n;
            c.nu = prior.nu0 + st.n;
            c.m = (prior.beta0 * prior.m0 + st.n * st.xbar) / c.beta;
            const Eigen::VectorXd dm = st.xbar - prior.m0;
            Eigen::MatrixXd w_inv = w0_inv + st.n * st.s +
                                    (prior.beta0 * st.n / (prior.beta0 + st.n)) * dm *
                                        dm.transpose();

            Eigen::LLT<Eigen::MatrixXd> llt(w_inv);
            if (llt.info() != Eigen::Success) {
                // Singular scatter update: regularize and continue.
                std::cerr << "milvb: vbgmm scale update singular for component " << j
                          << ", adding 1e-8 jitter\n";
                w_inv += 1e-8 * w_inv.trace() / dd * Eigen::MatrixXd::Identity(d, d) +
                         1e-12 * Eigen::MatrixXd::Identity(d, d);
                llt.compute(w_inv);
                if (llt.info() != Eigen::Success)
                    throw DataError("vbgmm scale update not positive definite after jitter");
            }
            double log_det_w_inv = 0.0;
            for (Eigen::Index i = 0; i < d; ++i)
                log_det_w_inv += 2.0 * std::log(llt.matrixL()(i, i));
            st.w = llt.solve(Eigen::MatrixXd::Identity(d, d));
            c.W = st.w;
            st.log_det_w = -log_det_w_inv;
        }
        alpha_sum = 0.0;
        for (const auto& c : comps) alpha_sum += c.alpha;
        for (int j = 0; j < k; ++j) {
            auto& st = states[static_cast<std::size_t>(j)];
            const auto& c = comps[static_cast<std::size_t>(j)];
            st.log_pi_tilde = digamma(c.alpha) - digamma(alpha_sum);
            double acc = dd * std::log(2.0) + st.log_det_w;
            for (int i = 1; i <= d; ++i)
                acc += digamma(0.5 * (c.nu + 1.0 - static_cast<double>(i)));
            st.log_lambda_tilde = acc;
        }
    };

    const auto e_step = [&]() {
        Eigen::MatrixXd log_rho(n, k);
        for (int j = 0; j < k; ++j) {
            const auto& st = states[static_cast<std::size_t>(j)];
            const auto& c = comps[static_cast<std::size_t>(j)];
            const Eigen::MatrixXd centered = data.rowwise() - c.m.transpose();
            const Eigen::VectorXd quad =
                ((centered * st.w).cwiseProduct(centered)).rowwise().sum();
            log_rho.col(j) =
                (st.log_pi_tilde + 0.5 * st.log_lambda_tilde - 0.5 * dd * std::log(2.0 * M_PI) -
                 0.5 * dd / c.beta) -
                (0.5 * c.nu) * quad.array();
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            const double mx = log_rho.row(i).maxCoeff();
            Eigen::ArrayXd ex = (log_rho.row(i).transpose().array() - mx).exp();
            resp.row(i) = (ex / ex.sum()).transpose();
        }
    };

    const auto elbo = [&]() {
        double term_px = 0.0, term_pz = 0.0, term_qz = 0.0;
        double term_ppi, term_qpi;
        double term_pmu = 0.0, term_qmu = 0.0;

        for (int j = 0; j < k; ++j) {
            const auto& st = states[static_cast<std::size_t>(j)];
            const auto& c = comps[static_cast<std::size_t>(j)];
            const Eigen::VectorXd dxm = st.xbar - c.m;
            term_px += 0.5 * st.n *
                       (st.log_lambda_tilde - dd / c.beta -
                        c.nu * (st.s * st.w).trace() -
                        c.nu * dxm.dot(st.w * dxm) - dd * std::log(2.0 * M_PI));

            term_pz += st.n * st.log_pi_tilde;

            const Eigen::VectorXd dm0 = c.m - prior.m0;
            term_pmu += 0.5 * (dd * std::log(prior.beta0 / (2.0 * M_PI)) +
                               st.log_lambda_tilde - dd * prior.beta0 / c.beta -
                               prior.beta0 * c.nu * dm0.dot(st.w * dm0)) +
                        0.5 * (prior.nu0 - dd - 1.0) * st.log_lambda_tilde -
                        0.5 * c.nu * (w0_inv * st.w).trace();

            const double entropy_wishart =
                -log_wishart_b(st.w, st.log_det_w, c.nu) -
                0.5 * (c.nu - dd - 1.0) * st.log_lambda_tilde + 0.5 * c.nu * dd;
            term_qmu += 0.5 * st.log_lambda_tilde +
                        0.5 * dd * std::log(c.beta / (2.0 * M_PI)) - 0.5 * dd -
                        entropy_wishart;
        }
        // ln B(W0, nu0) enters once per component.
        const Eigen::LLT<Eigen::MatrixXd> llt0(prior.W0);
        double log_det_w0 = 0.0;
        for (Eigen::Index i = 0; i < d; ++i) log_det_w0 += 2.0 * std::log(llt0.matrixL()(i, i));
        term_pmu += static_cast<double>(k) * log_wishart_b(prior.W0, log_det_w0, prior.nu0);

        double sum_log_pi = 0.0;
        for (int j = 0; j < k; ++j) sum_log_pi += states[static_cast<std::size_t>(j)].log_pi_tilde;
        term_ppi = std::lgamma(static_cast<double>(k) * prior.alpha0) -
                   static_cast<double>(k) * std::lgamma(prior.alpha0) +
                   (prior.alpha0 - 1.0) * sum_log_pi;

        term_qpi = std::lgamma(alpha_sum);
        for (int j = 0; j < k; ++j) {
            const auto& c = comps[static_cast<std::size_t>(j)];
            term_qpi -= std::lgamma(c.alpha);
            term_qpi += (c.alpha - 1.0) * states[static_cast<std::size_t>(j)].log_pi_tilde;
        }

        for (Eigen::Index i = 0; i < n; ++i)
            for (int j = 0; j < k; ++j) {
                const double g = resp(i, j);
                if (g > 0.0) term_qz += g * std::log(g);
            }

        return term_px + term_pz + term_ppi + term_pmu - term_qz - term_qpi - term_qmu;
    };
    (void)nn;

    VBGMMModel model;
    model.k_init = k;
    model.prior = prior;

    m_step();
    double prev = -std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < cfg.max_iter; ++iter) {
        e_step();
        m_step();
        const double current = elbo();
        model.elbo_trace.push_back(current);
        model.iterations = iter + 1;
        if (iter > 0 && std::abs(current - prev) < cfg.tol * (1.0 + std::abs(current))) {
            model.converged = true;
            prev = current;
            break;
        }
        prev = current;
    }

    model.components = comps;
    model.surviving.resize(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) model.surviving[static_cast<std::size_t>(j)] = j;
    return model;
}

VBGMMModel vbgmm_prune(const VBGMMModel& model, double threshold) {
    if (model.components.empty()) throw ValidationError("cannot prune an unfitted model");
    const Eigen::VectorXd weights = model.expected_weights();

    VBGMMModel pruned = model;
    pruned.surviving.clear();
    for (Eigen::Index j = 0; j < weights.size(); ++j)
        if (weights(j) >= threshold) pruned.surviving.push_back(static_cast<int>(j));
    if (pruned.surviving.empty()) {
        Eigen::Index argmax = 0;
        weights.maxCoeff(&argmax);
        pruned.surviving.push_back(static_cast<int>(argmax));
    }
    return pruned;
}

Eigen::VectorXd vbgmm_responsibilities(const VBGMMModel& model, const Eigen::VectorXd& x) {
    if (model.components.empty() || model.surviving.empty())
        throw ValidationError("model is not fitted/pruned");
    if (x.size() != model.dim())
        throw ValidationError("instance dimension " + std::to_string(x.size()) +
                              " does not match model dimension " + std::to_string(model.dim()));

    const double dd = static_cast<double>(model.dim());
    double alpha_sum = 0.0;
    for (const auto& c : model.components) alpha_sum += c.alpha;

    const auto k_star = static_cast<Eigen::Index>(model.surviving.size());
    Eigen::VectorXd log_rho(k_star);
    for (Eigen::Index idx = 0; idx < k_star; ++idx) {
        const auto& c = model.components[static_cast<std::size_t>(
            model.surviving[static_cast<std::size_t>(idx)])];
        const Eigen::LLT<Eigen::MatrixXd> llt(c.W);
        double log_det_w = 0.0;
        for (Eigen::Index i = 0; i < c.W.rows(); ++i)
            log_det_w += 2.0 * std::log(llt.matrixL()(i, i));
        double log_lambda = dd * std::log(2.0) + log_det_w;
        for (int i = 1; i <= c.W.rows(); ++i)
            log_lambda += digamma(0.5 * (c.nu + 1.0 - static_cast<double>(i)));
        const Eigen::VectorXd diff = x - c.m;
        log_rho(idx) = digamma(c.alpha) - digamma(alpha_sum) + 0.5 * log_lambda -
                       0.5 * dd * std::log(2.0 * M_PI) - 0.5 * dd / c.beta -
                       0.5 * c.nu * diff.dot(c.W * diff);
    }
    const double mx = log_rho.maxCoeff();
    Eigen::VectorXd gamma = (log_rho.array() - mx).exp();
    return gamma / gamma.sum();
}

}  // namespace milvb
