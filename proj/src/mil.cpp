#include "milvb/mil.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <sstream>

#include "milvb/binio.hpp"
#include "milvb/rng.hpp"

namespace milvb {

const char* mil_method_name(MILMethodKind kind) {
    switch (kind) {
        case MILMethodKind::MiVbgmm: return "mivbgmm";
        case MILMethodKind::Cknn: return "cknn";
        case MILMethodKind::MiSvmInstance: return "misvm";
        case MILMethodKind::MiSvmBag: return "MISVM";
    }
    return "unknown";
}

MILMethodKind mil_method_from_name(const std::string& name) {
    if (name == "mivbgmm") return MILMethodKind::MiVbgmm;
    if (name == "cknn") return MILMethodKind::Cknn;
    if (name == "misvm") return MILMethodKind::MiSvmInstance;
    if (name == "MISVM") return MILMethodKind::MiSvmBag;
    throw ValidationError("unknown MIL method '" + name + "'");
}

Label bag_label_from_instances(const std::vector<Label>& labels) {
    if (labels.empty()) throw ValidationError("instance label list is empty");
    for (const Label l : labels)
        if (l == kPositive) return kPositive;
    return kNegative;
}

Eigen::MatrixXd bag_matrix(const Bag& bag) {
    if (bag.instances.empty()) throw ValidationError("bag '" + bag.bag_id + "' is empty");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(bag.size()),
                      static_cast<Eigen::Index>(bag.instances.front().values.size()));
    for (std::size_t i = 0; i < bag.size(); ++i)
        for (std::size_t j = 0; j < bag.instances[i].values.size(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                bag.instances[i].values[j];
    return m;
}

BagEmbedding embed_from_responsibilities(const Eigen::MatrixXd& gamma_rows) {
    if (gamma_rows.rows() < 1) throw ValidationError("cannot embed an empty bag");
    BagEmbedding emb;
    // Each responsibility row sums to 1, so the raw sums total m_i and the
    // L1 normalizer is 1/m_i.
    emb.normalizer = 1.0 / static_cast<double>(gamma_rows.rows());
    emb.z = gamma_rows.colwise().sum().transpose() * emb.normalizer;
    return emb;
}

BagEmbedding embed_bag(const VBGMMModel& model, const Eigen::MatrixXd& instances) {
    if (instances.rows() < 1) throw ValidationError("cannot embed an empty bag");
    Eigen::MatrixXd gamma(instances.rows(), model.k_star());
    for (Eigen::Index i = 0; i < instances.rows(); ++i)
        gamma.row(i) = vbgmm_responsibilities(model, instances.row(i).transpose()).transpose();
    return embed_from_responsibilities(gamma);
}

BagEmbedding embed_bag(const VBGMMModel& model, const Bag& bag) {
    return embed_bag(model, bag_matrix(bag));
}

double min_hausdorff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    if (a.rows() < 1 || b.rows() < 1) throw ValidationError("min_hausdorff on empty bag");
    if (a.cols() != b.cols()) throw ValidationError("min_hausdorff dimension mismatch");
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < b.rows(); ++j)
            best = std::min(best, (a.row(i) - b.row(j)).squaredNorm());
    return std::sqrt(best);
}

double min_hausdorff(const Bag& a, const Bag& b) {
    return min_hausdorff(bag_matrix(a), bag_matrix(b));
}

BagPrediction cknn_predict(const std::vector<Eigen::MatrixXd>& train_bags,
                           const std::vector<Label>& train_labels,
                           const Eigen::MatrixXd& query, int r_neighbors, int c_citers) {
    const int n = static_cast<int>(train_bags.size());
    if (n < 1) throw ValidationError("cknn needs a non-empty training set");
    if (r_neighbors < 1 || c_citers < 0) throw ValidationError("cknn requires R >= 1, C >= 0");
    if (r_neighbors > n) {
        std::cerr << "milvb: cknn R=" << r_neighbors << " clamped to " << n << " training bags\n";
        r_neighbors = n;
    }

    std::vector<double> query_dist(static_cast<std::size_t>(n));
    for (int t = 0; t < n; ++t)
        query_dist[static_cast<std::size_t>(t)] =
            min_hausdorff(train_bags[static_cast<std::size_t>(t)], query);

    // References: the R nearest training bags (ties by index).
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int t = 0; t < n; ++t) order[static_cast<std::size_t>(t)] = t;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return query_dist[static_cast<std::size_t>(a)] < query_dist[static_cast<std::size_t>(b)];
    });

    int pos = 0, neg = 0;
    for (int k = 0; k < r_neighbors; ++k)
        (train_labels[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] == kPositive
             ? pos
             : neg) += 1;

    // Citers: training bags that rank the query within their own C nearest
    // neighbors (among the other training bags plus the query; distance ties
    // rank training bags ahead of the query).
    if (c_citers > 0) {
        for (int t = 0; t < n; ++t) {
            int closer = 0;
            for (int u = 0; u < n; ++u) {
                if (u == t) continue;
                if (min_hausdorff(train_bags[static_cast<std::size_t>(t)],
                                  train_bags[static_cast<std::size_t>(u)]) <=
                    query_dist[static_cast<std::size_t>(t)])
                    ++closer;
            }
            if (closer < c_citers)
                (train_labels[static_cast<std::size_t>(t)] == kPositive ? pos : neg) += 1;
        }
    }

    BagPrediction out;
    out.label = pos > neg ? kPositive : kNegative;  // ties conservative to negative
    const int total = pos + neg;
    out.score = total > 0 ? static_cast<double>(pos - neg) / static_cast<double>(total) : 0.0;
    return out;
}

namespace {

struct GridPoint {
    double c = 1.0;
    double gamma = 0.0;
};

// (smaller C, then smaller gamma) enumeration order, which grid_search_select
// relies on for its tie rule.
std::vector<GridPoint> svm_grid(const SVMSearchConfig& cfg, Eigen::Index dim) {
    std::vector<GridPoint> grid;
    if (cfg.c_grid.empty()) throw ValidationError("SVM C grid is empty");
    auto cs = cfg.c_grid;
    std::sort(cs.begin(), cs.end());
    if (cfg.kernel == KernelKind::Linear) {
        for (const double c : cs) grid.push_back({c, 0.0});
    } else {
        auto gs = cfg.gamma_scale_grid;
        if (gs.empty()) throw ValidationError("SVM gamma grid is empty");
        std::sort(gs.begin(), gs.end());
        for (const double c : cs)
            for (const double g : gs)
                grid.push_back({c, g / static_cast<double>(dim)});
    }
    return grid;
}

KernelSpec make_kernel(KernelKind kind, double gamma) {
    KernelSpec spec;
    spec.kind = kind;
    spec.gamma = gamma;
    return spec;
}

std::vector<Label> dataset_labels(const Dataset& ds) {
    std::vector<Label> labels;
    labels.reserve(ds.n_bags());
    for (const auto& bag : ds.bags) {
        if (!bag.label) throw DataError("bag '" + bag.bag_id + "' is unlabeled");
        labels.push_back(*bag.label);
    }
    return labels;
}

std::vector<Eigen::MatrixXd> dataset_matrices(const Dataset& ds) {
    std::vector<Eigen::MatrixXd> out;
    out.reserve(ds.n_bags());
    for (const auto& bag : ds.bags) out.push_back(bag_matrix(bag));
    return out;
}

// Shared state for the mi-SVM working-label loop on a fixed pooled matrix.
struct PooledInstances {
    Eigen::MatrixXd x;
    std::vector<int> bag_of_row;
    std::vector<std::pair<int, int>> bag_row_range;  // [begin, end) per bag

    static PooledInstances build(const std::vector<Eigen::MatrixXd>& bags) {
        PooledInstances p;
        Eigen::Index rows = 0;
        for (const auto& b : bags) rows += b.rows();
        p.x.resize(rows, bags.front().cols());
        Eigen::Index at = 0;
        for (std::size_t b = 0; b < bags.size(); ++b) {
            p.bag_row_range.push_back({static_cast<int>(at), static_cast<int>(at + bags[b].rows())});
            for (Eigen::Index r = 0; r < bags[b].rows(); ++r) {
                p.x.row(at) = bags[b].row(r);
                p.bag_of_row.push_back(static_cast<int>(b));
                ++at;
            }
        }
        return p;
    }
};

struct MiSvmFit {
    Eigen::VectorXd alpha;
    double bias = 0.0;
    std::vector<Label> working;  // per pooled row
    int iterations = 0;
    bool converged = false;
};

// mi-SVM inner loop: train on working labels, relabel positive-bag instances
// by decision sign, force the argmax instance positive in positive bags that
// lost all positives, repeat until stable.
MiSvmFit misvm_instance_loop(const PooledInstances& pooled, const std::vector<Label>& bag_labels,
                             double c, const KernelSpec& kernel, double tol, int max_iter) {
    const Eigen::Index n = pooled.x.rows();
    const Eigen::MatrixXd gram = gram_matrix(pooled.x, kernel);

    MiSvmFit fit;
    fit.working.resize(static_cast<std::size_t>(n));
    for (Eigen::Index r = 0; r < n; ++r)
        fit.working[static_cast<std::size_t>(r)] =
            bag_labels[static_cast<std::size_t>(pooled.bag_of_row[static_cast<std::size_t>(r)])];

    for (int iter = 0; iter < max_iter; ++iter) {
        const DualSolution sol = solve_svm_dual(gram, fit.working, c, tol);
        Eigen::VectorXd coef(n);
        for (Eigen::Index r = 0; r < n; ++r)
            coef(r) = sol.alpha(r) * static_cast<double>(fit.working[static_cast<std::size_t>(r)]);
        const Eigen::VectorXd decisions =
            gram * coef + Eigen::VectorXd::Constant(n, sol.bias);

        std::vector<Label> next = fit.working;
        for (std::size_t b = 0; b < bag_labels.size(); ++b) {
            if (bag_labels[b] == kNegative) continue;  // negative bags never change
            const auto [begin, end] = pooled.bag_row_range[b];
            bool any_positive = false;
            for (int r = begin; r < end; ++r) {
                next[static_cast<std::size_t>(r)] =
                    decisions(r) >= 0.0 ? kPositive : kNegative;
                any_positive |= next[static_cast<std::size_t>(r)] == kPositive;
            }
            if (!any_positive) {
                int argmax = begin;
                for (int r = begin + 1; r < end; ++r)
                    if (decisions(r) > decisions(argmax)) argmax = r;
                next[static_cast<std::size_t>(argmax)] = kPositive;
            }
        }

        fit.alpha = sol.alpha;
        fit.bias = sol.bias;
        fit.iterations = iter + 1;
        if (next == fit.working) {
            fit.converged = true;
            break;
        }
        fit.working = next;
    }
    return fit;
}

SVMModel assemble_model(const Eigen::MatrixXd& x, const std::vector<Label>& y,
                        const Eigen::VectorXd& alpha, double bias, const KernelSpec& kernel,
                        double c) {
    SVMModel model;
    model.kernel = kernel;
    model.c = c;
    model.bias = bias;
    std::vector<Eigen::Index> support;
    for (Eigen::Index i = 0; i < alpha.size(); ++i)
        if (alpha(i) > 0.0) support.push_back(i);
    model.support_vectors.resize(static_cast<Eigen::Index>(support.size()), x.cols());
    model.coefficients.resize(static_cast<Eigen::Index>(support.size()));
    for (std::size_t s = 0; s < support.size(); ++s) {
        model.support_vectors.row(static_cast<Eigen::Index>(s)) = x.row(support[s]);
        model.coefficients(static_cast<Eigen::Index>(s)) =
            alpha(support[s]) * static_cast<double>(y[static_cast<std::size_t>(support[s])]);
    }
    return model;
}

struct MiSvmBagFit {
    SVMModel model;
    std::vector<int> witness_index;  // per bag; -1 for negative bags
    int iterations = 0;
    bool converged = false;
};

// MI-SVM: represent each positive bag by a single witness, initially the bag
// mean, re-selected as the argmax-decision instance after each round.
MiSvmBagFit misvm_bag_loop(const std::vector<Eigen::MatrixXd>& bags,
                           const std::vector<Label>& bag_labels, double c,
                           const KernelSpec& kernel, double tol, int max_iter) {
    const Eigen::Index dim = bags.front().cols();
    std::vector<std::size_t> positive_bags;
    Eigen::Index n_negative_rows = 0;
    for (std::size_t b = 0; b < bags.size(); ++b) {
        if (bag_labels[b] == kPositive)
            positive_bags.push_back(b);
        else
            n_negative_rows += bags[b].rows();
    }

    Eigen::MatrixXd witnesses(static_cast<Eigen::Index>(positive_bags.size()), dim);
    for (std::size_t p = 0; p < positive_bags.size(); ++p)
        witnesses.row(static_cast<Eigen::Index>(p)) = bags[positive_bags[p]].colwise().mean();

    MiSvmBagFit fit;
    fit.witness_index.assign(bags.size(), -1);

    Eigen::MatrixXd x(static_cast<Eigen::Index>(positive_bags.size()) + n_negative_rows, dim);
    std::vector<Label> y;
    y.reserve(static_cast<std::size_t>(x.rows()));
    for (std::size_t p = 0; p < positive_bags.size(); ++p) y.push_back(kPositive);
    {
        Eigen::Index at = static_cast<Eigen::Index>(positive_bags.size());
        for (std::size_t b = 0; b < bags.size(); ++b) {
            if (bag_labels[b] == kPositive) continue;
            for (Eigen::Index r = 0; r < bags[b].rows(); ++r) {
                x.row(at++) = bags[b].row(r);
                y.push_back(kNegative);
            }
        }
    }

    for (int iter = 0; iter < max_iter; ++iter) {
        x.topRows(static_cast<Eigen::Index>(positive_bags.size())) = witnesses;
        fit.model = train_svm(x, y, c, kernel, tol);
        fit.iterations = iter + 1;

        bool stable = iter > 0;  // first selection always counts as a change
        for (std::size_t p = 0; p < positive_bags.size(); ++p) {
            const auto& bag = bags[positive_bags[p]];
            int argmax = 0;
            double best = -std::numeric_limits<double>::infinity();
            for (Eigen::Index r = 0; r < bag.rows(); ++r) {
                const double d = svm_decision(fit.model, bag.row(r).transpose());
                if (d > best) {
                    best = d;
                    argmax = static_cast<int>(r);
                }
            }
            if (fit.witness_index[positive_bags[p]] != argmax) stable = false;
            fit.witness_index[positive_bags[p]] = argmax;
            witnesses.row(static_cast<Eigen::Index>(p)) = bag.row(argmax);
        }
        if (stable) {
            fit.converged = true;
            break;
        }
    }
    return fit;
}

}  // namespace

MILClassifier mivbgmm_train(const Dataset& train, const MILTrainConfig& cfg) {
    const auto labels = dataset_labels(train);

    VBGMMFitConfig fit_cfg;
    fit_cfg.k_init = cfg.vbgmm.k_init;
    fit_cfg.tol = cfg.vbgmm.tol;
    fit_cfg.max_iter = cfg.vbgmm.max_iter;
    fit_cfg.seed = stage_seed(cfg.seed, "vbgmm");

    MILClassifier clf;
    clf.kind = MILMethodKind::MiVbgmm;
    clf.kernel = cfg.svm.kernel;
    clf.vbgmm = vbgmm_prune(vbgmm_fit(train.pooled_instances(), fit_cfg),
                            cfg.vbgmm.prune_threshold);

    Eigen::MatrixXd z(static_cast<Eigen::Index>(train.n_bags()), clf.vbgmm.k_star());
    for (std::size_t b = 0; b < train.n_bags(); ++b)
        z.row(static_cast<Eigen::Index>(b)) = embed_bag(clf.vbgmm, train.bags[b]).z.transpose();

    const auto grid = svm_grid(cfg.svm, z.cols());
    const int best = grid_search_select(
        static_cast<int>(grid.size()), labels, cfg.inner_k, stage_seed(cfg.seed, "gridsearch"),
        [&](int point, const std::vector<int>& train_items, const std::vector<int>& eval_items) {
            Eigen::MatrixXd xt(static_cast<Eigen::Index>(train_items.size()), z.cols());
            std::vector<Label> yt;
            for (std::size_t i = 0; i < train_items.size(); ++i) {
                xt.row(static_cast<Eigen::Index>(i)) = z.row(train_items[i]);
                yt.push_back(labels[static_cast<std::size_t>(train_items[i])]);
            }
            const auto model = train_svm(xt, yt, grid[static_cast<std::size_t>(point)].c,
                                         make_kernel(cfg.svm.kernel,
                                                     grid[static_cast<std::size_t>(point)].gamma),
                                         cfg.svm.tol);
            std::vector<Label> predicted;
            for (const int e : eval_items)
                predicted.push_back(svm_predict(model, z.row(e).transpose()));
            return predicted;
        });

    clf.chosen_c = grid[static_cast<std::size_t>(best)].c;
    clf.chosen_gamma = grid[static_cast<std::size_t>(best)].gamma;
    clf.svm = train_svm(z, labels, clf.chosen_c, make_kernel(cfg.svm.kernel, clf.chosen_gamma),
                        cfg.svm.tol);
    return clf;
}

MILClassifier cknn_train(const Dataset& train, const MILTrainConfig& cfg) {
    const auto labels = dataset_labels(train);
    const auto matrices = dataset_matrices(train);

    std::vector<std::pair<int, int>> grid;
    auto rs = cfg.cknn.r_grid;
    auto cs = cfg.cknn.citer_grid;
    if (rs.empty() || cs.empty()) throw ValidationError("cknn grid is empty");
    std::sort(rs.begin(), rs.end());
    std::sort(cs.begin(), cs.end());
    for (const int r : rs)
        for (const int c : cs) grid.push_back({r, c});

    const int best = grid_search_select(
        static_cast<int>(grid.size()), labels, cfg.inner_k, stage_seed(cfg.seed, "gridsearch"),
        [&](int point, const std::vector<int>& train_items, const std::vector<int>& eval_items) {
            std::vector<Eigen::MatrixXd> sub_bags;
            std::vector<Label> sub_labels;
            for (const int t : train_items) {
                sub_bags.push_back(matrices[static_cast<std::size_t>(t)]);
                sub_labels.push_back(labels[static_cast<std::size_t>(t)]);
            }
            std::vector<Label> predicted;
            for (const int e : eval_items)
                predicted.push_back(cknn_predict(sub_bags, sub_labels,
                                                 matrices[static_cast<std::size_t>(e)],
                                                 grid[static_cast<std::size_t>(point)].first,
                                                 grid[static_cast<std::size_t>(point)].second)
                                        .label);
            return predicted;
        });

    MILClassifier clf;
    clf.kind = MILMethodKind::Cknn;
    clf.train_bags = matrices;
    clf.train_labels = labels;
    clf.r_neighbors = grid[static_cast<std::size_t>(best)].first;
    clf.c_citers = grid[static_cast<std::size_t>(best)].second;
    return clf;
}

MILClassifier misvm_instance_train(const Dataset& train, const MILTrainConfig& cfg) {
    const auto labels = dataset_labels(train);
    const auto matrices = dataset_matrices(train);
    const Eigen::Index dim = matrices.front().cols();

    const auto grid = svm_grid(cfg.svm, dim);
    const int best = grid_search_select(
        static_cast<int>(grid.size()), labels, cfg.inner_k, stage_seed(cfg.seed, "gridsearch"),
        [&](int point, const std::vector<int>& train_items, const std::vector<int>& eval_items) {
            std::vector<Eigen::MatrixXd> sub_bags;
            std::vector<Label> sub_labels;
            for (const int t : train_items) {
                sub_bags.push_back(matrices[static_cast<std::size_t>(t)]);
                sub_labels.push_back(labels[static_cast<std::size_t>(t)]);
            }
            const auto pooled = PooledInstances::build(sub_bags);
            const auto kernel =
                make_kernel(cfg.svm.kernel, grid[static_cast<std::size_t>(point)].gamma);
            const auto fit =
                misvm_instance_loop(pooled, sub_labels, grid[static_cast<std::size_t>(point)].c,
                                    kernel, cfg.svm.tol, cfg.max_mil_iterations);
            const auto model = assemble_model(pooled.x, fit.working, fit.alpha, fit.bias, kernel,
                                              grid[static_cast<std::size_t>(point)].c);
            std::vector<Label> predicted;
            for (const int e : eval_items) {
                const auto& bag = matrices[static_cast<std::size_t>(e)];
                Label lab = kNegative;
                for (Eigen::Index r = 0; r < bag.rows(); ++r)
                    if (svm_predict(model, bag.row(r).transpose()) == kPositive) lab = kPositive;
                predicted.push_back(lab);
            }
            return predicted;
        });

    const auto pooled = PooledInstances::build(matrices);
    const auto kernel = make_kernel(cfg.svm.kernel, grid[static_cast<std::size_t>(best)].gamma);
    const auto fit = misvm_instance_loop(pooled, labels, grid[static_cast<std::size_t>(best)].c,
                                         kernel, cfg.svm.tol, cfg.max_mil_iterations);

    MILClassifier clf;
    clf.kind = MILMethodKind::MiSvmInstance;
    clf.kernel = cfg.svm.kernel;
    clf.chosen_c = grid[static_cast<std::size_t>(best)].c;
    clf.chosen_gamma = grid[static_cast<std::size_t>(best)].gamma;
    clf.svm = assemble_model(pooled.x, fit.working, fit.alpha, fit.bias, kernel, clf.chosen_c);
    clf.mil_iterations = fit.iterations;
    clf.mil_converged = fit.converged;
    for (std::size_t b = 0; b < matrices.size(); ++b) {
        const auto [begin, end] = pooled.bag_row_range[b];
        clf.instance_assignment.emplace_back(fit.working.begin() + begin,
                                             fit.working.begin() + end);
    }
    return clf;
}

MILClassifier misvm_bag_train(const Dataset& train, const MILTrainConfig& cfg) {
    const auto labels = dataset_labels(train);
    const auto matrices = dataset_matrices(train);
    const Eigen::Index dim = matrices.front().cols();

    const auto grid = svm_grid(cfg.svm, dim);
    const int best = grid_search_select(
        static_cast<int>(grid.size()), labels, cfg.inner_k, stage_seed(cfg.seed, "gridsearch"),
        [&](int point, const std::vector<int>& train_items, const std::vector<int>& eval_items) {
            std::vector<Eigen::MatrixXd> sub_bags;
            std::vector<Label> sub_labels;
            for (const int t : train_items) {
                sub_bags.push_back(matrices[static_cast<std::size_t>(t)]);
                sub_labels.push_back(labels[static_cast<std::size_t>(t)]);
            }
            const auto kernel =
                make_kernel(cfg.svm.kernel, grid[static_cast<std::size_t>(point)].gamma);
            const auto fit = misvm_bag_loop(sub_bags, sub_labels,
                                            grid[static_cast<std::size_t>(point)].c, kernel,
                                            cfg.svm.tol, cfg.max_mil_iterations);
            std::vector<Label> predicted;
            for (const int e : eval_items) {
                const auto& bag = matrices[static_cast<std::size_t>(e)];
                double best_score = -std::numeric_limits<double>::infinity();
                for (Eigen::Index r = 0; r < bag.rows(); ++r)
                    best_score =
                        std::max(best_score, svm_decision(fit.model, bag.row(r).transpose()));
                predicted.push_back(best_score >= 0.0 ? kPositive : kNegative);
            }
            return predicted;
        });

    const auto kernel = make_kernel(cfg.svm.kernel, grid[static_cast<std::size_t>(best)].gamma);
    const auto fit = misvm_bag_loop(matrices, labels, grid[static_cast<std::size_t>(best)].c,
                                    kernel, cfg.svm.tol, cfg.max_mil_iterations);

    MILClassifier clf;
    clf.kind = MILMethodKind::MiSvmBag;
    clf.kernel = cfg.svm.kernel;
    clf.chosen_c = grid[static_cast<std::size_t>(best)].c;
    clf.chosen_gamma = grid[static_cast<std::size_t>(best)].gamma;
    clf.svm = fit.model;
    clf.witness_index = fit.witness_index;
    clf.mil_iterations = fit.iterations;
    clf.mil_converged = fit.converged;
    return clf;
}

MILTrainConfig mil_default_config(MILMethodKind method) {
    MILTrainConfig cfg;
    cfg.method = method;
    if (method == MILMethodKind::MiSvmInstance) cfg.svm.kernel = KernelKind::RBF;
    return cfg;
}

MILClassifier mil_train(const Dataset& train, const MILTrainConfig& cfg) {
    switch (cfg.method) {
        case MILMethodKind::MiVbgmm: return mivbgmm_train(train, cfg);
        case MILMethodKind::Cknn: return cknn_train(train, cfg);
        case MILMethodKind::MiSvmInstance: return misvm_instance_train(train, cfg);
        case MILMethodKind::MiSvmBag: return misvm_bag_train(train, cfg);
    }
    throw ValidationError("unknown MIL method");
}

BagPrediction mil_predict(const MILClassifier& clf, const Bag& bag) {
    const Eigen::MatrixXd m = bag_matrix(bag);
    BagPrediction out;
    switch (clf.kind) {
        case MILMethodKind::MiVbgmm: {
            const auto emb = embed_bag(clf.vbgmm, m);
            out.score = svm_decision(clf.svm, emb.z);
            out.label = out.score >= 0.0 ? kPositive : kNegative;
            return out;
        }
        case MILMethodKind::Cknn:
            return cknn_predict(clf.train_bags, clf.train_labels, m, clf.r_neighbors,
                                clf.c_citers);
        case MILMethodKind::MiSvmInstance:
        case MILMethodKind::MiSvmBag: {
            double best = -std::numeric_limits<double>::infinity();
            for (Eigen::Index r = 0; r < m.rows(); ++r)
                best = std::max(best, svm_decision(clf.svm, m.row(r).transpose()));
            out.score = best;
            out.label = best >= 0.0 ? kPositive : kNegative;
            return out;
        }
    }
    throw ValidationError("unknown classifier kind");
}

namespace {

void write_eigen(std::ostream& out, const Eigen::MatrixXd& m) {
    write_u64_le(out, static_cast<std::uint64_t>(m.rows()));
    write_u64_le(out, static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) write_f64_le(out, m(r, c));
}

}  // namespace

void save_classifier(const MILClassifier& clf, std::ostream& out) {
    write_string(out, "milvb-classifier-v1");
    write_string(out, mil_method_name(clf.kind));
    write_f64_le(out, clf.chosen_c);
    write_f64_le(out, clf.chosen_gamma);
    write_u64_le(out, clf.kernel == KernelKind::RBF ? 1 : 0);

    // VBGMM posterior
    write_u64_le(out, static_cast<std::uint64_t>(clf.vbgmm.components.size()));
    for (const auto& c : clf.vbgmm.components) {
        write_f64_le(out, c.alpha);
        write_f64_le(out, c.beta);
        write_f64_le(out, c.nu);
        write_eigen(out, c.m);
        write_eigen(out, c.W);
    }
    write_u64_le(out, static_cast<std::uint64_t>(clf.vbgmm.surviving.size()));
    for (const int s : clf.vbgmm.surviving) write_u64_le(out, static_cast<std::uint64_t>(s));

    // SVM
    write_eigen(out, clf.svm.support_vectors);
    write_eigen(out, clf.svm.coefficients);
    write_f64_le(out, clf.svm.bias);

    // CKNN
    write_u64_le(out, static_cast<std::uint64_t>(clf.train_bags.size()));
    for (const auto& b : clf.train_bags) write_eigen(out, b);
    for (const auto l : clf.train_labels) write_u64_le(out, l == kPositive ? 1 : 0);
    write_u64_le(out, static_cast<std::uint64_t>(clf.r_neighbors));
    write_u64_le(out, static_cast<std::uint64_t>(clf.c_citers));

    // mi-SVM assignment / MI-SVM witnesses
    write_u64_le(out, static_cast<std::uint64_t>(clf.instance_assignment.size()));
    for (const auto& bag : clf.instance_assignment) {
        write_u64_le(out, static_cast<std::uint64_t>(bag.size()));
        for (const auto l : bag) write_u64_le(out, l == kPositive ? 1 : 0);
    }
    write_u64_le(out, static_cast<std::uint64_t>(clf.witness_index.size()));
    for (const int w : clf.witness_index)
        write_u64_le(out, static_cast<std::uint64_t>(static_cast<std::int64_t>(w)));
    write_u64_le(out, static_cast<std::uint64_t>(clf.mil_iterations));
}

std::string classifier_digest(const MILClassifier& clf) {
    std::ostringstream buffer(std::ios::binary);
    save_classifier(clf, buffer);
    const std::string bytes = buffer.str();
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(bytes)));
    return hex;
}

}  // namespace milvb
