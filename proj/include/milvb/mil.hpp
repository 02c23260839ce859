#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "milvb/bagcore.hpp"
#include "milvb/svm.hpp"
#include "milvb/vbgmm.hpp"

namespace milvb {

// The z vector: L1-normalized accumulated responsibilities over the surviving
// mixture components.
struct BagEmbedding {
    Eigen::VectorXd z;
    double normalizer = 0.0;  // 1/m_i
};

enum class MILMethodKind { MiVbgmm, Cknn, MiSvmInstance, MiSvmBag };

const char* mil_method_name(MILMethodKind kind);
MILMethodKind mil_method_from_name(const std::string& name);

struct SVMSearchConfig {
    KernelKind kernel = KernelKind::Linear;
    std::vector<double> c_grid = {0.01, 0.1, 1.0, 10.0, 100.0};
    // RBF gamma candidates as multiples of 1/d, ascending.
    std::vector<double> gamma_scale_grid = {0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0};
    double tol = 1e-3;
};

struct VBGMMMilConfig {
    int k_init = 50;
    double prune_threshold = 0.01;
    double tol = 1e-8;
    int max_iter = 500;
};

struct CknnConfig {
    std::vector<int> r_grid = {1, 3, 5};
    std::vector<int> citer_grid = {0, 3, 5};
};

struct MILTrainConfig {
    MILMethodKind method = MILMethodKind::MiVbgmm;
    SVMSearchConfig svm;
    VBGMMMilConfig vbgmm;
    CknnConfig cknn;
    int max_mil_iterations = 20;
    int inner_k = 3;
    std::uint64_t seed = 0;
};

// Recommended per-method defaults. mi-SVM defaults to the RBF kernel: with
// low witness rates the linear variant has a near-degenerate all-positive
// attractor under the initial bag-label assignment, which RBF avoids.
MILTrainConfig mil_default_config(MILMethodKind method);

// Trained state for any of the four methods; immutable after training.
struct MILClassifier {
    MILMethodKind kind = MILMethodKind::MiVbgmm;
    double chosen_c = 1.0;
    double chosen_gamma = 0.0;  // 0 for linear
    KernelKind kernel = KernelKind::Linear;

    // MI-VBGMM
    VBGMMModel vbgmm;
    // SVM-based methods (MI-VBGMM, mi-SVM, MI-SVM)
    SVMModel svm;
    // CKNN memorizes the training bags
    std::vector<Eigen::MatrixXd> train_bags;
    std::vector<Label> train_labels;
    int r_neighbors = 0;
    int c_citers = 0;
    // mi-SVM working labels at convergence, per train bag
    std::vector<std::vector<Label>> instance_assignment;
    // MI-SVM witness instance index per positive train bag
    std::vector<int> witness_index;
    int mil_iterations = 0;
    bool mil_converged = false;
};

struct BagPrediction {
    Label label = kNegative;
    double score = 0.0;
};

// --- primitive operations ----------------------------------------------------

// Standard MIL assumption: positive iff any instance is positive.
Label bag_label_from_instances(const std::vector<Label>& labels);

Eigen::MatrixXd bag_matrix(const Bag& bag);

BagEmbedding embed_bag(const VBGMMModel& model, const Bag& bag);
BagEmbedding embed_bag(const VBGMMModel& model, const Eigen::MatrixXd& instances);
// z = c * sum of responsibility rows with c = 1/m_i; rows must each sum to 1.
BagEmbedding embed_from_responsibilities(const Eigen::MatrixXd& gamma_rows);

// Minimal Hausdorff distance: min over cross-bag instance pairs.
double min_hausdorff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);
double min_hausdorff(const Bag& a, const Bag& b);

// R nearest references plus citers ranking the query within their own c_citers
// nearest; majority vote, ties conservative to negative.
BagPrediction cknn_predict(const std::vector<Eigen::MatrixXd>& train_bags,
                           const std::vector<Label>& train_labels,
                           const Eigen::MatrixXd& query, int r_neighbors, int c_citers);

// --- training entry points ---------------------------------------------------

MILClassifier mivbgmm_train(const Dataset& train, const MILTrainConfig& cfg);
MILClassifier cknn_train(const Dataset& train, const MILTrainConfig& cfg);
MILClassifier misvm_instance_train(const Dataset& train, const MILTrainConfig& cfg);
MILClassifier misvm_bag_train(const Dataset& train, const MILTrainConfig& cfg);

MILClassifier mil_train(const Dataset& train, const MILTrainConfig& cfg);
BagPrediction mil_predict(const MILClassifier& clf, const Bag& bag);

// Deterministic binary serialization; identical seeds and configs produce
// byte-identical streams.
void save_classifier(const MILClassifier& clf, std::ostream& out);
std::string classifier_digest(const MILClassifier& clf);

}  // namespace milvb
