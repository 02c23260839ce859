#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "milvb/bagcore.hpp"

namespace milvb {

struct GaussianCluster {
    Eigen::VectorXd mean;
    double stddev = 1.0;
};

// Generator spec for the reference synthetic MIL benchmark. Negative bags
// draw only background instances; positive bags draw at least one concept
// instance, so the standard MIL assumption holds by construction.
struct SyntheticSpec {
    int n_videos = 10;
    int bags_per_video = 4;
    int min_instances = 8;
    int max_instances = 20;
    int dim = 10;
    GaussianCluster concept_cluster;
    std::vector<GaussianCluster> background;
    double witness_rate = 0.3;
    double label_noise = 0.0;
    double positive_video_fraction = 0.5;
    std::uint64_t seed = 0;

    // Well-separated default geometry: a tight concept cluster at 8*e1 and
    // two looser background clusters at the origin and 8*e2.
    static SyntheticSpec reference(int dim = 10);

    void validate() const;
};

// Deterministic per seed. Bags are assigned to videos round-robin; each
// video's bags share the video's class (before label noise), keeping video
// ground truths untied.
Dataset generate_synthetic(const SyntheticSpec& spec);

// Brute-force cluster oracle: an instance is a concept instance iff the
// concept mean is its nearest true cluster center; the bag label follows the
// standard MIL assumption. Classifies noise-free generated bags perfectly.
Label synthetic_bayes_label(const SyntheticSpec& spec, const Bag& bag);

}  // namespace milvb
