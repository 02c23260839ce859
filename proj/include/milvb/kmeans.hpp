#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace milvb {

// Plain Lloyd k-means used to initialize mixture responsibilities. Centers
// start from the point nearest the data mean followed by greedy
// farthest-point picks, so the result depends only on the row multiset (and
// ties on the given order). Returns per-row cluster assignments.
std::vector<int> kmeans_assign(const Eigen::MatrixXd& rows, int k, int max_iter = 100);

}  // namespace milvb
