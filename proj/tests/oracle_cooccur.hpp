#pragma once

// Brute-force enumeration oracle for the 3D matrix features. Written before
// and independently of the library implementation: co-occurrences come from
// an all-pairs scan, zones from union-find, runs from run-start detection.
// Counts must match the library exactly; derived statistics to 1e-10.

#include <cstdint>
#include <vector>

#include "milvb/cooccur.hpp"

namespace oracle {

std::vector<std::vector<std::int64_t>> glcm_brute(const milvb::GrayVolume& v);
std::vector<std::vector<std::int64_t>> glrlm_brute(const milvb::GrayVolume& v);
std::vector<std::vector<std::int64_t>> glszm_brute(const milvb::GrayVolume& v);
milvb::NGTDMVectors ngtdm_brute(const milvb::GrayVolume& v);

std::vector<double> haralick_brute(const std::vector<std::vector<std::int64_t>>& glcm);
std::vector<double> glrlm_features_brute(const std::vector<std::vector<std::int64_t>>& rlm,
                                         std::size_t n_voxels);
std::vector<double> glszm_features_brute(const std::vector<std::vector<std::int64_t>>& szm,
                                         std::size_t n_voxels);
std::vector<double> ngtdm_features_brute(const milvb::NGTDMVectors& vec);

}  // namespace oracle
