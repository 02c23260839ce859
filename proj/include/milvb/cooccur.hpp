#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "milvb/errors.hpp"

namespace milvb {

// Quantized gray-level volume (rows x cols x planes). A 64x64 RGB patch
// becomes a 64x64x3 volume with one plane per channel.
struct GrayVolume {
    int rows = 0;
    int cols = 0;
    int planes = 0;
    int n_levels = 0;
    std::vector<int> levels;  // row-major, plane-minor: ((r*cols)+c)*planes+p

    int at(int r, int c, int p) const {
        return levels[static_cast<std::size_t>((r * cols + c) * planes + p)];
    }
    int& at(int r, int c, int p) {
        return levels[static_cast<std::size_t>((r * cols + c) * planes + p)];
    }
    bool in_bounds(int r, int c, int p) const {
        return r >= 0 && r < rows && c >= 0 && c < cols && p >= 0 && p < planes;
    }
    std::size_t n_voxels() const {
        return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) *
               static_cast<std::size_t>(planes);
    }
    void validate() const;
};

// The 13 unique directions of the 26-neighborhood (each direction paired with
// its negative spans all 26 offsets).
const std::array<std::array<int, 3>, 13>& neighbor_directions_3d();

// Direction-aggregated gray-level co-occurrence matrix. Every ordered valid
// neighbor pair contributes one count, so the matrix is symmetric and its
// total equals twice the number of unordered pairs.
std::vector<std::vector<std::int64_t>> glcm_counts(const GrayVolume& v);

// Gray-level run-length matrix, runs along the 13 directions aggregated.
// result[g][l-1] = number of maximal runs of level g with length l.
std::vector<std::vector<std::int64_t>> glrlm_counts(const GrayVolume& v);

// Gray-level size-zone matrix over 26-connected equal-level zones.
// result[g][s-1] = number of zones of level g with size s.
std::vector<std::vector<std::int64_t>> glszm_counts(const GrayVolume& v);

// Neighborhood gray-tone difference vectors: s[g] accumulates |g - mean of
// valid 26-neighbors| over voxels of level g, n[g] counts those voxels.
struct NGTDMVectors {
    std::vector<double> s;
    std::vector<std::int64_t> n;
};
NGTDMVectors ngtdm_vectors(const GrayVolume& v);

// --- derived statistics ------------------------------------------------------
// Gray levels enter the formulas 1-based (level index g maps to g+1).

// Haralick set: energy, contrast, correlation, variance, inverse difference
// moment, sum average, sum variance, sum entropy, entropy, difference
// variance, difference entropy, information measures 1 and 2.
std::vector<double> haralick_features(const std::vector<std::vector<std::int64_t>>& glcm);

// SRE, LRE, GLN, RLN, RP, LGRE, HGRE, SRLGE, SRHGE, LRLGE, LRHGE.
std::vector<double> glrlm_features(const std::vector<std::vector<std::int64_t>>& rlm,
                                   std::size_t n_voxels);

// The GLRLM set with zones replacing runs plus zone-size variance.
std::vector<double> glszm_features(const std::vector<std::vector<std::int64_t>>& szm,
                                   std::size_t n_voxels);

// Coarseness, contrast, busyness, complexity, strength.
std::vector<double> ngtdm_features(const NGTDMVectors& vec);

}  // namespace milvb
