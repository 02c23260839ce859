#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "milvb/cooccur.hpp"
#include "milvb/patchex.hpp"

namespace milvb {

struct Segment {
    std::string name;
    std::size_t offset = 0;
    std::size_t length = 0;
};

// A patch feature vector with its named segment table. Offsets are contiguous
// and exhaustive over the full length.
struct FeatureVector {
    std::vector<double> values;
    std::vector<Segment> layout;

    void validate() const;
};

inline constexpr std::size_t kColorFeatureLength = 259;
inline constexpr std::size_t kTextureFeatureLength = 335;
inline constexpr std::size_t kStatisticalFeatureLength = 43;
inline constexpr std::size_t kTotalFeatureLength =
    kColorFeatureLength + kTextureFeatureLength + kStatisticalFeatureLength;

// Color family (259): mean RGB (3), quantized-color histogram (32), auto
// color correlogram at distances 1,3,5,7 (128), color coherence vector (64),
// Sobel edge magnitude + direction histograms over the palette planes (32).
std::vector<double> color_features(const QuantizedPatch& qpatch, const Patch& patch);

// Texture family (335) on the intensity plane: HOG with 16x16 cells, 7
// unsigned orientation bins and 2x2-cell L2-normalized blocks (252), Tamura
// coarseness/contrast/directionality (3), MPEG-7-style edge histogram
// descriptor over 4x4 sub-images (80).
std::vector<double> texture_features(const Patch& patch);

// Statistical family (43) over the RGB volume quantized to 8 levels per
// channel: global skewness + kurtosis of the raw voxel values (2), Haralick
// GLCM set (13), GLRLM (11), GLSZM (12), NGTDM (5), all from 26-neighbor
// direction-aggregated matrices.
std::vector<double> statistical_features(const Patch& patch);

// Quantizes the patch, computes color || texture || statistical and the
// segment table. Pure function of (patch, n_colors, seed).
FeatureVector extract_all(const Patch& patch, int n_colors = 32, std::uint64_t seed = 0);

// The fixed segment table for extract_all output.
std::vector<Segment> feature_layout();

// Patch RGB values as a rows x cols x 3 volume at the given gray-level count
// (uniform bins over [0,255]).
GrayVolume patch_to_volume(const Patch& patch, int n_levels);

}  // namespace milvb
