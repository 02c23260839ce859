#include <cmath>

#include "milvb/featex.hpp"

namespace milvb {

namespace {

constexpr int kGrayLevels = 8;

}  // namespace

GrayVolume patch_to_volume(const Patch& patch, int n_levels) {
    if (patch.size < 1) throw ValidationError("empty patch");
    if (n_levels < 1 || n_levels > 256) throw ValidationError("n_levels must be in [1,256]");
    GrayVolume v;
    v.rows = patch.size;
    v.cols = patch.size;
    v.planes = 3;
    v.n_levels = n_levels;
    v.levels.resize(v.n_voxels());
    const int bin_width = (255 / n_levels) + 1;  // uniform bins over [0,255]
    for (int r = 0; r < patch.size; ++r)
        for (int c = 0; c < patch.size; ++c)
            for (int p = 0; p < 3; ++p)
                v.at(r, c, p) = patch.at(r, c, p) / bin_width;
    return v;
}

std::vector<double> statistical_features(const Patch& patch) {
    if (patch.size != 64) throw ValidationError("statistical features require 64x64 patches");

    // Skewness and kurtosis of the raw 0-255 voxel values.
    const double n = static_cast<double>(patch.pixels.size());
    double mean = 0.0;
    for (const auto v : patch.pixels) mean += v;
    mean /= n;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (const auto v : patch.pixels) {
        const double d = static_cast<double>(v) - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    const double skewness = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
    const double kurtosis = m2 > 0.0 ? m4 / (m2 * m2) : 0.0;

    std::vector<double> out = {skewness, kurtosis};
    out.reserve(kStatisticalFeatureLength);

    const GrayVolume volume = patch_to_volume(patch, kGrayLevels);
    const auto haralick = haralick_features(glcm_counts(volume));
    out.insert(out.end(), haralick.begin(), haralick.end());
    const auto rlm = glrlm_features(glrlm_counts(volume), volume.n_voxels());
    out.insert(out.end(), rlm.begin(), rlm.end());
    const auto szm = glszm_features(glszm_counts(volume), volume.n_voxels());
    out.insert(out.end(), szm.begin(), szm.end());
    const auto ngtdm = ngtdm_features(ngtdm_vectors(volume));
    out.insert(out.end(), ngtdm.begin(), ngtdm.end());

    if (out.size() != kStatisticalFeatureLength)
        throw std::logic_error("statistical feature length mismatch");
    return out;
}

void FeatureVector::validate() const {
    std::size_t expected = 0;
    for (const auto& seg : layout) {
        if (seg.offset != expected) throw ValidationError("layout gap before '" + seg.name + "'");
        expected += seg.length;
    }
    if (expected != values.size()) throw ValidationError("layout does not cover feature vector");
    for (const double v : values)
        if (!std::isfinite(v)) throw ValidationError("non-finite feature value");
}

std::vector<Segment> feature_layout() {
    std::vector<Segment> layout;
    std::size_t offset = 0;
    const auto add = [&](const std::string& name, std::size_t len) {
        layout.push_back({name, offset, len});
        offset += len;
    };
    add("color.mean_rgb", 3);
    add("color.histogram", 32);
    add("color.correlogram", 128);
    add("color.coherence", 64);
    add("color.edge_magnitude", 16);
    add("color.edge_direction", 16);
    add("texture.hog", 252);
    add("texture.tamura", 3);
    add("texture.ehd", 80);
    add("stat.moments", 2);
    add("stat.glcm", 13);
    add("stat.glrlm", 11);
    add("stat.glszm", 12);
    add("stat.ngtdm", 5);
    return layout;
}

FeatureVector extract_all(const Patch& patch, int n_colors, std::uint64_t seed) {
    const auto quantized = quantize_colors(patch, n_colors, seed);

    FeatureVector fv;
    fv.values = color_features(quantized.quantized, patch);
    const auto texture = texture_features(patch);
    fv.values.insert(fv.values.end(), texture.begin(), texture.end());
    const auto stats = statistical_features(patch);
    fv.values.insert(fv.values.end(), stats.begin(), stats.end());
    fv.layout = feature_layout();
    fv.validate();
    return fv;
}

}  // namespace milvb
