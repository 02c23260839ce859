#include <algorithm>
#include <cmath>
#include <numeric>

#include "milvb/featex.hpp"

namespace milvb {

namespace {

constexpr int kHogCellSize = 16;
constexpr int kHogBins = 7;
constexpr int kEhdSubImages = 4;       // 4x4 grid
constexpr double kEhdThreshold = 11.0; // minimum winning filter response
constexpr double kTamuraDirThreshold = 12.0;

// HSI intensity component.
std::vector<double> intensity_plane(const Patch& patch) {
    const int n = patch.size * patch.size;
    std::vector<double> plane(static_cast<std::size_t>(n));
    for (int p = 0; p < n; ++p)
        plane[static_cast<std::size_t>(p)] =
            (static_cast<double>(patch.pixels[static_cast<std::size_t>(p) * 3]) +
             patch.pixels[static_cast<std::size_t>(p) * 3 + 1] +
             patch.pixels[static_cast<std::size_t>(p) * 3 + 2]) /
            3.0;
    return plane;
}

std::vector<double> hog_features(const std::vector<double>& intensity, int size) {
    const int n_cells = size / kHogCellSize;  // 4 for 64x64
    const auto at = [&](int r, int c) {
        return intensity[static_cast<std::size_t>(std::clamp(r, 0, size - 1) * size +
                                                  std::clamp(c, 0, size - 1))];
    };

    // Cell histograms: centered [-1,0,1] gradients, unsigned orientations.
    std::vector<double> cells(static_cast<std::size_t>(n_cells * n_cells * kHogBins), 0.0);
    for (int r = 0; r < size; ++r)
        for (int c = 0; c < size; ++c) {
            const double gx = at(r, c + 1) - at(r, c - 1);
            const double gy = at(r + 1, c) - at(r - 1, c);
            const double mag = std::hypot(gx, gy);
            if (mag == 0.0) continue;
            double theta = std::atan2(gy, gx);
            if (theta < 0.0) theta += M_PI;
            if (theta >= M_PI) theta -= M_PI;
            const int bin = std::min(kHogBins - 1,
                                     static_cast<int>(std::floor(theta / M_PI * kHogBins)));
            const int cell = (r / kHogCellSize) * n_cells + (c / kHogCellSize);
            cells[static_cast<std::size_t>(cell * kHogBins + bin)] += mag;
        }

    // Overlapping 2x2-cell blocks with L2 normalization; all-zero blocks stay
    // zero.
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>((n_cells - 1) * (n_cells - 1) * 4 * kHogBins));
    for (int br = 0; br + 1 < n_cells; ++br)
        for (int bc = 0; bc + 1 < n_cells; ++bc) {
            std::vector<double> block;
            block.reserve(4 * kHogBins);
            for (int dr = 0; dr < 2; ++dr)
                for (int dc = 0; dc < 2; ++dc) {
                    const int cell = (br + dr) * n_cells + (bc + dc);
                    for (int b = 0; b < kHogBins; ++b)
                        block.push_back(cells[static_cast<std::size_t>(cell * kHogBins + b)]);
                }
            double norm = 0.0;
            for (const double v : block) norm += v * v;
            norm = std::sqrt(norm);
            for (const double v : block) out.push_back(norm > 0.0 ? v / norm : 0.0);
        }
    return out;
}

double tamura_coarseness(const std::vector<double>& intensity, int size) {
    // Integral image with clamped window bounds so border pixels still get
    // defined neighborhood averages.
    std::vector<double> integral(static_cast<std::size_t>((size + 1) * (size + 1)), 0.0);
    for (int r = 0; r < size; ++r)
        for (int c = 0; c < size; ++c)
            integral[static_cast<std::size_t>((r + 1) * (size + 1) + c + 1)] =
                intensity[static_cast<std::size_t>(r * size + c)] +
                integral[static_cast<std::size_t>(r * (size + 1) + c + 1)] +
                integral[static_cast<std::size_t>((r + 1) * (size + 1) + c)] -
                integral[static_cast<std::size_t>(r * (size + 1) + c)];
    const auto window_mean = [&](int r, int c, int half) {
        const int r0 = std::clamp(r - half, 0, size);
        const int r1 = std::clamp(r + half, 0, size);
        const int c0 = std::clamp(c - half, 0, size);
        const int c1 = std::clamp(c + half, 0, size);
        const double area = static_cast<double>((r1 - r0) * (c1 - c0));
        if (area <= 0.0) return 0.0;
        const double sum = integral[static_cast<std::size_t>(r1 * (size + 1) + c1)] -
                           integral[static_cast<std::size_t>(r0 * (size + 1) + c1)] -
                           integral[static_cast<std::size_t>(r1 * (size + 1) + c0)] +
                           integral[static_cast<std::size_t>(r0 * (size + 1) + c0)];
        return sum / area;
    };

    constexpr int kMaxScale = 5;
    double total = 0.0;
    for (int r = 0; r < size; ++r)
        for (int c = 0; c < size; ++c) {
            int best_k = 1;
            double best_e = -1.0;
            for (int k = 1; k <= kMaxScale; ++k) {
                const int half = 1 << (k - 1);
                const double eh = std::abs(window_mean(r, c + half, half) -
                                           window_mean(r, c - half, half));
                const double ev = std::abs(window_mean(r + half, c, half) -
                                           window_mean(r - half, c, half));
                const double e = std::max(eh, ev);
                if (e > best_e) {
                    best_e = e;
                    best_k = k;
                }
            }
            total += static_cast<double>(1 << best_k);
        }
    return total / static_cast<double>(size * size);
}

double tamura_contrast(const std::vector<double>& intensity) {
    const double n = static_cast<double>(intensity.size());
    const double mean = std::accumulate(intensity.begin(), intensity.end(), 0.0) / n;
    double m2 = 0.0, m4 = 0.0;
    for (const double v : intensity) {
        const double d = v - mean;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m4 /= n;
    if (m2 <= 0.0) return 0.0;
    const double kurtosis = m4 / (m2 * m2);
    return std::sqrt(m2) / std::pow(kurtosis, 0.25);
}

double tamura_directionality(const std::vector<double>& intensity, int size) {
    constexpr int kBins = 16;
    const auto at = [&](int r, int c) { return intensity[static_cast<std::size_t>(r * size + c)]; };

    std::vector<double> hist(kBins, 0.0);
    double total = 0.0;
    for (int r = 1; r + 1 < size; ++r)
        for (int c = 1; c + 1 < size; ++c) {
            // Prewitt responses.
            const double dh = at(r - 1, c + 1) + at(r, c + 1) + at(r + 1, c + 1) -
                              at(r - 1, c - 1) - at(r, c - 1) - at(r + 1, c - 1);
            const double dv = at(r - 1, c - 1) + at(r - 1, c) + at(r - 1, c + 1) -
                              at(r + 1, c - 1) - at(r + 1, c) - at(r + 1, c + 1);
            if ((std::abs(dh) + std::abs(dv)) / 2.0 < kTamuraDirThreshold) continue;
            double theta = std::atan2(dv, dh) + M_PI / 2.0;
            while (theta < 0.0) theta += M_PI;
            while (theta >= M_PI) theta -= M_PI;
            const int bin = std::min(kBins - 1, static_cast<int>(std::floor(theta / M_PI * kBins)));
            hist[static_cast<std::size_t>(bin)] += 1.0;
            total += 1.0;
        }
    if (total <= 0.0) return 0.0;
    for (double& v : hist) v /= total;

    // Single-peak second moment around the dominant direction, wrapped mod pi
    // and normalized so a perfectly peaked histogram scores 1.
    const int peak = static_cast<int>(std::max_element(hist.begin(), hist.end()) - hist.begin());
    const double bin_width = M_PI / kBins;
    const double peak_angle = (peak + 0.5) * bin_width;
    double moment = 0.0;
    for (int b = 0; b < kBins; ++b) {
        const double angle = (b + 0.5) * bin_width;
        double d = std::abs(angle - peak_angle);
        d = std::min(d, M_PI - d);
        moment += hist[static_cast<std::size_t>(b)] * d * d;
    }
    return 1.0 - moment * 4.0 / (M_PI * M_PI);
}

std::vector<double> ehd_features(const std::vector<double>& intensity, int size) {
    const int sub_size = size / kEhdSubImages;  // 16 for 64x64
    std::vector<double> out;
    out.reserve(kEhdSubImages * kEhdSubImages * 5);
    for (int sr = 0; sr < kEhdSubImages; ++sr)
        for (int sc = 0; sc < kEhdSubImages; ++sc) {
            std::array<double, 5> hist = {0, 0, 0, 0, 0};
            double edges = 0.0;
            for (int br = 0; br + 1 < sub_size; br += 2)
                for (int bc = 0; bc + 1 < sub_size; bc += 2) {
                    const int r = sr * sub_size + br, c = sc * sub_size + bc;
                    const double a = intensity[static_cast<std::size_t>(r * size + c)];
                    const double b = intensity[static_cast<std::size_t>(r * size + c + 1)];
                    const double cc2 = intensity[static_cast<std::size_t>((r + 1) * size + c)];
                    const double d = intensity[static_cast<std::size_t>((r + 1) * size + c + 1)];
                    const std::array<double, 5> responses = {
                        std::abs(a - b + cc2 - d),           // vertical
                        std::abs(a + b - cc2 - d),           // horizontal
                        std::sqrt(2.0) * std::abs(a - d),    // 45 degree
                        std::sqrt(2.0) * std::abs(b - cc2),  // 135 degree
                        std::abs(2.0 * a - 2.0 * b - 2.0 * cc2 + 2.0 * d),  // non-directional
                    };
                    const int winner = static_cast<int>(
                        std::max_element(responses.begin(), responses.end()) - responses.begin());
                    if (responses[static_cast<std::size_t>(winner)] < kEhdThreshold) continue;
                    hist[static_cast<std::size_t>(winner)] += 1.0;
                    edges += 1.0;
                }
            for (const double v : hist) out.push_back(edges > 0.0 ? v / edges : 0.0);
        }
    return out;
}

}  // namespace

std::vector<double> texture_features(const Patch& patch) {
    if (patch.size != 64) throw ValidationError("texture features require 64x64 patches");
    const auto intensity = intensity_plane(patch);

    std::vector<double> out = hog_features(intensity, patch.size);
    out.push_back(tamura_coarseness(intensity, patch.size));
    out.push_back(tamura_contrast(intensity));
    out.push_back(tamura_directionality(intensity, patch.size));
    const auto ehd = ehd_features(intensity, patch.size);
    out.insert(out.end(), ehd.begin(), ehd.end());

    if (out.size() != kTextureFeatureLength)
        throw std::logic_error("texture feature length mismatch");
    return out;
}

}  // namespace milvb
