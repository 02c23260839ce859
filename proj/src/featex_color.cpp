#include <algorithm>
#include <cmath>
#include <deque>

#include "milvb/featex.hpp"

namespace milvb {

namespace {

constexpr int kPaletteSlots = 32;
constexpr std::array<int, 4> kCorrelogramDistances = {1, 3, 5, 7};

// Fraction of pixels whose same-color 8-connected component reaches this
// share of the patch area counts as coherent.
constexpr double kCoherenceAreaFraction = 0.01;

void append_normalized(std::vector<double>& out, const std::vector<double>& hist) {
    double total = 0.0;
    for (const double v : hist) total += v;
    for (const double v : hist) out.push_back(total > 0.0 ? v / total : 0.0);
}

}  // namespace

std::vector<double> color_features(const QuantizedPatch& qpatch, const Patch& patch) {
    if (patch.size != qpatch.size) throw ValidationError("patch/quantized size mismatch");
    if (qpatch.palette.size() > kPaletteSlots)
        throw ValidationError("palette exceeds " + std::to_string(kPaletteSlots) + " colors");
    const int size = patch.size;
    const int n_pixels = size * size;
    const int n_colors = static_cast<int>(qpatch.palette.size());

    std::vector<double> out;
    out.reserve(kColorFeatureLength);

    // Mean RGB scaled to [0,1].
    for (int ch = 0; ch < 3; ++ch) {
        double sum = 0.0;
        for (int p = 0; p < n_pixels; ++p)
            sum += patch.pixels[static_cast<std::size_t>(p) * 3 + static_cast<std::size_t>(ch)];
        out.push_back(sum / n_pixels / 255.0);
    }

    // Quantized-color histogram, zero-padded to 32 slots.
    std::vector<double> hist(kPaletteSlots, 0.0);
    for (int p = 0; p < n_pixels; ++p) hist[qpatch.indices[static_cast<std::size_t>(p)]] += 1.0;
    for (double& v : hist) v /= n_pixels;
    out.insert(out.end(), hist.begin(), hist.end());

    // Auto color correlogram: P(a pixel at chessboard distance exactly d has
    // color c | the center pixel has color c). Distance-major layout.
    for (const int d : kCorrelogramDistances) {
        std::vector<double> same(kPaletteSlots, 0.0), valid(kPaletteSlots, 0.0);
        for (int r = 0; r < size; ++r)
            for (int c = 0; c < size; ++c) {
                const int color = qpatch.index_at(r, c);
                for (int dr = -d; dr <= d; ++dr)
                    for (int dc = -d; dc <= d; ++dc) {
                        if (std::max(std::abs(dr), std::abs(dc)) != d) continue;
                        const int nr = r + dr, nc = c + dc;
                        if (nr < 0 || nr >= size || nc < 0 || nc >= size) continue;
                        valid[static_cast<std::size_t>(color)] += 1.0;
                        if (qpatch.index_at(nr, nc) == color)
                            same[static_cast<std::size_t>(color)] += 1.0;
                    }
            }
        for (int c = 0; c < kPaletteSlots; ++c)
            out.push_back(valid[static_cast<std::size_t>(c)] > 0.0
                              ? same[static_cast<std::size_t>(c)] /
                                    valid[static_cast<std::size_t>(c)]
                              : 0.0);
    }

    // Color coherence vector: per color, fraction of pixels in large
    // (>= 1% of area) 8-connected same-color regions vs small ones.
    const long threshold =
        std::max<long>(1, static_cast<long>(std::ceil(kCoherenceAreaFraction * n_pixels)));
    std::vector<double> coherent(kPaletteSlots, 0.0), incoherent(kPaletteSlots, 0.0);
    std::vector<char> visited(static_cast<std::size_t>(n_pixels), 0);
    for (int r = 0; r < size; ++r)
        for (int c = 0; c < size; ++c) {
            if (visited[static_cast<std::size_t>(r * size + c)]) continue;
            const int color = qpatch.index_at(r, c);
            std::vector<int> component;
            std::deque<std::pair<int, int>> queue = {{r, c}};
            visited[static_cast<std::size_t>(r * size + c)] = 1;
            while (!queue.empty()) {
                const auto [cr, cc] = queue.front();
                queue.pop_front();
                component.push_back(cr * size + cc);
                for (int dr = -1; dr <= 1; ++dr)
                    for (int dc = -1; dc <= 1; ++dc) {
                        if (dr == 0 && dc == 0) continue;
                        const int nr = cr + dr, nc = cc + dc;
                        if (nr < 0 || nr >= size || nc < 0 || nc >= size) continue;
                        if (visited[static_cast<std::size_t>(nr * size + nc)]) continue;
                        if (qpatch.index_at(nr, nc) != color) continue;
                        visited[static_cast<std::size_t>(nr * size + nc)] = 1;
                        queue.push_back({nr, nc});
                    }
            }
            auto& bucket = static_cast<long>(component.size()) >= threshold
                               ? coherent[static_cast<std::size_t>(color)]
                               : incoherent[static_cast<std::size_t>(color)];
            bucket += static_cast<double>(component.size());
        }
    for (int c = 0; c < kPaletteSlots; ++c) {
        out.push_back(coherent[static_cast<std::size_t>(c)] / n_pixels);
        out.push_back(incoherent[static_cast<std::size_t>(c)] / n_pixels);
    }

    // Sobel edge magnitude/direction histograms accumulated over the binary
    // plane of each palette color (interior pixels only).
    const double max_magnitude = 4.0 * std::sqrt(2.0);  // binary planes, |gx|,|gy| <= 4
    std::vector<double> mag_hist(16, 0.0), dir_hist(16, 0.0);
    for (int color = 0; color < n_colors; ++color) {
        for (int r = 1; r + 1 < size; ++r)
            for (int c = 1; c + 1 < size; ++c) {
                const auto plane = [&](int rr, int cc) {
                    return qpatch.index_at(rr, cc) == color ? 1.0 : 0.0;
                };
                const double gx = plane(r - 1, c + 1) + 2.0 * plane(r, c + 1) +
                                  plane(r + 1, c + 1) - plane(r - 1, c - 1) -
                                  2.0 * plane(r, c - 1) - plane(r + 1, c - 1);
                const double gy = plane(r + 1, c - 1) + 2.0 * plane(r + 1, c) +
                                  plane(r + 1, c + 1) - plane(r - 1, c - 1) -
                                  2.0 * plane(r - 1, c) - plane(r - 1, c + 1);
                const double mag = std::hypot(gx, gy);
                const int mag_bin = std::min(
                    15, static_cast<int>(std::floor(mag / max_magnitude * 16.0)));
                mag_hist[static_cast<std::size_t>(mag_bin)] += 1.0;
                if (mag > 0.0) {
                    double theta = std::atan2(gy, gx);
                    if (theta < 0.0) theta += 2.0 * M_PI;
                    const int dir_bin =
                        std::min(15, static_cast<int>(std::floor(theta / (2.0 * M_PI) * 16.0)));
                    dir_hist[static_cast<std::size_t>(dir_bin)] += 1.0;
                }
            }
    }
    append_normalized(out, mag_hist);
    append_normalized(out, dir_hist);

    if (out.size() != kColorFeatureLength)
        throw std::logic_error("color feature length mismatch");
    return out;
}

}  // namespace milvb
