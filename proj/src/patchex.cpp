#include "milvb/patchex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "milvb/rng.hpp"

namespace milvb {

std::vector<Patch> extract_patches(const RGBImage& image, const ROIMask& mask,
                                   const PatchExtractionConfig& cfg) {
    if (image.width < 1 || image.height < 1)
        throw ValidationError("image dimensions must be positive");
    if (image.width != mask.width || image.height != mask.height)
        throw ValidationError("image/mask size mismatch: " + std::to_string(image.width) + "x" +
                              std::to_string(image.height) + " vs " +
                              std::to_string(mask.width) + "x" + std::to_string(mask.height));
    if (cfg.size < 1 || cfg.size > std::min(image.width, image.height))
        throw ValidationError("patch size " + std::to_string(cfg.size) +
                              " exceeds image dimensions");
    if (cfg.overlap < 0.0 || cfg.overlap >= 1.0)
        throw ValidationError("overlap must lie in [0, 1)");
    if (cfg.min_inside_fraction <= 0.0 || cfg.min_inside_fraction > 1.0)
        throw ValidationError("min_inside_fraction must lie in (0, 1]");
    if (std::none_of(mask.bits.begin(), mask.bits.end(), [](std::uint8_t b) { return b != 0; }))
        throw ValidationError("mask has no set pixels");

    const int stride = std::max(1, static_cast<int>(std::lround(cfg.size * (1.0 - cfg.overlap))));
    const long window_area = static_cast<long>(cfg.size) * cfg.size;
    const long needed =
        static_cast<long>(std::ceil(cfg.min_inside_fraction * static_cast<double>(window_area) -
                                    1e-9));

    std::vector<Patch> patches;
    for (int r = 0; r + cfg.size <= image.height; r += stride) {
        for (int c = 0; c + cfg.size <= image.width; c += stride) {
            long inside = 0;
            for (int dr = 0; dr < cfg.size; ++dr)
                for (int dc = 0; dc < cfg.size; ++dc)
                    if (mask.inside(r + dr, c + dc)) ++inside;
            if (inside < needed) continue;

            Patch patch;
            patch.size = cfg.size;
            patch.origin_row = r;
            patch.origin_col = c;
            patch.pixels.resize(static_cast<std::size_t>(window_area) * 3);
            for (int dr = 0; dr < cfg.size; ++dr)
                for (int dc = 0; dc < cfg.size; ++dc)
                    for (int ch = 0; ch < 3; ++ch)
                        patch.pixels[static_cast<std::size_t>((dr * cfg.size + dc) * 3 + ch)] =
                            image.at(r + dr, c + dc, ch);
            patches.push_back(std::move(patch));
        }
    }
    return patches;
}

namespace {

using Color = std::array<double, 3>;

double sq_dist(const Color& a, const Color& b) {
    double s = 0;
    for (int i = 0; i < 3; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

}  // namespace

QuantizeResult quantize_colors(const Patch& patch, int n_colors, std::uint64_t seed,
                               int max_iter) {
    if (n_colors < 1) throw ValidationError("n_colors must be >= 1");
    if (patch.size < 1) throw ValidationError("empty patch");

    // Distinct colors with multiplicities; std::map keys give a canonical
    // lexicographic order, making the result a function of the pixel multiset
    // (invariant under rotations and other pixel permutations).
    std::map<std::array<std::uint8_t, 3>, long> distinct;
    const int n_pixels = patch.size * patch.size;
    for (int p = 0; p < n_pixels; ++p) {
        std::array<std::uint8_t, 3> c = {patch.pixels[static_cast<std::size_t>(p) * 3],
                                         patch.pixels[static_cast<std::size_t>(p) * 3 + 1],
                                         patch.pixels[static_cast<std::size_t>(p) * 3 + 2]};
        ++distinct[c];
    }

    std::vector<Color> colors;
    std::vector<long> weights;
    colors.reserve(distinct.size());
    for (const auto& [c, w] : distinct) {
        colors.push_back({static_cast<double>(c[0]), static_cast<double>(c[1]),
                          static_cast<double>(c[2])});
        weights.push_back(w);
    }
    const std::size_t n_distinct = colors.size();

    std::vector<Color> centers;
    std::vector<int> assignment(n_distinct, 0);
    QuantizeResult result;

    if (n_distinct <= static_cast<std::size_t>(n_colors)) {
        centers = colors;
        for (std::size_t i = 0; i < n_distinct; ++i) assignment[i] = static_cast<int>(i);
        result.sse_trace.push_back(0.0);
    } else {
        // Seeded first center, then greedy farthest-point over distinct colors.
        Rng rng(seed);
        centers.push_back(colors[rng.below(n_distinct)]);
        std::vector<double> nearest(n_distinct, std::numeric_limits<double>::infinity());
        while (centers.size() < static_cast<std::size_t>(n_colors)) {
            std::size_t farthest = 0;
            double best = -1.0;
            for (std::size_t i = 0; i < n_distinct; ++i) {
                nearest[i] = std::min(nearest[i], sq_dist(colors[i], centers.back()));
                if (nearest[i] > best) {
                    best = nearest[i];
                    farthest = i;
                }
            }
            centers.push_back(colors[farthest]);
        }

        // Lloyd iterations over the weighted distinct colors; stop when the
        // assignment is stable. SSE is non-increasing by construction.
        for (int iter = 0; iter < max_iter; ++iter) {
            bool changed = (iter == 0);
            double sse = 0.0;
            for (std::size_t i = 0; i < n_distinct; ++i) {
                int best_k = 0;
                double best_d = std::numeric_limits<double>::infinity();
                for (std::size_t k = 0; k < centers.size(); ++k) {
                    const double d = sq_dist(colors[i], centers[k]);
                    if (d < best_d) {
                        best_d = d;
                        best_k = static_cast<int>(k);
                    }
                }
                if (assignment[i] != best_k) {
                    assignment[i] = best_k;
                    changed = true;
                }
                sse += static_cast<double>(weights[i]) * best_d;
            }
            result.sse_trace.push_back(sse);
            result.iterations = iter + 1;
            if (!changed) break;

            std::vector<Color> sums(centers.size(), {0, 0, 0});
            std::vector<long> counts(centers.size(), 0);
            for (std::size_t i = 0; i < n_distinct; ++i) {
                for (int ch = 0; ch < 3; ++ch)
                    sums[static_cast<std::size_t>(assignment[i])][ch] +=
                        static_cast<double>(weights[i]) * colors[i][ch];
                counts[static_cast<std::size_t>(assignment[i])] += weights[i];
            }
            for (std::size_t k = 0; k < centers.size(); ++k)
                if (counts[k] > 0)
                    for (int ch = 0; ch < 3; ++ch)
                        centers[k][ch] = sums[k][ch] / static_cast<double>(counts[k]);
        }
    }

    // Drop empty clusters and order the palette lexicographically.
    std::vector<long> usage(centers.size(), 0);
    for (std::size_t i = 0; i < n_distinct; ++i)
        usage[static_cast<std::size_t>(assignment[i])] += weights[i];
    std::vector<std::size_t> kept;
    for (std::size_t k = 0; k < centers.size(); ++k)
        if (usage[k] > 0) kept.push_back(k);
    std::sort(kept.begin(), kept.end(), [&](std::size_t a, std::size_t b) {
        return centers[a] < centers[b];
    });
    std::vector<int> remap(centers.size(), -1);
    QuantizedPatch q;
    q.size = patch.size;
    for (std::size_t slot = 0; slot < kept.size(); ++slot) {
        remap[kept[slot]] = static_cast<int>(slot);
        q.palette.push_back(centers[kept[slot]]);
    }

    std::map<std::array<std::uint8_t, 3>, std::uint8_t> color_to_index;
    {
        std::size_t i = 0;
        for (const auto& [c, w] : distinct) {
            color_to_index[c] =
                static_cast<std::uint8_t>(remap[static_cast<std::size_t>(assignment[i])]);
            ++i;
        }
    }
    q.indices.resize(static_cast<std::size_t>(n_pixels));
    for (int p = 0; p < n_pixels; ++p) {
        std::array<std::uint8_t, 3> c = {patch.pixels[static_cast<std::size_t>(p) * 3],
                                         patch.pixels[static_cast<std::size_t>(p) * 3 + 1],
                                         patch.pixels[static_cast<std::size_t>(p) * 3 + 2]};
        q.indices[static_cast<std::size_t>(p)] = color_to_index[c];
    }
    result.quantized = std::move(q);
    return result;
}

}  // namespace milvb
