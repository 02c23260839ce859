#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "milvb/errors.hpp"

namespace milvb {

// 8-bit-per-channel RGB raster, row-major, 3 bytes per pixel.
struct RGBImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    std::uint8_t at(int row, int col, int channel) const {
        return pixels[static_cast<std::size_t>((row * width + col) * 3 + channel)];
    }
};

// Binary raster, 1 = inside the region of interest.
struct ROIMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;

    bool inside(int row, int col) const {
        return bits[static_cast<std::size_t>(row * width + col)] != 0;
    }
};

// Square RGB block cut from a source image.
struct Patch {
    int size = 0;
    int origin_row = 0;
    int origin_col = 0;
    std::vector<std::uint8_t> pixels;  // size*size*3, row-major

    std::uint8_t at(int row, int col, int channel) const {
        return pixels[static_cast<std::size_t>((row * size + col) * 3 + channel)];
    }
};

// Palette-index raster produced by k-means color quantization. Palette
// centroids are stored in lexicographic (R,G,B) order so the index layout is
// a pure function of the pixel multiset.
struct QuantizedPatch {
    int size = 0;
    std::vector<std::uint8_t> indices;           // size*size
    std::vector<std::array<double, 3>> palette;  // <= n_colors centroids

    std::uint8_t index_at(int row, int col) const {
        return indices[static_cast<std::size_t>(row * size + col)];
    }
};

struct PatchExtractionConfig {
    int size = 64;
    double overlap = 0.5;
    // Fraction of window pixels that must lie inside the mask; 1.0 means the
    // whole window.
    double min_inside_fraction = 1.0;
};

// Sliding-window extraction, stride = size*(1-overlap), windows ordered
// row-major by origin. A window is emitted iff its inside-mask fraction
// reaches min_inside_fraction.
std::vector<Patch> extract_patches(const RGBImage& image, const ROIMask& mask,
                                   const PatchExtractionConfig& cfg = {});

struct QuantizeResult {
    QuantizedPatch quantized;
    int iterations = 0;
    std::vector<double> sse_trace;  // within-cluster SSE after each iteration
};

// Lloyd k-means over the patch's RGB triples. Initial centers: one seeded
// pick from the distinct colors, then greedy farthest-point. If the patch has
// at most n_colors distinct colors the palette is exactly that set.
QuantizeResult quantize_colors(const Patch& patch, int n_colors, std::uint64_t seed,
                               int max_iter = 50);

// --- PNG I/O ----------------------------------------------------------------
RGBImage read_png_rgb(const std::string& path);
// Grayscale PNG thresholded at 128 (>= 128 is inside).
ROIMask read_png_mask(const std::string& path);
void write_png_rgb(const std::string& path, const RGBImage& image);
void write_png_gray(const std::string& path, int width, int height,
                    const std::vector<std::uint8_t>& gray);

}  // namespace milvb
