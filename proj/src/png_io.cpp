#include <png.h>

#include <cstring>

#include "milvb/patchex.hpp"

namespace milvb {

RGBImage read_png_rgb(const std::string& path) {
    png_image png;
    std::memset(&png, 0, sizeof(png));
    png.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&png, path.c_str()))
        throw DataError("cannot read PNG '" + path + "': " + png.message);
    png.format = PNG_FORMAT_RGB;

    RGBImage image;
    image.width = static_cast<int>(png.width);
    image.height = static_cast<int>(png.height);
    image.pixels.resize(PNG_IMAGE_SIZE(png));
    if (!png_image_finish_read(&png, nullptr, image.pixels.data(), 0, nullptr)) {
        png_image_free(&png);
        throw DataError("cannot decode PNG '" + path + "': " + png.message);
    }
    return image;
}

ROIMask read_png_mask(const std::string& path) {
    png_image png;
    std::memset(&png, 0, sizeof(png));
    png.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&png, path.c_str()))
        throw DataError("cannot read PNG mask '" + path + "': " + png.message);
    png.format = PNG_FORMAT_GRAY;

    std::vector<std::uint8_t> gray(PNG_IMAGE_SIZE(png));
    if (!png_image_finish_read(&png, nullptr, gray.data(), 0, nullptr)) {
        png_image_free(&png);
        throw DataError("cannot decode PNG mask '" + path + "': " + png.message);
    }

    ROIMask mask;
    mask.width = static_cast<int>(png.width);
    mask.height = static_cast<int>(png.height);
    mask.bits.resize(gray.size());
    for (std::size_t i = 0; i < gray.size(); ++i) mask.bits[i] = gray[i] >= 128 ? 1 : 0;
    return mask;
}

void write_png_rgb(const std::string& path, const RGBImage& image) {
    png_image png;
    std::memset(&png, 0, sizeof(png));
    png.version = PNG_IMAGE_VERSION;
    png.width = static_cast<png_uint_32>(image.width);
    png.height = static_cast<png_uint_32>(image.height);
    png.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&png, path.c_str(), 0, image.pixels.data(), 0, nullptr))
        throw DataError("cannot write PNG '" + path + "': " + png.message);
}

void write_png_gray(const std::string& path, int width, int height,
                    const std::vector<std::uint8_t>& gray) {
    png_image png;
    std::memset(&png, 0, sizeof(png));
    png.version = PNG_IMAGE_VERSION;
    png.width = static_cast<png_uint_32>(width);
    png.height = static_cast<png_uint_32>(height);
    png.format = PNG_FORMAT_GRAY;
    if (!png_image_write_to_file(&png, path.c_str(), 0, gray.data(), 0, nullptr))
        throw DataError("cannot write PNG '" + path + "': " + png.message);
}

}  // namespace milvb
