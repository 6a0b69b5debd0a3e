#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace vistanet {

// Interleaved 8-bit raster; channels is 1 (gray) or 3 (RGB).
struct RawImage {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<uint8_t> pixels;
};

// Reads a PNG or JPEG file, sniffing the format from the leading bytes.
// force_gray collapses to a single channel (masks); otherwise RGB.
RawImage read_image(const std::string& path, bool force_gray = false);

void write_png(const std::string& path, const RawImage& img);

}  // namespace vistanet
