#pragma once

#include <string>

#include "svqa/vision.hpp"

namespace svqa {

// Raw portable float image: magic "IMGF", u32 height, u32 width (little
// endian), then f32 RGB payload in row-major order.
void write_imgf(const std::string& path, const Image& img);
Image read_imgf(const std::string& path);

// 8-bit PNG, non-interlaced; reads gray / RGB / RGBA, writes RGB.
void write_png(const std::string& path, const Image& img);
Image read_png(const std::string& path);

// Dispatches on the file's magic bytes (IMGF or PNG signature).
Image load_image(const std::string& path);

}  // namespace svqa
