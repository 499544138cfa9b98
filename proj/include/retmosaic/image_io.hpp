#pragma once

#include <filesystem>
#include <vector>

#include "retmosaic/image.hpp"

namespace retmosaic {

/// Binary P5 PGM, 8-bit. Values are scaled by 1/255 on read; on write they
/// are clamped to [0,1] and rounded to the nearest level.
ImageGray read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const ImageGray& img);

/// 8-bit grayscale PNG (other PNG color types are converted to gray on read).
ImageGray read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const ImageGray& img);

/// Lossless double-precision image used for intermediate stage outputs:
/// ASCII line "RMDIMG <width> <height>\n" followed by width*height
/// little-endian IEEE-754 doubles, row-major.
ImageGray read_dimg(const std::filesystem::path& path);
void write_dimg(const std::filesystem::path& path, const ImageGray& img);

/// Dispatch on extension: .pgm, .png, .dimg.
ImageGray read_image(const std::filesystem::path& path);
void write_image(const std::filesystem::path& path, const ImageGray& img);

/// Frame files (.pgm / .png) in a directory, in lexicographic order.
std::vector<std::filesystem::path> list_frame_files(const std::filesystem::path& dir);

}  // namespace retmosaic
