#pragma once

#include <filesystem>
#include <vector>

#include "restorekit/image.hpp"

namespace restorekit {

/// Reads an 8- or 16-bit PNG or binary PPM/PGM (P5/P6). Samples are divided
/// by the bit-depth maximum (255, 65535, or the PNM maxval). Only 1- and
/// 3-channel files are accepted; alpha or palette-with-alpha is a FormatError.
Image load_image(const std::filesystem::path& path);

/// Writes PNG (".png") or PPM/PGM (".ppm", ".pgm", ".pnm") depending on the
/// extension. Values are clamped to [0, 1] and rounded to the nearest code.
/// The write goes to a sibling temp file first and is renamed into place.
void save_image(const Image& img, const std::filesystem::path& path, int bit_depth = 8);

/// Encodes to an in-memory PNG byte stream.
std::vector<unsigned char> encode_png(const Image& img, int bit_depth = 8);
Image decode_png(const std::vector<unsigned char>& bytes);

/// Writes `bytes` to `path` via temp file + rename.
void write_file_atomic(const std::filesystem::path& path, const std::vector<unsigned char>& bytes);
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

/// Sorted list of .png/.ppm/.pgm/.pnm files directly inside `dir`.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

}  // namespace restorekit
