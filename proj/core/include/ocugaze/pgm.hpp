#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "ocugaze/image.hpp"

namespace ocugaze {

// Binary PGM (P5), maxval 255 only.
GrayFrame decode_pgm(std::string_view bytes);
std::string encode_pgm(const GrayFrame& frame);

GrayFrame read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const GrayFrame& frame);

}  // namespace ocugaze
