#include "ocugaze/pgm.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "ocugaze/error.hpp"

namespace ocugaze {

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::string_view bytes) : bytes_(bytes) {}

  int next_int(const char* what) {
    skip_space_and_comments();
    std::size_t start = pos_;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) ++pos_;
    if (start == pos_) {
      throw Error(ErrorKind::parse, std::string("PGM header: expected ") + what);
    }
    return std::stoi(std::string(bytes_.substr(start, pos_ - start)));
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_offset() {
    if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
      throw Error(ErrorKind::parse, "PGM header: missing separator before raster");
    }
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::string_view bytes_;
  std::size_t pos_ = 2;
};

}  // namespace

GrayFrame decode_pgm(std::string_view bytes) {
  if (bytes.size() < 2 || bytes.substr(0, 2) != "P5") {
    throw Error(ErrorKind::parse, "not a binary PGM (missing P5 magic)");
  }
  HeaderReader header(bytes);
  const int width = header.next_int("width");
  const int height = header.next_int("height");
  const int maxval = header.next_int("maxval");
  if (maxval != 255) {
    throw Error(ErrorKind::unsupported_format, "only 8-bit PGM (maxval 255) is supported");
  }
  const std::size_t offset = header.raster_offset();
  const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (bytes.size() < offset + count) {
    throw Error(ErrorKind::parse, "PGM raster truncated");
  }
  std::vector<std::uint8_t> data(bytes.begin() + static_cast<std::ptrdiff_t>(offset),
                                 bytes.begin() + static_cast<std::ptrdiff_t>(offset + count));
  return GrayFrame(width, height, std::move(data));
}

std::string encode_pgm(const GrayFrame& frame) {
  std::string out = "P5\n" + std::to_string(frame.width()) + " " + std::to_string(frame.height()) + "\n255\n";
  out.append(reinterpret_cast<const char*>(frame.pixels().data()), frame.size());
  return out;
}

GrayFrame read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return decode_pgm(buffer.str());
}

void write_pgm(const std::filesystem::path& path, const GrayFrame& frame) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  const auto bytes = encode_pgm(frame);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace ocugaze
