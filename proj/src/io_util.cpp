#include "io_util.hpp"

#include <cctype>
#include <fstream>
#include <iterator>

#include "partfuse/error.hpp"

namespace partfuse::detail {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("missing-file", "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("unwritable", "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("unwritable", "short write to " + path.string());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

namespace {

class HeaderCursor {
 public:
  explicit HeaderCursor(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::uint32_t number() {
    skip_space_and_comments();
    if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_])) {
      throw ValidationError("malformed", "malformed PNM header");
    }
    std::uint64_t v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_++] - '0');
      if (v > 0xffffffffu) throw ValidationError("malformed", "PNM header value too large");
    }
    return static_cast<std::uint32_t>(v);
  }

  std::size_t after_single_space() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      throw ValidationError("malformed", "PNM header must end with whitespace");
    }
    return pos_ + 1;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 2;
};

}  // namespace

PnmHeader parse_pnm_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw ValidationError("bad-magic", "not a binary PGM/PPM file");
  }
  HeaderCursor cursor(bytes);
  PnmHeader h;
  h.kind = static_cast<char>(bytes[1]);
  h.width = cursor.number();
  h.height = cursor.number();
  h.maxval = cursor.number();
  h.data_offset = cursor.after_single_space();
  return h;
}

std::string pnm_header(char kind, std::uint32_t width, std::uint32_t height, std::uint32_t maxval) {
  return std::string("P") + kind + "\n" + std::to_string(width) + " " + std::to_string(height) + "\n" +
         std::to_string(maxval) + "\n";
}

}  // namespace partfuse::detail
