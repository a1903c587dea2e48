#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace partfuse::detail {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text(const std::filesystem::path& path, const std::string& text);

struct PnmHeader {
  char kind = 0;  // '5' for P5, '6' for P6
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint32_t maxval = 0;
  std::size_t data_offset = 0;
};

/// Parses a binary PNM header ("P5"/"P6", '#' comments allowed, exactly one
/// whitespace byte before the raster). Throws ValidationError bad-magic /
/// malformed.
PnmHeader parse_pnm_header(std::span<const std::uint8_t> bytes);

std::string pnm_header(char kind, std::uint32_t width, std::uint32_t height, std::uint32_t maxval);

}  // namespace partfuse::detail
