#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "t3s/tensor.hpp"

namespace t3s {

/// Malformed or truncated Netpbm input; the message names the file and the
/// byte offset where parsing stopped.
class NetpbmError : public Error {
 public:
  using Error::Error;
};

/// 8-bit raster, interleaved samples (1 for PGM, 3 for PPM).
struct Raster {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 1;
  std::size_t maxval = 255;  // as read; writers always emit 255
  std::vector<std::uint8_t> pixels;
};

/// Binary P6 (RGB) with maxval 255.
void write_ppm(const std::filesystem::path& path, const Raster& raster);
/// Binary P5 (gray) with maxval 255.
void write_pgm(const std::filesystem::path& path, const Raster& raster);

/// Reads P5 or P6 with maxval <= 255; comments in the header are skipped.
Raster read_netpbm(const std::filesystem::path& path);

}  // namespace t3s
