#include "t3s/netpbm.hpp"

#include <cctype>
#include <fstream>
#include <iterator>

namespace t3s {
namespace {

void write_raw(const std::filesystem::path& path, const char* magic, const Raster& r,
               std::size_t channels) {
  if (r.channels != channels || r.pixels.size() != r.width * r.height * channels) {
    throw Error("netpbm: raster layout does not match format for " + path.string());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("netpbm: cannot open " + path.string() + " for writing");
  const std::string header = std::string(magic) + "\n" + std::to_string(r.width) + " " +
                             std::to_string(r.height) + "\n255\n";
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(r.pixels.data()),
            static_cast<std::streamsize>(r.pixels.size()));
  if (!out) throw Error("netpbm: write failed for " + path.string());
}

class HeaderParser {
 public:
  HeaderParser(const std::vector<std::uint8_t>& bytes, std::string file)
      : bytes_(bytes), file_(std::move(file)) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw NetpbmError(file_ + ": " + what + " at byte offset " + std::to_string(pos_));
  }

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const auto c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(c)) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::size_t number(const char* what) {
    skip_space_and_comments();
    if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_])) fail(std::string("expected ") + what);
    std::size_t v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_++] - '0');
      if (v > (1u << 24)) fail(std::string(what) + " too large");
    }
    return v;
  }

  std::size_t pos_ = 0;

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::string file_;
};

}  // namespace

void write_ppm(const std::filesystem::path& path, const Raster& raster) {
  write_raw(path, "P6", raster, 3);
}

void write_pgm(const std::filesystem::path& path, const Raster& raster) {
  write_raw(path, "P5", raster, 1);
}

Raster read_netpbm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NetpbmError(path.string() + ": cannot open file");
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  HeaderParser p(bytes, path.string());
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    p.fail("bad magic number (expected P5 or P6)");
  }
  Raster r;
  r.channels = bytes[1] == '6' ? 3 : 1;
  p.pos_ = 2;
  r.width = p.number("width");
  r.height = p.number("height");
  const std::size_t maxval = p.number("maxval");
  if (r.width == 0 || r.height == 0) p.fail("zero image dimension");
  if (maxval == 0 || maxval > 255) p.fail("unsupported maxval " + std::to_string(maxval));
  if (p.pos_ >= bytes.size() || !std::isspace(bytes[p.pos_])) p.fail("missing header terminator");
  ++p.pos_;
  const std::size_t need = r.width * r.height * r.channels;
  if (bytes.size() - p.pos_ < need) {
    p.fail("truncated raster (need " + std::to_string(need) + " bytes, have " +
           std::to_string(bytes.size() - p.pos_) + ")");
  }
  r.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(p.pos_),
                  bytes.begin() + static_cast<std::ptrdiff_t>(p.pos_ + need));
  r.maxval = maxval;
  for (std::size_t i = 0; i < r.pixels.size(); ++i) {
    if (r.pixels[i] > maxval) {
      p.pos_ += i;
      p.fail("sample exceeds maxval");
    }
  }
  return r;
}

}  // namespace t3s
