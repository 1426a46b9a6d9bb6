#include "sfca/mask_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <vector>

namespace sfca {

namespace {

std::string lower_extension(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_fail(png_structp png, png_const_charp msg) {
  (void)png;
  throw Error(std::string("png: ") + msg);
}

void png_warn(png_structp, png_const_charp) {}

BinaryMask read_png(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw Error("cannot open mask " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
  if (!png) throw Error("png: cannot allocate reader");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* png;
    png_infop* info;
    ~Guard() { png_destroy_read_struct(png, info, nullptr); }
  } guard{&png, &info};
  png_init_io(png, fp.get());
  png_read_info(png, info);

  const png_uint_32 width = png_get_image_width(png, info);
  const png_uint_32 height = png_get_image_height(png, info);
  const int color = png_get_color_type(png, info);
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA || color == PNG_COLOR_TYPE_PALETTE)
    png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  png_read_update_info(png, info);
  if (png_get_channels(png, info) != 1) throw Error("png: expected a single channel after conversion: " + path.string());

  std::vector<png_byte> buf(static_cast<std::size_t>(width) * height);
  std::vector<png_bytep> rows(height);
  for (png_uint_32 r = 0; r < height; ++r) rows[r] = buf.data() + static_cast<std::size_t>(r) * width;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);

  BinaryMask m(width, height);
  for (png_uint_32 r = 0; r < height; ++r)
    for (png_uint_32 c = 0; c < width; ++c)
      if (rows[r][c] != 0) m.set(r, c);
  return m;
}

void write_png(const std::filesystem::path& path, const BinaryMask& mask) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw Error("cannot write mask " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
  if (!png) throw Error("png: cannot allocate writer");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* png;
    png_infop* info;
    ~Guard() { png_destroy_write_struct(png, info); }
  } guard{&png, &info};
  png_init_io(png, fp.get());
  const auto w = static_cast<png_uint_32>(mask.width());
  const auto h = static_cast<png_uint_32>(mask.height());
  png_set_IHDR(png, info, w, h, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_byte> row(w);
  for (png_uint_32 r = 0; r < h; ++r) {
    for (png_uint_32 c = 0; c < w; ++c) row[c] = mask(r, c) ? 255 : 0;
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
}

// Next header token, skipping whitespace and '#' comments.
std::string pgm_token(std::istream& in) {
  std::string tok;
  char ch;
  while (in.get(ch)) {
    if (ch == '#') {
      std::string rest;
      std::getline(in, rest);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(ch);
  }
  return tok;
}

BinaryMask read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open mask " + path.string());
  const std::string magic = pgm_token(in);
  if (magic != "P5" && magic != "P2") throw Error("pgm: unsupported magic '" + magic + "' in " + path.string());
  const long width = std::stol(pgm_token(in));
  const long height = std::stol(pgm_token(in));
  const long maxval = std::stol(pgm_token(in));
  if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 65535) throw Error("pgm: bad header in " + path.string());
  BinaryMask m(width, height);
  if (magic == "P2") {
    for (long r = 0; r < height; ++r)
      for (long c = 0; c < width; ++c) {
        const std::string t = pgm_token(in);
        if (t.empty()) throw Error("pgm: truncated data in " + path.string());
        if (std::stol(t) != 0) m.set(r, c);
      }
    return m;
  }
  const std::size_t bpp = maxval > 255 ? 2 : 1;
  std::vector<unsigned char> buf(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * bpp);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (in.gcount() != static_cast<std::streamsize>(buf.size())) throw Error("pgm: truncated data in " + path.string());
  for (long r = 0; r < height; ++r)
    for (long c = 0; c < width; ++c) {
      const std::size_t k = (static_cast<std::size_t>(r) * static_cast<std::size_t>(width) + static_cast<std::size_t>(c)) * bpp;
      const bool on = bpp == 1 ? buf[k] != 0 : (buf[k] != 0 || buf[k + 1] != 0);
      if (on) m.set(r, c);
    }
  return m;
}

void write_pgm(const std::filesystem::path& path, const BinaryMask& mask) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write mask " + path.string());
  out << "P5\n" << mask.width() << ' ' << mask.height() << "\n255\n";
  std::vector<char> row(static_cast<std::size_t>(mask.width()));
  for (Eigen::Index r = 0; r < mask.height(); ++r) {
    for (Eigen::Index c = 0; c < mask.width(); ++c) row[static_cast<std::size_t>(c)] = mask(r, c) ? static_cast<char>(255) : 0;
    out.write(row.data(), static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw Error("failed writing mask " + path.string());
}

}  // namespace

BinaryMask read_mask(const std::filesystem::path& path) {
  const std::string ext = lower_extension(path);
  if (ext == ".png") return read_png(path);
  if (ext == ".pgm") return read_pgm(path);
  throw Error("unsupported mask format '" + ext + "' (expected .png or .pgm): " + path.string());
}

void write_mask(const std::filesystem::path& path, const BinaryMask& mask) {
  const std::string ext = lower_extension(path);
  if (ext == ".png") return write_png(path, mask);
  if (ext == ".pgm") return write_pgm(path, mask);
  throw Error("unsupported mask format '" + ext + "' (expected .png or .pgm): " + path.string());
}

}  // namespace sfca
