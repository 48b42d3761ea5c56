#pragma once

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <csetjmp>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "mptv/grid.hpp"

namespace mptv {

/// One ImageGrid per channel, intensities scaled to [0, 1].
struct ChannelImage {
  std::vector<ImageGrid> channels;

  Dims dims() const { return channels.empty() ? Dims{} : channels.front().dims(); }
  bool grayscale() const { return channels.size() == 1; }

  /// Rec. 601 luma for three or more channels, the single channel otherwise.
  ImageGrid luminance() const {
    if (channels.size() < 3) return channels.front();
    ImageGrid y = channels[0] * 0.299;
    y += channels[1] * 0.587;
    y += channels[2] * 0.114;
    return y;
  }
};

namespace io_detail {

inline std::string lower_extension(const std::string& path) {
  const auto dot = path.find_last_of('.');
  if (dot == std::string::npos) return {};
  std::string ext = path.substr(dot + 1);
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

inline std::uint16_t quantize16(double v) {
  const double c = std::clamp(v, 0.0, 1.0);
  return static_cast<std::uint16_t>(std::lround(c * 65535.0));
}

struct FileCloser {
  void operator()(std::FILE* f) const noexcept {
    if (f != nullptr) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline FilePtr open_file(const std::string& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw IoError("cannot open '" + path + "'");
  return f;
}

// Next header token of a PNM file, skipping whitespace and # comments.
inline std::string pnm_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

inline ChannelImage read_pnm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  const std::string magic = pnm_token(in);
  const bool ascii = magic == "P2" || magic == "P3";
  const bool gray = magic == "P2" || magic == "P5";
  if (magic != "P2" && magic != "P5" && magic != "P3" && magic != "P6") {
    throw IoError("'" + path + "': unsupported PNM type '" + magic + "'");
  }
  std::size_t w = 0, h = 0;
  long maxval = 0;
  try {
    w = std::stoul(pnm_token(in));
    h = std::stoul(pnm_token(in));
    maxval = std::stol(pnm_token(in));
  } catch (const std::exception&) {
    throw IoError("'" + path + "': malformed PNM header");
  }
  if (w == 0 || h == 0 || maxval <= 0 || maxval > 65535) throw IoError("'" + path + "': bad PNM header");
  const std::size_t nch = gray ? 1 : 3;
  ChannelImage img;
  img.channels.assign(nch, ImageGrid({h, w}));
  const double scale = 1.0 / static_cast<double>(maxval);
  for (std::size_t k = 0; k < w * h; ++k) {
    for (std::size_t c = 0; c < nch; ++c) {
      long v = 0;
      if (ascii) {
        if (!(in >> v)) throw IoError("'" + path + "': truncated PNM data");
      } else if (maxval < 256) {
        const int b = in.get();
        if (b == EOF) throw IoError("'" + path + "': truncated PNM data");
        v = b;
      } else {
        const int hi = in.get();
        const int lo = in.get();
        if (lo == EOF) throw IoError("'" + path + "': truncated PNM data");
        v = (hi << 8) | lo;
      }
      img.channels[c][k] = static_cast<double>(v) * scale;
    }
  }
  return img;
}

inline void write_pgm16(const std::string& path, const ImageGrid& x) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "P5\n" << x.width() << ' ' << x.height() << "\n65535\n";
  for (std::size_t k = 0; k < x.size(); ++k) {
    const std::uint16_t q = quantize16(x[k]);
    out.put(static_cast<char>(q >> 8));
    out.put(static_cast<char>(q & 0xff));
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

inline ChannelImage read_png(const std::string& path) {
  FilePtr f = open_file(path, "rb");
  png_byte sig[8];
  if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw IoError("'" + path + "' is not a PNG file");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (png == nullptr || info == nullptr) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("libpng initialisation failed");
  }
  ChannelImage img;
  std::vector<png_bytep> rows;
  std::vector<png_byte> buffer;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("'" + path + "': corrupt PNG");
  }
  png_init_io(png, f.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (depth == 16) png_set_swap(png);  // host order on little-endian machines
  png_set_strip_alpha(png);
  png_read_update_info(png, info);
  const std::size_t w = png_get_image_width(png, info);
  const std::size_t h = png_get_image_height(png, info);
  const std::size_t nch = png_get_channels(png, info);
  const int out_depth = png_get_bit_depth(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  buffer.resize(stride * h);
  rows.resize(h);
  for (std::size_t i = 0; i < h; ++i) rows[i] = buffer.data() + i * stride;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  img.channels.assign(nch, ImageGrid({h, w}));
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < w; ++j) {
      for (std::size_t c = 0; c < nch; ++c) {
        double v;
        if (out_depth == 16) {
          std::uint16_t s;
          std::memcpy(&s, rows[i] + 2 * (j * nch + c), 2);
          v = s / 65535.0;
        } else {
          v = rows[i][j * nch + c] / 255.0;
        }
        img.channels[c](i, j) = v;
      }
    }
  }
  return img;
}

/// 16-bit grayscale (one channel) or RGB (three channels) PNG.
inline void write_png16(const std::string& path, const ChannelImage& img) {
  const std::size_t nch = img.channels.size();
  if (nch != 1 && nch != 3) throw IoError("PNG output needs one or three channels");
  const Dims d = img.dims();
  FilePtr f = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (png == nullptr || info == nullptr) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng initialisation failed");
  }
  std::vector<png_byte> buffer(d.size() * nch * 2);
  std::vector<png_bytep> rows(d.height);
  for (std::size_t i = 0; i < d.height; ++i) {
    rows[i] = buffer.data() + i * d.width * nch * 2;
    for (std::size_t j = 0; j < d.width; ++j) {
      for (std::size_t c = 0; c < nch; ++c) {
        const std::uint16_t q = quantize16(img.channels[c](i, j));
        rows[i][2 * (j * nch + c)] = static_cast<png_byte>(q >> 8);  // PNG is big-endian
        rows[i][2 * (j * nch + c) + 1] = static_cast<png_byte>(q & 0xff);
      }
    }
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("write failed for '" + path + "'");
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(d.width), static_cast<png_uint_32>(d.height), 16,
               nch == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace io_detail

inline ChannelImage read_image(const std::string& path) {
  const std::string ext = io_detail::lower_extension(path);
  if (ext == "png") return io_detail::read_png(path);
  if (ext == "pgm" || ext == "pnm" || ext == "ppm") return io_detail::read_pnm(path);
  throw IoError("'" + path + "': unsupported image format (use .png or .pgm)");
}

inline ImageGrid read_grayscale(const std::string& path) { return read_image(path).luminance(); }

/// Values are clipped to [0, 1] and quantized to 16 bits.
inline void write_image(const std::string& path, const ChannelImage& img) {
  const std::string ext = io_detail::lower_extension(path);
  if (ext == "png") return io_detail::write_png16(path, img);
  if (ext == "pgm") {
    if (!img.grayscale()) throw IoError("PGM output must be grayscale");
    return io_detail::write_pgm16(path, img.channels.front());
  }
  throw IoError("'" + path + "': unsupported output format (use .png or .pgm)");
}

inline void write_image(const std::string& path, const ImageGrid& x) {
  write_image(path, ChannelImage{{x}});
}

/// Rows of whitespace-separated reals.
inline ImageGrid read_matrix_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::vector<double> values;
  std::size_t rows = 0, cols = 0;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::size_t n = 0;
    std::string tok;
    while (ls >> tok) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw IoError("'" + path + "': not a number: '" + tok + "'");
      }
      ++n;
    }
    if (n == 0) continue;
    if (cols == 0) cols = n;
    if (n != cols) throw IoError("'" + path + "': ragged matrix rows");
    ++rows;
  }
  if (rows == 0) throw IoError("'" + path + "': empty matrix");
  return ImageGrid({rows, cols}, std::move(values));
}

inline void write_matrix_text(const std::string& path, const ImageGrid& m) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out.precision(17);
  for (std::size_t i = 0; i < m.height(); ++i) {
    for (std::size_t j = 0; j < m.width(); ++j) out << (j ? " " : "") << m(i, j);
    out << '\n';
  }
}

/// Kernel from a text matrix or a grayscale image; normalized to unit sum.
inline BlurKernel load_kernel_file(const std::string& path) {
  const std::string ext = io_detail::lower_extension(path);
  const ImageGrid m = (ext == "png" || ext == "pgm" || ext == "pnm") ? read_grayscale(path) : read_matrix_text(path);
  try {
    return BlurKernel::from_taps(m.dims(), std::vector<double>(m.data().begin(), m.data().end()));
  } catch (const Error& e) {
    throw IoError("'" + path + "': invalid kernel: " + e.what());
  }
}

inline ImageGrid kernel_as_grid(const BlurKernel& k) {
  return ImageGrid(k.dims(), std::vector<double>(k.taps().begin(), k.taps().end()));
}

}  // namespace mptv
