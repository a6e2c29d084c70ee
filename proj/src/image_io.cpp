#include "defocus/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <memory>
#include <vector>

#include "defocus/errors.hpp"

namespace defocus {

namespace {

enum class FileFormat { png, pfm };

FileFormat detect_format(const std::string& path) {
  const auto dot = path.find_last_of('.');
  std::string ext = dot == std::string::npos ? "" : path.substr(dot);
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (ext == ".png") return FileFormat::png;
  if (ext == ".pfm") return FileFormat::pfm;
  throw DomainError("unsupported file format for " + path +
                    " (expected .png or .pfm)");
}

void check_dimensions(long long h, long long w, long long c,
                      const std::string& path) {
  if (h <= 0 || w <= 0) {
    throw DataError("non-positive dimensions in " + path);
  }
  if (h * w * c > std::numeric_limits<int>::max()) {
    throw DataError("image too large in " + path);
  }
}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

struct PngReadCtx {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngReadCtx() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
  }
};

struct PngWriteCtx {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngWriteCtx() {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
  }
};

Raster load_png(const std::string& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw IoError("cannot open " + path + " for reading");
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 ||
      png_sig_cmp(sig, 0, 8) != 0) {
    throw DataError("not a PNG file: " + path);
  }

  PngReadCtx ctx;
  ctx.png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!ctx.png) throw IoError("PNG reader allocation failed");
  ctx.info = png_create_info_struct(ctx.png);
  if (!ctx.info) throw IoError("PNG info allocation failed");

  // Buffers live outside the setjmp region; libpng errors land in the branch
  // below and the throw unwinds them normally.
  std::vector<unsigned char> bytes;
  std::vector<png_bytep> rows;

  if (setjmp(png_jmpbuf(ctx.png))) {
    throw DataError("failed to decode PNG: " + path);
  }

  png_init_io(ctx.png, file.get());
  png_set_sig_bytes(ctx.png, 8);
  png_read_info(ctx.png, ctx.info);

  png_uint_32 width = 0;
  png_uint_32 height = 0;
  int bit_depth = 0;
  int color_type = 0;
  png_get_IHDR(ctx.png, ctx.info, &width, &height, &bit_depth, &color_type,
               nullptr, nullptr, nullptr);

  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(ctx.png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) {
    png_set_expand_gray_1_2_4_to_8(ctx.png);
  }
  if (png_get_valid(ctx.png, ctx.info, PNG_INFO_tRNS)) {
    png_set_tRNS_to_alpha(ctx.png);
  }
  if ((color_type & PNG_COLOR_MASK_ALPHA) != 0 ||
      png_get_valid(ctx.png, ctx.info, PNG_INFO_tRNS)) {
    png_set_strip_alpha(ctx.png);
  }
  png_set_interlace_handling(ctx.png);
  png_read_update_info(ctx.png, ctx.info);

  const int channels = png_get_channels(ctx.png, ctx.info);
  const int depth = png_get_bit_depth(ctx.png, ctx.info);
  if (channels != 1 && channels != 3) {
    throw DataError("unsupported PNG channel count " +
                    std::to_string(channels) + " in " + path);
  }
  if (depth != 8 && depth != 16) {
    throw DataError("unsupported PNG bit depth " + std::to_string(depth) +
                    " in " + path);
  }
  check_dimensions(height, width, channels, path);

  const std::size_t rowbytes = png_get_rowbytes(ctx.png, ctx.info);
  bytes.resize(rowbytes * height);
  rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) {
    rows[y] = bytes.data() + static_cast<std::size_t>(y) * rowbytes;
  }
  png_read_image(ctx.png, rows.data());
  png_read_end(ctx.png, nullptr);

  Raster out = Raster::zeros(static_cast<int>(height), static_cast<int>(width),
                             channels);
  const std::size_t samples_per_row =
      static_cast<std::size_t>(width) * static_cast<std::size_t>(channels);
  for (png_uint_32 y = 0; y < height; ++y) {
    const unsigned char* row = rows[y];
    double* dst = out.data.data() +
                  static_cast<std::size_t>(y) * samples_per_row;
    if (depth == 8) {
      for (std::size_t i = 0; i < samples_per_row; ++i) {
        dst[i] = static_cast<double>(row[i]) / 255.0;
      }
    } else {
      // PNG stores 16-bit samples big-endian.
      for (std::size_t i = 0; i < samples_per_row; ++i) {
        const unsigned v = (static_cast<unsigned>(row[2 * i]) << 8) |
                           static_cast<unsigned>(row[2 * i + 1]);
        dst[i] = static_cast<double>(v) / 65535.0;
      }
    }
  }
  return out;
}

void save_png(const Raster& raster, const std::string& path,
              PngBitDepth png_depth) {
  if (raster.channels != 1 && raster.channels != 3) {
    throw DomainError("PNG output supports 1 or 3 channels, got " +
                      std::to_string(raster.channels));
  }
  if (!raster.all_finite()) {
    throw DataError("cannot save non-finite samples to " + path);
  }

  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw IoError("cannot open " + path + " for writing");

  PngWriteCtx ctx;
  ctx.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                    nullptr);
  if (!ctx.png) throw IoError("PNG writer allocation failed");
  ctx.info = png_create_info_struct(ctx.png);
  if (!ctx.info) throw IoError("PNG info allocation failed");

  const int depth = png_depth == PngBitDepth::bits8 ? 8 : 16;
  const double maxval = depth == 8 ? 255.0 : 65535.0;
  const std::size_t samples_per_row = static_cast<std::size_t>(raster.width) *
                                      static_cast<std::size_t>(raster.channels);
  const std::size_t rowbytes =
      samples_per_row * (depth == 8 ? std::size_t{1} : std::size_t{2});
  std::vector<unsigned char> bytes(rowbytes *
                                   static_cast<std::size_t>(raster.height));
  std::vector<png_bytep> rows(static_cast<std::size_t>(raster.height));
  for (int y = 0; y < raster.height; ++y) {
    unsigned char* row =
        bytes.data() + static_cast<std::size_t>(y) * rowbytes;
    rows[static_cast<std::size_t>(y)] = row;
    const double* src =
        raster.data.data() + static_cast<std::size_t>(y) * samples_per_row;
    for (std::size_t i = 0; i < samples_per_row; ++i) {
      const double clamped = std::clamp(src[i], 0.0, 1.0);
      const unsigned v =
          static_cast<unsigned>(std::lround(clamped * maxval));
      if (depth == 8) {
        row[i] = static_cast<unsigned char>(v);
      } else {
        row[2 * i] = static_cast<unsigned char>(v >> 8);
        row[2 * i + 1] = static_cast<unsigned char>(v & 0xff);
      }
    }
  }

  // setjmp may clobber ordinary locals it is re-read after; volatile copies
  // are guaranteed to survive the longjmp path.
  const volatile int header_depth = depth;
  if (setjmp(png_jmpbuf(ctx.png))) {
    throw IoError("failed to write PNG: " + path);
  }
  png_init_io(ctx.png, file.get());
  png_set_IHDR(ctx.png, ctx.info, static_cast<png_uint_32>(raster.width),
               static_cast<png_uint_32>(raster.height), header_depth,
               raster.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(ctx.png, ctx.info);
  png_write_image(ctx.png, rows.data());
  png_write_end(ctx.png, nullptr);
}

// 16-bit grayscale PNG holding raw integer units (no [0,1] mapping).
std::vector<std::uint16_t> load_png_u16(const std::string& path, int* out_h,
                                        int* out_w) {
  const Raster r = load_png(path);
  if (r.channels != 1) {
    throw DataError("expected grayscale PNG in " + path + ", got " +
                    std::to_string(r.channels) + " channels");
  }
  std::vector<std::uint16_t> raw(r.data.size());
  for (std::size_t i = 0; i < r.data.size(); ++i) {
    raw[i] = static_cast<std::uint16_t>(std::lround(r.data[i] * 65535.0));
  }
  *out_h = r.height;
  *out_w = r.width;
  return raw;
}

void save_png_u16(const std::vector<std::uint16_t>& raw, int h, int w,
                  const std::string& path) {
  Raster r = Raster::zeros(h, w, 1);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    r.data[i] = static_cast<double>(raw[i]) / 65535.0;
  }
  save_png(r, path, PngBitDepth::bits16);
}

void append_f32_le(std::vector<unsigned char>& out, float value) {
  std::uint32_t bits = 0;
  std::memcpy(&bits, &value, sizeof(bits));
  out.push_back(static_cast<unsigned char>(bits & 0xff));
  out.push_back(static_cast<unsigned char>((bits >> 8) & 0xff));
  out.push_back(static_cast<unsigned char>((bits >> 16) & 0xff));
  out.push_back(static_cast<unsigned char>((bits >> 24) & 0xff));
}

float read_f32(const unsigned char* p, bool little_endian) {
  std::uint32_t bits;
  if (little_endian) {
    bits = static_cast<std::uint32_t>(p[0]) |
           (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) |
           (static_cast<std::uint32_t>(p[3]) << 24);
  } else {
    bits = static_cast<std::uint32_t>(p[3]) |
           (static_cast<std::uint32_t>(p[2]) << 8) |
           (static_cast<std::uint32_t>(p[1]) << 16) |
           (static_cast<std::uint32_t>(p[0]) << 24);
  }
  float value;
  std::memcpy(&value, &bits, sizeof(value));
  return value;
}

Raster load_pfm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path + " for reading");

  std::string magic;
  in >> magic;
  int channels = 0;
  if (magic == "PF") {
    channels = 3;
  } else if (magic == "Pf") {
    channels = 1;
  } else {
    throw DataError("not a PFM file: " + path);
  }
  long long width = 0;
  long long height = 0;
  double scale = 0.0;
  if (!(in >> width >> height >> scale)) {
    throw DataError("corrupt PFM header in " + path);
  }
  check_dimensions(height, width, channels, path);
  if (!std::isfinite(scale) || scale == 0.0) {
    throw DataError("invalid PFM scale in " + path);
  }
  const int sep = in.get();
  if (sep == EOF || std::isspace(sep) == 0) {
    throw DataError("corrupt PFM header in " + path);
  }

  const bool little_endian = scale < 0.0;
  Raster out = Raster::zeros(static_cast<int>(height), static_cast<int>(width),
                             channels);
  const std::size_t samples_per_row =
      static_cast<std::size_t>(width) * static_cast<std::size_t>(channels);
  std::vector<unsigned char> row(samples_per_row * 4);
  // PFM rows run bottom to top.
  for (long long y = height - 1; y >= 0; --y) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(row.size()));
    if (in.gcount() != static_cast<std::streamsize>(row.size())) {
      throw DataError("truncated PFM data in " + path);
    }
    double* dst =
        out.data.data() + static_cast<std::size_t>(y) * samples_per_row;
    for (std::size_t i = 0; i < samples_per_row; ++i) {
      dst[i] = static_cast<double>(read_f32(row.data() + 4 * i,
                                            little_endian));
    }
  }
  return out;
}

void save_pfm(const Raster& raster, const std::string& path,
              bool allow_nan) {
  if (raster.channels != 1 && raster.channels != 3) {
    throw DomainError("PFM output supports 1 or 3 channels, got " +
                      std::to_string(raster.channels));
  }
  if (!allow_nan && !raster.all_finite()) {
    throw DataError("cannot save non-finite samples to " + path);
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << (raster.channels == 3 ? "PF" : "Pf") << '\n'
      << raster.width << ' ' << raster.height << '\n'
      << "-1.0" << '\n';

  const std::size_t samples_per_row = static_cast<std::size_t>(raster.width) *
                                      static_cast<std::size_t>(raster.channels);
  std::vector<unsigned char> row;
  for (long long y = raster.height - 1; y >= 0; --y) {
    row.clear();
    const double* src =
        raster.data.data() + static_cast<std::size_t>(y) * samples_per_row;
    for (std::size_t i = 0; i < samples_per_row; ++i) {
      append_f32_le(row, static_cast<float>(src[i]));
    }
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw IoError("failed to write PFM: " + path);
}

GridMap map_from_pfm(const std::string& path) {
  const Raster r = load_pfm(path);
  if (r.channels != 1) {
    throw DataError("expected single-channel PFM in " + path + ", got " +
                    std::to_string(r.channels) + " channels");
  }
  GridMap m = GridMap::constant(r.height, r.width, 0.0);
  for (int y = 0; y < r.height; ++y) {
    for (int x = 0; x < r.width; ++x) {
      const double v = r.at(y, x);
      if (std::isfinite(v)) {
        m.set(y, x, v);
      } else {
        m.values[static_cast<std::size_t>(y * r.width + x)] = 0.0;
        m.valid[static_cast<std::size_t>(y * r.width + x)] = 0;
      }
    }
  }
  return m;
}

void map_to_pfm(const GridMap& map, const std::string& path) {
  Raster r = Raster::zeros(map.height, map.width, 1);
  for (int y = 0; y < map.height; ++y) {
    for (int x = 0; x < map.width; ++x) {
      r.at(y, x) = map.is_valid(y, x)
                       ? map.value_at(y, x)
                       : std::numeric_limits<double>::quiet_NaN();
    }
  }
  save_pfm(r, path, /*allow_nan=*/true);
}

}  // namespace

Raster load_raster(const std::string& path) {
  return detect_format(path) == FileFormat::png ? load_png(path)
                                                : load_pfm(path);
}

void save_raster(const Raster& raster, const std::string& path,
                 PngBitDepth png_depth) {
  if (detect_format(path) == FileFormat::png) {
    save_png(raster, path, png_depth);
  } else {
    save_pfm(raster, path, /*allow_nan=*/false);
  }
}

DepthMap load_depth(const std::string& path, double unit_scale) {
  if (!std::isfinite(unit_scale) || unit_scale <= 0.0) {
    throw DomainError("depth unit scale must be finite and positive");
  }
  if (detect_format(path) == FileFormat::pfm) {
    return map_from_pfm(path);
  }
  int h = 0;
  int w = 0;
  const std::vector<std::uint16_t> raw = load_png_u16(path, &h, &w);
  DepthMap m = DepthMap::constant(h, w, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::uint16_t v = raw[static_cast<std::size_t>(y * w + x)];
      if (v == 0) {
        m.valid[static_cast<std::size_t>(y * w + x)] = 0;
      } else {
        m.set(y, x, static_cast<double>(v) * unit_scale);
      }
    }
  }
  return m;
}

void save_depth(const DepthMap& depth, const std::string& path,
                double unit_scale) {
  if (!std::isfinite(unit_scale) || unit_scale <= 0.0) {
    throw DomainError("depth unit scale must be finite and positive");
  }
  if (detect_format(path) == FileFormat::pfm) {
    map_to_pfm(depth, path);
    return;
  }
  std::vector<std::uint16_t> raw(static_cast<std::size_t>(depth.height) *
                                 static_cast<std::size_t>(depth.width));
  for (int y = 0; y < depth.height; ++y) {
    for (int x = 0; x < depth.width; ++x) {
      const std::size_t i =
          static_cast<std::size_t>(y * depth.width + x);
      if (!depth.is_valid(y, x)) {
        raw[i] = 0;
        continue;
      }
      const double v = depth.value_at(y, x);
      if (!std::isfinite(v)) {
        throw DataError("non-finite depth at valid pixel (y=" +
                        std::to_string(y) + ", x=" + std::to_string(x) + ")");
      }
      const long long units = std::llround(v / unit_scale);
      if (units <= 0) {
        throw DataError("depth " + std::to_string(v) + "mm at (y=" +
                        std::to_string(y) + ", x=" + std::to_string(x) +
                        ") rounds to the reserved invalid value 0");
      }
      if (units > 65535) {
        throw DataError("depth " + std::to_string(v) + "mm at (y=" +
                        std::to_string(y) + ", x=" + std::to_string(x) +
                        ") exceeds the 16-bit range at unit scale " +
                        std::to_string(unit_scale));
      }
      raw[i] = static_cast<std::uint16_t>(units);
    }
  }
  save_png_u16(raw, depth.height, depth.width, path);
}

DefocusMap load_defocus(const std::string& path) {
  if (detect_format(path) == FileFormat::pfm) {
    return map_from_pfm(path);
  }
  int h = 0;
  int w = 0;
  const std::vector<std::uint16_t> raw = load_png_u16(path, &h, &w);
  DefocusMap m = DefocusMap::constant(h, w, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      m.set(y, x,
            static_cast<double>(raw[static_cast<std::size_t>(y * w + x)]) *
                kDefocusPngUnitPx);
    }
  }
  return m;
}

void save_defocus(const DefocusMap& defocus, const std::string& path) {
  if (detect_format(path) == FileFormat::pfm) {
    map_to_pfm(defocus, path);
    return;
  }
  if (!defocus.fully_valid()) {
    throw DataError("PNG defocus output requires a fully valid map");
  }
  std::vector<std::uint16_t> raw(static_cast<std::size_t>(defocus.height) *
                                 static_cast<std::size_t>(defocus.width));
  for (int y = 0; y < defocus.height; ++y) {
    for (int x = 0; x < defocus.width; ++x) {
      const double v = defocus.value_at(y, x);
      if (!std::isfinite(v) || v < 0.0) {
        throw DataError("defocus at (y=" + std::to_string(y) + ", x=" +
                        std::to_string(x) + ") must be finite and >= 0");
      }
      const long long units = std::llround(v / kDefocusPngUnitPx);
      if (units > 65535) {
        throw DataError("defocus " + std::to_string(v) + "px at (y=" +
                        std::to_string(y) + ", x=" + std::to_string(x) +
                        ") exceeds the PNG range of " +
                        std::to_string(65535.0 * kDefocusPngUnitPx) + "px");
      }
      raw[static_cast<std::size_t>(y * defocus.width + x)] =
          static_cast<std::uint16_t>(units);
    }
  }
  save_png_u16(raw, defocus.height, defocus.width, path);
}

}  // namespace defocus
