#include "sodkit/png_io.hpp"

#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstring>
#include <fstream>

namespace sodkit {

namespace {

struct ReadCtx {
  const uint8_t* data = nullptr;
  size_t size = 0;
  size_t pos = 0;
  char error[192] = "decode error";
};

struct WriteCtx {
  std::vector<uint8_t>* out = nullptr;
  char error[192] = "encode error";
};

void store_error(char* slot, size_t cap, png_const_charp msg) {
  std::strncpy(slot, msg ? msg : "unknown libpng error", cap - 1);
  slot[cap - 1] = '\0';
}

void read_error_fn(png_structp png, png_const_charp msg) {
  auto* ctx = static_cast<ReadCtx*>(png_get_error_ptr(png));
  store_error(ctx->error, sizeof(ctx->error), msg);
  longjmp(png_jmpbuf(png), 1);
}

void write_error_fn(png_structp png, png_const_charp msg) {
  auto* ctx = static_cast<WriteCtx*>(png_get_error_ptr(png));
  store_error(ctx->error, sizeof(ctx->error), msg);
  longjmp(png_jmpbuf(png), 1);
}

void quiet_warning_fn(png_structp, png_const_charp) {}

void mem_read_fn(png_structp png, png_bytep out, png_size_t n) {
  auto* ctx = static_cast<ReadCtx*>(png_get_io_ptr(png));
  if (ctx->pos + n > ctx->size) {
    png_error(png, "unexpected end of PNG stream");
  }
  std::memcpy(out, ctx->data + ctx->pos, n);
  ctx->pos += n;
}

void mem_write_fn(png_structp png, png_bytep data, png_size_t n) {
  auto* ctx = static_cast<WriteCtx*>(png_get_io_ptr(png));
  ctx->out->insert(ctx->out->end(), data, data + n);
}

void mem_flush_fn(png_structp) {}

}  // namespace

GrayMap decode_png(const uint8_t* data, size_t size) {
  if (data == nullptr || size < 8 || png_sig_cmp(data, 0, 8) != 0) {
    throw DataError("input is not a PNG stream");
  }

  ReadCtx ctx;
  ctx.data = data;
  ctx.size = size;

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, &ctx, read_error_fn, quiet_warning_fn);
  if (!png) throw DataError("libpng read struct allocation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw DataError("libpng info struct allocation failed");
  }

  std::vector<uint8_t> pixels;
  std::vector<png_bytep> rows;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError(std::string("PNG decode failed: ") + ctx.error);
  }

  png_set_read_fn(png, &ctx, mem_read_fn);
  png_read_info(png, info);

  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  const int bit_depth = png_get_bit_depth(png, info);
  const int color_type = png_get_color_type(png, info);

  if (color_type == PNG_COLOR_TYPE_PALETTE) {
    png_error(png, "paletted PNG is unsupported");
  }
  if (bit_depth == 16) {
    png_error(png, "16-bit PNG is unsupported");
  }
  if (w == 0 || h == 0 || w > 1u << 20 || h > 1u << 20) {
    png_error(png, "unreasonable PNG dimensions");
  }

  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  if (color_type == PNG_COLOR_TYPE_GRAY_ALPHA || color_type == PNG_COLOR_TYPE_RGB_ALPHA) {
    png_set_strip_alpha(png);
  }
  png_set_interlace_handling(png);
  png_read_update_info(png, info);

  const int channels = png_get_channels(png, info);
  if (channels != 1 && channels != 3) {
    png_error(png, "unsupported PNG channel layout");
  }

  const size_t rowbytes = png_get_rowbytes(png, info);
  pixels.resize(rowbytes * h);
  rows.resize(h);
  for (png_uint_32 y = 0; y < h; ++y) rows[y] = pixels.data() + y * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  GrayMap out(static_cast<int>(h), static_cast<int>(w));
  for (png_uint_32 y = 0; y < h; ++y) {
    const uint8_t* row = pixels.data() + y * rowbytes;
    for (png_uint_32 x = 0; x < w; ++x) {
      double v;
      if (channels == 1) {
        v = row[x] / 255.0;
      } else {
        const uint8_t* px = row + 3 * x;
        v = (0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2]) / 255.0;
      }
      out.at(static_cast<int>(y), static_cast<int>(x)) = v;
    }
  }
  return out;
}

GrayMap decode_png(const std::vector<uint8_t>& bytes) {
  return decode_png(bytes.data(), bytes.size());
}

std::vector<uint8_t> encode_png(const GrayMap& map) {
  std::vector<uint8_t> out;
  WriteCtx ctx;
  ctx.out = &out;

  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, &ctx, write_error_fn, quiet_warning_fn);
  if (!png) throw DataError("libpng write struct allocation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw DataError("libpng info struct allocation failed");
  }

  std::vector<uint8_t> pixels(static_cast<size_t>(map.height) * map.width);
  std::vector<png_bytep> rows(map.height);
  for (int y = 0; y < map.height; ++y) {
    uint8_t* row = pixels.data() + static_cast<size_t>(y) * map.width;
    rows[y] = row;
    for (int x = 0; x < map.width; ++x) {
      row[x] = static_cast<uint8_t>(std::lround(map.at(y, x) * 255.0));
    }
  }

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw DataError(std::string("PNG encode failed: ") + ctx.error);
  }

  png_set_write_fn(png, &ctx, mem_write_fn, mem_flush_fn);
  png_set_compression_level(png, 6);
  png_set_filter(png, 0, PNG_FILTER_NONE);
  png_set_IHDR(png, info, map.width, map.height, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, info);
  png_destroy_write_struct(&png, &info);
  return out;
}

std::vector<uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open file: " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (f.bad()) throw DataError("read error on file: " + path);
  return bytes;
}

void write_file_bytes(const std::string& path, const std::vector<uint8_t>& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot open file for writing: " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw DataError("write error on file: " + path);
}

GrayMap load_gray(const std::string& path) {
  return decode_png(read_file_bytes(path));
}

void save_gray(const std::string& path, const GrayMap& map) {
  write_file_bytes(path, encode_png(map));
}

BinaryMask load_mask(const std::string& path, double threshold) {
  return binarize(load_gray(path), threshold);
}

void save_mask(const std::string& path, const BinaryMask& mask) {
  save_gray(path, to_gray(mask));
}

}  // namespace sodkit
