#include "rainforge/image_io.h"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "rainforge/error.h"

namespace rainforge {

namespace {

std::uint8_t quantize(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

struct PngReadState {
  std::span<const std::uint8_t> bytes;
  std::size_t offset = 0;
};

void png_read_from_span(png_structp png, png_bytep out, png_size_t length) {
  auto* state = static_cast<PngReadState*>(png_get_io_ptr(png));
  if (state->offset + length > state->bytes.size()) {
    png_error(png, "truncated PNG stream");
  }
  std::memcpy(out, state->bytes.data() + state->offset, length);
  state->offset += length;
}

void png_write_to_vector(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void png_flush_noop(png_structp) {}

[[noreturn]] void png_throwing_error(png_structp, png_const_charp message) {
  throw IoError(std::string("PNG decode error: ") + message);
}

void png_silent_warning(png_structp, png_const_charp) {}

bool is_ppm_space(std::uint8_t c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

}  // namespace

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

Image decode_png(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
    throw IoError("not a PNG stream");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                           png_throwing_error, png_silent_warning);
  if (!png) throw IoError("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("png_create_info_struct failed");
  }
  PngReadState state{bytes, 0};
  try {
    png_set_read_fn(png, &state, png_read_from_span);
    png_read_info(png, info);

    const png_byte color = png_get_color_type(png, info);
    const png_byte depth = png_get_bit_depth(png, info);
    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_read_update_info(png, info);
    // tRNS expansion can reintroduce alpha; strip it after the update.
    if (png_get_color_type(png, info) & PNG_COLOR_MASK_ALPHA) {
      png_set_strip_alpha(png);
      png_read_update_info(png, info);
    }

    const int width = static_cast<int>(png_get_image_width(png, info));
    const int height = static_cast<int>(png_get_image_height(png, info));
    const int channels = png_get_channels(png, info);
    if (channels != 1 && channels != 3) throw IoError("unsupported PNG channel layout");

    const std::size_t stride = png_get_rowbytes(png, info);
    std::vector<std::uint8_t> raw(stride * static_cast<std::size_t>(height));
    std::vector<png_bytep> rows(static_cast<std::size_t>(height));
    for (int y = 0; y < height; ++y) rows[y] = raw.data() + stride * y;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    Image img(width, height, channels);
    auto& out = img.values();
    for (int y = 0; y < height; ++y)
      for (int i = 0; i < width * channels; ++i)
        out[static_cast<std::size_t>(y) * width * channels + i] = rows[y][i] / 255.0;
    return img;
  } catch (...) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw;
  }
}

std::vector<std::uint8_t> encode_png(const Image& img) {
  if (img.empty()) throw InvalidArgument("cannot encode an empty image");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                            png_throwing_error, png_silent_warning);
  if (!png) throw IoError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("png_create_info_struct failed");
  }
  std::vector<std::uint8_t> out;
  try {
    png_set_write_fn(png, &out, png_write_to_vector, png_flush_noop);
    png_set_IHDR(png, info, img.width(), img.height(), 8,
                 img.channels() == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    const std::size_t stride = static_cast<std::size_t>(img.width()) * img.channels();
    std::vector<std::uint8_t> row(stride);
    for (int y = 0; y < img.height(); ++y) {
      for (std::size_t i = 0; i < stride; ++i) row[i] = quantize(img.values()[y * stride + i]);
      png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
  } catch (...) {
    png_destroy_write_struct(&png, &info);
    throw;
  }
  return out;
}

Image decode_ppm(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 0;
  auto next_token = [&]() -> std::string {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (is_ppm_space(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    std::string tok;
    while (pos < bytes.size() && !is_ppm_space(bytes[pos]) && bytes[pos] != '#') {
      tok.push_back(static_cast<char>(bytes[pos++]));
    }
    if (tok.empty()) throw IoError("truncated PPM header");
    return tok;
  };
  if (next_token() != "P6") throw IoError("not a binary PPM (P6) stream");
  int width = 0, height = 0, maxval = 0;
  try {
    width = std::stoi(next_token());
    height = std::stoi(next_token());
    maxval = std::stoi(next_token());
  } catch (const std::logic_error&) {
    throw IoError("malformed PPM header");
  }
  if (width <= 0 || height <= 0) throw IoError("PPM dimensions must be positive");
  if (maxval != 255) throw IoError("only maxval 255 PPM is supported");
  // Exactly one whitespace byte separates the header from the raster.
  if (pos >= bytes.size() || !is_ppm_space(bytes[pos])) throw IoError("malformed PPM header");
  ++pos;
  const std::size_t n = static_cast<std::size_t>(width) * height * 3;
  if (bytes.size() - pos < n) throw IoError("truncated PPM raster");
  Image img(width, height, 3);
  for (std::size_t i = 0; i < n; ++i) img.values()[i] = bytes[pos + i] / 255.0;
  return img;
}

std::vector<std::uint8_t> encode_ppm(const Image& img) {
  if (img.channels() != 3) throw InvalidArgument("PPM output requires 3 channels");
  const std::string header =
      "P6\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + img.size());
  for (double v : img.values()) out.push_back(quantize(v));
  return out;
}

Image load_image(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("no such file: " + path.string());
  const auto bytes = read_file(path);
  if (bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0) return decode_png(bytes);
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') return decode_ppm(bytes);
  throw IoError("unsupported image format: " + path.string());
}

void save_image(const Image& img, const std::filesystem::path& path) {
  const std::string ext = lower_extension(path);
  if (ext == ".png") {
    write_file(path, encode_png(img));
  } else if (ext == ".ppm") {
    write_file(path, encode_ppm(img));
  } else {
    throw InvalidArgument("unsupported output extension: " + path.string());
  }
}

RegionMask load_mask(const std::filesystem::path& path) {
  const Image img = load_image(path);
  RegionMask mask(img.width(), img.height(), false);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      bool on = false;
      for (int c = 0; c < img.channels(); ++c) on = on || img.at(x, y, c) > 0.0;
      mask.set(x, y, on);
    }
  return mask;
}

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[at + i]) << (8 * i);
  return v;
}

}  // namespace

std::vector<std::uint8_t> encode_field(const DisplacementField& field) {
  std::vector<std::uint8_t> out;
  out.reserve(8 + field.vectors().size() * 8);
  put_u32(out, static_cast<std::uint32_t>(field.width()));
  put_u32(out, static_cast<std::uint32_t>(field.height()));
  for (const Vec2& v : field.vectors()) {
    put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v.x)));
    put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v.y)));
  }
  return out;
}

DisplacementField decode_field(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8) throw IoError("truncated .dfield header");
  const std::uint32_t width = get_u32(bytes, 0);
  const std::uint32_t height = get_u32(bytes, 4);
  if (width == 0 || height == 0 || width > (1u << 20) || height > (1u << 20)) {
    throw IoError("invalid .dfield dimensions");
  }
  const std::size_t n = static_cast<std::size_t>(width) * height;
  if (bytes.size() != 8 + n * 8) throw IoError(".dfield size does not match its header");
  std::vector<Vec2> vectors(n);
  for (std::size_t i = 0; i < n; ++i) {
    vectors[i].x = std::bit_cast<float>(get_u32(bytes, 8 + i * 8));
    vectors[i].y = std::bit_cast<float>(get_u32(bytes, 12 + i * 8));
  }
  try {
    return DisplacementField(static_cast<int>(width), static_cast<int>(height),
                             std::move(vectors));
  } catch (const InvalidArgument& e) {
    throw IoError(std::string("corrupt .dfield: ") + e.what());
  }
}

void save_field(const DisplacementField& field, const std::filesystem::path& path) {
  write_file(path, encode_field(field));
}

DisplacementField load_field(const std::filesystem::path& path) {
  return decode_field(read_file(path));
}

}  // namespace rainforge
