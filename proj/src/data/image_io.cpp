#include "dcnn/image.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <vector>

#include <jpeglib.h>
#include <png.h>

namespace dcnn {

namespace {

Tensor rgb_to_tensor(const std::vector<unsigned char>& rgb, int h, int w) {
  Tensor t({h, w, 3});
  for (std::size_t i = 0; i < rgb.size(); ++i) t[i] = static_cast<float>(rgb[i]);
  return t;
}

Tensor decode_png_file(const std::string& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str()))
    throw ImageError("png decode failed: " + path + ": " + image.message);
  image.format = PNG_FORMAT_RGB;  // libpng promotes gray and strips alpha
  std::vector<unsigned char> rgb(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, rgb.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw ImageError("png decode failed: " + path + ": " + msg);
  }
  return rgb_to_tensor(rgb, static_cast<int>(image.height), static_cast<int>(image.width));
}

struct JpegErr {
  jpeg_error_mgr mgr;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_err_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErr*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

Tensor decode_jpeg_file(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw ImageError("cannot open image: " + path);

  jpeg_decompress_struct cinfo;
  JpegErr err;
  cinfo.err = jpeg_std_error(&err.mgr);
  err.mgr.error_exit = jpeg_err_exit;

  // No C++ objects with destructors may live between here and the longjmp.
  std::vector<unsigned char> rgb;
  int h = 0, w = 0;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    std::fclose(f);
    throw ImageError("jpeg decode failed: " + path + ": " + err.message);
  }

  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, f);
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;  // promotes grayscale
  jpeg_start_decompress(&cinfo);
  h = static_cast<int>(cinfo.output_height);
  w = static_cast<int>(cinfo.output_width);
  rgb.resize(static_cast<std::size_t>(h) * w * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    unsigned char* row = rgb.data() + static_cast<std::size_t>(cinfo.output_scanline) * w * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  std::fclose(f);
  return rgb_to_tensor(rgb, h, w);
}

}  // namespace

Tensor decode_image(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw ImageError("cannot open image: " + path);
  unsigned char magic[4] = {0, 0, 0, 0};
  const std::size_t got = std::fread(magic, 1, 4, f);
  std::fclose(f);
  if (got >= 4 && magic[0] == 0x89 && magic[1] == 'P' && magic[2] == 'N' && magic[3] == 'G')
    return decode_png_file(path);
  if (got >= 2 && magic[0] == 0xff && magic[1] == 0xd8) return decode_jpeg_file(path);
  throw ImageError("unsupported image format (not PNG or JPEG): " + path);
}

void encode_png(const Tensor& hwc, const std::string& path) {
  if (hwc.rank() != 3 || hwc.dim(2) != 3) throw ImageError("encode_png expects an HxWx3 tensor");
  const int h = hwc.dim(0), w = hwc.dim(1);
  std::vector<unsigned char> rgb(hwc.size());
  for (std::size_t i = 0; i < hwc.size(); ++i) {
    const float v = std::round(hwc[i]);
    rgb[i] = static_cast<unsigned char>(std::clamp(v, 0.0f, 255.0f));
  }
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(w);
  image.height = static_cast<png_uint_32>(h);
  image.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.c_str(), 0, rgb.data(), 0, nullptr))
    throw ImageError("png encode failed: " + path + ": " + image.message);
}

}  // namespace dcnn
