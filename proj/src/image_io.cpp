#include "retmosaic/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "retmosaic/error.hpp"

namespace retmosaic {

namespace fs = std::filesystem;

namespace {

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

// Next whitespace-delimited header token, skipping '#' comments.
std::string pnm_token(std::istream& in) {
  std::string tok;
  int c = 0;
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

int parse_dim(const std::string& tok, const fs::path& path) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used != tok.size() || v <= 0) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorKind::Io, path.string() + ": malformed header field '" + tok + "'");
  }
}

std::string lower_ext(const fs::path& p) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return e;
}

}  // namespace

ImageGray read_pgm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  if (pnm_token(in) != "P5") throw Error(ErrorKind::Io, path.string() + ": not a binary PGM");
  const int w = parse_dim(pnm_token(in), path);
  const int h = parse_dim(pnm_token(in), path);
  const int maxval = parse_dim(pnm_token(in), path);
  if (maxval > 255) throw Error(ErrorKind::Io, path.string() + ": only 8-bit PGM supported");
  std::vector<unsigned char> raw(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
    throw Error(ErrorKind::Io, path.string() + ": truncated pixel data");
  }
  std::vector<double> data(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) data[i] = raw[i] / static_cast<double>(maxval);
  return ImageGray(w, h, std::move(data));
}

void write_pgm(const fs::path& path, const ImageGray& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
  std::vector<unsigned char> raw(img.size());
  const auto px = img.pixels();
  for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = to_byte(px[i]);
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

ImageGray read_png(const fs::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
    throw Error(ErrorKind::Io, path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_GRAY;
  std::vector<unsigned char> raw(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, raw.data(), 0, nullptr)) {
    png_image_free(&image);
    throw Error(ErrorKind::Io, path.string() + ": " + image.message);
  }
  std::vector<double> data(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) data[i] = raw[i] / 255.0;
  return ImageGray(static_cast<int>(image.width), static_cast<int>(image.height),
                   std::move(data));
}

void write_png(const fs::path& path, const ImageGray& img) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = PNG_FORMAT_GRAY;
  std::vector<unsigned char> raw(img.size());
  const auto px = img.pixels();
  for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = to_byte(px[i]);
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, raw.data(), 0, nullptr)) {
    throw Error(ErrorKind::Io, path.string() + ": " + image.message);
  }
}

ImageGray read_dimg(const fs::path& path) {
  static_assert(std::endian::native == std::endian::little, "dimg assumes little-endian host");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  std::istringstream hdr(line);
  std::string magic;
  int w = 0;
  int h = 0;
  if (!(hdr >> magic >> w >> h) || magic != "RMDIMG" || w < 0 || h < 0) {
    throw Error(ErrorKind::Io, path.string() + ": bad RMDIMG header");
  }
  std::vector<double> data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
  in.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(data.size() * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(data.size() * sizeof(double))) {
    throw Error(ErrorKind::Io, path.string() + ": truncated pixel data");
  }
  return ImageGray(w, h, std::move(data));
}

void write_dimg(const fs::path& path, const ImageGray& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << "RMDIMG " << img.width() << ' ' << img.height() << '\n';
  const auto px = img.pixels();
  out.write(reinterpret_cast<const char*>(px.data()),
            static_cast<std::streamsize>(px.size() * sizeof(double)));
  if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

ImageGray read_image(const fs::path& path) {
  const std::string ext = lower_ext(path);
  if (ext == ".pgm") return read_pgm(path);
  if (ext == ".png") return read_png(path);
  if (ext == ".dimg") return read_dimg(path);
  throw Error(ErrorKind::Io, "unsupported image extension: " + path.string());
}

void write_image(const fs::path& path, const ImageGray& img) {
  const std::string ext = lower_ext(path);
  if (ext == ".pgm") return write_pgm(path, img);
  if (ext == ".png") return write_png(path, img);
  if (ext == ".dimg") return write_dimg(path, img);
  throw Error(ErrorKind::Io, "unsupported image extension: " + path.string());
}

std::vector<fs::path> list_frame_files(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw Error(ErrorKind::Io, "not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = lower_ext(entry.path());
    if (ext == ".pgm" || ext == ".png") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
  return files;
}

}  // namespace retmosaic
