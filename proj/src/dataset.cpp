#include "tbdx/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <set>

#include <png.h>

#include "tbdx/errors.hpp"

namespace tbdx {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FileHandle = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_abort(png_structp png, png_const_charp message) {
  (void)png;
  throw IoError(std::string("libpng: ") + message);
}

void png_quiet(png_structp, png_const_charp) {}

Image read_png(const std::filesystem::path& path) {
  FileHandle file(std::fopen(path.c_str(), "rb"));
  if (!file) throw IoError("cannot open " + path.string());

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_abort, png_quiet);
  if (!png) throw IoError("libpng initialization failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("libpng initialization failed");
  }

  try {
    png_init_io(png, file.get());
    png_read_info(png, info);

    const png_byte color = png_get_color_type(png, info);
    if (color != PNG_COLOR_TYPE_GRAY) {
      throw IoError(path.string() + " is not grayscale");
    }
    if (png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_bit_depth(png, info) == 16) png_set_swap(png);  // stored big-endian
    png_read_update_info(png, info);

    const png_uint_32 height = png_get_image_height(png, info);
    const png_uint_32 width = png_get_image_width(png, info);
    const int depth = png_get_bit_depth(png, info);
    const double max_value = depth == 16 ? 65535.0 : 255.0;

    std::vector<png_byte> row(png_get_rowbytes(png, info));
    Image img(static_cast<Eigen::Index>(height), static_cast<Eigen::Index>(width));
    for (png_uint_32 r = 0; r < height; ++r) {
      png_read_row(png, row.data(), nullptr);
      for (png_uint_32 c = 0; c < width; ++c) {
        double v;
        if (depth == 16) {
          std::uint16_t raw;
          std::memcpy(&raw, row.data() + 2 * c, 2);
          v = raw;
        } else {
          v = row[c];
        }
        img(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v / max_value;
      }
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
  } catch (...) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw;
  }
}

void skip_pgm_separators(std::istream& in) {
  while (true) {
    const int ch = in.peek();
    if (ch == '#') {
      std::string comment;
      std::getline(in, comment);
    } else if (std::isspace(ch)) {
      in.get();
    } else {
      return;
    }
  }
}

long read_pgm_number(std::istream& in, const std::filesystem::path& path) {
  skip_pgm_separators(in);
  long value = 0;
  if (!(in >> value) || value < 0) throw IoError("malformed PGM header in " + path.string());
  return value;
}

Image read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string magic;
  in >> magic;
  if (magic != "P2" && magic != "P5") throw IoError(path.string() + " is not a PGM image");

  const long width = read_pgm_number(in, path);
  const long height = read_pgm_number(in, path);
  const long max_value = read_pgm_number(in, path);
  if (width <= 0 || height <= 0 || max_value <= 0 || max_value > 65535) {
    throw IoError("malformed PGM header in " + path.string());
  }

  Image img(height, width);
  if (magic == "P2") {
    for (Eigen::Index r = 0; r < height; ++r) {
      for (Eigen::Index c = 0; c < width; ++c) {
        long v;
        if (!(in >> v) || v < 0 || v > max_value) {
          throw IoError("bad pixel in " + path.string());
        }
        img(r, c) = static_cast<double>(v) / static_cast<double>(max_value);
      }
    }
  } else {
    in.get();  // single separator byte after the header
    const int bytes = max_value > 255 ? 2 : 1;
    std::vector<unsigned char> row(static_cast<std::size_t>(width) * bytes);
    for (Eigen::Index r = 0; r < height; ++r) {
      in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
      if (!in) throw IoError("truncated PGM data in " + path.string());
      for (Eigen::Index c = 0; c < width; ++c) {
        // Binary PGM samples above 255 are big-endian two-byte values.
        const long v = bytes == 2 ? (row[2 * c] << 8 | row[2 * c + 1]) : row[c];
        if (v > max_value) throw IoError("bad pixel in " + path.string());
        img(r, c) = static_cast<double>(v) / static_cast<double>(max_value);
      }
    }
  }
  return img;
}

void write_png_rows(const std::filesystem::path& path, Eigen::Index height, Eigen::Index width,
                    int depth, const std::function<void(Eigen::Index, png_bytep)>& fill_row) {
  FileHandle file(std::fopen(path.c_str(), "wb"));
  if (!file) throw IoError("cannot open " + path.string() + " for writing");

  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_abort, png_quiet);
  if (!png) throw IoError("libpng initialization failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("libpng initialization failed");
  }

  try {
    png_init_io(png, file.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height),
                 depth, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    if (depth == 16) png_set_swap(png);

    std::vector<png_byte> row(static_cast<std::size_t>(width) * (depth / 8));
    for (Eigen::Index r = 0; r < height; ++r) {
      fill_row(r, row.data());
      png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
  } catch (...) {
    png_destroy_write_struct(&png, &info);
    throw;
  }
}

bool iequals_suffix(const std::string& name, const std::string& suffix) {
  if (name.size() < suffix.size()) return false;
  return std::equal(suffix.rbegin(), suffix.rend(), name.rbegin(), [](char a, char b) {
    return std::tolower(static_cast<unsigned char>(a)) ==
           std::tolower(static_cast<unsigned char>(b));
  });
}

}  // namespace

Image read_image(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("no such image: " + path.string());
  const std::string name = path.filename().string();
  if (iequals_suffix(name, ".pgm")) return read_pgm(path);
  if (iequals_suffix(name, ".png")) return read_png(path);
  throw IoError(path.string() + ": only PNG and PGM images are supported");
}

void write_png(const std::filesystem::path& path, const Image& img) {
  if (img.size() == 0) throw ArgumentError("cannot write an empty image");
  write_png_rows(path, img.rows(), img.cols(), 16, [&img](Eigen::Index r, png_bytep row) {
    for (Eigen::Index c = 0; c < img.cols(); ++c) {
      const double v = std::clamp(img(r, c), 0.0, 1.0);
      const auto raw = static_cast<std::uint16_t>(std::lround(v * 65535.0));
      std::memcpy(row + 2 * c, &raw, 2);
    }
  });
}

void write_mask_png(const std::filesystem::path& path, const Mask& mask) {
  if (mask.size() == 0) throw ArgumentError("cannot write an empty mask");
  write_png_rows(path, mask.rows(), mask.cols(), 8, [&mask](Eigen::Index r, png_bytep row) {
    for (Eigen::Index c = 0; c < mask.cols(); ++c) {
      row[c] = mask(r, c) ? 255 : 0;
    }
  });
}

std::vector<ManifestRow> load_manifest(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw IoError("cannot open manifest " + manifest.string());

  std::string line;
  if (!std::getline(in, line) || line != "path,label") {
    throw IoError(manifest.string() + ": first line must be the header \"path,label\"");
  }

  std::vector<ManifestRow> rows;
  std::set<std::string> seen;
  std::size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    const std::size_t comma = line.rfind(',');
    if (comma == std::string::npos || comma == 0) {
      throw IoError(manifest.string() + ":" + std::to_string(line_number) + ": expected path,label");
    }
    ManifestRow row;
    row.path = line.substr(0, comma);
    const std::string label = line.substr(comma + 1);
    if (label == "0") {
      row.label = 0;
    } else if (label == "1") {
      row.label = 1;
    } else {
      throw IoError(manifest.string() + ":" + std::to_string(line_number) + ": bad label \"" +
                    label + "\" for " + row.path);
    }
    if (!seen.insert(row.path).second) {
      throw IoError(manifest.string() + ":" + std::to_string(line_number) + ": duplicate path " +
                    row.path);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError(manifest.string() + " lists no images");
  return rows;
}

std::vector<LabeledImage> load_dataset(const std::filesystem::path& manifest) {
  const std::vector<ManifestRow> rows = load_manifest(manifest);
  const std::filesystem::path base = manifest.parent_path();
  std::vector<LabeledImage> out;
  out.reserve(rows.size());
  for (const ManifestRow& row : rows) {
    std::filesystem::path p(row.path);
    if (p.is_relative()) p = base / p;
    LabeledImage item;
    item.image = read_image(p);
    item.label = row.label;
    item.path = row.path;
    out.push_back(std::move(item));
  }
  return out;
}

std::vector<AtlasEntry> load_atlas_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw IoError(dir.string() + " is not a directory");
  }
  std::map<std::string, std::filesystem::path> images;
  std::map<std::string, std::filesystem::path> masks;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string filename = entry.path().filename().string();
    if (!iequals_suffix(filename, ".png") && !iequals_suffix(filename, ".pgm")) continue;
    const std::string stem = entry.path().stem().string();
    constexpr const char* kMaskTag = "_mask";
    if (stem.size() > 5 && stem.ends_with(kMaskTag)) {
      masks[stem.substr(0, stem.size() - 5)] = entry.path();
    } else {
      images[stem] = entry.path();
    }
  }

  std::vector<AtlasEntry> atlas;
  for (const auto& [name, image_path] : images) {
    const auto mask_it = masks.find(name);
    if (mask_it == masks.end()) {
      throw IoError("atlas image " + image_path.string() + " has no " + name + "_mask file");
    }
    AtlasEntry entry;
    entry.image = read_image(image_path);
    const Image mask_img = read_image(mask_it->second);
    if (mask_img.rows() != entry.image.rows() || mask_img.cols() != entry.image.cols()) {
      throw IoError("atlas mask shape mismatch for " + name);
    }
    entry.mask = (mask_img > 0.0).cast<std::uint8_t>();
    atlas.push_back(std::move(entry));
    masks.erase(mask_it);
  }
  if (!masks.empty()) {
    throw IoError("atlas mask " + masks.begin()->second.string() + " has no image");
  }
  if (atlas.empty()) throw IoError(dir.string() + " holds no atlas image/mask pairs");
  return atlas;
}

}  // namespace tbdx
