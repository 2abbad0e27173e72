#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tbdx/image.hpp"
#include "tbdx/segmentation.hpp"

namespace tbdx {

/// Reads an 8- or 16-bit grayscale PNG or a PGM (P2/P5, any declared max
/// value) and scales intensities to [0,1] by the format's declared maximum.
Image read_image(const std::filesystem::path& path);

/// 16-bit grayscale PNG; intensities are clamped to [0,1] and scaled to the
/// full range, so reading the file back reproduces values within 1/65535.
void write_png(const std::filesystem::path& path, const Image& img);

/// 8-bit grayscale PNG with foreground 255, background 0.
void write_mask_png(const std::filesystem::path& path, const Mask& mask);

struct ManifestRow {
  std::string path;  // as written in the manifest
  int label = 0;
};

/// CSV with the exact header "path,label"; every row names a unique image
/// path and a 0/1 label. Violations report the offending row and path.
std::vector<ManifestRow> load_manifest(const std::filesystem::path& manifest);

struct LabeledImage {
  Image image;
  int label = 0;
  std::string path;
};

/// Loads every manifest row; relative image paths resolve against the
/// manifest's directory. Order is preserved.
std::vector<LabeledImage> load_dataset(const std::filesystem::path& manifest);

/// Reads `name.png` (or `.pgm`) + `name_mask.png` pairs from a directory,
/// sorted by name; mask pixels are foreground when nonzero. A lone image or
/// mask without its partner is an error.
std::vector<AtlasEntry> load_atlas_dir(const std::filesystem::path& dir);

}  // namespace tbdx
