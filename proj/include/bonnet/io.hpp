#pragma once

#include "bonnet/core.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace bonnet {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Headered CSV, one image row per line, 17 significant digits.
void write_image_csv(const std::filesystem::path& path, const Image& u);
Image read_image_csv(const std::filesystem::path& path);

/// One line per angle.
void write_sinogram_csv(const std::filesystem::path& path, const Sinogram& f);
Sinogram read_sinogram_csv(const std::filesystem::path& path);

/// 8-bit grayscale with min-max scaling; a constant image renders black.
void write_png_gray(const std::filesystem::path& path, const Image& u);
void write_png_gray(const std::filesystem::path& path, const Sinogram& f);

struct GrayImage8 {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major
};

GrayImage8 read_png_gray(const std::filesystem::path& path);

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<PlotSeries> series;
  int width = 640;
  int height = 420;
};

/// RGB line chart with markers, axis ticks and a legend. Non-finite points are skipped.
void write_line_plot(const std::filesystem::path& path, const PlotSpec& spec);

/// Writes text atomically enough for our purposes: to a sibling temp file, then rename.
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// "%.17g"; "inf"/"-inf"/"nan" for non-finite values.
std::string format_double(double v);

}  // namespace bonnet
