#include "bonnet/io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace bonnet {

namespace fs = std::filesystem;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

std::string join_row(const double* v, int count) {
  std::string line;
  for (int i = 0; i < count; ++i) {
    if (i) line += ',';
    line += format_double(v[i]);
  }
  line += '\n';
  return line;
}

// "# kind key=value key=value"
std::map<std::string, std::string> parse_header(const std::string& line, const std::string& kind,
                                                const fs::path& path) {
  std::istringstream ss(line);
  std::string hash, k;
  ss >> hash >> k;
  if (hash != "#" || k != kind) throw IoError(path.string() + ": expected '# " + kind + "' header");
  std::map<std::string, std::string> kv;
  std::string tok;
  while (ss >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw IoError(path.string() + ": malformed header field '" + tok + "'");
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return kv;
}

int header_int(const std::map<std::string, std::string>& kv, const std::string& key, const fs::path& path) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw IoError(path.string() + ": header lacks " + key);
  try {
    return std::stoi(it->second);
  } catch (const std::exception&) {
    throw IoError(path.string() + ": bad value for " + key);
  }
}

std::vector<double> parse_rows(std::istream& in, int rows, int cols, const fs::path& path) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(rows) * cols);
  std::string line;
  for (int r = 0; r < rows; ++r) {
    if (!std::getline(in, line)) throw IoError(path.string() + ": expected " + std::to_string(rows) + " data rows");
    const char* p = line.c_str();
    for (int c = 0; c < cols; ++c) {
      char* end = nullptr;
      errno = 0;
      const double v = std::strtod(p, &end);
      if (end == p) throw IoError(path.string() + ": bad number on row " + std::to_string(r + 1));
      out.push_back(v);
      p = end;
      if (c + 1 < cols) {
        if (*p != ',') throw IoError(path.string() + ": row " + std::to_string(r + 1) + " too short");
        ++p;
      }
    }
    while (*p == '\r' || *p == ' ') ++p;
    if (*p != '\0') throw IoError(path.string() + ": row " + std::to_string(r + 1) + " too long");
  }
  return out;
}

}  // namespace

void write_image_csv(const fs::path& path, const Image& u) {
  const int n = u.grid.n();
  std::string text = "# image n=" + std::to_string(n) + "\n";
  for (int r = 0; r < n; ++r) text += join_row(u.values.data() + static_cast<std::ptrdiff_t>(r) * n, n);
  write_text(path, text);
}

Image read_image_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string header;
  std::getline(in, header);
  const int n = header_int(parse_header(header, "image", path), "n", path);
  if (n < 2) throw IoError(path.string() + ": n must be >= 2");
  const auto v = parse_rows(in, n, n, path);
  return Image(Grid(n), Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
}

void write_sinogram_csv(const fs::path& path, const Sinogram& f) {
  std::string text =
      "# sinogram n_theta=" + std::to_string(f.n_theta) + " n_tau=" + std::to_string(f.n_tau) + "\n";
  for (int a = 0; a < f.n_theta; ++a)
    text += join_row(f.values.data() + static_cast<std::ptrdiff_t>(a) * f.n_tau, f.n_tau);
  write_text(path, text);
}

Sinogram read_sinogram_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string header;
  std::getline(in, header);
  const auto kv = parse_header(header, "sinogram", path);
  const int n_theta = header_int(kv, "n_theta", path);
  const int n_tau = header_int(kv, "n_tau", path);
  if (n_theta < 1 || n_tau < 1) throw IoError(path.string() + ": empty sinogram");
  const auto v = parse_rows(in, n_theta, n_tau, path);
  return Sinogram(n_theta, n_tau, Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
}

namespace {

void write_png(const fs::path& path, int width, int height, bool rgb, const std::vector<std::uint8_t>& pixels) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(width);
  img.height = static_cast<png_uint_32>(height);
  img.format = rgb ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&img, path.c_str(), 0, pixels.data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw IoError("cannot write " + path.string() + ": " + msg);
  }
}

std::vector<std::uint8_t> scale_to_bytes(const Vector& v) {
  const double lo = v.minCoeff();
  const double hi = v.maxCoeff();
  std::vector<std::uint8_t> out(static_cast<std::size_t>(v.size()), 0);
  if (!(hi > lo)) return out;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    out[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(std::lround(255.0 * (v[i] - lo) / (hi - lo)));
  return out;
}

}  // namespace

void write_png_gray(const fs::path& path, const Image& u) {
  write_png(path, u.grid.n(), u.grid.n(), false, scale_to_bytes(u.values));
}

void write_png_gray(const fs::path& path, const Sinogram& f) {
  write_png(path, f.n_tau, f.n_theta, false, scale_to_bytes(f.values));
}

GrayImage8 read_png_gray(const fs::path& path) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) throw IoError("cannot read " + path.string());
  img.format = PNG_FORMAT_GRAY;
  GrayImage8 out;
  out.width = static_cast<int>(img.width);
  out.height = static_cast<int>(img.height);
  out.pixels.resize(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, out.pixels.data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw IoError("cannot decode " + path.string() + ": " + msg);
  }
  return out;
}

// ------------------------------------------------------------------ plotting

namespace {

using Glyph = std::array<std::uint8_t, 7>;

const Glyph* glyph(char c) {
  static const std::map<char, Glyph> font = {
      {'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}}, {'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
      {'2', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}}, {'3', {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E}},
      {'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}}, {'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
      {'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}}, {'7', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
      {'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}}, {'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},
      {'A', {0x0E, 0x11, 0x11, 0x11, 0x1F, 0x11, 0x11}}, {'B', {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E}},
      {'C', {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}}, {'D', {0x1C, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1C}},
      {'E', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}}, {'F', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10}},
      {'G', {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}}, {'H', {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
      {'I', {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}}, {'J', {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C}},
      {'K', {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}}, {'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F}},
      {'M', {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}}, {'N', {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11}},
      {'O', {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}}, {'P', {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10}},
      {'Q', {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}}, {'R', {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11}},
      {'S', {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}}, {'T', {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
      {'U', {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}}, {'V', {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04}},
      {'W', {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A}}, {'X', {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11}},
      {'Y', {0x11, 0x11, 0x11, 0x0A, 0x04, 0x04, 0x04}}, {'Z', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F}},
      {' ', {0, 0, 0, 0, 0, 0, 0}},                      {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C}},
      {'-', {0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00}}, {'+', {0x00, 0x04, 0x04, 0x1F, 0x04, 0x04, 0x00}},
      {'(', {0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02}}, {')', {0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08}},
      {'=', {0x00, 0x00, 0x1F, 0x00, 0x1F, 0x00, 0x00}}, {',', {0x00, 0x00, 0x00, 0x00, 0x0C, 0x04, 0x08}},
      {':', {0x00, 0x0C, 0x0C, 0x00, 0x0C, 0x0C, 0x00}}, {'_', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x1F}},
      {'/', {0x00, 0x01, 0x02, 0x04, 0x08, 0x10, 0x00}}, {'%', {0x18, 0x19, 0x02, 0x04, 0x08, 0x13, 0x03}},
      {'*', {0x00, 0x04, 0x15, 0x0E, 0x15, 0x04, 0x00}}, {'[', {0x0E, 0x08, 0x08, 0x08, 0x08, 0x08, 0x0E}},
      {']', {0x0E, 0x02, 0x02, 0x02, 0x02, 0x02, 0x0E}},
  };
  const auto it = font.find(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  return it == font.end() ? nullptr : &it->second;
}

struct Rgb {
  std::uint8_t r, g, b;
};

class Canvas {
 public:
  Canvas(int w, int h) : w_(w), h_(h), px_(static_cast<std::size_t>(w) * h * 3, 255) {}

  void set(int x, int y, Rgb c) {
    if (x < 0 || y < 0 || x >= w_ || y >= h_) return;
    auto* p = &px_[(static_cast<std::size_t>(y) * w_ + x) * 3];
    p[0] = c.r;
    p[1] = c.g;
    p[2] = c.b;
  }

  void rect(int x0, int y0, int x1, int y1, Rgb c) {
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) set(x, y, c);
  }

  void line(int x0, int y0, int x1, int y1, Rgb c, int thick = 1) {
    const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
    const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    for (;;) {
      rect(x0 - thick / 2, y0 - thick / 2, x0 + (thick - 1) / 2, y0 + (thick - 1) / 2, c);
      if (x0 == x1 && y0 == y1) break;
      const int e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        x0 += sx;
      }
      if (e2 <= dx) {
        err += dx;
        y0 += sy;
      }
    }
  }

  void text(int x, int y, const std::string& s, Rgb c) {
    for (char ch : s) {
      if (const Glyph* g = glyph(ch))
        for (int r = 0; r < 7; ++r)
          for (int col = 0; col < 5; ++col)
            if ((*g)[static_cast<std::size_t>(r)] & (0x10 >> col)) set(x + col, y + r, c);
      x += 6;
    }
  }

  static int text_width(const std::string& s) { return static_cast<int>(s.size()) * 6; }

  const std::vector<std::uint8_t>& pixels() const { return px_; }

 private:
  int w_, h_;
  std::vector<std::uint8_t> px_;
};

std::vector<double> nice_ticks(double lo, double hi, int target) {
  const double raw = (hi - lo) / std::max(1, target);
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  std::vector<double> ticks;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * step; t += step)
    ticks.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
  return ticks;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

}  // namespace

void write_line_plot(const fs::path& path, const PlotSpec& spec) {
  if (spec.width < 200 || spec.height < 150) throw IoError("plot too small");
  double xlo = INFINITY, xhi = -INFINITY, ylo = INFINITY, yhi = -INFINITY;
  for (const auto& s : spec.series) {
    if (s.x.size() != s.y.size()) throw IoError("plot series '" + s.label + "' has mismatched x/y");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      xlo = std::min(xlo, s.x[i]);
      xhi = std::max(xhi, s.x[i]);
      ylo = std::min(ylo, s.y[i]);
      yhi = std::max(yhi, s.y[i]);
    }
  }
  if (!std::isfinite(xlo)) xlo = 0, xhi = 1, ylo = 0, yhi = 1;
  if (xhi - xlo <= 0) xlo -= 1, xhi += 1;
  if (yhi - ylo <= 0) {
    const double pad = std::max(std::abs(ylo) * 0.05, 1e-12);
    ylo -= pad;
    yhi += pad;
  } else {
    const double pad = 0.08 * (yhi - ylo);
    ylo -= pad;
    yhi += pad;
  }

  const int left = 72, right = 150, top = 34, bottom = 46;
  const int pw = spec.width - left - right, ph = spec.height - top - bottom;
  Canvas cv(spec.width, spec.height);
  const Rgb black{0, 0, 0}, grid{225, 225, 225};
  auto sx = [&](double x) { return left + static_cast<int>(std::lround((x - xlo) / (xhi - xlo) * pw)); };
  auto sy = [&](double y) { return top + ph - static_cast<int>(std::lround((y - ylo) / (yhi - ylo) * ph)); };

  for (double t : nice_ticks(ylo, yhi, 6)) {
    const int y = sy(t);
    cv.line(left, y, left + pw, y, grid);
    const auto lbl = tick_label(t);
    cv.text(left - 6 - Canvas::text_width(lbl), y - 3, lbl, black);
  }
  for (double t : nice_ticks(xlo, xhi, 6)) {
    const int x = sx(t);
    cv.line(x, top, x, top + ph, grid);
    const auto lbl = tick_label(t);
    cv.text(x - Canvas::text_width(lbl) / 2, top + ph + 8, lbl, black);
  }
  cv.line(left, top, left, top + ph, black);
  cv.line(left, top + ph, left + pw, top + ph, black);
  cv.text(left + (pw - Canvas::text_width(spec.title)) / 2, 12, spec.title, black);
  cv.text(left + (pw - Canvas::text_width(spec.x_label)) / 2, spec.height - 16, spec.x_label, black);
  cv.text(8, 12, spec.y_label, black);

  static const Rgb palette[] = {{31, 119, 180}, {214, 39, 40}, {44, 160, 44}, {148, 103, 189},
                                {255, 127, 14}, {140, 86, 75}, {23, 190, 207}, {127, 127, 127}};
  for (std::size_t k = 0; k < spec.series.size(); ++k) {
    const auto& s = spec.series[k];
    const Rgb c = palette[k % std::size(palette)];
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < s.x.size(); ++i)
      if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) order.push_back(i);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s.x[a] < s.x[b]; });
    for (std::size_t i = 1; i < order.size(); ++i)
      cv.line(sx(s.x[order[i - 1]]), sy(s.y[order[i - 1]]), sx(s.x[order[i]]), sy(s.y[order[i]]), c, 2);
    for (std::size_t i : order) cv.rect(sx(s.x[i]) - 2, sy(s.y[i]) - 2, sx(s.x[i]) + 2, sy(s.y[i]) + 2, c);
    const int ly = top + 8 + static_cast<int>(k) * 14;
    cv.line(left + pw + 12, ly + 3, left + pw + 30, ly + 3, c, 2);
    cv.text(left + pw + 36, ly, s.label, black);
  }
  write_png(path, spec.width, spec.height, true, cv.pixels());
}

}  // namespace bonnet
