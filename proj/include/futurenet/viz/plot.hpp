// Copyright 2026 The FutureNet-LOF Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "futurenet/core/error.hpp"
#include "futurenet/model/outputs.hpp"
#include "futurenet/scene/scene.hpp"

namespace futurenet {

struct PlotOptions {
  int width = 900;
  int height = 900;
  double margin_m = 8.0;
  std::int64_t lof_keyframe = -1;  // -1 = last keyframe of the field
};

namespace plot_detail {

struct Rgb {
  unsigned char r = 0, g = 0, b = 0;
};

inline Rgb lerp(Rgb a, Rgb b, double t) {
  auto mix = [t](unsigned char x, unsigned char y) {
    return static_cast<unsigned char>(std::lround(x + t * (y - x)));
  };
  return {mix(a.r, b.r), mix(a.g, b.g), mix(a.b, b.b)};
}

/// Dark-violet to teal to yellow ramp over [0, 1].
inline Rgb heat(double p) {
  p = std::clamp(p, 0.0, 1.0);
  const Rgb lo{68, 1, 84}, mid{33, 145, 140}, hi{253, 231, 37};
  return p < 0.5 ? lerp(lo, mid, p * 2.0) : lerp(mid, hi, (p - 0.5) * 2.0);
}

inline const Rgb kModePalette[6] = {
  {214, 69, 65}, {230, 126, 34}, {155, 89, 182}, {41, 128, 185}, {22, 160, 133}, {241, 196, 15}};

inline std::string hex(Rgb c) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", c.r, c.g, c.b);
  return buf;
}

/// World-to-pixel mapping that fits the scene bounds, preserving aspect.
struct Viewport {
  double min_x = 0, min_y = 0;
  double scale = 1.0;
  int w = 0, h = 0;

  Viewport(const Scene & scene, const TrajectoryForecast * fc, const PlotOptions & opt) {
    double lo_x = 1e18, lo_y = 1e18, hi_x = -1e18, hi_y = -1e18;
    auto grow = [&](double x, double y) {
      lo_x = std::min(lo_x, x);
      lo_y = std::min(lo_y, y);
      hi_x = std::max(hi_x, x);
      hi_y = std::max(hi_y, y);
    };
    for (const auto & p : scene.points) grow(p.pose.x, p.pose.y);
    for (const auto & a : scene.agents) {
      for (const auto & s : a.states) {
        if (s.valid) grow(s.pose.x, s.pose.y);
      }
    }
    for (const auto & f : scene.futures) {
      for (const auto & s : f.states) {
        if (s.valid) grow(s.pose.x, s.pose.y);
      }
    }
    if (fc != nullptr) {
      for (std::int64_t a = 0; a < fc->means.dim(0); ++a) {
        for (std::int64_t k = 0; k < fc->means.dim(1); ++k) {
          for (std::int64_t t = 0; t < fc->means.dim(2); ++t) {
            grow(fc->means.at(a, k, t, 0), fc->means.at(a, k, t, 1));
          }
        }
      }
    }
    if (lo_x > hi_x) {
      lo_x = lo_y = -1.0;
      hi_x = hi_y = 1.0;
    }
    lo_x -= opt.margin_m;
    lo_y -= opt.margin_m;
    hi_x += opt.margin_m;
    hi_y += opt.margin_m;
    w = opt.width;
    h = opt.height;
    scale = std::min(w / (hi_x - lo_x), h / (hi_y - lo_y));
    min_x = lo_x;
    min_y = lo_y;
  }

  double px(double x) const { return (x - min_x) * scale; }
  double py(double y) const { return h - (y - min_y) * scale; }  // y grows upward in world
};

// -- raster backend ----------------------------------------------------------

struct Raster {
  int w, h;
  std::vector<unsigned char> rgb;

  Raster(int width, int height) : w(width), h(height), rgb(static_cast<std::size_t>(w) * h * 3, 255) {}

  void set(int x, int y, Rgb c) {
    if (x < 0 || y < 0 || x >= w || y >= h) return;
    const std::size_t i = (static_cast<std::size_t>(y) * w + x) * 3;
    rgb[i] = c.r;
    rgb[i + 1] = c.g;
    rgb[i + 2] = c.b;
  }

  void disc(double cx, double cy, double radius, Rgb c) {
    const int x0 = static_cast<int>(std::floor(cx - radius)), x1 = static_cast<int>(std::ceil(cx + radius));
    const int y0 = static_cast<int>(std::floor(cy - radius)), y1 = static_cast<int>(std::ceil(cy + radius));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double dx = x - cx, dy = y - cy;
        if (dx * dx + dy * dy <= radius * radius) set(x, y, c);
      }
    }
  }

  void line(double x0, double y0, double x1, double y1, double width, Rgb c) {
    const double dx = x1 - x0, dy = y1 - y0;
    const double len = std::sqrt(dx * dx + dy * dy);
    const int steps = std::max(1, static_cast<int>(len * 2.0));
    for (int i = 0; i <= steps; ++i) {
      const double t = static_cast<double>(i) / steps;
      disc(x0 + t * dx, y0 + t * dy, width * 0.5, c);
    }
  }
};

inline void append_u32_be(std::string & out, std::uint32_t v) {
  for (int i = 3; i >= 0; --i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::uint32_t crc32(const std::string & data) {
  static const auto table = [] {
    std::vector<std::uint32_t> t(256);
    for (std::uint32_t n = 0; n < 256; ++n) {
      std::uint32_t c = n;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
      t[n] = c;
    }
    return t;
  }();
  std::uint32_t c = 0xffffffffu;
  for (const char ch : data) {
    c = table[(c ^ static_cast<unsigned char>(ch)) & 0xffu] ^ (c >> 8);
  }
  return c ^ 0xffffffffu;
}

inline std::uint32_t adler32(const std::string & data) {
  std::uint32_t a = 1, b = 0;
  for (const char ch : data) {
    a = (a + static_cast<unsigned char>(ch)) % 65521u;
    b = (b + a) % 65521u;
  }
  return (b << 16) | a;
}

inline void append_chunk(std::string & out, const char type[5], const std::string & data) {
  append_u32_be(out, static_cast<std::uint32_t>(data.size()));
  std::string body(type, 4);
  body += data;
  out += body;
  append_u32_be(out, crc32(body));
}

/// PNG with a stored (uncompressed) zlib payload; no external codec needed.
inline std::string encode_png(const Raster & img) {
  std::string raw;
  raw.reserve(static_cast<std::size_t>(img.h) * (static_cast<std::size_t>(img.w) * 3 + 1));
  for (int y = 0; y < img.h; ++y) {
    raw.push_back('\0');  // filter: none
    raw.append(
      reinterpret_cast<const char *>(img.rgb.data() + static_cast<std::size_t>(y) * img.w * 3),
      static_cast<std::size_t>(img.w) * 3);
  }

  std::string idat;
  idat.push_back('\x78');
  idat.push_back('\x01');
  std::size_t pos = 0;
  while (pos < raw.size() || raw.empty()) {
    const std::size_t n = std::min<std::size_t>(65535, raw.size() - pos);
    const bool final = pos + n == raw.size();
    idat.push_back(final ? '\x01' : '\x00');
    idat.push_back(static_cast<char>(n & 0xff));
    idat.push_back(static_cast<char>((n >> 8) & 0xff));
    idat.push_back(static_cast<char>(~n & 0xff));
    idat.push_back(static_cast<char>((~n >> 8) & 0xff));
    idat.append(raw, pos, n);
    pos += n;
    if (final) break;
  }
  append_u32_be(idat, adler32(raw));

  std::string png("\x89PNG\r\n\x1a\n", 8);
  std::string ihdr;
  append_u32_be(ihdr, static_cast<std::uint32_t>(img.w));
  append_u32_be(ihdr, static_cast<std::uint32_t>(img.h));
  ihdr += std::string("\x08\x02\x00\x00\x00", 5);  // 8-bit RGB
  append_chunk(png, "IHDR", ihdr);
  append_chunk(png, "IDAT", idat);
  append_chunk(png, "IEND", "");
  return png;
}

/// Per-map-point color: occupancy heat when a field is given, gray otherwise.
inline std::vector<Rgb> point_colors(
  const Scene & scene, const LaneOccupancyField * lof, std::int64_t keyframe) {
  std::vector<Rgb> colors(scene.points.size(), Rgb{176, 176, 176});
  if (lof == nullptr || !lof->enabled()) return colors;
  std::int64_t kf = keyframe;
  if (kf < 0 || kf >= lof->values.dim(0)) kf = lof->values.dim(0) - 1;
  const std::int64_t n = std::min<std::int64_t>(lof->values.dim(1),
                                                static_cast<std::int64_t>(scene.points.size()));
  for (std::int64_t i = 0; i < n; ++i) colors[static_cast<std::size_t>(i)] = heat(lof->values.at(kf, i));
  return colors;
}

}  // namespace plot_detail

/// Scene snapshot as SVG: map points (occupancy-colored when a field is
/// given), agent histories, ground-truth futures, and one polyline per
/// predicted mode per agent.
inline std::string render_svg(
  const Scene & scene, const TrajectoryForecast * fc = nullptr,
  const LaneOccupancyField * lof = nullptr, const PlotOptions & opt = {}) {
  using plot_detail::Rgb;
  const plot_detail::Viewport vp(scene, fc, opt);
  std::string svg;
  char buf[256];
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(vp.w) +
         "\" height=\"" + std::to_string(vp.h) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";

  const std::vector<Rgb> colors = plot_detail::point_colors(scene, lof, opt.lof_keyframe);
  for (std::size_t i = 0; i < scene.points.size(); ++i) {
    const auto & p = scene.points[i].pose;
    std::snprintf(
      buf, sizeof(buf), "<circle cx=\"%.1f\" cy=\"%.1f\" r=\"1.6\" fill=\"%s\"/>\n", vp.px(p.x),
      vp.py(p.y), plot_detail::hex(colors[i]).c_str());
    svg += buf;
  }

  auto polyline = [&](const std::vector<std::pair<double, double>> & pts, const std::string & color,
                      double width, double opacity) {
    if (pts.size() < 2) return;
    svg += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"" +
           std::to_string(width) + "\" stroke-opacity=\"" + std::to_string(opacity) + "\" points=\"";
    for (const auto & [x, y] : pts) {
      std::snprintf(buf, sizeof(buf), "%.1f,%.1f ", vp.px(x), vp.py(y));
      svg += buf;
    }
    svg += "\"/>\n";
  };

  for (const auto & agent : scene.agents) {
    std::vector<std::pair<double, double>> pts;
    for (const auto & s : agent.states) {
      if (s.valid) pts.emplace_back(s.pose.x, s.pose.y);
    }
    polyline(pts, "#2d3436", 2.0, 1.0);
    if (!pts.empty()) {
      std::snprintf(
        buf, sizeof(buf), "<circle cx=\"%.1f\" cy=\"%.1f\" r=\"3.5\" fill=\"#2d3436\"/>\n",
        vp.px(pts.back().first), vp.py(pts.back().second));
      svg += buf;
    }
  }
  for (const auto & fut : scene.futures) {
    std::vector<std::pair<double, double>> pts;
    for (const auto & s : fut.states) {
      if (s.valid) pts.emplace_back(s.pose.x, s.pose.y);
    }
    polyline(pts, "#27ae60", 2.0, 1.0);
  }
  if (fc != nullptr) {
    for (std::int64_t a = 0; a < fc->means.dim(0); ++a) {
      for (std::int64_t k = 0; k < fc->means.dim(1); ++k) {
        std::vector<std::pair<double, double>> pts;
        for (std::int64_t t = 0; t < fc->means.dim(2); ++t) {
          pts.emplace_back(fc->means.at(a, k, t, 0), fc->means.at(a, k, t, 1));
        }
        const Rgb c = plot_detail::kModePalette[k % 6];
        polyline(pts, plot_detail::hex(c), 1.5, 0.45 + 0.55 * fc->probs.at(a, k));
      }
    }
  }
  svg += "</svg>\n";
  return svg;
}

/// Same picture rasterized to PNG bytes.
inline std::string render_png(
  const Scene & scene, const TrajectoryForecast * fc = nullptr,
  const LaneOccupancyField * lof = nullptr, const PlotOptions & opt = {}) {
  using plot_detail::Rgb;
  const plot_detail::Viewport vp(scene, fc, opt);
  plot_detail::Raster img(vp.w, vp.h);

  const std::vector<Rgb> colors = plot_detail::point_colors(scene, lof, opt.lof_keyframe);
  for (std::size_t i = 0; i < scene.points.size(); ++i) {
    const auto & p = scene.points[i].pose;
    img.disc(vp.px(p.x), vp.py(p.y), 1.6, colors[i]);
  }
  auto polyline = [&](const std::vector<std::pair<double, double>> & pts, Rgb c, double width) {
    for (std::size_t i = 1; i < pts.size(); ++i) {
      img.line(
        vp.px(pts[i - 1].first), vp.py(pts[i - 1].second), vp.px(pts[i].first),
        vp.py(pts[i].second), width, c);
    }
  };
  for (const auto & agent : scene.agents) {
    std::vector<std::pair<double, double>> pts;
    for (const auto & s : agent.states) {
      if (s.valid) pts.emplace_back(s.pose.x, s.pose.y);
    }
    polyline(pts, Rgb{45, 52, 54}, 2.0);
    if (!pts.empty()) img.disc(vp.px(pts.back().first), vp.py(pts.back().second), 3.5, Rgb{45, 52, 54});
  }
  for (const auto & fut : scene.futures) {
    std::vector<std::pair<double, double>> pts;
    for (const auto & s : fut.states) {
      if (s.valid) pts.emplace_back(s.pose.x, s.pose.y);
    }
    polyline(pts, Rgb{39, 174, 96}, 2.0);
  }
  if (fc != nullptr) {
    for (std::int64_t a = 0; a < fc->means.dim(0); ++a) {
      for (std::int64_t k = 0; k < fc->means.dim(1); ++k) {
        std::vector<std::pair<double, double>> pts;
        for (std::int64_t t = 0; t < fc->means.dim(2); ++t) {
          pts.emplace_back(fc->means.at(a, k, t, 0), fc->means.at(a, k, t, 1));
        }
        polyline(pts, plot_detail::kModePalette[k % 6], 1.5);
      }
    }
  }
  return plot_detail::encode_png(img);
}

/// Write SVG or PNG depending on the path extension.
inline void write_plot(
  const std::string & path, const Scene & scene, const TrajectoryForecast * fc = nullptr,
  const LaneOccupancyField * lof = nullptr, const PlotOptions & opt = {}) {
  std::string data;
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".svg") {
    data = render_svg(scene, fc, lof, opt);
  } else if (path.size() >= 4 && path.substr(path.size() - 4) == ".png") {
    data = render_png(scene, fc, lof, opt);
  } else {
    throw ConfigError("plot output must end in .svg or .png");
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write plot '" + path + "'");
  f.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!f) throw IoError("write failed for plot '" + path + "'");
}

}  // namespace futurenet
