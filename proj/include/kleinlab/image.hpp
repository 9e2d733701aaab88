#pragma once

#include <zlib.h>

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "kleinlab/limitset.hpp"

namespace kleinlab {

struct ImageSpec {
    int width = 640, height = 640;
    enum class Projection { plane, sphere } projection = Projection::plane;
    bool auto_window = true;
    double xmin = -2, xmax = 2, ymin = -2, ymax = 2;
    std::string annotation;  // embedded as a header comment / text chunk
};

struct Image {
    int width = 0, height = 0;
    std::vector<uint8_t> rgb;  // 3 bytes per pixel, row-major

    uint8_t* at(int x, int y) { return rgb.data() + 3 * (static_cast<size_t>(y) * width + x); }
};

namespace detail {
// fixed palette indexed by word depth
inline const uint8_t kPalette[8][3] = {{230, 90, 60},  {250, 180, 60}, {160, 220, 80},
                                       {70, 200, 160}, {70, 150, 230}, {130, 100, 230},
                                       {220, 90, 200}, {240, 240, 240}};
}  // namespace detail

inline Image render(const LimitSample& sample, const ImageSpec& spec) {
    if (sample.points.empty()) throw std::invalid_argument("render: empty sample");
    Image img;
    img.width = spec.width;
    img.height = spec.height;
    img.rgb.assign(static_cast<size_t>(spec.width) * spec.height * 3, 0);

    double xmin = spec.xmin, xmax = spec.xmax, ymin = spec.ymin, ymax = spec.ymax;
    if (spec.projection == ImageSpec::Projection::sphere) {
        xmin = ymin = -1.05;
        xmax = ymax = 1.05;
    } else if (spec.auto_window) {
        bool first = true;
        for (const auto& sp : sample.points) {
            if (sp.p.inf) continue;
            double x = sp.p.z.real(), y = sp.p.z.imag();
            if (first) { xmin = xmax = x; ymin = ymax = y; first = false; }
            xmin = std::min(xmin, x); xmax = std::max(xmax, x);
            ymin = std::min(ymin, y); ymax = std::max(ymax, y);
        }
        double mx = 0.05 * (xmax - xmin + 1e-9), my = 0.05 * (ymax - ymin + 1e-9);
        xmin -= mx; xmax += mx; ymin -= my; ymax += my;
    }

    for (const auto& sp : sample.points) {
        double x, y;
        if (spec.projection == ImageSpec::Projection::sphere) {
            // azimuthal equidistant from the pole carrying infinity; the
            // antipode has no preferred direction, so pin it to +x
            double r = std::acos(std::clamp(sp.sphere.w, -1.0, 1.0)) / M_PI;
            double hx = sp.sphere.x, hy = sp.sphere.y;
            double hn = std::hypot(hx, hy);
            if (hn < 1e-15) { hx = 1; hy = 0; } else { hx /= hn; hy /= hn; }
            x = r * hx;
            y = r * hy;
        } else {
            if (sp.p.inf) continue;
            x = sp.p.z.real();
            y = sp.p.z.imag();
        }
        int px = static_cast<int>((x - xmin) / (xmax - xmin) * spec.width);
        int py = static_cast<int>((ymax - y) / (ymax - ymin) * spec.height);
        if (px < 0 || px >= spec.width || py < 0 || py >= spec.height) continue;
        const uint8_t* c = detail::kPalette[sp.depth % 8];
        uint8_t* dst = img.at(px, py);
        dst[0] = c[0]; dst[1] = c[1]; dst[2] = c[2];
    }
    return img;
}

// binary PPM (P6); the annotation rides in a header comment
inline std::string ppm_bytes(const Image& img, const std::string& annotation = "") {
    std::ostringstream out;
    out << "P6\n";
    if (!annotation.empty()) out << "# " << annotation << "\n";
    out << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.rgb.data()),
              static_cast<std::streamsize>(img.rgb.size()));
    return out.str();
}

inline void write_ppm(const Image& img, const std::string& path,
                      const std::string& annotation = "") {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_ppm: cannot open " + path);
    std::string bytes = ppm_bytes(img, annotation);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

namespace detail {

inline void png_chunk(std::string& out, const char type[4], const std::string& data) {
    auto be32 = [](uint32_t v) {
        std::string s(4, '\0');
        s[0] = static_cast<char>(v >> 24); s[1] = static_cast<char>(v >> 16);
        s[2] = static_cast<char>(v >> 8);  s[3] = static_cast<char>(v);
        return s;
    };
    out += be32(static_cast<uint32_t>(data.size()));
    std::string body(type, 4);
    body += data;
    out += body;
    uLong crc = crc32(0L, reinterpret_cast<const Bytef*>(body.data()),
                      static_cast<uInt>(body.size()));
    out += be32(static_cast<uint32_t>(crc));
}

}  // namespace detail

// minimal RGB8 PNG encoder (no filtering) on top of zlib
inline std::string png_bytes(const Image& img, const std::string& annotation = "") {
    std::string out("\x89PNG\r\n\x1a\n", 8);
    std::string ihdr;
    auto be32 = [&](uint32_t v) {
        ihdr += static_cast<char>(v >> 24); ihdr += static_cast<char>(v >> 16);
        ihdr += static_cast<char>(v >> 8);  ihdr += static_cast<char>(v);
    };
    be32(static_cast<uint32_t>(img.width));
    be32(static_cast<uint32_t>(img.height));
    ihdr += '\x08';  // bit depth
    ihdr += '\x02';  // color type: truecolor
    ihdr += '\x00'; ihdr += '\x00'; ihdr += '\x00';
    detail::png_chunk(out, "IHDR", ihdr);
    if (!annotation.empty()) {
        std::string text = "Comment";
        text += '\0';
        text += annotation;
        detail::png_chunk(out, "tEXt", text);
    }
    std::string raw;
    raw.reserve(static_cast<size_t>(img.height) * (1 + 3 * static_cast<size_t>(img.width)));
    for (int y = 0; y < img.height; ++y) {
        raw += '\0';  // filter: none
        raw.append(reinterpret_cast<const char*>(img.rgb.data() +
                                                 3 * static_cast<size_t>(y) * img.width),
                   3 * static_cast<size_t>(img.width));
    }
    uLongf destLen = compressBound(static_cast<uLong>(raw.size()));
    std::string compressed(destLen, '\0');
    if (compress2(reinterpret_cast<Bytef*>(compressed.data()), &destLen,
                  reinterpret_cast<const Bytef*>(raw.data()), static_cast<uLong>(raw.size()),
                  6) != Z_OK)
        throw std::runtime_error("png_bytes: deflate failed");
    compressed.resize(destLen);
    detail::png_chunk(out, "IDAT", compressed);
    detail::png_chunk(out, "IEND", "");
    return out;
}

inline void write_png(const Image& img, const std::string& path,
                      const std::string& annotation = "") {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_png: cannot open " + path);
    std::string bytes = png_bytes(img, annotation);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace kleinlab
