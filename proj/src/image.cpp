#include "tsvstress/image.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace tsvstress {

namespace {

// viridis anchors, interpolated linearly
constexpr unsigned char kColormap[][3] = {
    {68, 1, 84},    {71, 44, 122},  {59, 81, 139},  {44, 113, 142}, {33, 144, 141},
    {39, 173, 129}, {92, 200, 99},  {170, 220, 50}, {253, 231, 37},
};
constexpr int kAnchors = static_cast<int>(sizeof(kColormap) / sizeof(kColormap[0]));

void color_of(double t, unsigned char* rgb) {
    t = std::clamp(t, 0.0, 1.0);
    double pos = t * (kAnchors - 1);
    int lo = std::min(static_cast<int>(pos), kAnchors - 2);
    double w = pos - lo;
    for (int c = 0; c < 3; ++c) {
        double v = (1.0 - w) * kColormap[lo][c] + w * kColormap[lo + 1][c];
        rgb[c] = static_cast<unsigned char>(std::lround(v));
    }
}

void append_u32_be(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>((v >> 24) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>(v & 0xff));
}

void append_chunk(std::string& out, const char type[4], const std::string& payload) {
    append_u32_be(out, static_cast<std::uint32_t>(payload.size()));
    std::string body(type, 4);
    body += payload;
    out += body;
    std::uint32_t crc = static_cast<std::uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(body.data()), static_cast<uInt>(body.size())));
    append_u32_be(out, crc);
}

}  // namespace

RenderInfo render_heatmap_png(const StressGrid& grid, const std::string& path) {
    RenderInfo info;
    info.width = grid.cols * grid.res;
    info.height = grid.rows * grid.res;
    info.min_value = *std::min_element(grid.values.begin(), grid.values.end());
    info.max_value = *std::max_element(grid.values.begin(), grid.values.end());
    double range = info.max_value - info.min_value;

    // raw scanlines, filter 0, image row 0 at the largest y
    std::string raw;
    raw.reserve(static_cast<std::size_t>(info.height) * (1 + 3 * info.width));
    for (std::uint32_t iy = 0; iy < info.height; ++iy) {
        raw.push_back('\0');
        std::uint32_t gy = info.height - 1 - iy;
        std::uint32_t r = gy / grid.res, py = gy % grid.res;
        for (std::uint32_t ix = 0; ix < info.width; ++ix) {
            std::uint32_t c = ix / grid.res, px = ix % grid.res;
            double v = grid.at(r, c, py, px);
            double t = range > 0.0 ? (v - info.min_value) / range : 0.0;
            unsigned char rgb[3];
            color_of(t, rgb);
            raw.append(reinterpret_cast<char*>(rgb), 3);
        }
    }

    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::string compressed(bound, '\0');
    if (compress2(reinterpret_cast<Bytef*>(compressed.data()), &bound,
                  reinterpret_cast<const Bytef*>(raw.data()), static_cast<uLong>(raw.size()),
                  9) != Z_OK)
        throw Error("render: deflate failed");
    compressed.resize(bound);

    std::string png("\x89PNG\r\n\x1a\n", 8);
    std::string ihdr;
    append_u32_be(ihdr, info.width);
    append_u32_be(ihdr, info.height);
    ihdr.push_back(8);   // bit depth
    ihdr.push_back(2);   // truecolor
    ihdr.push_back(0);   // compression
    ihdr.push_back(0);   // filter
    ihdr.push_back(0);   // interlace
    append_chunk(png, "IHDR", ihdr);
    append_chunk(png, "IDAT", compressed);
    append_chunk(png, "IEND", "");

    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("render: cannot open " + path);
    out.write(png.data(), static_cast<std::streamsize>(png.size()));
    if (!out) throw Error("render: write failed for " + path);
    return info;
}

}  // namespace tsvstress
