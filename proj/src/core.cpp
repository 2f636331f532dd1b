#include "tsvstress/core.hpp"

#include <openssl/sha.h>
#include <sys/resource.h>

#include <algorithm>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

namespace tsvstress {

std::vector<double> linspace(double a, double b, std::size_t n_cells) {
    if (n_cells == 0) throw Error("linspace: need at least one cell");
    std::vector<double> pts(n_cells + 1);
    pts.front() = a;
    for (std::size_t i = 1; i < n_cells; ++i)
        pts[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n_cells);
    pts.back() = b;
    return pts;
}

void parallel_for_ranges(std::size_t n, int threads,
                         const std::function<void(std::size_t, std::size_t)>& body) {
    if (n == 0) return;
    std::size_t nt = threads < 1 ? 1 : static_cast<std::size_t>(threads);
    if (nt > n) nt = n;
    if (nt == 1) {
        body(0, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(nt);
    std::size_t chunk = (n + nt - 1) / nt;
    for (std::size_t t = 0; t < nt; ++t) {
        std::size_t begin = t * chunk;
        std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&body, begin, end] { body(begin, end); });
    }
    for (auto& th : pool) th.join();
}

Hash256 sha256(const void* data, std::size_t size) {
    Hash256 out{};
    SHA256(static_cast<const unsigned char*>(data), size, out.data());
    return out;
}

std::string hash_hex(const Hash256& h) {
    static const char* digits = "0123456789abcdef";
    std::string s;
    s.reserve(64);
    for (unsigned char b : h) {
        s.push_back(digits[b >> 4]);
        s.push_back(digits[b & 0xf]);
    }
    return s;
}

void ByteWriter::u32(std::uint32_t v) {
    char b[4];
    b[0] = static_cast<char>(v & 0xff);
    b[1] = static_cast<char>((v >> 8) & 0xff);
    b[2] = static_cast<char>((v >> 16) & 0xff);
    b[3] = static_cast<char>((v >> 24) & 0xff);
    buf_.append(b, 4);
}

void ByteWriter::f64(double v) {
    // x86-64 is little-endian; raw copy keeps round trips bitwise exact.
    char b[8];
    std::memcpy(b, &v, 8);
    buf_.append(b, 8);
}

void ByteWriter::bytes(const void* data, std::size_t n) {
    buf_.append(static_cast<const char*>(data), n);
}

void ByteWriter::f64_array(const double* data, std::size_t n) {
    buf_.append(reinterpret_cast<const char*>(data), n * sizeof(double));
}

ByteReader::ByteReader(const void* data, std::size_t size, std::string origin)
    : data_(static_cast<const unsigned char*>(data)), size_(size), origin_(std::move(origin)) {}

void ByteReader::need(std::size_t n) {
    if (pos_ + n > size_)
        throw Error(origin_ + ": corrupt length (truncated at byte " + std::to_string(pos_) + ")");
}

std::uint8_t ByteReader::u8() {
    need(1);
    return data_[pos_++];
}

std::uint32_t ByteReader::u32() {
    need(4);
    std::uint32_t v = static_cast<std::uint32_t>(data_[pos_]) |
                      static_cast<std::uint32_t>(data_[pos_ + 1]) << 8 |
                      static_cast<std::uint32_t>(data_[pos_ + 2]) << 16 |
                      static_cast<std::uint32_t>(data_[pos_ + 3]) << 24;
    pos_ += 4;
    return v;
}

double ByteReader::f64() {
    need(8);
    double v;
    std::memcpy(&v, data_ + pos_, 8);
    pos_ += 8;
    return v;
}

void ByteReader::bytes(void* out, std::size_t n) {
    need(n);
    std::memcpy(out, data_ + pos_, n);
    pos_ += n;
}

void ByteReader::f64_array(double* out, std::size_t n) {
    bytes(out, n * sizeof(double));
}

std::size_t peak_rss_bytes() {
    std::size_t peak = 0;
    rusage ru{};
    if (getrusage(RUSAGE_SELF, &ru) == 0) peak = static_cast<std::size_t>(ru.ru_maxrss) * 1024;
    // some kernels expose a finer high-water mark in /proc
    std::ifstream status("/proc/self/status");
    std::string line;
    while (std::getline(status, line)) {
        if (line.rfind("VmHWM:", 0) == 0) {
            std::istringstream iss(line.substr(6));
            std::size_t kb = 0;
            iss >> kb;
            peak = std::max(peak, kb * 1024);
            break;
        }
    }
    return peak;
}

}  // namespace tsvstress
