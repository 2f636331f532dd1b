#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tsvstress {

/// Base error type for everything the library reports.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// n_cells+1 equally spaced points on [a, b] with exact endpoints.
std::vector<double> linspace(double a, double b, std::size_t n_cells);

/// Static range partition over [0, n). body(begin, end) runs on each chunk.
/// Work per index must be independent; results are then bitwise identical
/// for every thread count.
void parallel_for_ranges(std::size_t n, int threads,
                         const std::function<void(std::size_t, std::size_t)>& body);

using Hash256 = std::array<unsigned char, 32>;

/// SHA-256 of a byte buffer.
Hash256 sha256(const void* data, std::size_t size);

std::string hash_hex(const Hash256& h);

/// Append-only little-endian byte buffer used by the binary file formats.
class ByteWriter {
public:
    void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
    void u32(std::uint32_t v);
    void f64(double v);
    void bytes(const void* data, std::size_t n);
    void f64_array(const double* data, std::size_t n);
    const std::string& buffer() const { return buf_; }

private:
    std::string buf_;
};

/// Cursor over a little-endian byte buffer; throws Error on truncation.
class ByteReader {
public:
    ByteReader(const void* data, std::size_t size, std::string origin);
    std::uint8_t u8();
    std::uint32_t u32();
    double f64();
    void bytes(void* out, std::size_t n);
    void f64_array(double* out, std::size_t n);
    std::size_t remaining() const { return size_ - pos_; }

private:
    void need(std::size_t n);
    const unsigned char* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
    std::string origin_;
};

/// Peak resident set size of this process (VmHWM), in bytes. 0 if unknown.
std::size_t peak_rss_bytes();

}  // namespace tsvstress
