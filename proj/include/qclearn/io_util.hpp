#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

namespace qclearn {

// CRC-32 (IEEE 802.3, zlib-compatible) over a byte range.
std::uint32_t crc32(const std::uint8_t* data, std::size_t len, std::uint32_t seed = 0);

// FNV-1a 64-bit; used for circuit dedup keys and manifest artifact hashes.
std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t len);

// Little-endian append/read helpers for the binary file formats.
class ByteWriter {
  public:
    void u8(std::uint8_t v) { bytes_.push_back(v); }
    void u16(std::uint16_t v);
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void f64(double v);
    void raw(const void* data, std::size_t len);
    void str(const std::string& s) { raw(s.data(), s.size()); }

    const std::vector<std::uint8_t>& bytes() const { return bytes_; }
    std::vector<std::uint8_t>&& take() { return std::move(bytes_); }

  private:
    std::vector<std::uint8_t> bytes_;
};

class ByteReader {
  public:
    ByteReader(const std::uint8_t* data, std::size_t len) : data_(data), len_(len) {}

    std::uint8_t u8();
    std::uint16_t u16();
    std::uint32_t u32();
    std::uint64_t u64();
    double f64();
    void raw(void* out, std::size_t len);
    std::string str(std::size_t len);

    std::size_t remaining() const { return len_ - pos_; }
    std::size_t position() const { return pos_; }

  private:
    void need(std::size_t n);

    const std::uint8_t* data_;
    std::size_t len_;
    std::size_t pos_ = 0;
};

// Whole-file helpers; throw IoError on failure.
std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes);

}  // namespace qclearn
