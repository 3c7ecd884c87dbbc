#pragma once

// Little-endian byte buffers shared by every on-disk format.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tdf::bin {

class Writer {
public:
    void magic(std::string_view four_cc);
    void u8(std::uint8_t v);
    void u32(std::uint32_t v);
    void f32(float v);
    void f64(double v);

    const std::vector<std::uint8_t>& bytes() const { return buf_; }

private:
    std::vector<std::uint8_t> buf_;
};

// Reads from an in-memory copy of a file. Running past the end throws
// DataError("<path>: corrupt file").
class Reader {
public:
    Reader(std::vector<std::uint8_t> bytes, std::string origin);

    // Throws DataError("unsupported format") unless the magic matches and
    // the version field equals `version`.
    void expect_header(std::string_view four_cc, std::uint32_t version);

    std::uint8_t u8();
    std::uint32_t u32();
    float f32();
    double f64();

    std::size_t remaining() const { return buf_.size() - pos_; }
    const std::string& origin() const { return origin_; }

    // Throws "corrupt file" if fewer than `n` bytes remain.
    void require(std::size_t n) const;
    // Throws "corrupt file" if trailing bytes remain.
    void expect_end() const;

private:
    std::vector<std::uint8_t> buf_;
    std::size_t pos_ = 0;
    std::string origin_;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace tdf::bin
