#include "tdf/binary_io.hpp"

#include <bit>
#include <fstream>
#include <iterator>

#include "tdf/error.hpp"

namespace tdf::bin {

void Writer::magic(std::string_view four_cc) {
    buf_.insert(buf_.end(), four_cc.begin(), four_cc.end());
}

void Writer::u8(std::uint8_t v) { buf_.push_back(v); }

void Writer::u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void Writer::f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

void Writer::f64(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

Reader::Reader(std::vector<std::uint8_t> bytes, std::string origin)
    : buf_(std::move(bytes)), origin_(std::move(origin)) {}

void Reader::expect_header(std::string_view four_cc, std::uint32_t version) {
    if (buf_.size() < 8 || !std::equal(four_cc.begin(), four_cc.end(), buf_.begin())) {
        throw DataError(origin_ + ": unsupported format");
    }
    pos_ = 4;
    if (u32() != version) throw DataError(origin_ + ": unsupported format");
}

void Reader::require(std::size_t n) const {
    if (remaining() < n) throw DataError(origin_ + ": corrupt file");
}

void Reader::expect_end() const {
    if (remaining() != 0) throw DataError(origin_ + ": corrupt file (trailing bytes)");
}

std::uint8_t Reader::u8() {
    require(1);
    return buf_[pos_++];
}

std::uint32_t Reader::u32() {
    require(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf_[pos_++]) << (8 * i);
    return v;
}

float Reader::f32() { return std::bit_cast<float>(u32()); }

double Reader::f64() {
    require(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf_[pos_++]) << (8 * i);
    return std::bit_cast<double>(v);
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path.string() + ": cannot open for reading");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError(path.string() + ": read failed");
    return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path.string() + ": cannot open for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw IoError(path.string() + ": write failed");
}

}  // namespace tdf::bin
