#pragma once

// Little-endian primitives shared by the snapshot and checkpoint envelopes.

#include "adns/error.hpp"
#include "adns/matrix.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <fstream>
#include <string>
#include <string_view>

namespace adns::detail {

class BinaryWriter {
  public:
    explicit BinaryWriter(const std::string& path) : path_(path), out_(path, std::ios::binary) {
        if (!out_) throw IoError(path, "cannot open for writing");
    }

    void magic(std::string_view tag) { out_.write(tag.data(), static_cast<std::streamsize>(tag.size())); }

    void u32(std::uint32_t v) {
        std::array<char, 4> b{};
        for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFFu);
        out_.write(b.data(), 4);
    }

    void f64(double v) {
        const auto bits = std::bit_cast<std::uint64_t>(v);
        std::array<char, 8> b{};
        for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xFFu);
        out_.write(b.data(), 8);
    }

    void values(std::span<const double> vs) {
        for (double v : vs) f64(v);
    }

    void finish() {
        out_.flush();
        if (!out_) throw IoError(path_, "write failed");
    }

  private:
    std::string path_;
    std::ofstream out_;
};

class BinaryReader {
  public:
    explicit BinaryReader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
        if (!in_) throw IoError(path, "cannot open for reading");
    }

    void expect_magic(std::string_view tag) {
        std::string got(tag.size(), '\0');
        read(got.data(), got.size());
        if (got != tag) throw IoError(path_, "bad magic, expected " + std::string(tag));
    }

    std::uint32_t u32() {
        std::array<unsigned char, 4> b{};
        read(reinterpret_cast<char*>(b.data()), 4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
        return v;
    }

    double f64() {
        std::array<unsigned char, 8> b{};
        read(reinterpret_cast<char*>(b.data()), 8);
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        return std::bit_cast<double>(bits);
    }

    DenseMatrix matrix(std::size_t rows, std::size_t cols) {
        std::vector<double> data(rows * cols);
        for (double& v : data) v = f64();
        try {
            return DenseMatrix(rows, cols, std::move(data));
        } catch (const ValidationError& e) {
            throw IoError(path_, e.what());
        }
    }

    Vector vector(std::size_t n) {
        Vector v(n);
        for (double& x : v) x = f64();
        return v;
    }

    const std::string& path() const noexcept { return path_; }

  private:
    void read(char* dst, std::size_t n) {
        in_.read(dst, static_cast<std::streamsize>(n));
        if (in_.gcount() != static_cast<std::streamsize>(n)) throw IoError(path_, "truncated file");
    }

    std::string path_;
    std::ifstream in_;
};

}  // namespace adns::detail
