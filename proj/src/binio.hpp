#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "diam/error.hpp"
#include "diam/linalg.hpp"

// Little-endian raw binary IO for the target and checkpoint files.

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts are unsupported");

namespace diam::binio {

class Writer {
public:
    explicit Writer(const std::string& path) : out_(path, std::ios::binary) {
        require(out_.good(), ErrorCode::Io, "cannot open for writing: " + path);
        path_ = path;
    }

    void close() {
        out_.flush();
        require(out_.good(), ErrorCode::Io, "write failed: " + path_);
        out_.close();
    }

    void raw(const void* p, std::size_t n) {
        out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    }
    void u32(std::uint32_t v) { raw(&v, sizeof v); }
    void u64(std::uint64_t v) { raw(&v, sizeof v); }
    void f64(double v) { raw(&v, sizeof v); }
    void vec(const Vector& v) {
        u64(v.size());
        raw(v.data(), v.size() * sizeof(double));
    }
    void mat(const Matrix& m) {
        u64(m.rows);
        u64(m.cols);
        raw(m.a.data(), m.a.size() * sizeof(double));
    }
    void str(const std::string& s) {
        u64(s.size());
        raw(s.data(), s.size());
    }

private:
    std::ofstream out_;
    std::string path_;
};

class Reader {
public:
    explicit Reader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
        require(in_.good(), ErrorCode::Io, "cannot open for reading: " + path);
    }

    void raw(void* p, std::size_t n) {
        in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        require(in_.gcount() == static_cast<std::streamsize>(n), ErrorCode::Io,
                "truncated file: " + path_);
    }
    std::uint32_t u32() {
        std::uint32_t v;
        raw(&v, sizeof v);
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v;
        raw(&v, sizeof v);
        return v;
    }
    double f64() {
        double v;
        raw(&v, sizeof v);
        return v;
    }
    Vector vec() {
        Vector v(checked_size(u64()));
        raw(v.data(), v.size() * sizeof(double));
        return v;
    }
    Matrix mat() {
        const std::size_t r = checked_size(u64());
        const std::size_t c = checked_size(u64());
        Matrix m(r, c);
        raw(m.a.data(), m.a.size() * sizeof(double));
        return m;
    }
    std::string str() {
        std::string s(checked_size(u64()), '\0');
        raw(s.data(), s.size());
        return s;
    }

private:
    std::size_t checked_size(std::uint64_t n) {
        require(n <= (1ull << 32), ErrorCode::Io, "implausible field size in " + path_);
        return static_cast<std::size_t>(n);
    }

    std::ifstream in_;
    std::string path_;
};

}  // namespace diam::binio
