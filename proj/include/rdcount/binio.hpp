#pragma once

#include "rdcount/digest.hpp"
#include "rdcount/errors.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace rdcount {

static_assert(std::endian::native == std::endian::little,
              "serialization code assumes a little-endian host");

/** @brief Buffered binary writer with an explicit little-endian contract and
 *         a running FNV-1a digest over everything written. */
class BinWriter {
public:
    explicit BinWriter(std::ostream& out) : out_(out) {}

    void write_bytes(const void* data, std::size_t n) {
        out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
        digest_.update(data, n);
    }

    template <typename T>
    void write_value(const T& v) {
        static_assert(std::is_trivially_copyable_v<T>);
        write_bytes(&v, sizeof(T));
    }

    void write_u8(std::uint8_t v) { write_value(v); }
    void write_u16(std::uint16_t v) { write_value(v); }
    void write_u32(std::uint32_t v) { write_value(v); }
    void write_u64(std::uint64_t v) { write_value(v); }
    void write_f32(float v) { write_value(v); }
    void write_f64(double v) { write_value(v); }

    void write_string(const std::string& s) {
        write_u32(static_cast<std::uint32_t>(s.size()));
        write_bytes(s.data(), s.size());
    }

    /** @brief Digest of all bytes written so far. */
    [[nodiscard]] std::uint64_t digest() const { return digest_.value(); }

private:
    std::ostream& out_;
    Fnv1a digest_;
};

/** @brief Binary reader that throws FormatError on truncation and keeps a
 *         running digest of everything read (mirrors BinWriter). */
class BinReader {
public:
    explicit BinReader(std::istream& in, std::string name = "<stream>")
        : in_(in), name_(std::move(name)) {}

    void read_bytes(void* data, std::size_t n) {
        in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n) {
            throw FormatError(name_ + ": truncated (wanted " + std::to_string(n) +
                              " bytes, got " + std::to_string(in_.gcount()) + ")");
        }
        digest_.update(data, n);
    }

    template <typename T>
    T read_value() {
        static_assert(std::is_trivially_copyable_v<T>);
        T v;
        read_bytes(&v, sizeof(T));
        return v;
    }

    std::uint8_t read_u8() { return read_value<std::uint8_t>(); }
    std::uint16_t read_u16() { return read_value<std::uint16_t>(); }
    std::uint32_t read_u32() { return read_value<std::uint32_t>(); }
    std::uint64_t read_u64() { return read_value<std::uint64_t>(); }
    float read_f32() { return read_value<float>(); }
    double read_f64() { return read_value<double>(); }

    std::string read_string(std::size_t max_len = 1u << 20) {
        const std::uint32_t n = read_u32();
        if (n > max_len) {
            throw FormatError(name_ + ": implausible string length " + std::to_string(n));
        }
        std::string s(n, '\0');
        read_bytes(s.data(), n);
        return s;
    }

    [[nodiscard]] std::uint64_t digest() const { return digest_.value(); }

private:
    std::istream& in_;
    std::string name_;
    Fnv1a digest_;
};

/** @brief Write-temp-then-rename file writer so readers never observe a
 *         partially written artifact. Discards the temp file unless commit()
 *         is called. */
class AtomicFile {
public:
    explicit AtomicFile(const std::filesystem::path& target)
        : target_(target), tmp_(target.string() + ".tmp") {
        if (target.has_parent_path()) {
            std::filesystem::create_directories(target.parent_path());
        }
        stream_.open(tmp_, std::ios::binary | std::ios::trunc);
        if (!stream_) {
            throw FormatError("cannot open for writing: " + tmp_.string());
        }
    }

    ~AtomicFile() {
        if (!committed_) {
            stream_.close();
            std::error_code ec;
            std::filesystem::remove(tmp_, ec);
        }
    }

    AtomicFile(const AtomicFile&) = delete;
    AtomicFile& operator=(const AtomicFile&) = delete;

    std::ofstream& stream() { return stream_; }

    void commit() {
        stream_.flush();
        if (!stream_) {
            throw FormatError("write failed: " + tmp_.string());
        }
        stream_.close();
        std::filesystem::rename(tmp_, target_);
        committed_ = true;
    }

private:
    std::filesystem::path target_;
    std::filesystem::path tmp_;
    std::ofstream stream_;
    bool committed_ = false;
};

/** @brief Open a file for binary reading; MissingArtifactError if absent. */
inline std::ifstream open_for_read(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw MissingArtifactError("no such file: " + path.string());
    }
    return in;
}

/** @brief Read an entire file, throwing MissingArtifactError / FormatError. */
inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw MissingArtifactError("no such file: " + path.string());
    }
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) {
        throw FormatError("read failed: " + path.string());
    }
    return data;
}

/** @brief Atomically replace `path` with `content`. */
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    AtomicFile f(path);
    f.stream().write(content.data(), static_cast<std::streamsize>(content.size()));
    f.commit();
}

} // namespace rdcount
