#pragma once

// Little-endian byte encoding shared by the binary PLY, image-grid and
// checkpoint codecs.

#include "hofsurf/error.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

namespace hofsurf::detail {

template <class T>
T byteswap_if_big(T value) {
    if constexpr (std::endian::native == std::endian::little) {
        return value;
    } else {
        unsigned char bytes[sizeof(T)];
        std::memcpy(bytes, &value, sizeof(T));
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
        std::memcpy(&value, bytes, sizeof(T));
        return value;
    }
}

class ByteWriter {
public:
    void bytes(std::string_view b) { out_.append(b); }

    template <class T>
    void put(T value) {
        value = byteswap_if_big(value);
        char raw[sizeof(T)];
        std::memcpy(raw, &value, sizeof(T));
        out_.append(raw, sizeof(T));
    }

    void u32(std::uint32_t v) { put(v); }
    void u64(std::uint64_t v) { put(v); }
    void f64(double v) { put(v); }

    std::string& str() { return out_; }

private:
    std::string out_;
};

class ByteReader {
public:
    ByteReader(std::string_view data, std::string source, std::size_t offset = 0)
        : data_(data), source_(std::move(source)), pos_(offset) {}

    template <class T>
    T get(const char* what) {
        need(sizeof(T), what);
        T value;
        std::memcpy(&value, data_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return byteswap_if_big(value);
    }

    std::uint32_t u32(const char* what) { return get<std::uint32_t>(what); }
    std::uint64_t u64(const char* what) { return get<std::uint64_t>(what); }
    double f64(const char* what) { return get<double>(what); }

    std::string_view take(std::size_t n, const char* what) {
        need(n, what);
        auto out = data_.substr(pos_, n);
        pos_ += n;
        return out;
    }

    std::size_t offset() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return data_.size() - pos_; }
    bool done() const noexcept { return pos_ == data_.size(); }

    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError(source_, pos_, what, true);
    }

private:
    void need(std::size_t n, const char* what) {
        if (data_.size() - pos_ < n) fail(std::string("truncated while reading ") + what);
    }

    std::string_view data_;
    std::string source_;
    std::size_t pos_;
};

} // namespace hofsurf::detail
