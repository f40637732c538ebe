#pragma once

// Little-endian primitive readers/writers shared by the dataset, model and
// stream containers.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace edgar {

struct format_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct version_error : format_error {
    using format_error::format_error;
};

namespace io {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <class T>
T to_little(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
        unsigned char bytes[sizeof(T)];
        std::memcpy(bytes, &v, sizeof(T));
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
        std::memcpy(&v, bytes, sizeof(T));
    }
    return v;
}

class Writer {
public:
    explicit Writer(std::ostream& out) : out_(out) {}

    template <class T>
    void put(T v) {
        static_assert(std::is_arithmetic_v<T>);
        v = to_little(v);
        out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
    }

    void bytes(const void* data, std::size_t n) { out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n)); }

    void string(const std::string& s) {
        put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
        bytes(s.data(), s.size());
    }

    template <class T>
    void array(const std::vector<T>& values) {
        put<std::uint64_t>(values.size());
        for (const T& v : values) put<T>(v);
    }

    void check() const {
        if (!out_) throw std::runtime_error("write failed");
    }

private:
    std::ostream& out_;
};

class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    template <class T>
    T get() {
        static_assert(std::is_arithmetic_v<T>);
        T v{};
        in_.read(reinterpret_cast<char*>(&v), sizeof(T));
        if (in_.gcount() != static_cast<std::streamsize>(sizeof(T))) throw format_error("unexpected end of file");
        return to_little(v);
    }

    void bytes(void* data, std::size_t n) {
        in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
        if (in_.gcount() != static_cast<std::streamsize>(n)) throw format_error("unexpected end of file");
    }

    std::string string(std::size_t max_len = 1u << 20) {
        const auto n = get<std::uint32_t>();
        if (n > max_len) throw format_error("string length " + std::to_string(n) + " exceeds limit");
        std::string s(n, '\0');
        bytes(s.data(), n);
        return s;
    }

    template <class T>
    std::vector<T> array(std::size_t max_len) {
        const auto n = get<std::uint64_t>();
        if (n > max_len) throw format_error("array length " + std::to_string(n) + " exceeds limit");
        std::vector<T> values(static_cast<std::size_t>(n));
        for (auto& v : values) v = get<T>();
        return values;
    }

    void expect_magic(const char (&magic)[5], const char* what) {
        char buf[4];
        bytes(buf, 4);
        if (std::memcmp(buf, magic, 4) != 0) throw format_error(std::string("not a ") + what + " file (bad magic)");
    }

    bool at_eof() { return in_.peek() == std::char_traits<char>::eof(); }

private:
    std::istream& in_;
};

}  // namespace io
}  // namespace edgar
