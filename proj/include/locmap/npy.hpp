#pragma once

// Reader and writer for the ".npy" v1.0 array container: 6-byte magic
// "\x93NUMPY", version bytes 1 0, a little-endian u16 header length, then an
// ASCII dict literal padded with spaces and a trailing newline so that the data
// starts on a 64-byte boundary.

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "locmap/core.hpp"
#include "locmap/errors.hpp"

namespace locmap::npy {

static_assert(std::endian::native == std::endian::little, "array I/O assumes a little-endian host");

enum class DType { Float32, UInt8 };

inline std::size_t item_size(DType d) { return d == DType::Float32 ? 4 : 1; }

/// A C-ordered 2-D or 3-D array held as raw little-endian bytes.
struct Array {
    DType dtype = DType::Float32;
    std::vector<std::size_t> shape;
    std::vector<std::uint8_t> bytes;

    std::size_t count() const {
        return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
    }

    double value(std::size_t i) const {
        if (dtype == DType::UInt8) return bytes[i];
        float f;
        std::memcpy(&f, bytes.data() + 4 * i, 4);
        return f;
    }

    friend bool operator==(const Array&, const Array&) = default;
};

inline Array from_floats(std::vector<std::size_t> shape, const std::vector<double>& values) {
    Array a{DType::Float32, std::move(shape), {}};
    if (a.count() != values.size()) throw InvalidInput("array shape does not match value count");
    a.bytes.resize(values.size() * 4);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto f = static_cast<float>(values[i]);
        std::memcpy(a.bytes.data() + 4 * i, &f, 4);
    }
    return a;
}

inline Array from_grid(const RealGrid& g) { return from_floats({g.rows(), g.cols()}, g.data()); }

inline Array from_grid(const Grid<std::uint8_t>& g) {
    return Array{DType::UInt8, {g.rows(), g.cols()}, g.data()};
}

inline Array from_stack(const FeatureStack& f) {
    return from_floats({f.channels(), f.rows(), f.cols()}, f.data());
}

/// The array as a real grid; requires a 2-D shape.
inline RealGrid to_grid(const Array& a) {
    if (a.shape.size() != 2) throw InvalidInput("expected a 2-D array, got " + std::to_string(a.shape.size()) + "-D");
    RealGrid g(a.shape[0], a.shape[1]);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = a.value(i);
    return g;
}

/// The array as a feature stack; a 2-D array is read as a single channel.
inline FeatureStack to_stack(const Array& a) {
    std::vector<double> v(a.count());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.value(i);
    if (a.shape.size() == 2) return FeatureStack(1, a.shape[0], a.shape[1], std::move(v));
    if (a.shape.size() == 3) return FeatureStack(a.shape[0], a.shape[1], a.shape[2], std::move(v));
    throw InvalidInput("expected a 2-D or 3-D array");
}

namespace detail {

inline constexpr std::string_view magic{"\x93NUMPY", 6};

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

// Value text following `'key':` up to the next top-level comma or closing brace.
inline std::string_view dict_value(std::string_view header, std::string_view key) {
    const std::string quoted = "'" + std::string(key) + "'";
    const auto k = header.find(quoted);
    if (k == std::string_view::npos) throw ParseError(ParseError::Kind::BadHeader, "missing key " + quoted);
    auto rest = header.substr(k + quoted.size());
    const auto colon = rest.find(':');
    if (colon == std::string_view::npos) throw ParseError(ParseError::Kind::BadHeader, "no ':' after " + quoted);
    rest = rest.substr(colon + 1);
    int depth = 0;
    std::size_t end = 0;
    for (; end < rest.size(); ++end) {
        const char c = rest[end];
        if (c == '(') ++depth;
        else if (c == ')') --depth;
        else if ((c == ',' || c == '}') && depth == 0) break;
    }
    return trim(rest.substr(0, end));
}

inline DType parse_dtype(std::string_view v) {
    if (v.size() < 2 || (v.front() != '\'' && v.front() != '"') || v.back() != v.front())
        throw ParseError(ParseError::Kind::BadHeader, "descr is not a string literal");
    const auto d = v.substr(1, v.size() - 2);
    if (d == "<f4") return DType::Float32;
    if (d == "|u1" || d == "<u1" || d == "u1") return DType::UInt8;
    throw ParseError(ParseError::Kind::UnsupportedDtype, "descr '" + std::string(d) + "' (need <f4 or |u1)");
}

inline std::vector<std::size_t> parse_shape(std::string_view v) {
    if (v.size() < 2 || v.front() != '(' || v.back() != ')')
        throw ParseError(ParseError::Kind::BadHeader, "shape is not a tuple");
    std::vector<std::size_t> shape;
    auto body = v.substr(1, v.size() - 2);
    while (!trim(body).empty()) {
        const auto comma = body.find(',');
        const auto item = trim(body.substr(0, comma));
        if (!item.empty()) {
            std::size_t n = 0;
            for (char c : item) {
                if (!std::isdigit(static_cast<unsigned char>(c)))
                    throw ParseError(ParseError::Kind::BadShape, "non-integer extent '" + std::string(item) + "'");
                n = n * 10 + static_cast<std::size_t>(c - '0');
            }
            shape.push_back(n);
        }
        if (comma == std::string_view::npos) break;
        body.remove_prefix(comma + 1);
    }
    if (shape.size() != 2 && shape.size() != 3)
        throw ParseError(ParseError::Kind::BadShape, "shape " + std::string(v) + " is not 2-D or 3-D");
    return shape;
}

}  // namespace detail

/// Parses an in-memory container.
inline Array parse(std::span<const std::uint8_t> buf) {
    using K = ParseError::Kind;
    if (buf.size() < 6 || std::memcmp(buf.data(), detail::magic.data(), 6) != 0)
        throw ParseError(K::BadMagic, "file does not start with \\x93NUMPY");
    if (buf.size() < 10) throw ParseError(K::Truncated, "preamble shorter than 10 bytes");
    if (buf[6] != 1 || buf[7] != 0)
        throw ParseError(K::UnsupportedVersion,
                         "version " + std::to_string(buf[6]) + "." + std::to_string(buf[7]) + " (need 1.0)");
    const std::size_t header_len = buf[8] | (static_cast<std::size_t>(buf[9]) << 8);
    if (buf.size() < 10 + header_len) throw ParseError(K::Truncated, "header shorter than its declared length");
    const std::string_view header(reinterpret_cast<const char*>(buf.data() + 10), header_len);

    Array a;
    a.dtype = detail::parse_dtype(detail::dict_value(header, "descr"));
    const auto fortran = detail::dict_value(header, "fortran_order");
    if (fortran == "True") throw ParseError(K::FortranOrder, "fortran_order is True (need C order)");
    if (fortran != "False") throw ParseError(K::BadHeader, "fortran_order is '" + std::string(fortran) + "'");
    a.shape = detail::parse_shape(detail::dict_value(header, "shape"));

    const std::size_t want = a.count() * item_size(a.dtype);
    const std::size_t have = buf.size() - 10 - header_len;
    if (have < want)
        throw ParseError(K::Truncated, "data has " + std::to_string(have) + " bytes, shape needs " +
                                           std::to_string(want));
    a.bytes.assign(buf.begin() + static_cast<std::ptrdiff_t>(10 + header_len),
                   buf.begin() + static_cast<std::ptrdiff_t>(10 + header_len + want));
    return a;
}

/// Serializes to container bytes.
inline std::vector<std::uint8_t> serialize(const Array& a) {
    if (a.shape.size() != 2 && a.shape.size() != 3) throw InvalidInput("array must be 2-D or 3-D");
    if (std::find(a.shape.begin(), a.shape.end(), std::size_t{0}) != a.shape.end())
        throw InvalidInput("array has an empty dimension");
    if (a.bytes.size() != a.count() * item_size(a.dtype)) throw InvalidInput("array byte count does not match shape");

    std::string header = "{'descr': '";
    header += a.dtype == DType::Float32 ? "<f4" : "|u1";
    header += "', 'fortran_order': False, 'shape': (";
    for (std::size_t i = 0; i < a.shape.size(); ++i) {
        if (i) header += ", ";
        header += std::to_string(a.shape[i]);
    }
    header += "), }";
    const std::size_t unpadded = 10 + header.size() + 1;
    header.append((64 - unpadded % 64) % 64, ' ');
    header += '\n';

    std::vector<std::uint8_t> out;
    out.reserve(10 + header.size() + a.bytes.size());
    out.insert(out.end(), detail::magic.begin(), detail::magic.end());
    out.push_back(1);
    out.push_back(0);
    out.push_back(static_cast<std::uint8_t>(header.size() & 0xff));
    out.push_back(static_cast<std::uint8_t>(header.size() >> 8));
    out.insert(out.end(), header.begin(), header.end());
    out.insert(out.end(), a.bytes.begin(), a.bytes.end());
    return out;
}

inline Array read_array(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open array file '" + path.string() + "'");
    std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return parse(buf);
    } catch (const ParseError& e) {
        throw ParseError(e.kind(), path.string() + ": " + std::string(e.what()).substr(
                                                             std::string(ParseError::name(e.kind())).size() + 2));
    }
}

inline void write_array(const std::filesystem::path& path, const Array& a) {
    const auto bytes = serialize(a);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create array file '" + path.string() + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace locmap::npy
