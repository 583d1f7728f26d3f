#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fctn/tensor.hpp"

namespace fctn {

static_assert(std::endian::native == std::endian::little,
              "NPY I/O assumes a little-endian host");

namespace detail {

inline const std::array<char, 6> kNpyMagic = {'\x93', 'N', 'U', 'M', 'P', 'Y'};

inline std::string npy_shape_tuple(std::span<const std::size_t> shape) {
    std::ostringstream ss;
    ss << "(";
    for (std::size_t k = 0; k < shape.size(); ++k) {
        ss << shape[k];
        if (shape.size() == 1) ss << ",";
        else if (k + 1 < shape.size()) ss << ", ";
    }
    ss << ")";
    return ss.str();
}

}  // namespace detail

/// Writes a tensor as NPY version 1.0: dtype '<f8', fortran_order True (the
/// buffer is already column-major), header padded with spaces to a 64-byte
/// boundary and newline-terminated — byte-identical to what numpy emits.
inline void write_npy(const std::string& path, const DenseTensor& t) {
    std::string dict = "{'descr': '<f8', 'fortran_order': True, 'shape': " +
                       detail::npy_shape_tuple(t.shape()) + ", }";
    const std::size_t unpadded = 6 + 2 + 2 + dict.size() + 1;
    const std::size_t padded = (unpadded + 63) / 64 * 64;
    dict.append(padded - unpadded, ' ');
    dict.push_back('\n');
    require(dict.size() <= 0xffff, "write_npy: header too large for version 1.0");

    std::ofstream out(path, std::ios::binary);
    require(out.good(), "write_npy: cannot open " + path);
    out.write(detail::kNpyMagic.data(), 6);
    const char version[2] = {1, 0};
    out.write(version, 2);
    const auto hlen = static_cast<std::uint16_t>(dict.size());
    const char lenbytes[2] = {static_cast<char>(hlen & 0xff),
                              static_cast<char>((hlen >> 8) & 0xff)};
    out.write(lenbytes, 2);
    out.write(dict.data(), static_cast<std::streamsize>(dict.size()));
    out.write(reinterpret_cast<const char*>(t.data()),
              static_cast<std::streamsize>(t.size() * sizeof(double)));
    require(out.good(), "write_npy: write failed for " + path);
}

namespace detail {

inline std::string npy_dict_field(const std::string& header, const std::string& key) {
    const auto kpos = header.find("'" + key + "'");
    require(kpos != std::string::npos, "read_npy: header lacks key " + key);
    auto pos = header.find(':', kpos);
    require(pos != std::string::npos, "read_npy: malformed header");
    ++pos;
    while (pos < header.size() && header[pos] == ' ') ++pos;
    std::size_t end = pos;
    int depth = 0;
    while (end < header.size()) {
        const char c = header[end];
        if (c == '(') ++depth;
        else if (c == ')') --depth;
        else if ((c == ',' || c == '}') && depth == 0) break;
        ++end;
    }
    return header.substr(pos, end - pos);
}

}  // namespace detail

/// Reads an NPY file holding '<f8' data (versions 1.0 and 2.0). C-ordered
/// files are accepted and converted to the library's column-major layout.
inline DenseTensor read_npy(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "read_npy: cannot open " + path);

    std::array<char, 6> magic{};
    in.read(magic.data(), 6);
    require(in.good() && magic == detail::kNpyMagic, "read_npy: not an NPY file: " + path);
    char version[2];
    in.read(version, 2);
    require(in.good() && (version[0] == 1 || version[0] == 2),
            "read_npy: unsupported NPY version");

    std::size_t header_len = 0;
    if (version[0] == 1) {
        unsigned char b[2];
        in.read(reinterpret_cast<char*>(b), 2);
        header_len = static_cast<std::size_t>(b[0]) | (static_cast<std::size_t>(b[1]) << 8);
    } else {
        unsigned char b[4];
        in.read(reinterpret_cast<char*>(b), 4);
        header_len = static_cast<std::size_t>(b[0]) | (static_cast<std::size_t>(b[1]) << 8) |
                     (static_cast<std::size_t>(b[2]) << 16) |
                     (static_cast<std::size_t>(b[3]) << 24);
    }
    std::string header(header_len, '\0');
    in.read(header.data(), static_cast<std::streamsize>(header_len));
    require(in.good(), "read_npy: truncated header");

    const std::string descr = detail::npy_dict_field(header, "descr");
    require(descr.find("<f8") != std::string::npos,
            "read_npy: only little-endian float64 ('<f8') is supported, got " + descr);
    const std::string order = detail::npy_dict_field(header, "fortran_order");
    const bool fortran = order.find("True") != std::string::npos;

    std::string tuple = detail::npy_dict_field(header, "shape");
    std::vector<std::size_t> shape;
    std::size_t value = 0;
    bool in_number = false;
    for (const char c : tuple) {
        if (c >= '0' && c <= '9') {
            value = value * 10 + static_cast<std::size_t>(c - '0');
            in_number = true;
        } else if (in_number) {
            shape.push_back(value);
            value = 0;
            in_number = false;
        }
    }
    if (in_number) shape.push_back(value);
    if (shape.empty()) shape.push_back(1);  // 0-d scalar

    const std::size_t count = detail::shape_product(shape);
    std::vector<double> data(count);
    in.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    require(in.gcount() == static_cast<std::streamsize>(count * sizeof(double)),
            "read_npy: truncated data in " + path);

    if (fortran || shape.size() == 1) return DenseTensor(std::move(shape), std::move(data));

    // C order: the raw buffer is column-major for the reversed shape.
    std::vector<std::size_t> reversed(shape.rbegin(), shape.rend());
    DenseTensor tmp(std::move(reversed), std::move(data));
    std::vector<std::size_t> flip(shape.size());
    for (std::size_t k = 0; k < shape.size(); ++k) flip[k] = shape.size() - 1 - k;
    return permute(tmp, flip);
}

}  // namespace fctn
