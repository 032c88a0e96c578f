#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tal/matrix.hpp"

namespace tal {

/// Reader/writer for the NPY binary array format, version 1.0, restricted to
/// what telemetry archives actually contain: little-endian float32/float64,
/// C order, 1-D or 2-D. Parse failures report the byte offset.

namespace npy_detail {

[[noreturn]] inline void fail(const std::string& path, std::size_t offset, const std::string& what) {
    throw std::runtime_error(path + ": " + what + " (byte offset " + std::to_string(offset) + ")");
}

inline std::string find_dict_value(const std::string& header, const std::string& key,
                                   const std::string& path, std::size_t header_off) {
    auto kpos = header.find("'" + key + "'");
    if (kpos == std::string::npos) fail(path, header_off, "NPY header missing key '" + key + "'");
    auto colon = header.find(':', kpos);
    if (colon == std::string::npos) fail(path, header_off + kpos, "NPY header malformed after '" + key + "'");
    std::size_t i = colon + 1;
    while (i < header.size() && header[i] == ' ') ++i;
    if (i >= header.size()) fail(path, header_off + i, "NPY header truncated");
    std::size_t start = i;
    if (header[i] == '\'') {
        auto close = header.find('\'', i + 1);
        if (close == std::string::npos) fail(path, header_off + i, "unterminated string in NPY header");
        return header.substr(i + 1, close - i - 1);
    }
    if (header[i] == '(') {
        auto close = header.find(')', i);
        if (close == std::string::npos) fail(path, header_off + i, "unterminated tuple in NPY header");
        return header.substr(start, close - start + 1);
    }
    while (i < header.size() && header[i] != ',' && header[i] != '}') ++i;
    return header.substr(start, i - start);
}

}  // namespace npy_detail

/// Loads a .npy file as a Matrix (1-D arrays become a single column).
inline Matrix load_npy(const std::string& path) {
    using npy_detail::fail;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");

    char magic[8];
    if (!in.read(magic, 8)) fail(path, 0, "file too short for NPY magic");
    static const char expected[] = "\x93NUMPY";
    if (std::memcmp(magic, expected, 6) != 0) fail(path, 0, "not an NPY file");
    const unsigned major = static_cast<unsigned char>(magic[6]);
    if (major != 1) fail(path, 6, "unsupported NPY version " + std::to_string(major));

    unsigned char len_bytes[2];
    if (!in.read(reinterpret_cast<char*>(len_bytes), 2)) fail(path, 8, "truncated NPY header length");
    const std::size_t header_len = len_bytes[0] | (std::size_t(len_bytes[1]) << 8);
    std::string header(header_len, '\0');
    if (!in.read(header.data(), static_cast<std::streamsize>(header_len)))
        fail(path, 10, "truncated NPY header");

    const std::string descr = npy_detail::find_dict_value(header, "descr", path, 10);
    std::size_t item_size = 0;
    if (descr == "<f8") item_size = 8;
    else if (descr == "<f4") item_size = 4;
    else fail(path, 10, "unsupported dtype '" + descr + "' (expected <f4 or <f8)");

    const std::string order = npy_detail::find_dict_value(header, "fortran_order", path, 10);
    if (order.find("True") != std::string::npos)
        fail(path, 10, "fortran_order arrays are not supported");

    std::string shape = npy_detail::find_dict_value(header, "shape", path, 10);
    std::vector<std::size_t> dims;
    {
        std::string digits;
        for (char c : shape) {
            if (c >= '0' && c <= '9') {
                digits.push_back(c);
            } else if (!digits.empty()) {
                dims.push_back(static_cast<std::size_t>(std::stoull(digits)));
                digits.clear();
            }
        }
        if (!digits.empty()) dims.push_back(static_cast<std::size_t>(std::stoull(digits)));
    }
    if (dims.empty() || dims.size() > 2) fail(path, 10, "expected 1-D or 2-D shape, got '" + shape + "'");

    Matrix m;
    m.rows = dims[0];
    m.cols = dims.size() == 2 ? dims[1] : 1;
    const std::size_t count = m.rows * m.cols;
    const std::size_t data_off = 10 + header_len;
    m.data.resize(count);

    if (item_size == 8) {
        if (!in.read(reinterpret_cast<char*>(m.data.data()),
                     static_cast<std::streamsize>(count * 8)))
            fail(path, data_off + static_cast<std::size_t>(in.gcount()), "truncated NPY data");
    } else {
        std::vector<float> raw(count);
        if (!in.read(reinterpret_cast<char*>(raw.data()),
                     static_cast<std::streamsize>(count * 4)))
            fail(path, data_off + static_cast<std::size_t>(in.gcount()), "truncated NPY data");
        for (std::size_t i = 0; i < count; ++i) m.data[i] = static_cast<double>(raw[i]);
    }
    return m;
}

/// Writes a Matrix as NPY v1.0, '<f8', C order.
inline void save_npy(const std::string& path, const Matrix& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");

    std::string dict = "{'descr': '<f8', 'fortran_order': False, 'shape': (" +
                       std::to_string(m.rows) + ", " + std::to_string(m.cols) + "), }";
    // Pad so that magic + version + length field + header is 64-byte aligned.
    std::size_t unpadded = 10 + dict.size() + 1;
    std::size_t padding = (64 - unpadded % 64) % 64;
    dict.append(padding, ' ');
    dict.push_back('\n');

    out.write("\x93NUMPY\x01\x00", 8);
    const std::size_t len = dict.size();
    unsigned char len_bytes[2] = {static_cast<unsigned char>(len & 0xff),
                                  static_cast<unsigned char>((len >> 8) & 0xff)};
    out.write(reinterpret_cast<const char*>(len_bytes), 2);
    out.write(dict.data(), static_cast<std::streamsize>(dict.size()));
    out.write(reinterpret_cast<const char*>(m.data.data()),
              static_cast<std::streamsize>(m.data.size() * 8));
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace tal
