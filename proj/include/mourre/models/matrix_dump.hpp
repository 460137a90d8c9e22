#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "mourre/linalg.hpp"

namespace mourre {

// Layout: uint64 rows, uint64 cols, then rows*cols (re, im) float64 pairs, row-major, little-endian.
inline void write_matrix_dump(const std::string& path, const Mat& m) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open " + path);
    auto put64 = [&](std::uint64_t v) {
        if constexpr (std::endian::native == std::endian::big) v = __builtin_bswap64(v);
        os.write(reinterpret_cast<const char*>(&v), 8);
    };
    auto putd = [&](double d) {
        std::uint64_t v;
        std::memcpy(&v, &d, 8);
        put64(v);
    };
    put64(static_cast<std::uint64_t>(m.rows()));
    put64(static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            putd(m(i, j).real());
            putd(m(i, j).imag());
        }
    if (!os) throw Error("write failed: " + path);
}

inline Mat read_matrix_dump(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open " + path);
    auto get64 = [&]() {
        std::uint64_t v = 0;
        is.read(reinterpret_cast<char*>(&v), 8);
        if (!is) throw Error("truncated dump: " + path);
        if constexpr (std::endian::native == std::endian::big) v = __builtin_bswap64(v);
        return v;
    };
    auto getd = [&]() {
        std::uint64_t v = get64();
        double d;
        std::memcpy(&d, &v, 8);
        return d;
    };
    auto r = static_cast<Eigen::Index>(get64()), c = static_cast<Eigen::Index>(get64());
    Mat m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) {
            double re = getd();
            m(i, j) = cplx(re, getd());
        }
    return m;
}

}  // namespace mourre
