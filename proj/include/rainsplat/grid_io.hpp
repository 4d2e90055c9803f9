#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "rainsplat/grid.hpp"

namespace rainsplat {

enum class GridFormat { binary, ascii };

// Binary layout: magic "SPF1" | u32 rows | u32 cols | f64 origin_x |
// f64 origin_y | f64 cell_size | rows*cols little-endian f32, row-major,
// NaN = missing. Assumes a little-endian host.
namespace detail {

template <typename T>
void write_le(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw io_error("grid: truncated binary file");
    return v;
}

} // namespace detail

inline void write_grid(const GridField& field, const std::string& path, GridFormat format,
                       bool require_nonneg = true) {
    field.validate(require_nonneg);
    std::ofstream os(path, format == GridFormat::binary ? std::ios::binary : std::ios::out);
    if (!os) throw io_error("grid: cannot open for writing: " + path);

    if (format == GridFormat::binary) {
        os.write("SPF1", 4);
        detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(field.spec.rows));
        detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(field.spec.cols));
        detail::write_le<double>(os, field.spec.origin_x);
        detail::write_le<double>(os, field.spec.origin_y);
        detail::write_le<double>(os, field.spec.cell_size);
        for (double v : field.values)
            detail::write_le<float>(os, is_missing(v) ? std::numeric_limits<float>::quiet_NaN()
                                                      : static_cast<float>(v));
    } else {
        char buf[64];
        os << "rows " << field.spec.rows << "\n";
        os << "cols " << field.spec.cols << "\n";
        std::snprintf(buf, sizeof(buf), "%.17g", field.spec.origin_x);
        os << "origin_x " << buf << "\n";
        std::snprintf(buf, sizeof(buf), "%.17g", field.spec.origin_y);
        os << "origin_y " << buf << "\n";
        std::snprintf(buf, sizeof(buf), "%.17g", field.spec.cell_size);
        os << "cell_size " << buf << "\n";
        for (std::size_t r = 0; r < field.rows(); ++r) {
            for (std::size_t c = 0; c < field.cols(); ++c) {
                if (c) os << ' ';
                double v = field.at(r, c);
                if (is_missing(v)) {
                    os << "NA";
                } else {
                    std::snprintf(buf, sizeof(buf), "%.9g", v);
                    os << buf;
                }
            }
            os << "\n";
        }
    }
    if (!os) throw io_error("grid: write failed: " + path);
}

inline GridField read_grid(const std::string& path, GridFormat format,
                           bool require_nonneg = true) {
    std::ifstream is(path, format == GridFormat::binary ? std::ios::binary : std::ios::in);
    if (!is) throw io_error("grid: cannot open: " + path);

    GridField field;
    if (format == GridFormat::binary) {
        char magic[4];
        is.read(magic, 4);
        if (!is || std::memcmp(magic, "SPF1", 4) != 0)
            throw io_error("grid: bad magic in " + path);
        field.spec.rows = detail::read_le<std::uint32_t>(is);
        field.spec.cols = detail::read_le<std::uint32_t>(is);
        field.spec.origin_x = detail::read_le<double>(is);
        field.spec.origin_y = detail::read_le<double>(is);
        field.spec.cell_size = detail::read_le<double>(is);
        field.spec.validate();
        field.values.resize(field.spec.size());
        for (double& v : field.values) {
            float f = detail::read_le<float>(is);
            v = std::isnan(f) ? missing_value() : static_cast<double>(f);
        }
        char extra;
        if (is.read(&extra, 1)) throw io_error("grid: trailing bytes in " + path);
    } else {
        auto header_value = [&](const char* key) -> std::string {
            std::string line;
            if (!std::getline(is, line)) throw io_error(std::string("grid: missing header line ") + key);
            std::istringstream ls(line);
            std::string k, v;
            ls >> k >> v;
            if (k != key || v.empty())
                throw io_error(std::string("grid: malformed header, expected ") + key);
            return v;
        };
        try {
            field.spec.rows = static_cast<std::size_t>(std::stoull(header_value("rows")));
            field.spec.cols = static_cast<std::size_t>(std::stoull(header_value("cols")));
            field.spec.origin_x = std::stod(header_value("origin_x"));
            field.spec.origin_y = std::stod(header_value("origin_y"));
            field.spec.cell_size = std::stod(header_value("cell_size"));
        } catch (const std::logic_error&) {
            throw io_error("grid: unparsable header value in " + path);
        }
        field.spec.validate();
        field.values.reserve(field.spec.size());
        std::string tok;
        while (is >> tok) {
            if (field.values.size() >= field.spec.size())
                throw io_error("grid: more values than rows*cols in " + path);
            if (tok == "NA") {
                field.values.push_back(missing_value());
            } else {
                try {
                    field.values.push_back(std::stod(tok));
                } catch (const std::logic_error&) {
                    throw io_error("grid: unparsable value '" + tok + "' in " + path);
                }
            }
        }
        if (field.values.size() != field.spec.size())
            throw io_error("grid: value count does not match rows*cols in " + path);
    }
    field.validate(require_nonneg);
    return field;
}

} // namespace rainsplat
