#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "rainsplat/errors.hpp"

namespace rainsplat {

inline double missing_value() { return std::numeric_limits<double>::quiet_NaN(); }
inline bool is_missing(double v) { return std::isnan(v); }

// Geometry of a regular raster. Coordinates are abstract grid units
// (km by convention); (origin_x, origin_y) is the center of cell (0,0),
// row index increases with y.
struct GridSpec {
    double origin_x = 0.0;
    double origin_y = 0.0;
    double cell_size = 1.0;
    std::size_t rows = 0;
    std::size_t cols = 0;

    void validate() const {
        if (!(cell_size > 0.0)) throw data_error("GridSpec: cell_size must be > 0");
        if (rows < 1 || cols < 1) throw data_error("GridSpec: rows and cols must be >= 1");
    }

    std::size_t size() const { return rows * cols; }

    double x_of(std::size_t col) const { return origin_x + static_cast<double>(col) * cell_size; }
    double y_of(std::size_t row) const { return origin_y + static_cast<double>(row) * cell_size; }

    // Nearest cell index for a coordinate; may be out of bounds.
    long col_of(double x) const { return static_cast<long>(std::lround((x - origin_x) / cell_size)); }
    long row_of(double y) const { return static_cast<long>(std::lround((y - origin_y) / cell_size)); }

    bool in_bounds(long row, long col) const {
        return row >= 0 && col >= 0 &&
               row < static_cast<long>(rows) && col < static_cast<long>(cols);
    }

    bool operator==(const GridSpec& o) const {
        return origin_x == o.origin_x && origin_y == o.origin_y &&
               cell_size == o.cell_size && rows == o.rows && cols == o.cols;
    }
};

// A scalar raster (mm/h unless stated otherwise). NaN marks missing cells.
struct GridField {
    GridSpec spec;
    std::vector<double> values; // row-major, rows*cols

    GridField() = default;
    GridField(GridSpec s, double fill = 0.0) : spec(s), values(s.size(), fill) { spec.validate(); }

    double& at(std::size_t row, std::size_t col) { return values[row * spec.cols + col]; }
    double at(std::size_t row, std::size_t col) const { return values[row * spec.cols + col]; }

    std::size_t rows() const { return spec.rows; }
    std::size_t cols() const { return spec.cols; }

    // require_nonneg: precipitation fields reject negative values; generic
    // rasters may relax this.
    void validate(bool require_nonneg = true) const {
        spec.validate();
        if (values.size() != spec.size())
            throw data_error("GridField: value count does not match rows*cols");
        for (double v : values) {
            if (is_missing(v)) continue;
            if (!std::isfinite(v)) throw data_error("GridField: non-finite non-missing value");
            if (require_nonneg && v < 0.0) throw data_error("GridField: negative precipitation value");
        }
    }

    double max_value() const {
        double m = 0.0;
        bool any = false;
        for (double v : values)
            if (!is_missing(v)) { m = any ? std::max(m, v) : v; any = true; }
        return any ? m : missing_value();
    }
};

enum class ResampleMode { block_mean, nearest };

// Resample onto a (typically coarser) target covering a sub-region of the
// source extent. block_mean averages all non-missing source cells whose
// centers fall inside each target cell; a target cell with no contributing
// sources is missing.
inline GridField resample(const GridField& field, const GridSpec& target, ResampleMode mode) {
    field.spec.validate();
    target.validate();
    const GridSpec& src = field.spec;

    // extent check with one-source-cell tolerance
    const double tol = src.cell_size;
    const double src_x0 = src.origin_x - 0.5 * src.cell_size;
    const double src_x1 = src.origin_x + (static_cast<double>(src.cols) - 0.5) * src.cell_size;
    const double src_y0 = src.origin_y - 0.5 * src.cell_size;
    const double src_y1 = src.origin_y + (static_cast<double>(src.rows) - 0.5) * src.cell_size;
    const double tgt_x0 = target.origin_x - 0.5 * target.cell_size;
    const double tgt_x1 = target.origin_x + (static_cast<double>(target.cols) - 0.5) * target.cell_size;
    const double tgt_y0 = target.origin_y - 0.5 * target.cell_size;
    const double tgt_y1 = target.origin_y + (static_cast<double>(target.rows) - 0.5) * target.cell_size;
    if (tgt_x1 < src_x0 || tgt_x0 > src_x1 || tgt_y1 < src_y0 || tgt_y0 > src_y1)
        throw data_error("resample: target does not overlap source extent");
    if (tgt_x0 < src_x0 - tol || tgt_x1 > src_x1 + tol || tgt_y0 < src_y0 - tol || tgt_y1 > src_y1 + tol)
        throw data_error("resample: target extends beyond source extent");

    GridField out(target, missing_value());

    if (mode == ResampleMode::nearest) {
        for (std::size_t r = 0; r < target.rows; ++r) {
            for (std::size_t c = 0; c < target.cols; ++c) {
                long sr = src.row_of(target.y_of(r));
                long sc = src.col_of(target.x_of(c));
                if (src.in_bounds(sr, sc))
                    out.at(r, c) = field.at(static_cast<std::size_t>(sr), static_cast<std::size_t>(sc));
            }
        }
        return out;
    }

    std::vector<double> sums(target.size(), 0.0);
    std::vector<std::size_t> counts(target.size(), 0);
    for (std::size_t r = 0; r < src.rows; ++r) {
        const double y = src.y_of(r);
        const long tr = static_cast<long>(std::floor((y - tgt_y0) / target.cell_size));
        if (tr < 0 || tr >= static_cast<long>(target.rows)) continue;
        for (std::size_t c = 0; c < src.cols; ++c) {
            const double v = field.at(r, c);
            if (is_missing(v)) continue;
            const double x = src.x_of(c);
            const long tc = static_cast<long>(std::floor((x - tgt_x0) / target.cell_size));
            if (tc < 0 || tc >= static_cast<long>(target.cols)) continue;
            const std::size_t idx = static_cast<std::size_t>(tr) * target.cols + static_cast<std::size_t>(tc);
            sums[idx] += v;
            counts[idx] += 1;
        }
    }
    for (std::size_t i = 0; i < target.size(); ++i)
        if (counts[i] > 0) out.values[i] = sums[i] / static_cast<double>(counts[i]);
    return out;
}

// Same extent at cell_size scaled by `factor` (0.5 doubles the resolution).
inline GridSpec refine(const GridSpec& spec, double factor) {
    if (!(factor > 0.0)) throw data_error("refine: factor must be > 0");
    GridSpec out;
    out.cell_size = spec.cell_size * factor;
    out.rows = static_cast<std::size_t>(std::lround(static_cast<double>(spec.rows) / factor));
    out.cols = static_cast<std::size_t>(std::lround(static_cast<double>(spec.cols) / factor));
    out.rows = std::max<std::size_t>(out.rows, 1);
    out.cols = std::max<std::size_t>(out.cols, 1);
    // keep the outer extent fixed; cell centers shift by half the size change
    out.origin_x = spec.origin_x - 0.5 * spec.cell_size + 0.5 * out.cell_size;
    out.origin_y = spec.origin_y - 0.5 * spec.cell_size + 0.5 * out.cell_size;
    return out;
}

} // namespace rainsplat
