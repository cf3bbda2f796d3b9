#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gfsvi/model.hpp"

namespace gfsvi {

struct GridSpec {
    int ncols = 0;
    int nrows = 0;
    double xllcorner = 0.0;
    double yllcorner = 0.0;
    double cellsize = 1.0;
    double nodata_value = -9999.0;

    std::size_t cell_count() const { return static_cast<std::size_t>(ncols) * nrows; }

    bool same_geometry(const GridSpec& o) const {
        auto near = [](double a, double b) { return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)}); };
        return ncols == o.ncols && nrows == o.nrows && near(xllcorner, o.xllcorner) &&
               near(yllcorner, o.yllcorner) && near(cellsize, o.cellsize);
    }

    void validate() const {
        if (ncols <= 0 || nrows <= 0) throw io_error("GridSpec: non-positive dimensions");
        if (!(cellsize > 0.0)) throw io_error("GridSpec: cellsize must be > 0");
        if (cell_count() > (1ull << 31)) throw io_error("GridSpec: grid too large");
    }
};

// Row-major grid of doubles, row 0 northernmost.
struct Raster {
    GridSpec spec;
    std::vector<double> values;

    Raster() = default;
    explicit Raster(const GridSpec& s, double fill = 0.0) : spec(s), values(s.cell_count(), fill) {}

    double& at(int r, int c) { return values[static_cast<std::size_t>(r) * spec.ncols + c]; }
    double at(int r, int c) const { return values[static_cast<std::size_t>(r) * spec.ncols + c]; }
    bool is_nodata(double v) const { return v == spec.nodata_value; }
    bool nodata_at(int r, int c) const { return is_nodata(at(r, c)); }
};

enum class HazardCategory { landslide, liquefaction, building_damage };

inline const char* to_string(HazardCategory c) {
    switch (c) {
        case HazardCategory::landslide: return "landslide";
        case HazardCategory::liquefaction: return "liquefaction";
        default: return "building_damage";
    }
}

inline std::optional<HazardCategory> category_from_string(const std::string& s) {
    if (s == "landslide") return HazardCategory::landslide;
    if (s == "liquefaction") return HazardCategory::liquefaction;
    if (s == "building_damage") return HazardCategory::building_damage;
    return std::nullopt;
}

struct InventoryPoint {
    double lon = 0.0;
    double lat = 0.0;
    HazardCategory category = HazardCategory::landslide;
};

namespace detail {

inline std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

inline double parse_double(const std::string& tok, int line, int col, const std::string& path) {
    double v = 0.0;
    const auto* begin = tok.data();
    const auto* end = begin + tok.size();
    auto res = std::from_chars(begin, end, v);
    if (res.ec != std::errc() || res.ptr != end) {
        throw io_error(path + ":" + std::to_string(line) + ":" + std::to_string(col) +
                       ": non-numeric token '" + tok + "'");
    }
    return v;
}

struct Token {
    std::string text;
    int column = 0;  // 1-based character offset
};

inline std::vector<Token> split_tokens(const std::string& line) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        if (i >= line.size()) break;
        const std::size_t start = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        out.push_back({line.substr(start, i - start), static_cast<int>(start) + 1});
    }
    return out;
}

inline std::string format_value(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

inline std::string format_compact(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.15g", v);
    return buf;
}

}  // namespace detail

// Esri-style ASCII grid: six header lines (ncols, nrows, xllcorner,
// yllcorner, cellsize, NODATA_value, in that order, case-insensitive keys)
// followed by nrows lines of ncols whitespace-separated numbers.
inline Raster read_ascii_grid(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open raster file: " + path);

    static const char* expected[6] = {"ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value"};
    double header[6] = {0, 0, 0, 0, 0, 0};
    std::string line;
    int lineno = 0;
    for (int k = 0; k < 6; ++k) {
        if (!std::getline(in, line)) {
            throw io_error(path + ": truncated header, expected key '" + expected[k] + "'");
        }
        ++lineno;
        const auto toks = detail::split_tokens(line);
        if (toks.size() != 2) {
            throw io_error(path + ":" + std::to_string(lineno) + ": malformed header line");
        }
        if (detail::lower(toks[0].text) != expected[k]) {
            throw io_error(path + ":" + std::to_string(lineno) + ": unexpected header key '" +
                           toks[0].text + "', expected '" + expected[k] + "'");
        }
        header[k] = detail::parse_double(toks[1].text, lineno, toks[1].column, path);
    }

    GridSpec spec;
    spec.ncols = static_cast<int>(header[0]);
    spec.nrows = static_cast<int>(header[1]);
    spec.xllcorner = header[2];
    spec.yllcorner = header[3];
    spec.cellsize = header[4];
    spec.nodata_value = header[5];
    spec.validate();

    Raster raster(spec);
    for (int r = 0; r < spec.nrows; ++r) {
        if (!std::getline(in, line)) {
            throw io_error(path + ": unexpected end of file at data row " + std::to_string(r));
        }
        ++lineno;
        const auto toks = detail::split_tokens(line);
        if (static_cast<int>(toks.size()) != spec.ncols) {
            throw io_error(path + ":" + std::to_string(lineno) + ": expected " +
                           std::to_string(spec.ncols) + " values, found " + std::to_string(toks.size()));
        }
        for (int c = 0; c < spec.ncols; ++c) {
            const double v = detail::parse_double(toks[c].text, lineno, toks[c].column, path);
            if (v != spec.nodata_value && !std::isfinite(v)) {
                throw io_error(path + ":" + std::to_string(lineno) + ": non-finite cell value");
            }
            raster.at(r, c) = v;
        }
    }
    return raster;
}

inline void write_ascii_grid(const Raster& raster, const std::string& path, int decimals = 6) {
    raster.spec.validate();
    std::ofstream out(path);
    if (!out) throw io_error("cannot open for writing: " + path);
    const GridSpec& s = raster.spec;
    out << "ncols " << s.ncols << "\n";
    out << "nrows " << s.nrows << "\n";
    out << "xllcorner " << detail::format_compact(s.xllcorner) << "\n";
    out << "yllcorner " << detail::format_compact(s.yllcorner) << "\n";
    out << "cellsize " << detail::format_compact(s.cellsize) << "\n";
    out << "NODATA_value " << detail::format_compact(s.nodata_value) << "\n";
    for (int r = 0; r < s.nrows; ++r) {
        for (int c = 0; c < s.ncols; ++c) {
            if (c > 0) out << ' ';
            const double v = raster.at(r, c);
            if (raster.is_nodata(v)) {
                out << detail::format_compact(v);
            } else {
                out << detail::format_value(v, decimals);
            }
        }
        out << "\n";
    }
    if (!out) throw io_error("write failed: " + path);
}

// Nearest-neighbor resampling onto a target geometry: each target cell
// center maps to the containing source cell; centers outside the source
// extent become NODATA.
inline Raster align_to_grid(const Raster& src, const GridSpec& target) {
    target.validate();
    const GridSpec& ss = src.spec;
    const double sx0 = ss.xllcorner;
    const double sy0 = ss.yllcorner;
    const double sx1 = sx0 + ss.ncols * ss.cellsize;
    const double sy1 = sy0 + ss.nrows * ss.cellsize;
    const double tx0 = target.xllcorner;
    const double ty0 = target.yllcorner;
    const double tx1 = tx0 + target.ncols * target.cellsize;
    const double ty1 = ty0 + target.nrows * target.cellsize;
    if (tx1 <= sx0 || sx1 <= tx0 || ty1 <= sy0 || sy1 <= ty0) {
        throw io_error("align_to_grid: source and target extents are disjoint");
    }

    Raster out(target, target.nodata_value);
    for (int r = 0; r < target.nrows; ++r) {
        const double ycenter = ty0 + (target.nrows - 1 - r + 0.5) * target.cellsize;
        for (int c = 0; c < target.ncols; ++c) {
            const double xcenter = tx0 + (c + 0.5) * target.cellsize;
            const int sc = static_cast<int>(std::floor((xcenter - sx0) / ss.cellsize));
            const int sr_from_bottom = static_cast<int>(std::floor((ycenter - sy0) / ss.cellsize));
            const int sr = ss.nrows - 1 - sr_from_bottom;
            if (sc < 0 || sc >= ss.ncols || sr < 0 || sr >= ss.nrows) continue;
            const double v = src.at(sr, sc);
            out.at(r, c) = src.is_nodata(v) ? target.nodata_value : v;
        }
    }
    return out;
}

// Min-max rescale of the observation raster to [0,1] (skipped when the
// input is declared normalized), then clamp to [delta, 1].
inline Raster normalize_dpm(const Raster& raw, double delta, bool assume_normalized = false) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    std::size_t n_valid = 0;
    for (double v : raw.values) {
        if (raw.is_nodata(v)) continue;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        ++n_valid;
    }
    if (n_valid == 0) throw io_error("normalize_dpm: raster has no data cells");

    Raster out = raw;
    if (assume_normalized) {
        if (lo < -1e-6 || hi > 1.0 + 1e-6) {
            throw io_error("normalize_dpm: values outside [0,1] but input declared normalized");
        }
        for (double& v : out.values) {
            if (!raw.is_nodata(v)) v = std::min(std::max(v, delta), 1.0);
        }
        return out;
    }
    if (hi - lo <= 0.0) {
        throw io_error("normalize_dpm: constant raster; rescaling undefined, supply explicit bounds "
                       "or set assume_normalized");
    }
    const double span = hi - lo;
    for (double& v : out.values) {
        if (raw.is_nodata(v)) continue;
        v = std::min(std::max((v - lo) / span, delta), 1.0);
    }
    return out;
}

// Cell = 1 iff at least one point of the category falls inside; half-open
// cells with west and north edges inclusive. Points outside the extent are
// counted, not errors.
inline Raster rasterize_points(const std::vector<InventoryPoint>& points, const GridSpec& target,
                               HazardCategory category, std::size_t* outside_count = nullptr) {
    target.validate();
    GridSpec spec = target;
    spec.nodata_value = -9999.0;
    Raster out(spec, 0.0);
    std::size_t outside = 0;
    for (const auto& p : points) {
        if (p.category != category) continue;
        const double u = (p.lon - target.xllcorner) / target.cellsize;
        const double v = (p.lat - target.yllcorner) / target.cellsize;
        const int c = static_cast<int>(std::floor(u));
        const int r = static_cast<int>(std::floor(static_cast<double>(target.nrows) - v));
        if (c < 0 || c >= target.ncols || r < 0 || r >= target.nrows) {
            ++outside;
            continue;
        }
        out.at(r, c) = 1.0;
    }
    if (outside_count) *outside_count = outside;
    return out;
}

inline std::vector<InventoryPoint> read_inventory(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open inventory file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw io_error(path + ": empty inventory file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "lon,lat,category") {
        throw io_error(path + ":1: expected header 'lon,lat,category'");
    }
    std::vector<InventoryPoint> points;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string lon_s, lat_s, cat_s;
        if (!std::getline(ss, lon_s, ',') || !std::getline(ss, lat_s, ',') || !std::getline(ss, cat_s)) {
            throw io_error(path + ":" + std::to_string(lineno) + ": expected 'lon,lat,category'");
        }
        InventoryPoint p;
        p.lon = detail::parse_double(lon_s, lineno, 1, path);
        p.lat = detail::parse_double(lat_s, lineno, static_cast<int>(lon_s.size()) + 2, path);
        const auto cat = category_from_string(cat_s);
        if (!cat) {
            throw io_error(path + ":" + std::to_string(lineno) + ": unknown category '" + cat_s + "'");
        }
        p.category = *cat;
        points.push_back(p);
    }
    return points;
}

inline void write_inventory(const std::string& path, const std::vector<InventoryPoint>& points) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open for writing: " + path);
    out << "lon,lat,category\n";
    for (const auto& p : points) {
        out << detail::format_compact(p.lon) << ',' << detail::format_compact(p.lat) << ','
            << to_string(p.category) << "\n";
    }
    if (!out) throw io_error("write failed: " + path);
}

// Location table built on the observation grid.
struct LocationTable {
    GridSpec spec;
    std::vector<LocationRecord> records;  // one per cell, row-major

    std::size_t valid_count() const {
        std::size_t n = 0;
        for (const auto& r : records) n += r.valid ? 1 : 0;
        return n;
    }
};

// One record per observation cell; a record is valid when the observation
// and both priors are data cells. The footprint raster is optional and only
// gates the damage node.
inline LocationTable build_dataset(const Raster& dpm, const Raster& prior_ls, const Raster& prior_lf,
                                   const Raster* footprint, double delta) {
    if (!dpm.spec.same_geometry(prior_ls.spec) || !dpm.spec.same_geometry(prior_lf.spec) ||
        (footprint && !dpm.spec.same_geometry(footprint->spec))) {
        throw io_error("build_dataset: rasters are not aligned to the observation grid");
    }
    LocationTable table;
    table.spec = dpm.spec;
    table.records.reserve(dpm.spec.cell_count());
    for (int r = 0; r < dpm.spec.nrows; ++r) {
        for (int c = 0; c < dpm.spec.ncols; ++c) {
            const double y = dpm.at(r, c);
            const double als = prior_ls.at(r, c);
            const double alf = prior_lf.at(r, c);
            bool has_building = false;
            if (footprint) {
                const double f = footprint->at(r, c);
                has_building = !footprint->is_nodata(f) && f > 0.0;
            }
            if (dpm.is_nodata(y) || prior_ls.is_nodata(als) || prior_lf.is_nodata(alf)) {
                LocationRecord rec;
                rec.row = r;
                rec.col = c;
                rec.valid = false;
                rec.has_building = has_building;
                table.records.push_back(rec);
            } else {
                table.records.push_back(LocationRecord::make(r, c, y, als, alf, has_building, delta));
            }
        }
    }
    return table;
}

}  // namespace gfsvi
