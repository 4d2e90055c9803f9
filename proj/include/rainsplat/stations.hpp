#pragma once

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rainsplat/errors.hpp"
#include "rainsplat/grid.hpp"

namespace rainsplat {

enum class Quality { ok, missing, suspect };

inline const char* to_string(Quality q) {
    switch (q) {
        case Quality::ok: return "ok";
        case Quality::missing: return "missing";
        case Quality::suspect: return "suspect";
    }
    return "?";
}

// One gauge observation. The value is meaningful only when quality == ok.
struct StationObs {
    std::string id;
    double x = 0.0;
    double y = 0.0;
    double value = 0.0; // mm/h
    Quality quality = Quality::ok;
};

struct StationSet {
    std::vector<StationObs> stations;

    std::size_t count_ok() const {
        std::size_t n = 0;
        for (const auto& s : stations)
            if (s.quality == Quality::ok) ++n;
        return n;
    }

    void validate() const {
        std::set<std::string> ids;
        for (const auto& s : stations) {
            if (!ids.insert(s.id).second)
                throw data_error("stations: duplicate id '" + s.id + "'");
            if (s.quality == Quality::ok) {
                if (!std::isfinite(s.value))
                    throw data_error("stations: non-finite value for ok station '" + s.id + "'");
                if (s.value < 0.0)
                    throw data_error("stations: negative value for station '" + s.id + "'");
            }
        }
    }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

} // namespace detail

// CSV with header id,x,y,value,quality (quality column optional, default ok).
// Rows whose value does not parse get quality=missing.
inline StationSet read_stations(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw io_error("stations: cannot open: " + path);
    std::string line;
    if (!std::getline(is, line)) throw io_error("stations: empty file: " + path);
    auto header = detail::split_csv_line(line);
    if (header.size() < 4 || header[0] != "id" || header[1] != "x" || header[2] != "y" ||
        header[3] != "value")
        throw io_error("stations: expected header id,x,y,value[,quality] in " + path);
    const bool has_quality = header.size() >= 5 && header[4] == "quality";

    StationSet set;
    while (std::getline(is, line)) {
        if (line.empty() || line == "\r") continue;
        auto f = detail::split_csv_line(line);
        if (f.size() < 4) throw io_error("stations: row with missing columns in " + path);
        StationObs obs;
        obs.id = f[0];
        try {
            obs.x = std::stod(f[1]);
            obs.y = std::stod(f[2]);
        } catch (const std::logic_error&) {
            throw io_error("stations: unparsable coordinate for id '" + obs.id + "'");
        }
        obs.quality = Quality::ok;
        if (has_quality && f.size() >= 5 && !f[4].empty()) {
            if (f[4] == "ok") obs.quality = Quality::ok;
            else if (f[4] == "missing") obs.quality = Quality::missing;
            else if (f[4] == "suspect") obs.quality = Quality::suspect;
            else throw io_error("stations: unknown quality '" + f[4] + "'");
        }
        try {
            obs.value = std::stod(f[3]);
            if (!std::isfinite(obs.value)) obs.quality = Quality::missing;
        } catch (const std::logic_error&) {
            obs.value = 0.0;
            obs.quality = Quality::missing;
        }
        set.stations.push_back(std::move(obs));
    }
    set.validate();
    return set;
}

inline void write_stations(const StationSet& set, const std::string& path) {
    set.validate();
    std::ofstream os(path);
    if (!os) throw io_error("stations: cannot open for writing: " + path);
    os << "id,x,y,value,quality\n";
    char buf[96];
    for (const auto& s : set.stations) {
        std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g,%s", s.id.c_str(), s.x, s.y, s.value,
                      to_string(s.quality));
        os << buf << "\n";
    }
    if (!os) throw io_error("stations: write failed: " + path);
}

} // namespace rainsplat
