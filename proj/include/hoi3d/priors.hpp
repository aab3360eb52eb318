#pragma once

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <hoi3d/common.hpp>

namespace hoi3d {

// Per-category object prior: sphere radius as a multiple of the human
// shoulder width, and the depth regularization interval factors.
struct ObjectPrior {
    std::string category;
    double ratio = 0.0;
    double gamma_min = 1.0;
    double gamma_max = 1.0;
    // When set, the ratio is additionally scaled by the object/human box
    // diagonal ratio (for categories whose image extent is a better size cue
    // than a fixed multiplier).
    bool box_ratio_mode = false;

    bool operator==(const ObjectPrior&) const = default;
};

namespace detail {

inline std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

inline double parse_number(const std::string& field, const std::string& where) {
    const std::string t = trim(field);
    require(!t.empty(), where + ": empty numeric field");
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    require(end == t.c_str() + t.size(), where + ": invalid number '" + t + "'");
    return v;
}

inline bool parse_bool(const std::string& field, const std::string& where) {
    const std::string t = trim(field);
    if (t == "0" || t == "false") return false;
    if (t == "1" || t == "true") return true;
    fail(where + ": invalid boolean '" + t + "' (expected 0/1/true/false)");
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

} // namespace detail

class PriorTable {
public:
    // Case-insensitive lookup key; spaces and underscores are equivalent.
    static std::string normalize_category(std::string_view raw) {
        std::string out = detail::trim(raw);
        for (char& c : out) {
            c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            if (c == ' ') c = '_';
        }
        return out;
    }

    // CSV with header `category,ratio,gamma_min,gamma_max,box_ratio_mode`.
    static PriorTable parse_csv(std::istream& in, const std::string& source_name) {
        PriorTable table;
        std::string line;
        int row = 0;
        bool saw_header = false;
        while (std::getline(in, line)) {
            ++row;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (detail::trim(line).empty()) continue;
            const std::string where = source_name + ":" + std::to_string(row);
            if (!saw_header) {
                require(detail::trim(line) == kHeader,
                        where + ": expected header '" + std::string(kHeader) + "'");
                saw_header = true;
                continue;
            }
            const auto fields = detail::split_csv_line(line);
            require(fields.size() == 5, where + ": expected 5 fields, got " +
                                            std::to_string(fields.size()));
            ObjectPrior p;
            p.category = normalize_category(fields[0]);
            require(!p.category.empty(), where + ": empty category");
            p.ratio = detail::parse_number(fields[1], where);
            p.gamma_min = detail::parse_number(fields[2], where);
            p.gamma_max = detail::parse_number(fields[3], where);
            p.box_ratio_mode = detail::parse_bool(fields[4], where);
            require(p.ratio > 0.0, where + ": ratio must be positive (category '" +
                                       p.category + "')");
            require(p.gamma_min > 0.0, where + ": gamma_min must be positive (category '" +
                                           p.category + "')");
            require(p.gamma_min <= p.gamma_max,
                    where + ": gamma_min > gamma_max (category '" + p.category + "')");
            const bool inserted = table.entries_.emplace(p.category, p).second;
            require(inserted, where + ": duplicate category '" + p.category + "'");
        }
        require(saw_header, source_name + ": empty file (missing header)");
        return table;
    }

    static PriorTable load(const std::string& path) {
        std::ifstream in(path);
        require(in.good(), "cannot open prior table '" + path + "'");
        return parse_csv(in, path);
    }

    const ObjectPrior& lookup(std::string_view category) const {
        const std::string key = normalize_category(category);
        const auto it = entries_.find(key);
        if (it == entries_.end())
            fail("unknown object category '" + std::string(category) + "'");
        return it->second;
    }

    bool contains(std::string_view category) const {
        return entries_.count(normalize_category(category)) > 0;
    }

    std::size_t size() const { return entries_.size(); }

    std::string serialize_csv() const {
        std::ostringstream out;
        out << kHeader << "\n";
        for (const auto& [name, p] : entries_) {
            out << name << ',' << format_double(p.ratio) << ','
                << format_double(p.gamma_min) << ',' << format_double(p.gamma_max)
                << ',' << (p.box_ratio_mode ? 1 : 0) << "\n";
        }
        return out.str();
    }

    void save(const std::string& path) const {
        std::ofstream out(path);
        require(out.good(), "cannot write prior table '" + path + "'");
        out << serialize_csv();
        require(out.good(), "write failed for prior table '" + path + "'");
    }

    const std::map<std::string, ObjectPrior>& entries() const { return entries_; }

    bool operator==(const PriorTable&) const = default;

private:
    static constexpr std::string_view kHeader =
        "category,ratio,gamma_min,gamma_max,box_ratio_mode";

    std::map<std::string, ObjectPrior> entries_;
};

} // namespace hoi3d
