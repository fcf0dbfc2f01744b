#include "epib/csv.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

namespace epib {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

} // namespace

std::size_t CsvTable::column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw CsvError("missing column '" + name + "'", 1);
    return static_cast<std::size_t>(it - header.begin());
}

CsvTable read_csv(std::istream& in) {
    CsvTable t;
    std::string line;
    long n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (trim(line).empty()) continue;
        auto cells = split(line);
        if (t.header.empty()) {
            t.header = std::move(cells);
            continue;
        }
        if (cells.size() != t.header.size())
            throw CsvError("line " + std::to_string(n) + ": expected " + std::to_string(t.header.size()) +
                               " columns, found " + std::to_string(cells.size()),
                           n);
        t.rows.push_back(std::move(cells));
        t.lines.push_back(n);
    }
    if (t.header.empty()) throw CsvError("empty CSV input", 0);
    return t;
}

double parse_double(const std::string& s, long line, const std::string& what) {
    double v = 0.0;
    const auto* end = s.data() + s.size();
    const auto res = std::from_chars(s.data(), end, v);
    if (s.empty() || res.ec != std::errc() || res.ptr != end)
        throw CsvError("line " + std::to_string(line) + ": " + what + " is not a number: '" + s + "'", line);
    return v;
}

} // namespace epib
