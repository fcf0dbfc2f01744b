#pragma once

#include <istream>
#include <stdexcept>
#include <string>
#include <vector>

namespace epib {

class CsvError : public std::runtime_error {
public:
    CsvError(const std::string& what, long line) : std::runtime_error(what), line_(line) {}
    long line() const { return line_; }

private:
    long line_;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<long> lines; // source line of each row
    std::size_t column(const std::string& name) const;
};

// Comma-separated, no quoting. Blank lines are skipped; every row must match the header width.
CsvTable read_csv(std::istream& in);

double parse_double(const std::string& s, long line, const std::string& what);

} // namespace epib
