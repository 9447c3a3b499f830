#include "spq/database.hpp"

#include <fstream>
#include <istream>

namespace spq {

namespace {

std::vector<std::string> split_tabs(const std::string& line)
{
    std::vector<std::string> out;
    size_t start = 0;
    for (;;) {
        size_t t = line.find('\t', start);
        out.push_back(line.substr(start, t == std::string::npos ? std::string::npos : t - start));
        if (t == std::string::npos) break;
        start = t + 1;
    }
    return out;
}

} // namespace

TsvTable read_tsv(std::istream& in, const std::string& what)
{
    TsvTable t;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!have_header) {
            t.header = split_tabs(line);
            have_header = true;
        } else {
            t.rows.push_back(split_tabs(line));
        }
    }
    if (!have_header) throw DataError(what + ": missing header line");
    return t;
}

TsvTable read_tsv_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    return read_tsv(in, path);
}

void write_text_file(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path);
}

} // namespace spq
