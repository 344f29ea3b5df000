#pragma once

#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace factseq::bfile {

using u64 = std::uint64_t;

struct SequenceRecord {
    u64 n = 0;
    u64 value = 0;
    bool operator==(const SequenceRecord&) const = default;
};

// "n value" per line, ascending n without gaps; '#' starts a comment, blank lines are
// skipped.
inline std::vector<SequenceRecord> read(std::istream& in) {
    std::vector<SequenceRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        u64 n, value;
        if (!(ls >> n)) {
            ls.clear();
            std::string rest;
            if (ls >> rest)
                throw std::runtime_error("bfile: line " + std::to_string(lineno) + ": expected 'n value'");
            continue; // blank or comment-only
        }
        if (!(ls >> value))
            throw std::runtime_error("bfile: line " + std::to_string(lineno) + ": missing value");
        std::string trailing;
        if (ls >> trailing)
            throw std::runtime_error("bfile: line " + std::to_string(lineno) + ": trailing tokens");
        if (!out.empty() && n != out.back().n + 1)
            throw std::runtime_error("bfile: line " + std::to_string(lineno) +
                                     ": indices must ascend without gaps");
        out.push_back({n, value});
    }
    return out;
}

inline std::vector<SequenceRecord> read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("bfile: cannot open " + path);
    return read(in);
}

inline void write(std::ostream& out, const std::vector<SequenceRecord>& records) {
    for (const auto& r : records) out << r.n << " " << r.value << "\n";
}

} // namespace factseq::bfile
