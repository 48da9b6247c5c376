#pragma once

#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "guard/error.hpp"

namespace guard::jsonl {

/// Parse every nonempty line of a JSONL file. Throws SchemaError with the
/// line number on malformed JSON, FatalIO when the file cannot be read.
inline std::vector<nlohmann::json> read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FatalIO("cannot open " + path);
    std::vector<nlohmann::json> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(nlohmann::json::parse(line));
        } catch (const nlohmann::json::exception& e) {
            throw SchemaError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

/// Like read_file but skips unparseable lines instead of throwing, invoking
/// `on_bad` (if set) per skipped line. Used by resumable readers that must
/// tolerate a torn final line.
inline std::vector<nlohmann::json> read_file_lenient(
    const std::string& path, const std::function<void(std::size_t)>& on_bad = nullptr) {
    std::ifstream in(path);
    if (!in) throw FatalIO("cannot open " + path);
    std::vector<nlohmann::json> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(nlohmann::json::parse(line));
        } catch (const nlohmann::json::exception&) {
            if (on_bad) on_bad(lineno);
        }
    }
    return out;
}

inline void append_line(std::ofstream& out, const nlohmann::json& j) {
    out << j.dump() << '\n';
    if (!out) throw FatalIO("write failed");
}

}  // namespace guard::jsonl
