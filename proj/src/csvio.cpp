#include "lockloop/csvio.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace lockloop {

namespace fs = std::filesystem;

namespace {
std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

void atomic_write(const std::string& path, const std::string& content) {
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out << content;
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    fs::rename(tmp, target);
}
}  // namespace

void write_csv(const std::string& path, const std::vector<CsvColumn>& columns,
               const std::vector<std::string>& comments) {
    if (columns.empty()) throw std::invalid_argument("write_csv: no columns");
    const std::size_t rows = columns.front().values.size();
    for (const auto& c : columns)
        if (c.values.size() != rows) throw std::invalid_argument("write_csv: ragged columns");

    std::ostringstream out;
    for (const auto& c : comments) out << "# " << c << "\n";
    for (std::size_t i = 0; i < columns.size(); ++i)
        out << columns[i].name << (i + 1 < columns.size() ? "," : "\n");
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t i = 0; i < columns.size(); ++i)
            out << format_double(columns[i].values[r]) << (i + 1 < columns.size() ? "," : "\n");
    atomic_write(path, out.str());
}

void write_text_file(const std::string& path, const std::string& content) {
    atomic_write(path, content);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_manifest(const std::string& output_dir, const Manifest& m) {
    nlohmann::ordered_json j;
    j["command"] = m.command;
    j["config_path"] = m.config_path;
    j["output_dir"] = m.output_dir;
    j["config_sha256"] = m.config_sha256;
    j["seed"] = m.seed;
    j["tool_version"] = m.tool_version;
    auto files = nlohmann::ordered_json::array();
    for (const auto& f : m.emitted_files) files.push_back({{"path", f.path}, {"sha256", f.sha256}});
    j["emitted_files"] = files;
    atomic_write((fs::path(output_dir) / "manifest.json").string(), j.dump(2) + "\n");
}

}  // namespace lockloop
