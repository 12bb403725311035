#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace lockloop {

std::string sha256_hex(const void* data, std::size_t len);
std::string sha256_hex(const std::string& s);

struct CsvColumn {
    std::string name;
    std::vector<double> values;
};

// ASCII CSV, header row, '.' decimal, '\n'-terminated, written atomically
// (temp file + rename). Optional comment lines go above the header.
void write_csv(const std::string& path, const std::vector<CsvColumn>& columns,
               const std::vector<std::string>& comments = {});

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

struct Manifest {
    std::string command;
    std::string config_path;
    std::string output_dir;
    std::string config_sha256;
    std::uint64_t seed = 0;
    std::string tool_version;

    struct FileEntry {
        std::string path;  // relative to the output dir
        std::string sha256;
    };
    std::vector<FileEntry> emitted_files;
};

// manifest.json in the output dir; re-running a manifest's command must
// reproduce the listed checksums byte for byte.
void write_manifest(const std::string& output_dir, const Manifest& m);

}  // namespace lockloop
