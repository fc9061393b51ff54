#include "specswap/manifest.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "specswap/errors.hpp"

namespace specswap {

std::uint64_t fnv1a(const void* data, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    std::uint64_t hash = 14695981039346656037ull;
    for (std::size_t i = 0; i < n; ++i) {
        hash ^= bytes[i];
        hash *= 1099511628211ull;
    }
    return hash;
}

std::uint64_t fnv1a_string(const std::string& text) {
    return fnv1a(text.data(), text.size());
}

std::uint64_t fnv1a_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::uint64_t hash = 14695981039346656037ull;
    char buffer[65536];
    while (in.read(buffer, sizeof buffer) || in.gcount() > 0) {
        std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            hash ^= static_cast<unsigned char>(buffer[i]);
            hash *= 1099511628211ull;
        }
    }
    return hash;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << content;
    if (!out) throw IoError("failed writing " + path);
}

RunRecorder::RunRecorder(std::string out_dir, std::string config_text,
                         std::uint64_t seed)
    : out_dir_(std::move(out_dir)), config_text_(std::move(config_text)),
      seed_(seed) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir_, ec);
    if (ec) throw IoError("cannot create output directory " + out_dir_);
}

std::string RunRecorder::path(const std::string& filename) const {
    return (std::filesystem::path(out_dir_) / filename).string();
}

void RunRecorder::record(const std::string& filename) {
    files_.emplace_back(filename, fnv1a_file(path(filename)));
}

std::string RunRecorder::finalize(double elapsed_seconds) {
    write_text_file(path("params_used.txt"), config_text_);
    record("params_used.txt");

    std::ostringstream out;
    out << "# run manifest\n";
    out << "version = " << kArtifactVersion << "\n";
    out << "seed = " << seed_ << "\n";
    out << "config_fnv1a = 0x" << std::hex << std::setw(16) << std::setfill('0')
        << fnv1a_string(config_text_) << std::dec << "\n";
    for (const auto& [name, hash] : files_) {
        out << "file " << name << " fnv1a 0x" << std::hex << std::setw(16)
            << std::setfill('0') << hash << std::dec << "\n";
    }
    out << "# timing (non-normative)\n";
    out << "# elapsed_s = " << elapsed_seconds << "\n";
    std::string manifest_path = path("manifest.txt");
    write_text_file(manifest_path, out.str());
    return manifest_path;
}

}  // namespace specswap
