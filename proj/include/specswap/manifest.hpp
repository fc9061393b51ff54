#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace specswap {

inline constexpr const char* kArtifactVersion = "0.1.0";

std::uint64_t fnv1a(const void* data, std::size_t n);
std::uint64_t fnv1a_string(const std::string& text);
std::uint64_t fnv1a_file(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// Collects output files for one run and emits manifest.txt plus
// params_used.txt. Checksum lines are the normative content; the timing
// footer is a comment so reruns with equal configs compare equal on the
// checksum lines.
class RunRecorder {
  public:
    RunRecorder(std::string out_dir, std::string config_text, std::uint64_t seed);

    // registers a file already written under the run directory
    void record(const std::string& filename);
    const std::string& dir() const { return out_dir_; }
    std::string path(const std::string& filename) const;

    // writes params_used.txt + manifest.txt and returns the manifest path
    std::string finalize(double elapsed_seconds);

  private:
    std::string out_dir_;
    std::string config_text_;
    std::uint64_t seed_ = 0;
    std::vector<std::pair<std::string, std::uint64_t>> files_;
};

}  // namespace specswap
