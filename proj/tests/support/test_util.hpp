// Shared test fixtures: scratch directories, synthetic WAV payloads,
// tiny corpora, and a helper to run the CLI binary.

#pragma once

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "corpus_forge/audio_io.hpp"

namespace test_util {

namespace fs = std::filesystem;

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<unsigned> counter{0};
    path_ = fs::temp_directory_path() /
            ("corpus_forge_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  fs::path path_;
};

// Deterministic PCM payload so concatenation bugs show up as byte
// differences, not just length differences.
inline std::vector<std::uint8_t> pcm_payload(std::uint64_t frames,
                                             std::uint16_t channels,
                                             std::uint16_t bits,
                                             std::uint32_t seedling) {
  std::vector<std::uint8_t> bytes(frames * channels * (bits / 8));
  std::uint32_t x = seedling * 2654435761u + 12345u;
  for (auto& b : bytes) {
    x = x * 1664525u + 1013904223u;
    b = static_cast<std::uint8_t>(x >> 24);
  }
  return bytes;
}

inline corpus_forge::AudioMeta write_wav(const fs::path& path,
                                         std::uint32_t sample_rate,
                                         std::uint64_t frames,
                                         std::uint16_t channels = 1,
                                         std::uint16_t bits = 16,
                                         std::uint32_t seedling = 1) {
  auto payload = pcm_payload(frames, channels, bits, seedling);
  return corpus_forge::write_pcm_wav(path, sample_rate, channels, bits, payload);
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f << text;
}

inline std::string read_text(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(f)),
                     std::istreambuf_iterator<char>());
}

#ifdef CORPUS_FORGE_BIN
// Runs the CLI binary through the shell; returns the exit code and
// captures stdout into out_capture when given.
inline int run_cli(const std::string& args, const fs::path& scratch,
                   std::string* out_capture = nullptr,
                   std::string* err_capture = nullptr) {
  fs::path out_file = scratch / "cli_stdout.txt";
  fs::path err_file = scratch / "cli_stderr.txt";
  std::string cmd = std::string(CORPUS_FORGE_BIN) + " " + args + " >" +
                    out_file.string() + " 2>" + err_file.string();
  int status = std::system(cmd.c_str());
  if (out_capture) *out_capture = read_text(out_file);
  if (err_capture) *err_capture = read_text(err_file);
  if (status < 0) return -1;
  return (status >> 8) & 0xff;
}
#endif  // CORPUS_FORGE_BIN

}  // namespace test_util
