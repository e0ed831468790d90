#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace sanmt {

inline constexpr const char* kArtifactVersion = "0.1.0";

// Resolved configuration of one CLI invocation, written next to its outputs.
// Text form, one entry per line, in the order recorded:
//   sanmt-manifest 1
//   version <artifact version>
//   command <name>
//   option <key> <value>
//   flag <key> <true|false>
//   input <sha256> <path>
struct RunManifest {
  struct Entry {
    std::string key;
    std::string value;
    bool is_flag = false;
  };

  std::string version = kArtifactVersion;
  std::string command;
  std::vector<Entry> options;
  std::vector<std::pair<std::string, std::string>> inputs;  // path, sha256

  void option(std::string key, std::string value);
  void flag(std::string key, bool value);
  // Digests the file now.
  void input(const std::filesystem::path& path);

  // Command line that reproduces the run: command, then --key value pairs
  // and set flags.
  std::vector<std::string> argv() const;

  std::string to_text() const;
  static RunManifest parse(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static RunManifest load(const std::filesystem::path& path);
};

std::string sha256_file(const std::filesystem::path& path);

}  // namespace sanmt
