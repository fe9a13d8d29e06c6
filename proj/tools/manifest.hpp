#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace termcast::cli {

// Reproducibility record written alongside every command's outputs:
// command line, digest of the resolved configuration, seeds, input and
// output content digests, wall-clock duration.
struct RunManifest {
  std::string command_line;
  std::string config_digest;
  std::map<std::string, std::uint64_t> seeds;
  std::map<std::string, std::string> inputs;   // path -> fnv1a64
  std::map<std::string, std::string> outputs;  // path -> fnv1a64
  double duration_seconds = 0.0;
};

class ManifestBuilder {
 public:
  explicit ManifestBuilder(int argc, char** argv);

  void set_config_digest(const std::string& resolved_config_json);
  void add_seed(const std::string& name, std::uint64_t value);
  void add_input(const std::string& path);
  void add_output(const std::string& path);

  // Finalizes the duration and writes JSON to `path`.
  void write(const std::string& path);

 private:
  RunManifest manifest_;
  std::chrono::steady_clock::time_point started_;
};

}  // namespace termcast::cli
