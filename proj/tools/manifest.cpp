#include "manifest.hpp"

#include <json.hpp>

#include <fstream>

#include "termcast/digest.hpp"
#include "termcast/errors.hpp"

namespace termcast::cli {

using json = nlohmann::json;

ManifestBuilder::ManifestBuilder(int argc, char** argv)
    : started_(std::chrono::steady_clock::now()) {
  for (int i = 0; i < argc; ++i) {
    if (i) manifest_.command_line += ' ';
    manifest_.command_line += argv[i];
  }
}

void ManifestBuilder::set_config_digest(const std::string& resolved_config_json) {
  manifest_.config_digest = fnv1a64_hex(resolved_config_json);
}

void ManifestBuilder::add_seed(const std::string& name, std::uint64_t value) {
  manifest_.seeds[name] = value;
}

void ManifestBuilder::add_input(const std::string& path) {
  manifest_.inputs[path] = digest_file(path);
}

void ManifestBuilder::add_output(const std::string& path) {
  manifest_.outputs[path] = digest_file(path);
}

void ManifestBuilder::write(const std::string& path) {
  manifest_.duration_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
  json doc{{"command_line", manifest_.command_line},
           {"config_digest", manifest_.config_digest},
           {"seeds", manifest_.seeds},
           {"inputs", manifest_.inputs},
           {"outputs", manifest_.outputs},
           {"duration_seconds", manifest_.duration_seconds}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write manifest: " + path);
  out << doc.dump(2) << '\n';
}

}  // namespace termcast::cli
