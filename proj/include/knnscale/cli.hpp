// Copyright 2026 The knnscale Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace knnscale::cli {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kOutputDirEnv = "KNNLAB_OUTPUT_DIR";
inline constexpr const char* kManifestName = "manifest.txt";

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kConfig = 2,
  kDataFile = 3,
  kNumeric = 4,
};

struct KeySpec {
  std::string key;
  std::string default_value;
  std::string help;
};

/// Subcommand names in dispatch order.
const std::vector<std::string>& subcommands();

/// Every key the subcommand accepts, common keys included.
const std::vector<KeySpec>& schema(const std::string& subcommand);

/// Flat key/value configuration for one subcommand. Each value remembers
/// where it came from so that errors can point at it.
class RunConfig {
 public:
  explicit RunConfig(std::string subcommand);

  const std::string& subcommand() const { return subcommand_; }

  /// Throws ConfigError naming the key and origin if the key is unknown.
  void set(const std::string& key, const std::string& value,
           const std::string& origin);

  /// key = value lines; '#' starts a comment. Errors name file and line.
  void merge_file(const std::filesystem::path& path);

  const std::string& text(const std::string& key) const;
  double real(const std::string& key) const;
  long long integer(const std::string& key) const;
  std::size_t count(const std::string& key) const;  // integer >= 0
  std::uint64_t seed(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::vector<double> reals(const std::string& key) const;
  /// Comma list, or 2^lo..2^hi.
  std::vector<std::size_t> sizes(const std::string& key) const;

  /// Sorted (key, value) pairs, i.e. the resolved configuration.
  std::vector<std::pair<std::string, std::string>> resolved() const;

  [[noreturn]] void fail(const std::string& key,
                         const std::string& problem) const;

 private:
  struct Entry {
    std::string value;
    std::string origin;
  };
  std::string subcommand_;
  std::map<std::string, Entry> values_;
};

/// version, subcommand, then the resolved keys.
void write_manifest(const RunConfig& config, const std::filesystem::path& path);

/// Inverse of write_manifest; rejects manifests from another version.
RunConfig read_manifest(const std::filesystem::path& path);

/// Runs a resolved configuration; artifacts go to its output_dir.
void execute(const RunConfig& config, std::ostream& log);

/// Full command line entry point. Returns the process exit code; errors are
/// reported on `err` as "error[<kind>]: <message>".
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace knnscale::cli
