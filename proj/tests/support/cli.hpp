// Copyright 2026 The crisisaug Authors
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

// Runs the command-line tool as a subprocess.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>

#include "support/support.hpp"

namespace testutil {

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

inline std::string shell_quote(const std::string& s) {
  std::string q = "'";
  for (char c : s) {
    if (c == '\'') q += "'\\''";
    else q += c;
  }
  return q + "'";
}

/// Runs `cli args` inside `cwd`, capturing stdout and stderr.
inline CliResult run_cli(const std::string& cli, const std::string& args,
                         const std::filesystem::path& cwd) {
  const auto out = cwd / ".cli_stdout";
  const auto err = cwd / ".cli_stderr";
  const std::string cmd = "cd " + shell_quote(cwd.string()) + " && " + shell_quote(cli) + " " +
                          args + " >" + shell_quote(out.string()) + " 2>" +
                          shell_quote(err.string());
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_file(out);
  r.err = read_file(err);
  std::filesystem::remove(out);
  std::filesystem::remove(err);
  return r;
}

/// Every regular file under `root` keyed by its relative path, except the
/// named files.
inline std::map<std::string, std::string> snapshot(const std::filesystem::path& root,
                                                   const std::string& skip_name = "metadata.json") {
  std::map<std::string, std::string> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
    if (!e.is_regular_file() || e.path().filename() == skip_name) continue;
    files[std::filesystem::relative(e.path(), root).generic_string()] = read_file(e.path());
  }
  return files;
}

}  // namespace testutil
