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

// Line-oriented JSON plugin over stdin/stdout.
//
//   stub_plugin [identity|word_reverse]
//
// Text "CRASH" exits without answering; text "GARBAGE" answers with a line
// that is not JSON.

#include <cstdlib>
#include <iostream>
#include <string>

#include "plugin_service.hpp"

int main(int argc, char** argv) {
  using crisisaug::TranslatorMode;
  const TranslatorMode mode = argc > 1 && std::string(argv[1]) == "identity"
                                  ? TranslatorMode::identity
                                  : TranslatorMode::word_reverse;
  std::string line;
  while (std::getline(std::cin, line)) {
    nlohmann::json req;
    try {
      req = nlohmann::json::parse(line);
    } catch (const std::exception& e) {
      std::cout << nlohmann::json{{"ok", false}, {"error", e.what()}}.dump() << std::endl;
      continue;
    }
    const nlohmann::json p = req.value("payload", nlohmann::json::object());
    if (p.contains("text") && p["text"] == "CRASH") return 1;
    if (p.contains("text") && p["text"] == "GARBAGE") {
      std::cout << "this is not json" << std::endl;
      continue;
    }
    std::cout << crisisaug::testing::serve_request(req, mode).dump() << std::endl;
  }
  return 0;
}
