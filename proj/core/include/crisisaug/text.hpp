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

#include <string>
#include <string_view>
#include <vector>

namespace crisisaug::text {

std::string_view trim(std::string_view s);

/// ASCII lowercase; bytes >= 0x80 (UTF-8 continuation, emoji) pass through.
std::string to_lower(std::string_view s);

/// Splits on ASCII whitespace. Hashtags, mentions, emoji and URLs are tokens.
std::vector<std::string> whitespace_tokens(std::string_view s);

std::string join(const std::vector<std::string>& tokens, std::string_view sep);

/// Tokenizer used by ROUGE-L and the toy text encoder: lowercase, whitespace
/// split, ASCII punctuation stripped except a leading '#' or '@'. Tokens that
/// become empty are dropped.
std::vector<std::string> metric_tokens(std::string_view s);

}  // namespace crisisaug::text
