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

// External model adapters.
//
// Wire protocol, one JSON document per line in each direction:
//
//   request:  {"op": "<name>", "payload": {...}, "seed": <uint64>}
//   response: {"ok": true, "result": <value>}
//             {"ok": false, "error": "<message>"}
//
// Ops and payloads:
//   translate       {text, source, target}      -> string
//   paraphrase      {text, template}            -> string
//   caption         {image}                     -> string
//   generate_image  {image, prompt, strength}   -> image
//   embed           {text}                      -> [number]
//   tokenize        {text}                      -> [string]
//   score           {tokens}                    -> [number]
//   embed_image     {image}                     -> [number]
//
// Images travel as {"height": H, "width": W, "rgb8": [H*W*3 ints in 0..255]}.
//
// Endpoints: "cmd:<shell command>" spawns a subprocess and speaks over its
// stdin/stdout; "http://host:port/path" POSTs each request as the body.

#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "crisisaug/backends.hpp"

namespace crisisaug {

class PluginChannel {
 public:
  virtual ~PluginChannel() = default;
  /// Sends one request line and returns the parsed response document.
  /// Throws BackendError on transport failure or malformed responses.
  virtual nlohmann::json exchange(const nlohmann::json& request) = 0;
};

/// Opens a channel for "cmd:..." or "http://..." endpoints.
std::shared_ptr<PluginChannel> open_plugin_channel(std::string_view endpoint);

/// Serializes calls over a channel and unwraps {ok, result | error}.
class PluginClient {
 public:
  explicit PluginClient(std::shared_ptr<PluginChannel> channel);
  explicit PluginClient(std::string_view endpoint);

  /// Returns `result`; throws BackendError carrying the plugin's error text.
  nlohmann::json call(std::string_view op, nlohmann::json payload, std::uint64_t seed = 0) const;

 private:
  std::shared_ptr<PluginChannel> channel_;
  mutable std::mutex mutex_;
};

nlohmann::json image_to_json(const Image& img);
Image image_from_json(const nlohmann::json& j);

class PluginTranslator final : public TranslatorBackend {
 public:
  explicit PluginTranslator(std::shared_ptr<PluginClient> client) : client_(std::move(client)) {}
  Concurrency concurrency() const override { return Concurrency::serialized; }
  std::string translate(std::string_view text, std::string_view source_lang,
                        std::string_view target_lang) const override;

 private:
  std::shared_ptr<PluginClient> client_;
};

class PluginParaphraser final : public ParaphraserBackend {
 public:
  explicit PluginParaphraser(std::shared_ptr<PluginClient> client) : client_(std::move(client)) {}
  Concurrency concurrency() const override { return Concurrency::serialized; }
  std::string paraphrase(std::string_view text, std::string_view prompt_template,
                         std::uint64_t seed) const override;

 private:
  std::shared_ptr<PluginClient> client_;
};

class PluginCaptioner final : public CaptionerBackend {
 public:
  explicit PluginCaptioner(std::shared_ptr<PluginClient> client) : client_(std::move(client)) {}
  Concurrency concurrency() const override { return Concurrency::serialized; }
  std::string caption(const Image& image) const override;

 private:
  std::shared_ptr<PluginClient> client_;
};

class PluginImageGen final : public ImageGenBackend {
 public:
  explicit PluginImageGen(std::shared_ptr<PluginClient> client) : client_(std::move(client)) {}
  Concurrency concurrency() const override { return Concurrency::serialized; }
  Image generate(const Image& image, std::string_view prompt, double strength,
                 std::uint64_t seed) const override;

 private:
  std::shared_ptr<PluginClient> client_;
};

class PluginEmbedder final : public EmbedderBackend {
 public:
  /// Asks the plugin for one embedding to learn the dimension.
  explicit PluginEmbedder(std::shared_ptr<PluginClient> client);
  Concurrency concurrency() const override { return Concurrency::serialized; }
  std::size_t dim() const override { return dim_; }
  std::vector<double> embed(std::string_view text) const override;

 private:
  std::shared_ptr<PluginClient> client_;
  std::size_t dim_ = 0;
};

class PluginLmScorer final : public LmScorerBackend {
 public:
  explicit PluginLmScorer(std::shared_ptr<PluginClient> client) : client_(std::move(client)) {}
  Concurrency concurrency() const override { return Concurrency::serialized; }
  std::vector<std::string> tokenize(std::string_view text) const override;
  std::vector<double> score(const std::vector<std::string>& tokens) const override;

 private:
  std::shared_ptr<PluginClient> client_;
};

class PluginImageEmbedder final : public ImageEmbedderBackend {
 public:
  PluginImageEmbedder(std::shared_ptr<PluginClient> client, std::size_t dim)
      : client_(std::move(client)), dim_(dim) {}
  Concurrency concurrency() const override { return Concurrency::serialized; }
  std::size_t dim() const override { return dim_; }
  std::vector<double> embed(const Image& image) const override;

 private:
  std::shared_ptr<PluginClient> client_;
  std::size_t dim_;
};

}  // namespace crisisaug
