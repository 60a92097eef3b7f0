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

#include "crisisaug/plugin.hpp"

#include <csignal>
#include <cerrno>
#include <cstring>
#include <string>
#include <vector>

#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include "httplib.h"

#include "crisisaug/error.hpp"

namespace crisisaug {
namespace {

class SubprocessChannel final : public PluginChannel {
 public:
  explicit SubprocessChannel(const std::string& command) {
    std::signal(SIGPIPE, SIG_IGN);
    int to_child[2];
    int from_child[2];
    if (pipe(to_child) != 0) throw BackendError("pipe() failed");
    if (pipe(from_child) != 0) {
      close(to_child[0]);
      close(to_child[1]);
      throw BackendError("pipe() failed");
    }
    pid_ = fork();
    if (pid_ < 0) throw BackendError("fork() failed");
    if (pid_ == 0) {
      dup2(to_child[0], STDIN_FILENO);
      dup2(from_child[1], STDOUT_FILENO);
      close(to_child[0]);
      close(to_child[1]);
      close(from_child[0]);
      close(from_child[1]);
      execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);
    write_fd_ = to_child[1];
    read_fd_ = from_child[0];
  }

  ~SubprocessChannel() override {
    if (write_fd_ >= 0) close(write_fd_);
    if (read_fd_ >= 0) close(read_fd_);
    if (pid_ > 0) {
      int status = 0;
      waitpid(pid_, &status, 0);
    }
  }

  SubprocessChannel(const SubprocessChannel&) = delete;
  SubprocessChannel& operator=(const SubprocessChannel&) = delete;

  nlohmann::json exchange(const nlohmann::json& request) override {
    const std::string line = request.dump() + "\n";
    std::size_t off = 0;
    while (off < line.size()) {
      const ssize_t n = write(write_fd_, line.data() + off, line.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw BackendError(std::string("plugin write failed: ") + std::strerror(errno));
      }
      off += static_cast<std::size_t>(n);
    }
    const std::string reply = read_line();
    try {
      return nlohmann::json::parse(reply);
    } catch (const nlohmann::json::parse_error& e) {
      throw BackendError(std::string("plugin sent malformed JSON: ") + e.what());
    }
  }

 private:
  std::string read_line() {
    for (;;) {
      const std::size_t nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        return line;
      }
      char chunk[4096];
      const ssize_t n = read(read_fd_, chunk, sizeof chunk);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) throw BackendError("plugin closed its output");
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

  pid_t pid_ = -1;
  int write_fd_ = -1;
  int read_fd_ = -1;
  std::string buffer_;
};

class HttpChannel final : public PluginChannel {
 public:
  explicit HttpChannel(std::string_view url) {
    // http://host[:port][/path]
    std::string rest(url.substr(7));
    const std::size_t slash = rest.find('/');
    path_ = slash == std::string::npos ? "/" : rest.substr(slash);
    const std::string authority = rest.substr(0, slash);
    const std::size_t colon = authority.rfind(':');
    host_ = colon == std::string::npos ? authority : authority.substr(0, colon);
    port_ = colon == std::string::npos ? 80 : std::stoi(authority.substr(colon + 1));
    if (host_.empty()) throw ConfigError("plugin URL lacks a host: " + std::string(url));
  }

  nlohmann::json exchange(const nlohmann::json& request) override {
    httplib::Client client(host_, port_);
    client.set_read_timeout(600, 0);
    const auto res = client.Post(path_, request.dump(), "application/json");
    if (!res) {
      throw BackendError("plugin HTTP request failed: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
      throw BackendError("plugin HTTP status " + std::to_string(res->status));
    }
    try {
      return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::parse_error& e) {
      throw BackendError(std::string("plugin sent malformed JSON: ") + e.what());
    }
  }

 private:
  std::string host_;
  int port_ = 80;
  std::string path_;
};

std::vector<double> to_doubles(const nlohmann::json& j, std::string_view what) {
  if (!j.is_array()) throw BackendError(std::string(what) + ": expected an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) throw BackendError(std::string(what) + ": non-numeric element");
    out.push_back(v.get<double>());
  }
  return out;
}

std::string to_string_result(const nlohmann::json& j, std::string_view what) {
  if (!j.is_string()) throw BackendError(std::string(what) + ": expected a string");
  return j.get<std::string>();
}

}  // namespace

std::shared_ptr<PluginChannel> open_plugin_channel(std::string_view endpoint) {
  if (endpoint.starts_with("cmd:")) {
    return std::make_shared<SubprocessChannel>(std::string(endpoint.substr(4)));
  }
  if (endpoint.starts_with("http://")) return std::make_shared<HttpChannel>(endpoint);
  throw ConfigError("unsupported plugin endpoint '" + std::string(endpoint) +
                    "' (expected cmd:... or http://...)");
}

PluginClient::PluginClient(std::shared_ptr<PluginChannel> channel)
    : channel_(std::move(channel)) {}

PluginClient::PluginClient(std::string_view endpoint)
    : channel_(open_plugin_channel(endpoint)) {}

nlohmann::json PluginClient::call(std::string_view op, nlohmann::json payload,
                                  std::uint64_t seed) const {
  nlohmann::json request = {{"op", op}, {"payload", std::move(payload)}, {"seed", seed}};
  nlohmann::json response;
  {
    std::lock_guard lock(mutex_);
    response = channel_->exchange(request);
  }
  if (!response.is_object() || !response.contains("ok") || !response["ok"].is_boolean()) {
    throw BackendError("plugin response lacks boolean 'ok'");
  }
  if (!response["ok"].get<bool>()) {
    const auto it = response.find("error");
    const std::string msg =
        it != response.end() && it->is_string() ? it->get<std::string>() : "unspecified error";
    throw BackendError("plugin op '" + std::string(op) + "' failed: " + msg);
  }
  if (!response.contains("result")) throw BackendError("plugin response lacks 'result'");
  return response["result"];
}

nlohmann::json image_to_json(const Image& img) {
  return {{"height", img.height()}, {"width", img.width()}, {"rgb8", to_rgb8(img)}};
}

Image image_from_json(const nlohmann::json& j) {
  try {
    const auto h = j.at("height").get<std::size_t>();
    const auto w = j.at("width").get<std::size_t>();
    const auto rgb = j.at("rgb8").get<std::vector<std::uint8_t>>();
    return from_rgb8(h, w, rgb);
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(std::string("malformed image payload: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw BackendError(std::string("malformed image payload: ") + e.what());
  }
}

std::string PluginTranslator::translate(std::string_view text, std::string_view source_lang,
                                        std::string_view target_lang) const {
  return to_string_result(
      client_->call("translate", {{"text", text}, {"source", source_lang}, {"target", target_lang}}),
      "translate");
}

std::string PluginParaphraser::paraphrase(std::string_view text, std::string_view prompt_template,
                                          std::uint64_t seed) const {
  return to_string_result(
      client_->call("paraphrase", {{"text", text}, {"template", prompt_template}}, seed),
      "paraphrase");
}

std::string PluginCaptioner::caption(const Image& image) const {
  return to_string_result(client_->call("caption", {{"image", image_to_json(image)}}), "caption");
}

Image PluginImageGen::generate(const Image& image, std::string_view prompt, double strength,
                               std::uint64_t seed) const {
  return image_from_json(client_->call(
      "generate_image",
      {{"image", image_to_json(image)}, {"prompt", prompt}, {"strength", strength}}, seed));
}

PluginEmbedder::PluginEmbedder(std::shared_ptr<PluginClient> client) : client_(std::move(client)) {
  dim_ = to_doubles(client_->call("embed", {{"text", "probe"}}), "embed").size();
  if (dim_ < 2) throw BackendError("plugin embedding dimension must be >= 2");
}

std::vector<double> PluginEmbedder::embed(std::string_view text) const {
  if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) {
    throw std::invalid_argument("empty input");
  }
  auto v = to_doubles(client_->call("embed", {{"text", text}}), "embed");
  if (v.size() != dim_) throw BackendError("plugin embedding dimension changed");
  return v;
}

std::vector<std::string> PluginLmScorer::tokenize(std::string_view text) const {
  const auto r = client_->call("tokenize", {{"text", text}});
  if (!r.is_array()) throw BackendError("tokenize: expected an array");
  std::vector<std::string> out;
  for (const auto& t : r) out.push_back(to_string_result(t, "tokenize"));
  return out;
}

std::vector<double> PluginLmScorer::score(const std::vector<std::string>& tokens) const {
  auto v = to_doubles(client_->call("score", {{"tokens", tokens}}), "score");
  if (v.size() != tokens.size()) throw BackendError("score: one value per token expected");
  return v;
}

std::vector<double> PluginImageEmbedder::embed(const Image& image) const {
  auto v = to_doubles(client_->call("embed_image", {{"image", image_to_json(image)}}),
                      "embed_image");
  if (v.size() != dim_) throw BackendError("plugin image embedding has the wrong dimension");
  return v;
}

}  // namespace crisisaug
