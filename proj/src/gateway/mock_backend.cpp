// Copyright 2026 The Chartforge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "gateway/mock_backend.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <thread>

#include "common/error.hpp"
#include "gateway/wire.hpp"

namespace chartforge::gateway {
namespace {

std::string describe(const Json& j) { return j.dump(); }

MockRule parse_rule(const Json& item, std::size_t position) {
  auto where = "mock rule " + std::to_string(position);
  if (!item.is_object()) fail(ErrorCode::kConfig, where + ": expected an object");
  MockRule rule;
  if (item.contains("match")) {
    const Json& match = item["match"];
    if (!match.is_object()) fail(ErrorCode::kConfig, where + ": match must be an object");
    if (match.contains("substring")) rule.substring = match["substring"].get<std::string>();
    if (match.contains("index")) rule.index = match["index"].get<long long>();
    if (match.contains("regex")) {
      rule.regex_source = match["regex"].get<std::string>();
      try {
        rule.regex.emplace(*rule.regex_source, std::regex::ECMAScript);
      } catch (const std::regex_error& e) {
        fail(ErrorCode::kConfig, where + ": bad regex: " + e.what());
      }
    }
  }
  if (!item.contains("respond") || !item["respond"].is_object()) {
    fail(ErrorCode::kConfig, where + ": respond object required");
  }
  const Json& respond = item["respond"];
  if (respond.contains("texts")) rule.texts = respond["texts"].get<std::vector<std::string>>();
  if (respond.contains("vectors")) {
    rule.vectors = respond["vectors"].get<std::vector<std::vector<double>>>();
  }
  if (respond.contains("http_status")) rule.http_status = respond["http_status"].get<int>();
  rule.delay_ms = respond.value("delay_ms", 0);
  const std::string select = respond.value("select", "cursor");
  if (select != "cursor" && select != "seed") fail(ErrorCode::kConfig, where + ": select must be cursor or seed");
  rule.select_by_seed = select == "seed";
  int kinds = (rule.texts.empty() ? 0 : 1) + (rule.vectors.empty() ? 0 : 1) + (rule.http_status ? 1 : 0);
  if (kinds != 1) {
    fail(ErrorCode::kConfig, where + ": respond needs exactly one of texts, vectors, http_status: " +
                                 describe(respond));
  }
  if (item.contains("route")) {
    rule.route = item["route"].get<std::string>();
    if (*rule.route != "chat" && *rule.route != "embed") {
      fail(ErrorCode::kConfig, where + ": route must be chat or embed");
    }
  }
  rule.repeat = item.value("repeat", 0);
  if (rule.repeat < 0) fail(ErrorCode::kConfig, where + ": repeat must be >= 0");
  return rule;
}

bool rule_serves(const MockRule& rule, std::string_view route) {
  if (rule.route) return *rule.route == route;
  if (!rule.texts.empty()) return route == "chat";
  if (!rule.vectors.empty()) return route == "embed";
  return true;
}

std::string chat_match_text(const Json& request) {
  std::string out;
  if (!request.contains("messages")) return out;
  for (const Json& m : request["messages"]) {
    if (!m.contains("content")) continue;
    const Json& content = m["content"];
    if (content.is_string()) {
      out += content.get<std::string>();
      out.push_back('\n');
      continue;
    }
    for (const Json& part : content) {
      if (part.value("type", "") == "text") {
        out += part.value("text", "");
      } else if (part.contains("image_url")) {
        if (auto image = wire::parse_data_url(part["image_url"].value("url", ""))) {
          out.append(image->data.begin(), image->data.end());
        }
      }
      out.push_back('\n');
    }
  }
  return out;
}

std::string embed_input_text(const Json& input) {
  std::string s = input.get<std::string>();
  if (auto image = wire::parse_data_url(s)) return std::string(image->data.begin(), image->data.end());
  return s;
}

std::string expand(const std::string& text, long long seed, int choice, const std::smatch& groups) {
  std::string out;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '{') {
      const std::size_t close = text.find('}', i);
      if (close != std::string::npos) {
        const std::string key = text.substr(i + 1, close - i - 1);
        if (key == "seed") {
          out += std::to_string(seed);
          i = close;
          continue;
        }
        if (key == "n") {
          out += std::to_string(choice);
          i = close;
          continue;
        }
        if (key.size() == 1 && key[0] >= '1' && key[0] <= '9') {
          const std::size_t g = static_cast<std::size_t>(key[0] - '0');
          if (g < groups.size()) out += groups[g].str();
          i = close;
          continue;
        }
      }
    }
    out.push_back(text[i]);
  }
  return out;
}

HttpReply error_reply(int status, const std::string& message) {
  return {status, Json{{"error", {{"message", message}}}}.dump()};
}

}  // namespace

MockScript MockScript::parse(const Json& doc) {
  if (!doc.is_array()) fail(ErrorCode::kConfig, "mock script must be a JSON list of rules");
  MockScript script;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    try {
      script.rules_.push_back(parse_rule(doc[i], i));
    } catch (const Json::exception& e) {
      fail(ErrorCode::kConfig, "mock rule " + std::to_string(i) + ": " + e.what());
    }
  }
  return script;
}

MockScript MockScript::load(const std::filesystem::path& path) {
  std::string content = read_text_file(path);
  Json doc = Json::parse(content, nullptr, false);
  if (doc.is_discarded()) fail(ErrorCode::kConfig, "mock script is not valid JSON: " + path.string());
  return parse(doc);
}

MockBackend::MockBackend(MockScript script, MockOptions options) : options_(std::move(options)) {
  for (const MockRule& rule : script.rules()) rules_.push_back({rule, 0, 0});
  if (!options_.call_log.empty() && options_.call_log.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(options_.call_log.parent_path(), ec);
  }
}

std::vector<double> MockBackend::fallback_vector(std::string_view content, int dim) {
  std::vector<double> v;
  v.reserve(static_cast<std::size_t>(dim));
  for (int block = 0; static_cast<int>(v.size()) < dim; ++block) {
    std::string seed(content);
    seed += "#" + std::to_string(block);
    std::string hex = sha256_hex(std::string_view(seed));
    for (std::size_t i = 0; i + 4 <= hex.size() && static_cast<int>(v.size()) < dim; i += 4) {
      double raw = static_cast<double>(std::stoul(hex.substr(i, 4), nullptr, 16));
      v.push_back(raw / 32767.5 - 1.0);
    }
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm > 0) {
    for (double& x : v) x /= norm;
  }
  return v;
}

MockBackend::RuleState* MockBackend::find_rule(std::string_view route, const std::string& match_text,
                                               long long index, std::smatch* groups) {
  for (RuleState& state : rules_) {
    const MockRule& rule = state.rule;
    if (!rule_serves(rule, route)) continue;
    if (rule.repeat > 0 && state.uses >= rule.repeat) continue;
    if (rule.index && *rule.index != index) continue;
    if (rule.substring && match_text.find(*rule.substring) == std::string::npos) continue;
    if (rule.regex) {
      std::smatch m;
      if (!std::regex_search(match_text, m, *rule.regex)) continue;
      if (groups) *groups = std::move(m);
    }
    return &state;
  }
  return nullptr;
}

HttpReply MockBackend::handle_chat(const Json& request, long long index, int& delay_ms) {
  const std::string match_text = chat_match_text(request);
  const int n = request.value("n", 1);
  std::smatch groups;
  RuleState* state = find_rule("chat", match_text, index, &groups);
  const long long seed = request.contains("seed") && request["seed"].is_number_integer() ? request["seed"].get<long long>() : 0;
  if (state && state->rule.http_status) {
    ++state->uses;
    delay_ms = state->rule.delay_ms;
    return error_reply(*state->rule.http_status, "scripted failure");
  }
  Json choices = Json::array();
  if (!state) {
    if (options_.strict) {
      fail(ErrorCode::kScriptedGap, "no mock rule matches chat request #" + std::to_string(index));
    }
    for (int i = 0; i < n; ++i) {
      choices.push_back({{"index", i}, {"message", {{"role", "assistant"}, {"content", ""}}}});
    }
  } else {
    ++state->uses;
    delay_ms = state->rule.delay_ms;
    const auto& texts = state->rule.texts;
    const auto size = static_cast<long long>(texts.size());
    for (int i = 0; i < n; ++i) {
      long long pick;
      if (state->rule.select_by_seed) {
        pick = ((seed % size) + size + i) % size;
      } else {
        pick = state->cursor++ % size;
      }
      const std::string text = expand(texts[static_cast<std::size_t>(pick)], seed, i, groups);
      choices.push_back({{"index", i}, {"message", {{"role", "assistant"}, {"content", text}}}});
    }
  }
  return {200, Json{{"object", "chat.completion"}, {"choices", std::move(choices)}}.dump()};
}

HttpReply MockBackend::handle_embed(const Json& request, long long index, int& delay_ms) {
  if (!request.contains("input") || !request["input"].is_array()) {
    return error_reply(400, "input array required");
  }
  std::vector<std::string> inputs;
  for (const Json& in : request["input"]) inputs.push_back(embed_input_text(in));

  std::vector<RuleState*> matched;
  for (const std::string& text : inputs) {
    RuleState* state = find_rule("embed", text, index);
    if (state && state->rule.http_status) {
      ++state->uses;
      delay_ms = state->rule.delay_ms;
      return error_reply(*state->rule.http_status, "scripted failure");
    }
    matched.push_back(state);
  }
  Json data = Json::array();
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    std::vector<double> vector;
    if (RuleState* state = matched[i]) {
      ++state->uses;
      delay_ms = std::max(delay_ms, state->rule.delay_ms);
      const auto& vectors = state->rule.vectors;
      vector = vectors[static_cast<std::size_t>(state->cursor % static_cast<long long>(vectors.size()))];
      ++state->cursor;
    } else if (options_.strict) {
      fail(ErrorCode::kScriptedGap, "no mock rule matches embedding input " + std::to_string(i) +
                                        " of request #" + std::to_string(index));
    } else {
      vector = fallback_vector(inputs[i], options_.fallback_dim);
    }
    data.push_back({{"index", i}, {"embedding", std::move(vector)}});
  }
  return {200, Json{{"object", "list"}, {"data", std::move(data)}}.dump()};
}

void MockBackend::append_call_log(std::string_view route, const std::string& body) {
  if (options_.call_log.empty()) return;
  std::ofstream out(options_.call_log, std::ios::app | std::ios::binary);
  out << route << ' ' << sha256_hex(std::string_view(body)) << '\n';
}

HttpReply MockBackend::post(std::string_view route, const std::string& body, const EndpointConfig&) {
  const bool is_chat = route == wire::kChatRoute;
  if (!is_chat && route != wire::kEmbedRoute) return error_reply(404, "unknown route");

  Json request = Json::parse(body, nullptr, false);
  if (request.is_discarded()) return error_reply(400, "request body is not JSON");

  int delay_ms = 0;
  HttpReply reply;
  {
    std::lock_guard lock(mutex_);
    long long index = is_chat ? chat_count_++ : embed_count_++;
    log_.push_back({{"route", is_chat ? "chat" : "embed"}, {"body", request}});
    append_call_log(is_chat ? "chat" : "embed", body);
    reply = is_chat ? handle_chat(request, index, delay_ms) : handle_embed(request, index, delay_ms);
  }

  int now = ++in_flight_;
  int seen = max_in_flight_.load();
  while (now > seen && !max_in_flight_.compare_exchange_weak(seen, now)) {
  }
  if (delay_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
  --in_flight_;
  return reply;
}

MockStats MockBackend::stats() const {
  std::lock_guard lock(mutex_);
  return {chat_count_, embed_count_, max_in_flight_.load()};
}

std::vector<Json> MockBackend::request_log() const {
  std::lock_guard lock(mutex_);
  return log_;
}

long long count_mock_calls(const std::filesystem::path& call_log) {
  std::ifstream in(call_log);
  if (!in) return 0;
  long long lines = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) ++lines;
  }
  return lines;
}

}  // namespace chartforge::gateway
