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

#include <doctest.h>
#include <httplib.h>

#include <thread>

#include "common/error.hpp"
#include "gateway/endpoint.hpp"
#include "gateway/mock_backend.hpp"
#include "gateway/wire.hpp"

using namespace chartforge;
using namespace chartforge::gateway;

namespace {

EndpointConfig config(int max_attempts = 3, int max_parallel = 4) {
  EndpointConfig c;
  c.name = "test";
  c.base_url = "mock:inline";
  c.model_id = "mock-model";
  c.max_parallel = max_parallel;
  c.retry = {max_attempts, 100, 1000};
  return c;
}

struct Fixture {
  std::shared_ptr<MockBackend> mock;
  std::vector<std::chrono::milliseconds> sleeps;
  std::unique_ptr<ModelEndpoint> endpoint;

  Fixture(const char* script, EndpointConfig cfg = config(), MockOptions options = {}) {
    mock = std::make_shared<MockBackend>(MockScript::parse(Json::parse(script)), options);
    endpoint = std::make_unique<ModelEndpoint>(cfg, mock, [this](std::chrono::milliseconds d) {
      sleeps.push_back(d);
    });
  }
};

ChatRequest simple_request(int n = 1, std::string prompt = "hello") {
  ChatRequest r;
  r.messages.push_back(Message::user(std::move(prompt)));
  r.n_samples = n;
  return r;
}

class GarbageTransport : public Transport {
 public:
  HttpReply post(std::string_view, const std::string&, const EndpointConfig&) override {
    return {200, "{\"not\":\"chat\"}"};
  }
};

}  // namespace

TEST_CASE("scripted chat returns n samples") {
  Fixture f(R"([{"match":{},"respond":{"texts":["A"]}}])");
  CHECK(f.endpoint->chat(simple_request(2)) == std::vector<std::string>{"A", "A"});
}

TEST_CASE("texts cycle across calls and substring routing") {
  Fixture f(R"([
    {"match":{"substring":"alpha"},"respond":{"texts":["a1","a2"]}},
    {"match":{"substring":"beta"},"respond":{"texts":["b"]}}
  ])");
  CHECK(f.endpoint->chat(simple_request(1, "alpha?")) == std::vector<std::string>{"a1"});
  CHECK(f.endpoint->chat(simple_request(1, "beta?")) == std::vector<std::string>{"b"});
  CHECK(f.endpoint->chat(simple_request(1, "alpha?")) == std::vector<std::string>{"a2"});
}

TEST_CASE("transient failures are retried with backoff") {
  Fixture f(R"([
    {"match":{},"respond":{"http_status":429},"repeat":2},
    {"match":{},"respond":{"texts":["ok"]}}
  ])");
  CHECK(f.endpoint->chat(simple_request()) == std::vector<std::string>{"ok"});
  auto log = f.endpoint->retry_log();
  REQUIRE(log.size() == 2);
  CHECK(log[0].status == 429);
  CHECK(log[0].delay_ms == 100);
  CHECK(log[1].delay_ms == 200);
  CHECK(f.sleeps.size() == 2);
}

TEST_CASE("exhausted retries surface the last status") {
  Fixture f(R"([{"match":{},"respond":{"http_status":500}}])", config(1));
  try {
    f.endpoint->chat(simple_request());
    FAIL("expected a transport error");
  } catch (const TransportError& e) {
    CHECK(e.code() == ErrorCode::kTransport);
    CHECK(e.last_status() == 500);
  }
  CHECK(f.endpoint->retry_log().empty());
}

TEST_CASE("auth failures are not retried") {
  Fixture f(R"([{"match":{},"respond":{"http_status":401}}])", config(5));
  try {
    f.endpoint->chat(simple_request());
    FAIL("expected an auth error");
  } catch (const TransportError& e) {
    CHECK(e.code() == ErrorCode::kAuth);
  }
  CHECK(f.mock->stats().chat_requests == 1);
}

TEST_CASE("retry delays are nondecreasing and capped") {
  RetryPolicy p{10, 100, 1000};
  int previous = 0;
  for (int r = 1; r < 10; ++r) {
    CHECK(p.delay_ms(r) >= previous);
    CHECK(p.delay_ms(r) <= 1000);
    previous = p.delay_ms(r);
  }
  CHECK(p.delay_ms(5) == 1000);
}

TEST_CASE("malformed responses are protocol errors") {
  ModelEndpoint endpoint(config(), std::make_shared<GarbageTransport>());
  try {
    endpoint.chat(simple_request());
    FAIL("expected protocol error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kProtocol);
  }
}

TEST_CASE("request validation") {
  Fixture f(R"([{"match":{},"respond":{"texts":["x"]}}])");
  ChatRequest empty;
  CHECK_THROWS_AS(f.endpoint->chat(empty), Error);

  ChatRequest system_image;
  system_image.messages.push_back({Role::kSystem, {ImagePart{{1, 2}, "image/png"}}});
  CHECK_THROWS_AS(f.endpoint->chat(system_image), Error);

  ChatRequest bad_top_p = simple_request();
  bad_top_p.sampling.top_p = 0.0;
  CHECK_THROWS_AS(f.endpoint->chat(bad_top_p), Error);
}

TEST_CASE("embeddings preserve order and batch") {
  EndpointConfig cfg = config();
  cfg.embed_batch_size = 2;
  Fixture f(R"([
    {"match":{"substring":"one"},"respond":{"vectors":[[1,0,0]]}},
    {"match":{"substring":"two"},"respond":{"vectors":[[0,1,0]]}},
    {"match":{"substring":"three"},"respond":{"vectors":[[0,0,1]]}}
  ])", cfg);
  auto out = f.endpoint->embed({EmbedInput::text("three"), EmbedInput::text("one"), EmbedInput::text("two")});
  REQUIRE(out.size() == 3);
  CHECK(out[0].values == std::vector<double>{0, 0, 1});
  CHECK(out[1].values == std::vector<double>{1, 0, 0});
  CHECK(out[2].values == std::vector<double>{0, 1, 0});
  CHECK(out[0].model_id == "mock-model");
  CHECK(f.mock->stats().embed_requests == 2);

  CHECK_THROWS_AS(f.endpoint->embed({}), Error);
}

TEST_CASE("image inputs are matched on decoded bytes") {
  Fixture f(R"([{"match":{"substring":"label=v1"},"respond":{"vectors":[[1,2]]}}])");
  std::string payload = "\x89PNG....label=v1....";
  auto out = f.endpoint->embed({EmbedInput::image(Bytes(payload.begin(), payload.end()))});
  CHECK(out[0].values == std::vector<double>{1, 2});
}

TEST_CASE("strict mock reports scripted gaps; lenient mock falls back") {
  MockOptions strict;
  strict.strict = true;
  Fixture s(R"([{"match":{"substring":"known"},"respond":{"texts":["x"]}}])", config(), strict);
  try {
    s.endpoint->chat(simple_request(1, "other?"));
    FAIL("expected scripted gap");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kScriptedGap);
  }

  Fixture lenient(R"([])");
  auto a = lenient.endpoint->embed({EmbedInput::text("same")});
  auto b = lenient.endpoint->embed({EmbedInput::text("same")});
  CHECK(a[0].values == b[0].values);
  CHECK(a[0].values.size() == 16);
  CHECK(lenient.endpoint->chat(simple_request(2)) == std::vector<std::string>{"", ""});
}

TEST_CASE("in-flight requests never exceed max_parallel") {
  Fixture f(R"([{"match":{},"respond":{"texts":["x"],"delay_ms":30}}])", config(3, 2));
  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i) {
    threads.emplace_back([&] { f.endpoint->chat(simple_request()); });
  }
  for (auto& t : threads) t.join();
  CHECK(f.mock->stats().max_in_flight <= 2);
  CHECK(f.mock->stats().chat_requests == 8);
}

TEST_CASE("image parts travel as data URLs") {
  ChatRequest r;
  r.messages.push_back({Role::kUser, {std::string("describe"), ImagePart{{0xAB, 0xCD}, "image/png"}}});
  Json body = wire::chat_request_body("m", r);
  auto url = body["messages"][0]["content"][1]["image_url"]["url"].get<std::string>();
  CHECK(url.starts_with("data:image/png;base64,"));
  auto back = wire::parse_data_url(url);
  REQUIRE(back);
  CHECK(back->data == Bytes{0xAB, 0xCD});
}

TEST_CASE("HTTP transport round trip against a served mock") {
  auto mock = std::make_shared<MockBackend>(MockScript::parse(Json::parse(
      R"([{"match":{"substring":"ping"},"respond":{"texts":["pong"]}},
          {"match":{},"respond":{"vectors":[[0.5,0.5]]}}])")));
  httplib::Server server;
  std::string seen_auth;
  auto handler = [&](const httplib::Request& req, httplib::Response& res) {
    seen_auth = req.get_header_value("Authorization");
    std::string route = req.path.substr(std::string("/v1").size());
    HttpReply reply = mock->post(route, req.body, EndpointConfig{});
    res.status = reply.status;
    res.set_content(reply.body, "application/json");
  };
  server.Post("/v1/chat/completions", handler);
  server.Post("/v1/embeddings", handler);
  int port = server.bind_to_any_port("127.0.0.1");
  std::thread serve([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  EndpointConfig cfg = config();
  cfg.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1/";
  cfg.auth_token = "secret";
  cfg.timeout_s = 5;
  ModelEndpoint endpoint(cfg, std::make_shared<HttpTransport>());
  CHECK(endpoint.chat(simple_request(1, "ping")) == std::vector<std::string>{"pong"});
  CHECK(endpoint.embed({EmbedInput::text("x")})[0].values == std::vector<double>{0.5, 0.5});
  CHECK(seen_auth == "Bearer secret");

  server.stop();
  serve.join();

  // Nothing listens any more: no response at all, retried, then transport error.
  cfg.retry = {2, 1, 1};
  ModelEndpoint dead(cfg, std::make_shared<HttpTransport>(), [](std::chrono::milliseconds) {});
  try {
    dead.chat(simple_request());
    FAIL("expected transport error");
  } catch (const TransportError& e) {
    CHECK(e.last_status() == 0);
  }
  CHECK(dead.retry_log().size() == 1);
}
