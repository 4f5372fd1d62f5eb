#include <atomic>
#include <chrono>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include <gtest/gtest.h>
#include <httplib.h>
#include <json.hpp>

#include "beamjudge/remote_scorer.hpp"
#include "support/synthetic.hpp"

namespace bj = beamjudge;

namespace {

// Deterministic score in [0,1] derived from the SQL text, so responses can be
// matched back to the request order.
double echo_score(const std::string& sql) { return static_cast<double>(sql.size() % 101) / 100.0; }

class StubService {
 public:
  using Handler = std::function<void(const nlohmann::json& pairs, httplib::Response&)>;

  StubService() {
    server_.Get("/v1/health", [this](const httplib::Request&, httplib::Response& res) {
      res.set_content(health_body_, "application/json");
    });
    server_.Post("/v1/score", [this](const httplib::Request& req, httplib::Response& res) {
      ++posts_;
      last_body_ = req.body;
      handler_(nlohmann::json::parse(req.body)["pairs"], res);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubService() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  void on_score(Handler h) { handler_ = std::move(h); }
  void health(std::string body) { health_body_ = std::move(body); }
  int posts() const { return posts_; }
  const std::string& last_body() const { return last_body_; }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  Handler handler_ = [](const nlohmann::json&, httplib::Response& res) { res.status = 500; };
  std::string health_body_ = R"({"status":"ok"})";
  std::atomic<int> posts_{0};
  std::string last_body_;
};

std::vector<bj::ScoreRequest> three_requests() {
  return {{"how many singers", "SELECT count(*) FROM singer", std::nullopt},
          {"names", "SELECT name FROM singer", std::string("singer: id, name")},
          {"ages over 20", "SELECT age FROM singer WHERE age > 20", std::nullopt}};
}

bj::RemoteScorerOptions fast_options(int retries = 3) {
  bj::RemoteScorerOptions o;
  o.retries = retries;
  o.initial_backoff = std::chrono::milliseconds(1);
  o.connect_timeout = std::chrono::milliseconds(500);
  o.read_timeout = std::chrono::milliseconds(2000);
  return o;
}

void reply_scores(httplib::Response& res, const nlohmann::json& scores) {
  res.set_content(nlohmann::json{{"scores", scores}}.dump(), "application/json");
}

}  // namespace

TEST(RemoteScorer, FixedStubRoundTrip) {
  StubService stub;
  stub.on_score([](const nlohmann::json& pairs, httplib::Response& res) {
    reply_scores(res, std::vector<double>(pairs.size(), 0.5));
  });
  const auto out = bj::remote_score_batch(three_requests(), stub.url(), fast_options());
  ASSERT_EQ(out.size(), 3u);
  for (const auto& r : out) EXPECT_EQ(r.score, 0.5);

  const auto sent = nlohmann::json::parse(stub.last_body());
  ASSERT_EQ(sent["pairs"].size(), 3u);
  EXPECT_EQ(sent["pairs"][0]["utterance"], "how many singers");
  EXPECT_FALSE(sent["pairs"][0].contains("schema"));
  EXPECT_EQ(sent["pairs"][1]["schema"], "singer: id, name");
}

TEST(RemoteScorer, ResponsesKeepRequestOrder) {
  StubService stub;
  stub.on_score([](const nlohmann::json& pairs, httplib::Response& res) {
    std::vector<double> scores;
    for (const auto& p : pairs) scores.push_back(echo_score(p["sql"].get<std::string>()));
    reply_scores(res, scores);
  });
  const auto reqs = three_requests();
  const auto out = bj::remote_score_batch(reqs, stub.url(), fast_options());
  for (std::size_t i = 0; i < reqs.size(); ++i) EXPECT_EQ(out[i].score, echo_score(reqs[i].sql));
}

TEST(RemoteScorer, OutOfRangeScoreIsProtocolError) {
  StubService stub;
  stub.on_score([](const nlohmann::json& pairs, httplib::Response& res) {
    res.set_content(R"({"scores":[0.5,1.2,0.1]})", "application/json");
    (void)pairs;
  });
  try {
    bj::remote_score_batch(three_requests(), stub.url(), fast_options());
    FAIL() << "expected ProtocolError";
  } catch (const bj::ProtocolError& e) {
    EXPECT_STREQ(e.what(), "score out of range: 1.2");
  }
}

TEST(RemoteScorer, MalformedAndErrorResponses) {
  StubService stub;
  stub.on_score([](const nlohmann::json&, httplib::Response& res) { res.set_content("<html>oops", "text/html"); });
  try {
    bj::remote_score_batch(three_requests(), stub.url(), fast_options());
    FAIL();
  } catch (const bj::ProtocolError& e) {
    EXPECT_NE(std::string(e.what()).find("<html>oops"), std::string::npos);
  }

  stub.on_score([](const nlohmann::json&, httplib::Response& res) { reply_scores(res, {0.5}); });
  EXPECT_THROW(bj::remote_score_batch(three_requests(), stub.url(), fast_options()), bj::ProtocolError);

  stub.on_score([](const nlohmann::json&, httplib::Response& res) { reply_scores(res, {0.5, "x", 0.1}); });
  EXPECT_THROW(bj::remote_score_batch(three_requests(), stub.url(), fast_options()), bj::ProtocolError);

  stub.on_score([](const nlohmann::json&, httplib::Response& res) {
    res.status = 400;
    res.set_content(R"({"error":"bad pair"})", "application/json");
  });
  try {
    bj::remote_score_batch(three_requests(), stub.url(), fast_options());
    FAIL();
  } catch (const bj::ProtocolError& e) {
    EXPECT_NE(std::string(e.what()).find("400"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("bad pair"), std::string::npos);
  }
  // HTTP-level answers are not retried.
  EXPECT_EQ(stub.posts(), 4);
}

TEST(RemoteScorer, HealthCheck) {
  StubService stub;
  EXPECT_NO_THROW(bj::health_check(stub.url(), fast_options()));
  stub.health(R"({"status":"loading"})");
  EXPECT_THROW(bj::health_check(stub.url(), fast_options()), bj::ProtocolError);
}

TEST(RemoteScorer, UnreachableEndpointFailsAfterRetries) {
  int port;
  {
    // Bind, serve and shut down so the port is known to be closed.
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
    std::thread t([&] { probe.listen_after_bind(); });
    probe.wait_until_ready();
    probe.stop();
    t.join();
  }
  const std::string url = "http://127.0.0.1:" + std::to_string(port);
  try {
    bj::remote_score_batch(three_requests(), url, fast_options());
    FAIL() << "expected TransportError";
  } catch (const bj::TransportError& e) {
    EXPECT_NE(std::string(e.what()).find("after 4 attempts"), std::string::npos) << e.what();
  }
  try {
    bj::remote_score_batch(three_requests(), url, fast_options(0));
    FAIL() << "expected TransportError";
  } catch (const bj::TransportError& e) {
    EXPECT_NE(std::string(e.what()).find("after 1 attempts"), std::string::npos) << e.what();
  }
}

TEST(RemoteScorer, EndpointValidation) {
  EXPECT_THROW(bj::RemoteScorer("localhost:8000"), bj::InvalidInput);
  EXPECT_THROW(bj::remote_score_batch({}, "http://127.0.0.1:1", fast_options()), bj::InvalidInput);
  const auto ep = bj::detail::split_endpoint("http://host:9/prefix/");
  EXPECT_EQ(ep.origin, "http://host:9");
  EXPECT_EQ(ep.prefix, "/prefix");
}

TEST(RemoteScorer, AttachScoresThroughStub) {
  StubService stub;
  stub.on_score([](const nlohmann::json& pairs, httplib::Response& res) {
    std::vector<double> scores;
    for (const auto& p : pairs) scores.push_back(echo_score(p["sql"].get<std::string>()));
    reply_scores(res, scores);
  });
  bj::BeamSet set;
  set.entries.push_back(bj::testing::make_entry("1", "SELECT a FROM t", {"SELECT a FROM t", "SELECT bb FROM t"}));
  set.entries.push_back(bj::testing::make_entry("2", "SELECT a FROM t", {"SELECT ccc FROM t"}));
  bj::RemoteScorer scorer(stub.url(), fast_options());
  const auto out = bj::attach_scores(set, scorer, {false, 2});
  EXPECT_EQ(*out.entries[0].candidates[1].score, echo_score("SELECT bb FROM t"));
  EXPECT_EQ(*out.entries[1].candidates[0].score, echo_score("SELECT ccc FROM t"));

  stub.on_score([](const nlohmann::json&, httplib::Response& res) { reply_scores(res, {1.2}); });
  try {
    bj::attach_scores(set, scorer);
    FAIL();
  } catch (const bj::ScoringError& e) {
    EXPECT_TRUE(e.transport_failure());
  }
}
