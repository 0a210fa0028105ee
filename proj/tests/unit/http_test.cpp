#include <gtest/gtest.h>

#include <cstdlib>

#include "httplib.h"
#include "json.hpp"
#include "qwerty/error.hpp"
#include "qwerty/service.hpp"
#include "support/fixtures.hpp"

namespace qwerty {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

class HttpTest : public ::testing::Test {
 protected:
  void SetUp() override {
    ::unsetenv("QWERTY_MODEL_ADDR");
    ServiceConfig config;
    config.max_upload_bytes = 1u << 20;
    service_ = std::make_unique<Service>(config, [this] { return now_; });
    server_ = std::make_unique<HttpServer>(*service_, HttpServerOptions{"127.0.0.1", 0, std::chrono::seconds(0)});
    const int port = server_->start();
    ASSERT_GT(port, 0);
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port);
    client_->set_read_timeout(30, 0);
  }
  void TearDown() override {
    client_.reset();
    server_->stop();
  }

  json upload_text(const std::string& text, const std::string& query = "filename=s.txt") {
    auto res = client_->Post("/upload?" + query, text, "text/plain");
    EXPECT_TRUE(res);
    EXPECT_EQ(res->status, 200) << res->body;
    return json::parse(res->body);
  }

  static void expect_error(const httplib::Result& res, int status, const std::string& code) {
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, status) << res->body;
    const json body = json::parse(res->body);
    EXPECT_EQ(body["code"], code) << res->body;
    EXPECT_TRUE(body["message"].is_string());
  }

  TimePoint now_ = TimePoint{} + std::chrono::hours(500000);
  std::unique_ptr<Service> service_;
  std::unique_ptr<HttpServer> server_;
  std::unique_ptr<httplib::Client> client_;
};

TEST(HttpStatus, Mapping) {
  EXPECT_EQ(http_status_for(ErrorCode::kBadRequest), 400);
  EXPECT_EQ(http_status_for(ErrorCode::kInvalidArgument), 400);
  EXPECT_EQ(http_status_for(ErrorCode::kNotFound), 404);
  EXPECT_EQ(http_status_for(ErrorCode::kPayloadTooLarge), 413);
  EXPECT_EQ(http_status_for(ErrorCode::kUnsupportedFormat), 415);
  EXPECT_EQ(http_status_for(ErrorCode::kEmptyDocument), 422);
  EXPECT_EQ(http_status_for(ErrorCode::kMalformedDocx), 422);
  EXPECT_EQ(http_status_for(ErrorCode::kTooManyUploads), 429);
  EXPECT_EQ(http_status_for(ErrorCode::kAnalyzerUnavailable), 503);
  EXPECT_EQ(http_status_for(ErrorCode::kStorageError), 500);
}

TEST_F(HttpTest, ChatEndpoint) {
  auto res = client_->Post("/chat", json{{"text", testing::kWarehouseScene}}.dump(), "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  const json v = json::parse(res->body);
  EXPECT_EQ(v["rating"], "18+");
  EXPECT_EQ(v["label"], "violence");
  EXPECT_FALSE(v["why"].get<std::string>().empty());
  EXPECT_FALSE(v["anchors"].empty());

  res = client_->Post("/chat", json{{"text", "Anna waters the plants."}}.dump(), "application/json");
  EXPECT_EQ(json::parse(res->body)["rating"], "0+");

  expect_error(client_->Post("/chat", json{{"text", std::string(2400, 'a')}}.dump(), "application/json"), 413,
               "PayloadTooLarge");
  expect_error(client_->Post("/chat", json{{"text", ""}}.dump(), "application/json"), 400, "BadRequest");
  expect_error(client_->Post("/chat", "not json", "application/json"), 400, "BadRequest");
  expect_error(client_->Post("/chat", json{{"txt", "x"}}.dump(), "application/json"), 400, "BadRequest");
  expect_error(client_->Post("/chat", json{{"text", 5}}.dump(), "application/json"), 400, "BadRequest");
}

TEST_F(HttpTest, UploadRawAndMultipart) {
  const json report = upload_text(testing::case_study_document());
  EXPECT_EQ(report["overall_rating"], "18+");
  EXPECT_EQ(report["timeline"].size(), 3u);
  EXPECT_EQ(report["statistics"]["total_sentences"], 3);

  httplib::MultipartFormDataItems items = {{"file", testing::case_study_document(), "case_study.txt", "text/plain"}};
  auto res = client_->Post("/upload", items);
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200) << res->body;
  EXPECT_EQ(json::parse(res->body)["overall_rating"], "18+");

  httplib::MultipartFormDataItems wrong = {{"document", "x", "a.txt", "text/plain"}};
  expect_error(client_->Post("/upload", wrong), 400, "BadRequest");
}

TEST_F(HttpTest, UploadErrorBodies) {
  expect_error(client_->Post("/upload?filename=e.txt", "", "text/plain"), 422, "EmptyDocument");
  expect_error(client_->Post("/upload?filename=a.pdf", "%PDF-1.7", "application/pdf"), 415, "UnsupportedFormat");
  expect_error(client_->Post("/upload?filename=a.docx", "PK nope", "application/octet-stream"), 422, "MalformedDocx");
  expect_error(client_->Post("/upload?filename=a.txt&format=rtf", "x", "text/plain"), 400, "BadRequest");
  expect_error(client_->Post("/upload?filename=a.txt&analyzer=gpt", "x", "text/plain"), 400, "BadRequest");
  expect_error(client_->Post("/upload?filename=a.txt&analyzer=model", "x", "text/plain"), 503, "AnalyzerUnavailable");
  expect_error(client_->Post("/upload?filename=a.txt", std::string((1u << 20) + 10, 'x'), "text/plain"), 413,
               "PayloadTooLarge");
  expect_error(client_->Post("/upload?filename=a.txt", std::string((3u << 20), 'x'), "text/plain"), 413,
               "PayloadTooLarge");
}

TEST_F(HttpTest, GoldenReportKeysAndValues) {
  const std::string doc = testing::neutral_document(394, testing::golden_flags());
  auto res = client_->Post("/upload?filename=golden.txt", doc, "text/plain");
  ASSERT_TRUE(res);
  const ordered_json report = ordered_json::parse(res->body);
  std::vector<std::string> keys;
  for (const auto& [k, _] : report.items()) keys.push_back(k);
  EXPECT_EQ(std::vector<std::string>(keys.begin(), keys.begin() + 4),
            (std::vector<std::string>{"file_id", "overall_rating", "summary", "statistics"}));
  EXPECT_EQ(report["overall_rating"], "16+");
  EXPECT_TRUE(report["summary"].get<std::string>().starts_with("Found 12 problematic sentences"));
  EXPECT_EQ(report["statistics"]["total_sentences"], 394);
  EXPECT_EQ(report["statistics"]["problematic_sentences"], 12);
  const ordered_json expected_violations = ordered_json::parse(
      R"({"violence": 5, "profanity": 3, "sexual_content": 2, "drugs_alcohol": 1, "fear_elements": 1})");
  EXPECT_EQ(report["statistics"]["violations"].dump(), expected_violations.dump());
}

TEST_F(HttpTest, ReportProgressAndIdempotence) {
  const json report = upload_text(testing::case_study_document());
  const std::string id = report["file_id"];
  auto a = client_->Get("/report/" + id);
  auto b = client_->Get("/report/" + id);
  ASSERT_TRUE(a && b);
  EXPECT_EQ(a->status, 200);
  EXPECT_EQ(a->body, b->body);
  EXPECT_EQ(json::parse(a->body), report);

  auto p = client_->Get("/progress/" + id);
  ASSERT_TRUE(p);
  EXPECT_EQ(json::parse(p->body), (json{{"file_id", id}, {"completed", 3}, {"total", 3}, {"done", true}}));

  expect_error(client_->Get("/report/missing"), 404, "NotFound");
  expect_error(client_->Get("/progress/missing"), 404, "NotFound");
  expect_error(client_->Get("/no/such/route"), 404, "NotFound");
}

TEST_F(HttpTest, AsyncUpload) {
  auto res = client_->Post("/upload?filename=s.txt&async=true", testing::neutral_document(40, {}), "text/plain");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 202);
  const std::string id = json::parse(res->body)["file_id"];
  json p;
  for (int i = 0; i < 500; ++i) {
    p = json::parse(client_->Get("/progress/" + id)->body);
    if (p["done"]) break;
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  EXPECT_EQ(p["done"], true);
  EXPECT_EQ(p["completed"], 40);
  EXPECT_FALSE(p.contains("error"));
  EXPECT_EQ(json::parse(client_->Get("/report/" + id)->body)["statistics"]["total_sentences"], 40);

  res = client_->Post("/upload?filename=bad.docx&async=1", "garbage", "application/octet-stream");
  const std::string bad = json::parse(res->body)["file_id"];
  service_->wait_idle();
  p = json::parse(client_->Get("/progress/" + bad)->body);
  EXPECT_EQ(p["done"], true);
  EXPECT_EQ(p["error"]["code"], "MalformedDocx");
  expect_error(client_->Get("/report/" + bad), 422, "MalformedDocx");
}

TEST_F(HttpTest, OverrideReanalyzeSaveAudit) {
  const json report = upload_text(testing::case_study_document());
  const std::string id = report["file_id"];
  const std::string base = "/report/" + id + "/scene/";

  auto res = client_->Post(base + "1/override", json{{"rating", "0+"}, {"note", "metaphor"}}.dump(), "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200) << res->body;
  json body = json::parse(res->body);
  EXPECT_EQ(body["verdict"]["rating"], "0+");
  EXPECT_EQ(body["verdict"]["source"], "human");
  EXPECT_EQ(body["report"]["overall_rating"], "18+");
  EXPECT_EQ(body["report"]["statistics"]["problematic_sentences"], 2);

  res = client_->Post(base + "0/reanalyze", json{{"text", "Viktor puts the pipe down and walks away."}}.dump(),
                      "application/json");
  body = json::parse(res->body);
  EXPECT_EQ(body["verdict"]["rating"], "0+");
  EXPECT_EQ(body["report"]["overall_rating"], "12+");
  EXPECT_EQ(json::parse(client_->Get("/report/" + id)->body), body["report"]);

  // Re-submitting the same body leaves the report unchanged.
  const std::string before = client_->Get("/report/" + id)->body;
  client_->Post(base + "0/reanalyze", json{{"text", "Viktor puts the pipe down and walks away."}}.dump(),
                "application/json");
  EXPECT_EQ(client_->Get("/report/" + id)->body, before);

  res = client_->Post(base + "1/override", json{{"clear", true}}.dump(), "application/json");
  body = json::parse(res->body);
  EXPECT_EQ(body["verdict"]["rating"], "6+");
  EXPECT_EQ(body["verdict"]["source"], "rules");

  expect_error(client_->Post(base + "9/override", json{{"rating", "0+"}}.dump(), "application/json"), 400,
               "BadRequest");
  expect_error(client_->Post(base + "x/override", json{{"rating", "0+"}}.dump(), "application/json"), 400,
               "BadRequest");
  expect_error(client_->Post(base + "0/override", json{{"rating", "21+"}}.dump(), "application/json"), 400,
               "BadRequest");
  expect_error(client_->Post(base + "0/reanalyze", json{{"nope", 1}}.dump(), "application/json"), 400,
               "BadRequest");
  expect_error(client_->Post("/report/missing/scene/0/reanalyze", json{{"text", "x"}}.dump(), "application/json"),
               404, "NotFound");

  auto audit = client_->Get("/report/" + id + "/audit");
  ASSERT_TRUE(audit);
  const json trail = json::parse(audit->body);
  ASSERT_EQ(trail.size(), 4u);
  EXPECT_EQ(trail[0]["action"], "override");
  EXPECT_EQ(trail[0]["note"], "metaphor");
  EXPECT_EQ(trail[0]["before"]["rating"], "6+");
  EXPECT_EQ(trail[0]["after"]["rating"], "0+");
  EXPECT_EQ(trail[3]["action"], "clear_override");

  res = client_->Post("/report/" + id + "/save", "", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(json::parse(res->body), (json{{"file_id", id}, {"saved", true}}));
  expect_error(client_->Post("/report/missing/save", "", "application/json"), 404, "NotFound");

  now_ += std::chrono::hours(25);
  const json other = upload_text("INT. A - DAY\nx");
  now_ += std::chrono::hours(25);
  EXPECT_EQ(service_->expire_sessions(service_->now()), 1u);
  EXPECT_EQ(client_->Get("/report/" + id)->status, 200);
  expect_error(client_->Get("/report/" + other["file_id"].get<std::string>()), 404, "NotFound");
}

TEST(HttpServerLifecycle, BackgroundExpiryRuns) {
  ::unsetenv("QWERTY_MODEL_ADDR");
  std::atomic<std::int64_t> hours{0};
  Service service({}, [&] { return TimePoint{} + std::chrono::hours(400000 + hours.load()); });
  const Report r = service.upload(RawDocument{{'x'}, "x.txt", FormatHint::kAuto});
  hours = 30;
  HttpServer server(service, HttpServerOptions{"127.0.0.1", 0, std::chrono::seconds(1)});
  server.start();
  for (int i = 0; i < 300 && service.store().exists(r.file_id); ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  EXPECT_FALSE(service.store().exists(r.file_id));
  server.stop();
  server.stop();
}

}  // namespace
}  // namespace qwerty
