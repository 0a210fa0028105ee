#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "qwerty/analyzer.hpp"
#include "qwerty/error.hpp"
#include "qwerty/ingest.hpp"
#include "qwerty/pipeline.hpp"
#include "qwerty/report.hpp"
#include "qwerty/segmenter.hpp"

namespace qwerty {

using Clock = std::chrono::system_clock;
using TimePoint = Clock::time_point;

struct Session {
  std::string file_id;
  TimePoint created_at;
  std::string filename;
  bool saved = false;
  AnalyzerKind analyzer = AnalyzerKind::kRules;
  Report report;
  std::vector<Scene> scenes;
};

struct AuditEntry {
  std::int64_t id = 0;
  std::string file_id;
  std::size_t scene_index = 0;
  TimePoint at;
  std::string action;  // "override", "clear_override", "reanalyze"
  std::string before;  // verdict JSON
  std::string after;
  std::string note;
};

// SQLite-backed persistence: sessions, scenes, per-scene verdicts (machine
// and optional human) and an append-only audit log. Thread-safe.
class SessionStore {
 public:
  // ":memory:" keeps everything in process.
  explicit SessionStore(const std::string& path = ":memory:");
  ~SessionStore();
  SessionStore(const SessionStore&) = delete;
  SessionStore& operator=(const SessionStore&) = delete;

  void insert(const Session& session, const std::vector<SceneVerdict>& machine_verdicts);

  std::optional<Session> load(const std::string& file_id) const;
  // Exactly the bytes last stored for the report.
  std::optional<std::string> report_json(const std::string& file_id) const;
  bool exists(const std::string& file_id) const;

  // Writes report, one scene, its verdicts and the audit entry atomically.
  void update_scene(const std::string& file_id, const Report& report, const Scene& scene,
                    const SceneVerdict& machine, const std::optional<SceneVerdict>& human,
                    const AuditEntry* audit);

  std::optional<SceneVerdict> machine_verdict(const std::string& file_id, std::size_t index) const;
  std::optional<SceneVerdict> human_verdict(const std::string& file_id, std::size_t index) const;

  void set_saved(const std::string& file_id, bool saved);
  std::vector<AuditEntry> audit_trail(const std::string& file_id) const;

  // Deletes unsaved sessions created before the cutoff; returns the count.
  std::size_t delete_unsaved_before(TimePoint cutoff);
  std::size_t session_count() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct ServiceConfig {
  AnalyzerConfig analyzer;
  PipelineOptions pipeline;
  std::chrono::hours retention{24};
  std::size_t chat_token_limit = 500;
  std::size_t max_upload_bytes = 50u * 1024u * 1024u;
  std::size_t max_concurrent_uploads = 4;
  std::string database_path = ":memory:";
  std::string lexicon_path;   // empty: built-in default lexicon
  std::string model_address;  // for the model analyzer
  std::string mock_fixture;   // for the mock analyzer
};

struct ChatResult {
  SceneVerdict verdict;
};

struct SceneUpdate {
  SceneVerdict verdict;  // effective verdict of the scene after the call
  Report report;
};

struct ProgressSnapshot {
  std::size_t completed = 0;
  std::size_t total = 0;
  bool done = false;
  // Set when a background upload failed; done is true in that case.
  std::optional<ErrorCode> error;
  std::string message;
};

// Transport-independent service logic; HttpServer exposes it over HTTP.
class Service {
 public:
  using ClockFn = std::function<TimePoint()>;

  explicit Service(ServiceConfig config, ClockFn clock = [] { return Clock::now(); });
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  ChatResult chat(std::string_view text);

  // Runs the whole pipeline and persists the session. The file id is
  // allocated up front and reported through on_started so progress can be
  // polled while the analysis runs.
  Report upload(const RawDocument& doc, std::optional<AnalyzerKind> kind = std::nullopt,
                const std::function<void(const std::string&)>& on_started = {});

  // Starts the pipeline on a background thread and returns the file id.
  std::string upload_async(RawDocument doc, std::optional<AnalyzerKind> kind = std::nullopt);

  std::string report_json(const std::string& file_id) const;
  Report report(const std::string& file_id) const;
  ProgressSnapshot progress(const std::string& file_id) const;

  SceneUpdate reanalyze_scene(const std::string& file_id, std::size_t scene_index,
                              std::string_view edited_text);
  SceneUpdate override_verdict(const std::string& file_id, std::size_t scene_index,
                               Rating rating, std::string_view note);
  SceneUpdate clear_override(const std::string& file_id, std::size_t scene_index,
                             std::string_view note);
  void save(const std::string& file_id);

  std::size_t expire_sessions(TimePoint now);
  TimePoint now() const { return clock_(); }

  std::vector<AuditEntry> audit_trail(const std::string& file_id) const;
  const ServiceConfig& config() const { return config_; }
  SessionStore& store() { return *store_; }

  // Blocks until background uploads finish.
  void wait_idle();

 private:
  struct UploadState;

  const Analyzer& analyzer_for(std::optional<AnalyzerKind> kind) const;
  std::shared_ptr<std::mutex> session_lock(const std::string& file_id);
  Report run_upload(const RawDocument& doc, const std::string& file_id, const Analyzer& analyzer,
                    Progress* progress);
  std::shared_ptr<UploadState> start_upload(const RawDocument& doc, std::string& file_id);
  // Loads the session, lets change() produce the new scene, machine and
  // human verdicts, then recomputes the report and persists atomically.
  struct SceneState {
    Scene scene;
    SceneVerdict machine;
    std::optional<SceneVerdict> human;
  };
  SceneUpdate apply_scene_change(const std::string& file_id, std::size_t scene_index,
                                 const std::string& action, std::string_view note,
                                 const std::function<void(const Session&, SceneState&)>& change);

  ServiceConfig config_;
  ClockFn clock_;
  std::shared_ptr<const Lexicon> lexicon_;
  std::unique_ptr<SessionStore> store_;
  std::unique_ptr<Analyzer> rules_;
  std::unique_ptr<Analyzer> model_;
  std::unique_ptr<Analyzer> mock_;
  std::counting_semaphore<1024> upload_slots_;

  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<std::mutex>> session_locks_;
  std::map<std::string, std::shared_ptr<UploadState>> uploads_;
  std::condition_variable idle_cv_;
  std::size_t background_active_ = 0;
};

struct HttpServerOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::chrono::seconds expiry_interval{600};
};

class HttpServer {
 public:
  HttpServer(Service& service, HttpServerOptions options);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Binds and serves on a background thread; returns the bound port.
  int start();
  // Binds and serves on the calling thread until stop().
  void run();
  void stop();
  int port() const { return port_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
};

int http_status_for(ErrorCode code);

}  // namespace qwerty
