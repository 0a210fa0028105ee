#include <sqlite3.h>

#include <mutex>

#include "qwerty/report.hpp"
#include "qwerty/service.hpp"

namespace qwerty {

namespace {

constexpr const char* kSchema = R"sql(
PRAGMA foreign_keys = ON;
CREATE TABLE IF NOT EXISTS sessions (
  file_id     TEXT PRIMARY KEY,
  created_ms  INTEGER NOT NULL,
  filename    TEXT NOT NULL,
  analyzer    TEXT NOT NULL,
  saved       INTEGER NOT NULL DEFAULT 0,
  report_json TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS scenes (
  file_id        TEXT NOT NULL REFERENCES sessions(file_id) ON DELETE CASCADE,
  idx            INTEGER NOT NULL,
  heading        TEXT NOT NULL,
  body           TEXT NOT NULL,
  start_line     INTEGER NOT NULL,
  end_line       INTEGER NOT NULL,
  token_estimate INTEGER NOT NULL,
  PRIMARY KEY (file_id, idx)
);
CREATE TABLE IF NOT EXISTS verdicts (
  file_id TEXT NOT NULL REFERENCES sessions(file_id) ON DELETE CASCADE,
  idx     INTEGER NOT NULL,
  kind    TEXT NOT NULL CHECK (kind IN ('machine', 'human')),
  json    TEXT NOT NULL,
  PRIMARY KEY (file_id, idx, kind)
);
CREATE TABLE IF NOT EXISTS audit (
  id        INTEGER PRIMARY KEY AUTOINCREMENT,
  file_id   TEXT NOT NULL REFERENCES sessions(file_id) ON DELETE CASCADE,
  idx       INTEGER NOT NULL,
  at_ms     INTEGER NOT NULL,
  action    TEXT NOT NULL,
  before    TEXT NOT NULL,
  after     TEXT NOT NULL,
  note      TEXT NOT NULL
);
)sql";

std::int64_t to_ms(TimePoint t) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(t.time_since_epoch()).count();
}

TimePoint from_ms(std::int64_t ms) { return TimePoint(std::chrono::milliseconds(ms)); }

[[noreturn]] void fail(sqlite3* db, const std::string& what) {
  throw Error(ErrorCode::kStorageError, what + ": " + (db ? sqlite3_errmsg(db) : "no database"));
}

class Statement {
 public:
  Statement(sqlite3* db, const char* sql) : db_(db) {
    if (sqlite3_prepare_v2(db, sql, -1, &stmt_, nullptr) != SQLITE_OK) fail(db, "prepare");
  }
  ~Statement() { sqlite3_finalize(stmt_); }
  Statement(const Statement&) = delete;
  Statement& operator=(const Statement&) = delete;

  Statement& bind(int i, std::string_view text) {
    check(sqlite3_bind_text(stmt_, i, text.data(), static_cast<int>(text.size()), SQLITE_TRANSIENT));
    return *this;
  }
  Statement& bind(int i, std::int64_t v) {
    check(sqlite3_bind_int64(stmt_, i, v));
    return *this;
  }

  // True while a row is available.
  bool step() {
    const int rc = sqlite3_step(stmt_);
    if (rc == SQLITE_ROW) return true;
    if (rc == SQLITE_DONE) return false;
    fail(db_, "step");
  }
  void run() {
    while (step()) {
    }
  }

  std::string text(int col) const {
    const auto* p = reinterpret_cast<const char*>(sqlite3_column_text(stmt_, col));
    return p ? std::string(p, static_cast<std::size_t>(sqlite3_column_bytes(stmt_, col))) : std::string();
  }
  std::int64_t integer(int col) const { return sqlite3_column_int64(stmt_, col); }

 private:
  void check(int rc) {
    if (rc != SQLITE_OK) fail(db_, "bind");
  }
  sqlite3* db_;
  sqlite3_stmt* stmt_ = nullptr;
};

void exec(sqlite3* db, const char* sql) {
  char* err = nullptr;
  if (sqlite3_exec(db, sql, nullptr, nullptr, &err) != SQLITE_OK) {
    std::string msg = err ? err : "exec";
    sqlite3_free(err);
    throw Error(ErrorCode::kStorageError, msg);
  }
}

class Transaction {
 public:
  explicit Transaction(sqlite3* db) : db_(db) { exec(db_, "BEGIN IMMEDIATE"); }
  ~Transaction() {
    if (!committed_) sqlite3_exec(db_, "ROLLBACK", nullptr, nullptr, nullptr);
  }
  void commit() {
    exec(db_, "COMMIT");
    committed_ = true;
  }

 private:
  sqlite3* db_;
  bool committed_ = false;
};

std::int64_t sz(std::size_t v) { return static_cast<std::int64_t>(v); }

void write_scene(sqlite3* db, const std::string& file_id, const Scene& scene) {
  Statement st(db,
               "INSERT OR REPLACE INTO scenes (file_id, idx, heading, body, start_line, end_line, "
               "token_estimate) VALUES (?, ?, ?, ?, ?, ?, ?)");
  st.bind(1, file_id).bind(2, sz(scene.index)).bind(3, scene.heading).bind(4, scene.body);
  st.bind(5, sz(scene.span.start_line)).bind(6, sz(scene.span.end_line)).bind(7, sz(scene.token_estimate));
  st.run();
}

void write_verdict(sqlite3* db, const std::string& file_id, std::size_t index, const char* kind,
                   const SceneVerdict& v) {
  Statement st(db, "INSERT OR REPLACE INTO verdicts (file_id, idx, kind, json) VALUES (?, ?, ?, ?)");
  st.bind(1, file_id).bind(2, sz(index)).bind(3, kind).bind(4, verdict_to_json(v));
  st.run();
}

std::optional<SceneVerdict> read_verdict(sqlite3* db, const std::string& file_id, std::size_t index,
                                         const char* kind) {
  Statement st(db, "SELECT json FROM verdicts WHERE file_id = ? AND idx = ? AND kind = ?");
  st.bind(1, file_id).bind(2, sz(index)).bind(3, kind);
  if (!st.step()) return std::nullopt;
  return verdict_from_json(st.text(0));
}

}  // namespace

struct SessionStore::Impl {
  sqlite3* db = nullptr;
  mutable std::mutex mutex;
};

SessionStore::SessionStore(const std::string& path) : impl_(std::make_unique<Impl>()) {
  const int flags = SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX;
  if (sqlite3_open_v2(path.c_str(), &impl_->db, flags, nullptr) != SQLITE_OK) {
    std::string msg = impl_->db ? sqlite3_errmsg(impl_->db) : "open failed";
    sqlite3_close(impl_->db);
    throw Error(ErrorCode::kStorageError, "cannot open session store '" + path + "': " + msg);
  }
  sqlite3_busy_timeout(impl_->db, 5000);
  exec(impl_->db, kSchema);
}

SessionStore::~SessionStore() { sqlite3_close(impl_->db); }

void SessionStore::insert(const Session& session, const std::vector<SceneVerdict>& machine_verdicts) {
  std::lock_guard lock(impl_->mutex);
  sqlite3* db = impl_->db;
  Transaction tx(db);
  {
    Statement st(db,
                 "INSERT INTO sessions (file_id, created_ms, filename, analyzer, saved, report_json) "
                 "VALUES (?, ?, ?, ?, ?, ?)");
    st.bind(1, session.file_id).bind(2, to_ms(session.created_at)).bind(3, session.filename);
    st.bind(4, to_string(session.analyzer)).bind(5, std::int64_t{session.saved ? 1 : 0});
    st.bind(6, report_to_json(session.report));
    st.run();
  }
  for (const Scene& scene : session.scenes) write_scene(db, session.file_id, scene);
  for (std::size_t i = 0; i < machine_verdicts.size(); ++i) {
    write_verdict(db, session.file_id, i, "machine", machine_verdicts[i]);
  }
  tx.commit();
}

std::optional<Session> SessionStore::load(const std::string& file_id) const {
  std::lock_guard lock(impl_->mutex);
  sqlite3* db = impl_->db;
  Session s;
  {
    Statement st(db,
                 "SELECT created_ms, filename, analyzer, saved, report_json FROM sessions "
                 "WHERE file_id = ?");
    st.bind(1, file_id);
    if (!st.step()) return std::nullopt;
    s.file_id = file_id;
    s.created_at = from_ms(st.integer(0));
    s.filename = st.text(1);
    s.analyzer = parse_analyzer_kind(st.text(2)).value_or(AnalyzerKind::kRules);
    s.saved = st.integer(3) != 0;
    s.report = report_from_json(st.text(4));
  }
  Statement st(db,
               "SELECT idx, heading, body, start_line, end_line, token_estimate FROM scenes "
               "WHERE file_id = ? ORDER BY idx");
  st.bind(1, file_id);
  while (st.step()) {
    Scene scene;
    scene.index = static_cast<std::size_t>(st.integer(0));
    scene.heading = st.text(1);
    scene.body = st.text(2);
    scene.span = {static_cast<std::size_t>(st.integer(3)), static_cast<std::size_t>(st.integer(4))};
    scene.token_estimate = static_cast<std::size_t>(st.integer(5));
    s.scenes.push_back(std::move(scene));
  }
  return s;
}

std::optional<std::string> SessionStore::report_json(const std::string& file_id) const {
  std::lock_guard lock(impl_->mutex);
  Statement st(impl_->db, "SELECT report_json FROM sessions WHERE file_id = ?");
  st.bind(1, file_id);
  if (!st.step()) return std::nullopt;
  return st.text(0);
}

bool SessionStore::exists(const std::string& file_id) const {
  std::lock_guard lock(impl_->mutex);
  Statement st(impl_->db, "SELECT 1 FROM sessions WHERE file_id = ?");
  st.bind(1, file_id);
  return st.step();
}

void SessionStore::update_scene(const std::string& file_id, const Report& report, const Scene& scene,
                                const SceneVerdict& machine, const std::optional<SceneVerdict>& human,
                                const AuditEntry* audit) {
  std::lock_guard lock(impl_->mutex);
  sqlite3* db = impl_->db;
  Transaction tx(db);
  {
    Statement st(db, "UPDATE sessions SET report_json = ? WHERE file_id = ?");
    st.bind(1, report_to_json(report)).bind(2, file_id);
    st.run();
    if (sqlite3_changes(db) == 0) throw Error(ErrorCode::kNotFound, "unknown file_id " + file_id);
  }
  write_scene(db, file_id, scene);
  write_verdict(db, file_id, scene.index, "machine", machine);
  if (human) {
    write_verdict(db, file_id, scene.index, "human", *human);
  } else {
    Statement st(db, "DELETE FROM verdicts WHERE file_id = ? AND idx = ? AND kind = 'human'");
    st.bind(1, file_id).bind(2, sz(scene.index));
    st.run();
  }
  if (audit) {
    Statement st(db,
                 "INSERT INTO audit (file_id, idx, at_ms, action, before, after, note) "
                 "VALUES (?, ?, ?, ?, ?, ?, ?)");
    st.bind(1, file_id).bind(2, sz(audit->scene_index)).bind(3, to_ms(audit->at));
    st.bind(4, audit->action).bind(5, audit->before).bind(6, audit->after).bind(7, audit->note);
    st.run();
  }
  tx.commit();
}

std::optional<SceneVerdict> SessionStore::machine_verdict(const std::string& file_id,
                                                          std::size_t index) const {
  std::lock_guard lock(impl_->mutex);
  return read_verdict(impl_->db, file_id, index, "machine");
}

std::optional<SceneVerdict> SessionStore::human_verdict(const std::string& file_id,
                                                        std::size_t index) const {
  std::lock_guard lock(impl_->mutex);
  return read_verdict(impl_->db, file_id, index, "human");
}

void SessionStore::set_saved(const std::string& file_id, bool saved) {
  std::lock_guard lock(impl_->mutex);
  Statement st(impl_->db, "UPDATE sessions SET saved = ? WHERE file_id = ?");
  st.bind(1, std::int64_t{saved ? 1 : 0}).bind(2, file_id);
  st.run();
  if (sqlite3_changes(impl_->db) == 0) throw Error(ErrorCode::kNotFound, "unknown file_id " + file_id);
}

std::vector<AuditEntry> SessionStore::audit_trail(const std::string& file_id) const {
  std::lock_guard lock(impl_->mutex);
  Statement st(impl_->db,
               "SELECT id, idx, at_ms, action, before, after, note FROM audit WHERE file_id = ? "
               "ORDER BY id");
  st.bind(1, file_id);
  std::vector<AuditEntry> out;
  while (st.step()) {
    AuditEntry e;
    e.id = st.integer(0);
    e.file_id = file_id;
    e.scene_index = static_cast<std::size_t>(st.integer(1));
    e.at = from_ms(st.integer(2));
    e.action = st.text(3);
    e.before = st.text(4);
    e.after = st.text(5);
    e.note = st.text(6);
    out.push_back(std::move(e));
  }
  return out;
}

std::size_t SessionStore::delete_unsaved_before(TimePoint cutoff) {
  std::lock_guard lock(impl_->mutex);
  Statement st(impl_->db, "DELETE FROM sessions WHERE saved = 0 AND created_ms < ?");
  st.bind(1, to_ms(cutoff));
  st.run();
  return static_cast<std::size_t>(sqlite3_changes(impl_->db));
}

std::size_t SessionStore::session_count() const {
  std::lock_guard lock(impl_->mutex);
  Statement st(impl_->db, "SELECT COUNT(*) FROM sessions");
  st.step();
  return static_cast<std::size_t>(st.integer(0));
}

}  // namespace qwerty
