#include <gtest/gtest.h>

#include <filesystem>
#include <thread>

#include "qwerty/error.hpp"
#include "qwerty/report.hpp"
#include "qwerty/service.hpp"

namespace qwerty {
namespace {

using std::chrono::hours;

Session make_session(const std::string& id, TimePoint created, std::size_t scenes = 3) {
  Session s;
  s.file_id = id;
  s.created_at = created;
  s.filename = "script.txt";
  s.analyzer = AnalyzerKind::kMock;
  std::vector<SceneVerdict> verdicts;
  for (std::size_t i = 0; i < scenes; ++i) {
    s.scenes.push_back(make_scene(i, "INT. ROOM " + std::to_string(i) + " - DAY", {"line", "другая"}, 3 * i));
    SceneVerdict v;
    v.scene_index = i;
    v.rating = i == 1 ? Rating::k12 : Rating::k0;
    if (i == 1) v.label = Category::kFearElements;
    verdicts.push_back(v);
  }
  s.report = build_report(id, s.scenes, verdicts);
  return s;
}

TimePoint at_hours(int h) { return TimePoint{} + hours(1000) + hours(h); }

TEST(SessionStore, InsertLoadRoundTrip) {
  SessionStore store;
  const Session s = make_session("a", at_hours(0));
  store.insert(s, s.report.verdicts);
  EXPECT_TRUE(store.exists("a"));
  EXPECT_FALSE(store.exists("b"));
  EXPECT_EQ(store.session_count(), 1u);
  const auto loaded = store.load("a");
  ASSERT_TRUE(loaded.has_value());
  EXPECT_EQ(loaded->file_id, "a");
  EXPECT_EQ(loaded->filename, "script.txt");
  EXPECT_EQ(loaded->analyzer, AnalyzerKind::kMock);
  EXPECT_FALSE(loaded->saved);
  EXPECT_EQ(std::chrono::duration_cast<std::chrono::milliseconds>(loaded->created_at - s.created_at).count(), 0);
  EXPECT_EQ(loaded->report, s.report);
  ASSERT_EQ(loaded->scenes.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(loaded->scenes[i].heading, s.scenes[i].heading);
    EXPECT_EQ(loaded->scenes[i].body, s.scenes[i].body);
    EXPECT_EQ(loaded->scenes[i].span, s.scenes[i].span);
    EXPECT_EQ(loaded->scenes[i].token_estimate, s.scenes[i].token_estimate);
  }
  EXPECT_EQ(store.report_json("a"), report_to_json(s.report));
  EXPECT_EQ(store.machine_verdict("a", 1), s.report.verdicts[1]);
  EXPECT_FALSE(store.human_verdict("a", 1).has_value());
  EXPECT_FALSE(store.load("missing").has_value());
  EXPECT_FALSE(store.report_json("missing").has_value());
}

TEST(SessionStore, DuplicateInsertIsStorageError) {
  SessionStore store;
  const Session s = make_session("a", at_hours(0));
  store.insert(s, s.report.verdicts);
  try {
    store.insert(s, s.report.verdicts);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kStorageError);
  }
  EXPECT_EQ(store.session_count(), 1u);
}

TEST(SessionStore, UpdateSceneIsAtomicAndAudited) {
  SessionStore store;
  Session s = make_session("a", at_hours(0));
  store.insert(s, s.report.verdicts);

  SceneVerdict human = s.report.verdicts[1];
  human.rating = Rating::k0;
  human.source = VerdictSource::kHuman;
  Report report = s.report;
  report.verdicts[1] = human;
  refresh_report(report);
  Scene scene = make_scene(1, s.scenes[1].heading, {"edited"}, s.scenes[1].span.start_line);
  AuditEntry audit;
  audit.file_id = "a";
  audit.scene_index = 1;
  audit.at = at_hours(2);
  audit.action = "override";
  audit.before = verdict_to_json(s.report.verdicts[1]);
  audit.after = verdict_to_json(human);
  audit.note = "ok";
  store.update_scene("a", report, scene, s.report.verdicts[1], human, &audit);

  EXPECT_EQ(store.human_verdict("a", 1), human);
  EXPECT_EQ(store.machine_verdict("a", 1), s.report.verdicts[1]);
  const auto loaded = store.load("a");
  EXPECT_EQ(loaded->report, report);
  EXPECT_EQ(loaded->scenes[1].body, "edited");
  const auto trail = store.audit_trail("a");
  ASSERT_EQ(trail.size(), 1u);
  EXPECT_GT(trail[0].id, 0);
  EXPECT_EQ(trail[0].action, "override");
  EXPECT_EQ(trail[0].note, "ok");
  EXPECT_EQ(trail[0].before, audit.before);
  EXPECT_EQ(trail[0].after, audit.after);
  EXPECT_EQ(trail[0].at, audit.at);

  store.update_scene("a", s.report, s.scenes[1], s.report.verdicts[1], std::nullopt, nullptr);
  EXPECT_FALSE(store.human_verdict("a", 1).has_value());
  EXPECT_EQ(store.audit_trail("a").size(), 1u);

  try {
    store.update_scene("zzz", report, scene, human, std::nullopt, nullptr);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotFound);
  }
}

TEST(SessionStore, ExpiryKeepsSavedAndRecentSessions) {
  SessionStore store;
  for (const auto& [id, h] : std::vector<std::pair<std::string, int>>{{"old", 0}, {"old_saved", 0}, {"new", 20}}) {
    const Session s = make_session(id, at_hours(h));
    store.insert(s, s.report.verdicts);
  }
  store.set_saved("old_saved", true);
  EXPECT_TRUE(store.load("old_saved")->saved);
  EXPECT_EQ(store.delete_unsaved_before(at_hours(0)), 0u);  // strict cutoff
  EXPECT_EQ(store.delete_unsaved_before(at_hours(1)), 1u);
  EXPECT_FALSE(store.exists("old"));
  EXPECT_TRUE(store.exists("old_saved"));
  EXPECT_TRUE(store.exists("new"));
  EXPECT_FALSE(store.machine_verdict("old", 0).has_value());
  EXPECT_TRUE(store.audit_trail("old").empty());
  EXPECT_THROW(store.set_saved("old", true), Error);
}

TEST(SessionStore, PersistsAcrossReopen) {
  const auto path = std::filesystem::temp_directory_path() / "qwerty_store_test.sqlite";
  std::filesystem::remove(path);
  const Session s = make_session("p", at_hours(0));
  {
    SessionStore store(path.string());
    store.insert(s, s.report.verdicts);
    store.set_saved("p", true);
  }
  {
    SessionStore store(path.string());
    EXPECT_EQ(store.report_json("p"), report_to_json(s.report));
    EXPECT_TRUE(store.load("p")->saved);
  }
  std::filesystem::remove(path);
}

TEST(SessionStore, UnopenablePathIsStorageError) {
  try {
    SessionStore store("/nonexistent-dir/x/y.sqlite");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kStorageError);
  }
}

TEST(SessionStore, ConcurrentWritersAndReaders) {
  SessionStore store;
  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&store, t] {
      for (int i = 0; i < 10; ++i) {
        const Session s = make_session(std::to_string(t) + "-" + std::to_string(i), at_hours(i), 2);
        store.insert(s, s.report.verdicts);
        EXPECT_TRUE(store.load(s.file_id).has_value());
      }
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_EQ(store.session_count(), 80u);
}

}  // namespace
}  // namespace qwerty
