#include "qwerty/service.hpp"

#include <algorithm>
#include <cstdlib>
#include <utility>

#include "qwerty/unicode.hpp"

namespace qwerty {

struct Service::UploadState {
  Progress progress;
  TimePoint started;
  std::optional<ErrorCode> error;
  std::string message;
};

namespace {

std::shared_ptr<const Lexicon> load_configured_lexicon(const std::string& path) {
  if (path.empty()) return default_lexicon();
  return std::make_shared<const Lexicon>(load_lexicon_file(path));
}

SceneVerdict human_verdict_for(const SceneVerdict& machine, Rating rating, std::string_view note) {
  SceneVerdict v;
  v.scene_index = machine.scene_index;
  v.rating = rating;
  if (rating != Rating::k0) v.label = machine.label;
  v.why = note.empty() ? std::string("Human override") : "Human override: " + std::string(note);
  v.anchors = machine.anchors;
  v.confidence = Confidence::kHigh;
  v.source = VerdictSource::kHuman;
  return v;
}

class SlotGuard {
 public:
  explicit SlotGuard(std::counting_semaphore<1024>& sem) : sem_(&sem) {}
  SlotGuard(SlotGuard&& other) noexcept : sem_(std::exchange(other.sem_, nullptr)) {}
  SlotGuard(const SlotGuard&) = delete;
  ~SlotGuard() {
    if (sem_) sem_->release();
  }

 private:
  std::counting_semaphore<1024>* sem_;
};

}  // namespace

Service::Service(ServiceConfig config, ClockFn clock)
    : config_(std::move(config)),
      clock_(std::move(clock)),
      upload_slots_(static_cast<std::ptrdiff_t>(
          std::clamp<std::size_t>(config_.max_concurrent_uploads, 1, 1024))) {
  validate(config_.analyzer);
  lexicon_ = load_configured_lexicon(config_.lexicon_path);
  store_ = std::make_unique<SessionStore>(config_.database_path);

  AnalyzerConfig rules_config = config_.analyzer;
  rules_config.kind = AnalyzerKind::kRules;
  rules_ = make_analyzer(lexicon_, rules_config);

  std::string address = config_.model_address;
  if (address.empty()) {
    if (const char* env = std::getenv("QWERTY_MODEL_ADDR")) address = env;
  }
  if (!address.empty()) {
    AnalyzerConfig c = config_.analyzer;
    c.kind = AnalyzerKind::kModel;
    model_ = make_analyzer(lexicon_, c, std::make_shared<TcpCompletionClient>(parse_endpoint(address)));
  }
  if (!config_.mock_fixture.empty()) {
    AnalyzerConfig c = config_.analyzer;
    c.kind = AnalyzerKind::kMock;
    mock_ = make_analyzer(lexicon_, c,
                          std::shared_ptr<CompletionClient>(MockCompletionClient::from_file(config_.mock_fixture)));
  }
}

Service::~Service() { wait_idle(); }

const Analyzer& Service::analyzer_for(std::optional<AnalyzerKind> kind) const {
  switch (kind.value_or(config_.analyzer.kind)) {
    case AnalyzerKind::kRules: return *rules_;
    case AnalyzerKind::kModel:
      if (!model_) throw Error(ErrorCode::kAnalyzerUnavailable, "model analyzer has no endpoint configured");
      return *model_;
    case AnalyzerKind::kMock:
      if (!mock_) throw Error(ErrorCode::kAnalyzerUnavailable, "mock analyzer has no fixture configured");
      return *mock_;
  }
  return *rules_;
}

std::shared_ptr<std::mutex> Service::session_lock(const std::string& file_id) {
  std::lock_guard lock(mutex_);
  auto& slot = session_locks_[file_id];
  if (!slot) slot = std::make_shared<std::mutex>();
  return slot;
}

ChatResult Service::chat(std::string_view text) {
  if (unicode::trim(text).empty()) throw Error(ErrorCode::kBadRequest, "chat text is empty");
  if (estimate_tokens(text) >= config_.chat_token_limit) {
    throw Error(ErrorCode::kPayloadTooLarge,
                "chat text is limited to " + std::to_string(config_.chat_token_limit) +
                    " tokens; use /upload for longer documents");
  }
  const DecodedDocument doc = make_decoded(text, EncodingId::kUtf8);
  const Scene scene = make_scene(0, {}, doc.lines, 0);
  return {analyze_scene(scene, analyzer_for(std::nullopt))};
}

Report Service::run_upload(const RawDocument& doc, const std::string& file_id, const Analyzer& analyzer,
                           Progress* progress) {
  PipelineResult result = run_pipeline(doc, analyzer, config_.pipeline, progress, file_id);
  Session session;
  session.file_id = file_id;
  session.created_at = clock_();
  session.filename = doc.filename;
  session.analyzer = analyzer.kind();
  session.report = result.report;
  session.scenes = std::move(result.scenes);
  store_->insert(session, result.report.verdicts);
  return std::move(result.report);
}

std::shared_ptr<Service::UploadState> Service::start_upload(const RawDocument& doc, std::string& file_id) {
  if (doc.bytes.empty()) throw Error(ErrorCode::kEmptyDocument, "uploaded document is empty");
  if (doc.bytes.size() > config_.max_upload_bytes) {
    throw Error(ErrorCode::kPayloadTooLarge,
                "upload exceeds " + std::to_string(config_.max_upload_bytes) + " bytes");
  }
  auto state = std::make_shared<UploadState>();
  state->started = clock_();
  file_id = new_file_id();
  std::lock_guard lock(mutex_);
  uploads_[file_id] = state;
  return state;
}

Report Service::upload(const RawDocument& doc, std::optional<AnalyzerKind> kind,
                       const std::function<void(const std::string&)>& on_started) {
  const Analyzer& analyzer = analyzer_for(kind);
  if (!upload_slots_.try_acquire()) throw Error(ErrorCode::kTooManyUploads, "too many concurrent uploads");
  SlotGuard slot(upload_slots_);
  std::string file_id;
  auto state = start_upload(doc, file_id);
  if (on_started) on_started(file_id);
  try {
    Report report = run_upload(doc, file_id, analyzer, &state->progress);
    std::lock_guard lock(mutex_);
    uploads_.erase(file_id);
    return report;
  } catch (...) {
    std::lock_guard lock(mutex_);
    uploads_.erase(file_id);
    throw;
  }
}

std::string Service::upload_async(RawDocument doc, std::optional<AnalyzerKind> kind) {
  const Analyzer& analyzer = analyzer_for(kind);
  if (!upload_slots_.try_acquire()) throw Error(ErrorCode::kTooManyUploads, "too many concurrent uploads");
  SlotGuard slot(upload_slots_);
  std::string file_id;
  auto state = start_upload(doc, file_id);
  {
    std::lock_guard lock(mutex_);
    ++background_active_;
  }
  std::thread([this, doc = std::move(doc), file_id, state, &analyzer, slot = std::move(slot)]() mutable {
    try {
      run_upload(doc, file_id, analyzer, &state->progress);
      std::lock_guard lock(mutex_);
      uploads_.erase(file_id);
    } catch (const Error& e) {
      std::lock_guard lock(mutex_);
      state->error = e.code();
      state->message = e.what();
      state->progress.done = true;
    } catch (const std::exception& e) {
      std::lock_guard lock(mutex_);
      state->error = ErrorCode::kStorageError;
      state->message = e.what();
      state->progress.done = true;
    }
    { SlotGuard release = std::move(slot); }
    std::lock_guard lock(mutex_);
    --background_active_;
    idle_cv_.notify_all();
  }).detach();
  return file_id;
}

void Service::wait_idle() {
  std::unique_lock lock(mutex_);
  idle_cv_.wait(lock, [this] { return background_active_ == 0; });
}

std::string Service::report_json(const std::string& file_id) const {
  if (auto json = store_->report_json(file_id)) return *std::move(json);
  {
    std::lock_guard lock(mutex_);
    auto it = uploads_.find(file_id);
    if (it != uploads_.end()) {
      if (it->second->error) throw Error(*it->second->error, it->second->message);
      throw Error(ErrorCode::kNotFound, "analysis of " + file_id + " is still running");
    }
  }
  throw Error(ErrorCode::kNotFound, "unknown or expired file_id " + file_id);
}

Report Service::report(const std::string& file_id) const { return report_from_json(report_json(file_id)); }

ProgressSnapshot Service::progress(const std::string& file_id) const {
  {
    std::lock_guard lock(mutex_);
    auto it = uploads_.find(file_id);
    if (it != uploads_.end()) {
      const UploadState& s = *it->second;
      ProgressSnapshot snap;
      snap.completed = s.progress.completed.load();
      snap.total = s.progress.total.load();
      // Success is only reported once the session is committed to the store.
      snap.done = s.error.has_value();
      snap.error = s.error;
      snap.message = s.message;
      return snap;
    }
  }
  const auto session = store_->load(file_id);
  if (!session) throw Error(ErrorCode::kNotFound, "unknown or expired file_id " + file_id);
  const std::size_t n = session->scenes.size();
  return {n, n, true, std::nullopt, {}};
}

SceneUpdate Service::apply_scene_change(const std::string& file_id, std::size_t scene_index,
                                        const std::string& action, std::string_view note,
                                        const std::function<void(const Session&, SceneState&)>& change) {
  const auto lock_ptr = session_lock(file_id);
  std::lock_guard lock(*lock_ptr);

  auto session = store_->load(file_id);
  if (!session) throw Error(ErrorCode::kNotFound, "unknown or expired file_id " + file_id);
  if (scene_index >= session->scenes.size() || scene_index >= session->report.verdicts.size()) {
    throw Error(ErrorCode::kBadRequest, "scene index " + std::to_string(scene_index) + " out of range (" +
                                            std::to_string(session->scenes.size()) + " scenes)");
  }

  SceneState state;
  state.scene = session->scenes[scene_index];
  state.machine = store_->machine_verdict(file_id, scene_index).value_or(session->report.verdicts[scene_index]);
  state.human = store_->human_verdict(file_id, scene_index);
  const SceneVerdict before = session->report.verdicts[scene_index];

  change(*session, state);

  Report& report = session->report;
  const SceneVerdict effective = state.human ? *state.human : state.machine;
  report.verdicts[scene_index] = effective;
  report.timeline[scene_index].span = state.scene.span;
  report.timeline[scene_index].heading = state.scene.heading;
  refresh_report(report);

  AuditEntry audit;
  audit.file_id = file_id;
  audit.scene_index = scene_index;
  audit.at = clock_();
  audit.action = action;
  audit.before = verdict_to_json(before);
  audit.after = verdict_to_json(effective);
  audit.note = std::string(note);
  store_->update_scene(file_id, report, state.scene, state.machine, state.human, &audit);
  return {effective, std::move(report)};
}

SceneUpdate Service::reanalyze_scene(const std::string& file_id, std::size_t scene_index,
                                     std::string_view edited_text) {
  return apply_scene_change(file_id, scene_index, "reanalyze", {},
                            [&](const Session& session, SceneState& state) {
                              const DecodedDocument doc = make_decoded(edited_text, EncodingId::kUtf8);
                              std::vector<std::string> lines = doc.lines;
                              if (edited_text.empty()) lines.clear();
                              state.scene = make_scene(scene_index, state.scene.heading, std::move(lines),
                                                       state.scene.span.start_line);
                              state.machine = analyze_scene(state.scene, analyzer_for(session.analyzer));
                            });
}

SceneUpdate Service::override_verdict(const std::string& file_id, std::size_t scene_index, Rating rating,
                                      std::string_view note) {
  return apply_scene_change(file_id, scene_index, "override", note,
                            [&](const Session&, SceneState& state) {
                              state.human = human_verdict_for(state.machine, rating, note);
                            });
}

SceneUpdate Service::clear_override(const std::string& file_id, std::size_t scene_index,
                                    std::string_view note) {
  return apply_scene_change(file_id, scene_index, "clear_override", note,
                            [](const Session&, SceneState& state) { state.human.reset(); });
}

void Service::save(const std::string& file_id) {
  const auto lock_ptr = session_lock(file_id);
  std::lock_guard lock(*lock_ptr);
  store_->set_saved(file_id, true);
}

std::size_t Service::expire_sessions(TimePoint now) {
  const TimePoint cutoff = now - config_.retention;
  const std::size_t deleted = store_->delete_unsaved_before(cutoff);
  std::lock_guard lock(mutex_);
  for (auto it = uploads_.begin(); it != uploads_.end();) {
    if (it->second->error && it->second->started < cutoff) {
      it = uploads_.erase(it);
    } else {
      ++it;
    }
  }
  for (auto it = session_locks_.begin(); it != session_locks_.end();) {
    if (it->second.use_count() == 1 && !store_->exists(it->first)) {
      it = session_locks_.erase(it);
    } else {
      ++it;
    }
  }
  return deleted;
}

std::vector<AuditEntry> Service::audit_trail(const std::string& file_id) const {
  if (!store_->exists(file_id)) throw Error(ErrorCode::kNotFound, "unknown or expired file_id " + file_id);
  return store_->audit_trail(file_id);
}

}  // namespace qwerty
