#include "cli/cli.hpp"

#include <signal.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <sstream>

#include "CLI11.hpp"
#include "cli/eval_files.hpp"
#include "json.hpp"
#include "qwerty/analyzer.hpp"
#include "qwerty/evalkit.hpp"
#include "qwerty/pipeline.hpp"
#include "qwerty/report.hpp"
#include "qwerty/service.hpp"

namespace qwerty::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

// Raised for problems detected before any input is processed.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AnalyzeOptions {
  std::vector<std::string> inputs;
  std::string analyzer = "rules";
  std::string lexicon;
  std::string severity_map;
  std::string out;
  std::string format = "table";
  std::string input_format = "auto";
  std::string encoding;
  std::size_t workers = 4;
  std::size_t max_window = 1800;
  std::size_t overlap = 200;
  std::string mock_fixture;
  std::string model_addr;
};

struct SegmentOptions {
  std::string input;
  std::string format = "table";
  std::string input_format = "auto";
  std::string encoding;
  bool boundaries = false;
};

struct EvalOptions {
  std::string predicted;
  std::string truth;
  std::string format = "table";
  bool segmentation = false;
  std::size_t tolerance = 0;
  std::size_t bootstrap = 0;
  std::uint64_t seed = 42;
  std::size_t threads = 1;
};

struct ServeOptions {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string db = ":memory:";
  double retention_hours = 24;
  std::string analyzer = "rules";
  std::string lexicon;
  std::string mock_fixture;
  std::string model_addr;
  std::size_t max_uploads = 4;
  std::size_t workers = 4;
  std::size_t expiry_seconds = 600;
};

std::optional<std::vector<std::uint8_t>> read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

std::string model_address(const std::string& flag) {
  if (!flag.empty()) return flag;
  const char* env = std::getenv("QWERTY_MODEL_ADDR");
  return env ? env : "";
}

DetectionOptions detection_options(const std::string& encoding) {
  DetectionOptions d;
  if (!encoding.empty()) {
    const auto id = parse_encoding_id(encoding);
    if (!id) throw UsageError("unknown encoding '" + encoding + "'");
    d.forced = *id;
  }
  return d;
}

FormatHint format_hint(const std::string& text) {
  const auto hint = parse_format_hint(text);
  if (!hint) throw UsageError("unknown input format '" + text + "'");
  return *hint;
}

AnalyzerConfig analyzer_config(const AnalyzeOptions& o) {
  AnalyzerConfig c;
  const auto kind = parse_analyzer_kind(o.analyzer);
  if (!kind) throw UsageError("unknown analyzer '" + o.analyzer + "'");
  c.kind = *kind;
  c.window = {o.max_window, o.overlap};
  if (!o.severity_map.empty()) {
    std::ifstream in(o.severity_map);
    if (!in) throw UsageError("cannot read severity map " + o.severity_map);
    std::stringstream ss;
    ss << in.rdbuf();
    c.severity_map = load_severity_map(ss.str());
  }
  validate(c);
  return c;
}

std::unique_ptr<Analyzer> build_analyzer(const AnalyzeOptions& o) {
  const AnalyzerConfig config = analyzer_config(o);
  std::shared_ptr<const Lexicon> lexicon =
      o.lexicon.empty() ? default_lexicon() : std::make_shared<const Lexicon>(load_lexicon_file(o.lexicon));
  std::shared_ptr<CompletionClient> client;
  if (config.kind == AnalyzerKind::kMock) {
    if (o.mock_fixture.empty()) throw UsageError("--analyzer mock requires --mock-fixture");
    client = MockCompletionClient::from_file(o.mock_fixture);
  } else if (config.kind == AnalyzerKind::kModel) {
    const std::string address = model_address(o.model_addr);
    if (address.empty()) throw UsageError("--analyzer model requires --model-addr or QWERTY_MODEL_ADDR");
    client = std::make_shared<TcpCompletionClient>(parse_endpoint(address));
  }
  return make_analyzer(std::move(lexicon), config, std::move(client));
}

fs::path report_path(const AnalyzeOptions& o, const fs::path& input) {
  const std::string name = input.stem().string() + ".report.json";
  if (o.out.empty()) return input.parent_path() / name;
  const fs::path out(o.out);
  if (o.inputs.size() > 1 || fs::is_directory(out)) return out / name;
  return out;
}

std::string fixed(double v, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

int cmd_analyze(const AnalyzeOptions& o, std::ostream& out, std::ostream& err) {
  const auto analyzer = build_analyzer(o);
  PipelineOptions pipeline;
  pipeline.workers = std::max<std::size_t>(1, o.workers);
  pipeline.detection = detection_options(o.encoding);
  const FormatHint hint = format_hint(o.input_format);
  if (o.inputs.size() > 1 && !o.out.empty()) fs::create_directories(o.out);

  struct Row {
    std::string file, rating;
    std::size_t problematic = 0, scenes = 0;
    double seconds = 0;
    bool degraded = false;
  };
  std::vector<Row> rows;
  int status = kExitOk;
  std::size_t total_scenes = 0;
  double total_seconds = 0;

  for (const std::string& path : o.inputs) {
    auto bytes = read_bytes(path);
    if (!bytes) {
      err << "error: cannot read " << path << "\n";
      status = kExitDataError;
      continue;
    }
    RawDocument raw;
    raw.filename = fs::path(path).filename().string();
    raw.format_hint = hint;
    const std::string file_id =
        derived_file_id(std::string_view(reinterpret_cast<const char*>(bytes->data()), bytes->size()));
    raw.bytes = std::move(*bytes);
    try {
      const auto start = std::chrono::steady_clock::now();
      const PipelineResult result = run_pipeline(raw, *analyzer, pipeline, nullptr, file_id);
      const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      const fs::path target = report_path(o, path);
      std::ofstream file(target, std::ios::binary);
      file << report_to_json(result.report) << "\n";
      if (!file) {
        err << "error: cannot write " << target.string() << "\n";
        status = kExitDataError;
        continue;
      }
      const Report& r = result.report;
      rows.push_back({path, std::string(to_string(r.overall_rating)), r.statistics.problematic_sentences,
                      r.statistics.total_sentences, seconds, r.degraded});
      total_scenes += r.statistics.total_sentences;
      total_seconds += seconds;
    } catch (const Error& e) {
      err << "error: " << path << ": " << error_code_name(e.code()) << ": " << e.what() << "\n";
      status = kExitDataError;
    }
  }

  const double rate = total_seconds > 0 ? static_cast<double>(total_scenes) / total_seconds : 0.0;
  if (o.format == "json") {
    json arr = json::array();
    for (const Row& r : rows) {
      arr.push_back({{"file", r.file}, {"rating", r.rating}, {"problematic", r.problematic},
                     {"scenes", r.scenes}, {"elapsed_s", r.seconds}, {"degraded", r.degraded}});
    }
    out << json{{"files", arr}, {"elapsed_s", total_seconds}, {"scenes_per_s", rate}}.dump(2) << "\n";
  } else if (o.format == "lines") {
    for (const Row& r : rows) {
      out << r.file << '\t' << r.rating << '\t' << r.problematic << '\t' << r.scenes << '\t'
          << fixed(r.seconds, 4) << '\n';
    }
  } else {
    std::size_t width = 4;
    for (const Row& r : rows) width = std::max(width, r.file.size());
    out << std::left << std::setw(static_cast<int>(width)) << "file" << "  rating  problematic  scenes  elapsed_s\n";
    for (const Row& r : rows) {
      out << std::left << std::setw(static_cast<int>(width)) << r.file << "  " << std::setw(6) << r.rating
          << "  " << std::right << std::setw(11) << r.problematic << "  " << std::setw(6) << r.scenes << "  "
          << std::setw(9) << fixed(r.seconds, 3) << (r.degraded ? "  (degraded)" : "") << "\n"
          << std::left;
    }
    out << "total: " << total_scenes << " scenes in " << fixed(total_seconds, 3) << " s ("
        << fixed(rate, 1) << " scenes/s)\n";
  }
  return status;
}

int cmd_segment(const SegmentOptions& o, std::ostream& out, std::ostream& err) {
  const DetectionOptions detection = detection_options(o.encoding);
  const FormatHint hint = format_hint(o.input_format);
  auto bytes = read_bytes(o.input);
  if (!bytes) {
    err << "error: cannot read " << o.input << "\n";
    return kExitDataError;
  }
  RawDocument raw{std::move(*bytes), fs::path(o.input).filename().string(), hint};
  std::vector<Scene> scenes;
  try {
    scenes = segment(ingest(raw, detection));
  } catch (const Error& e) {
    err << "error: " << o.input << ": " << error_code_name(e.code()) << ": " << e.what() << "\n";
    return kExitDataError;
  }

  if (o.boundaries) {
    const std::string doc_id = fs::path(o.input).stem().string();
    for (std::size_t line : scene_boundaries(scenes)) out << doc_id << '\t' << line << '\n';
    return kExitOk;
  }
  if (o.format == "json") {
    json arr = json::array();
    for (const Scene& s : scenes) {
      arr.push_back({{"index", s.index}, {"heading", s.heading}, {"start_line", s.span.start_line},
                     {"end_line", s.span.end_line}, {"token_estimate", s.token_estimate}});
    }
    out << arr.dump(2) << "\n";
  } else if (o.format == "lines") {
    for (const Scene& s : scenes) {
      out << s.index << '\t' << s.span.start_line << '\t' << s.span.end_line << '\t' << s.heading << '\n';
    }
  } else {
    out << "scene  lines        tokens  heading\n";
    for (const Scene& s : scenes) {
      std::ostringstream span;
      span << s.span.start_line << "-" << s.span.end_line;
      out << std::right << std::setw(5) << s.index << "  " << std::left << std::setw(11) << span.str() << "  "
          << std::right << std::setw(6) << s.token_estimate << "  "
          << (s.heading.empty() ? "(no heading)" : s.heading) << "\n";
    }
  }
  return kExitOk;
}

template <typename Fn>
auto with_file(const std::string& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  return fn(in);
}

void print_prf(std::ostream& out, const std::string& name, const eval::Prf& p) {
  out << std::left << std::setw(16) << name << std::right << std::setw(10) << fixed(p.precision, 3)
      << std::setw(10) << fixed(p.recall, 3) << std::setw(10) << fixed(p.f1, 3) << "\n";
}

json prf_json(const eval::Prf& p) { return {{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}}; }

int eval_segmentation(const EvalOptions& o, std::ostream& out) {
  const auto pred = with_file(o.predicted, [](std::istream& in) { return read_boundary_rows(in); });
  const auto truth = with_file(o.truth, [](std::istream& in) { return read_boundary_rows(in); });
  for (const auto& [doc, _] : pred) {
    if (!truth.count(doc)) throw std::runtime_error("doc_id '" + doc + "' has no truth boundaries");
  }
  for (const auto& [doc, _] : truth) {
    if (!pred.count(doc)) throw std::runtime_error("doc_id '" + doc + "' has no predicted boundaries");
  }
  eval::Prf mean;
  json docs = json::object();
  if (o.format != "json") out << std::left << std::setw(16) << "doc_id" << std::right << std::setw(10)
                              << "precision" << std::setw(10) << "recall" << std::setw(10) << "f1" << "\n";
  for (const auto& [doc, p] : pred) {
    const eval::Prf prf = eval::seg_boundary_prf(p, truth.at(doc), o.tolerance);
    mean.precision += prf.precision / static_cast<double>(pred.size());
    mean.recall += prf.recall / static_cast<double>(pred.size());
    mean.f1 += prf.f1 / static_cast<double>(pred.size());
    docs[doc] = prf_json(prf);
    if (o.format != "json") print_prf(out, doc, prf);
  }
  if (o.format == "json") {
    out << json{{"documents", docs}, {"macro", prf_json(mean)}, {"tolerance", o.tolerance}}.dump(2) << "\n";
  } else {
    print_prf(out, "macro", mean);
  }
  return kExitOk;
}

int eval_ratings(const EvalOptions& o, std::ostream& out) {
  std::vector<PairedRow> rows;
  if (o.truth.empty()) {
    rows = with_file(o.predicted, [](std::istream& in) { return read_paired_rows(in); });
  } else {
    const auto pred = with_file(o.predicted, [](std::istream& in) { return read_rating_rows(in); });
    const auto truth = with_file(o.truth, [](std::istream& in) { return read_rating_rows(in); });
    rows = join_rows(pred, truth);
  }
  std::vector<eval::RatingPair> pairs;
  bool labelled = !rows.empty();
  std::vector<std::optional<Category>> pred_labels, truth_labels;
  for (const PairedRow& r : rows) {
    pairs.push_back({r.truth.rating, r.predicted.rating});
    labelled = labelled && r.truth.has_label && r.predicted.has_label;
    pred_labels.push_back(r.predicted.label);
    truth_labels.push_back(r.truth.label);
  }
  const auto [cm, summary] = eval::rating_eval(pairs);

  std::optional<eval::Interval> acc_ci, mae_ci;
  if (o.bootstrap > 0) {
    acc_ci = eval::bootstrap_ci(pairs, eval::Metric::kAccuracy, o.bootstrap, o.seed, o.threads);
    mae_ci = eval::bootstrap_ci(pairs, eval::Metric::kMae, o.bootstrap, o.seed, o.threads);
  }
  std::optional<eval::CategoryReport> categories;
  if (labelled) categories = eval::category_prf(pred_labels, truth_labels);

  if (o.format == "json") {
    json j;
    j["n"] = pairs.size();
    j["accuracy"] = summary.accuracy;
    j["within_one"] = summary.within_one;
    j["mae"] = summary.mae;
    json grid = json::array();
    for (const auto& row : cm.counts) grid.push_back(row);
    j["confusion"] = grid;
    if (acc_ci) {
      j["bootstrap"] = {{"iterations", o.bootstrap},
                        {"seed", o.seed},
                        {"accuracy", {acc_ci->low, acc_ci->high}},
                        {"mae", {mae_ci->low, mae_ci->high}}};
    }
    if (categories) {
      json c;
      for (std::size_t i = 0; i < kAllCategories.size(); ++i) {
        c[std::string(to_string(kAllCategories[i]))] = prf_json(categories->per_category[i]);
      }
      c["macro"] = prf_json(categories->macro);
      j["categories"] = c;
    }
    out << j.dump(2) << "\n";
    return kExitOk;
  }

  out << "pairs:       " << pairs.size() << "\n"
      << "accuracy:    " << fixed(100 * summary.accuracy, 1) << "% (" << cm.trace() << "/" << cm.total() << ")\n"
      << "within +-1:  " << fixed(100 * summary.within_one, 1) << "%\n"
      << "MAE:         " << fixed(summary.mae, 3) << " levels\n";
  if (acc_ci) {
    out << "bootstrap:   " << o.bootstrap << " iterations, seed " << o.seed << "\n"
        << "  accuracy 95% CI [" << fixed(acc_ci->low, 3) << ", " << fixed(acc_ci->high, 3) << "]\n"
        << "  MAE 95% CI      [" << fixed(mae_ci->low, 3) << ", " << fixed(mae_ci->high, 3) << "]\n";
  }
  out << "\nconfusion (rows = truth, columns = predicted)\n      ";
  for (Rating r : kAllRatings) out << std::setw(6) << to_string(r);
  out << "\n";
  for (Rating t : kAllRatings) {
    out << std::setw(6) << to_string(t);
    for (Rating p : kAllRatings) out << std::setw(6) << cm.counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
    out << "\n";
  }
  if (categories) {
    out << "\n" << std::left << std::setw(16) << "category" << std::right << std::setw(10) << "precision"
        << std::setw(10) << "recall" << std::setw(10) << "f1" << "\n";
    for (std::size_t i = 0; i < kAllCategories.size(); ++i) {
      print_prf(out, std::string(to_string(kAllCategories[i])), categories->per_category[i]);
    }
    print_prf(out, "macro", categories->macro);
  }
  return kExitOk;
}

int cmd_eval(const EvalOptions& o, std::ostream& out, std::ostream& err) {
  if (o.segmentation && o.truth.empty()) throw UsageError("--segmentation needs PRED and TRUTH files");
  try {
    return o.segmentation ? eval_segmentation(o, out) : eval_ratings(o, out);
  } catch (const RowError& e) {
    err << "error: " << e.what() << "\n";
  } catch (const Error& e) {
    err << "error: " << error_code_name(e.code()) << ": " << e.what() << "\n";
  } catch (const std::runtime_error& e) {
    err << "error: " << e.what() << "\n";
  }
  return kExitDataError;
}

int cmd_serve(const ServeOptions& o, std::ostream& out) {
  ServiceConfig config;
  const auto kind = parse_analyzer_kind(o.analyzer);
  if (!kind) throw UsageError("unknown analyzer '" + o.analyzer + "'");
  config.analyzer.kind = *kind;
  config.pipeline.workers = std::max<std::size_t>(1, o.workers);
  config.retention = std::chrono::duration_cast<std::chrono::hours>(
      std::chrono::duration<double, std::ratio<3600>>(o.retention_hours));
  config.max_concurrent_uploads = o.max_uploads;
  config.database_path = o.db;
  config.lexicon_path = o.lexicon;
  config.mock_fixture = o.mock_fixture;
  config.model_address = model_address(o.model_addr);
  if (*kind == AnalyzerKind::kMock && o.mock_fixture.empty()) {
    throw UsageError("--analyzer mock requires --mock-fixture");
  }
  if (*kind == AnalyzerKind::kModel && config.model_address.empty()) {
    throw UsageError("--analyzer model requires --model-addr or QWERTY_MODEL_ADDR");
  }

  // Handle SIGINT/SIGTERM on a dedicated thread so shutdown can call stop().
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  Service service(config);
  HttpServer server(service, {o.host, o.port, std::chrono::seconds(o.expiry_seconds)});
  const int port = server.start();
  out << "listening on http://" << o.host << ":" << port << std::endl;
  int sig = 0;
  sigwait(&signals, &sig);
  server.stop();
  service.wait_idle();
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Screenplay content rating toolkit", "qwerty"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "qwerty 0.4.0");

  AnalyzeOptions analyze;
  auto* a = app.add_subcommand("analyze", "Rate documents and write JSON reports");
  a->add_option("inputs", analyze.inputs, "Input files (.txt, .docx)")->required();
  a->add_option("--analyzer", analyze.analyzer)->check(CLI::IsMember({"rules", "model", "mock"}));
  a->add_option("--lexicon", analyze.lexicon, "Lexicon file (default: built-in)");
  a->add_option("--severity-map", analyze.severity_map, "category.severity=rating overrides");
  a->add_option("--out", analyze.out, "Report file, or directory for several inputs");
  a->add_option("--format", analyze.format, "Summary format")->check(CLI::IsMember({"table", "lines", "json"}));
  a->add_option("--input-format", analyze.input_format)->check(CLI::IsMember({"auto", "txt", "docx", "pdf"}));
  a->add_option("--encoding", analyze.encoding, "Skip detection and decode with this encoding");
  a->add_option("--workers", analyze.workers)->check(CLI::Range(1, 256));
  a->add_option("--max-window", analyze.max_window, "Window size in tokens");
  a->add_option("--overlap", analyze.overlap, "Window overlap in tokens");
  a->add_option("--mock-fixture", analyze.mock_fixture, "JSON map of text hash -> completion");
  a->add_option("--model-addr", analyze.model_addr, "host:port of the inference process");

  SegmentOptions seg;
  auto* s = app.add_subcommand("segment", "Print detected scenes");
  s->add_option("input", seg.input)->required();
  s->add_option("--format", seg.format)->check(CLI::IsMember({"table", "lines", "json"}));
  s->add_option("--input-format", seg.input_format)->check(CLI::IsMember({"auto", "txt", "docx", "pdf"}));
  s->add_option("--encoding", seg.encoding);
  s->add_flag("--boundaries", seg.boundaries, "Emit doc_id/line rows for evaluation");

  EvalOptions ev;
  auto* e = app.add_subcommand("eval", "Score predictions against ground truth");
  e->add_option("predicted", ev.predicted, "Predictions, or paired truth/prediction rows")->required();
  e->add_option("truth", ev.truth, "Ground truth rows");
  e->add_option("--format", ev.format)->check(CLI::IsMember({"table", "json"}));
  e->add_flag("--segmentation", ev.segmentation, "Inputs are boundary files");
  e->add_option("--tolerance", ev.tolerance, "Boundary match tolerance in lines");
  e->add_option("--bootstrap", ev.bootstrap, "Bootstrap iterations (0 = off)");
  e->add_option("--seed", ev.seed, "Bootstrap seed");
  e->add_option("--threads", ev.threads, "Bootstrap threads")->check(CLI::Range(1, 256));

  ServeOptions sv;
  auto* v = app.add_subcommand("serve", "Run the HTTP service");
  v->add_option("--host", sv.host)->envname("QWERTY_HOST");
  v->add_option("--port", sv.port)->envname("QWERTY_PORT")->check(CLI::Range(0, 65535));
  v->add_option("--db", sv.db, "SQLite path")->envname("QWERTY_DB");
  v->add_option("--retention-hours", sv.retention_hours)->envname("QWERTY_RETENTION_HOURS");
  v->add_option("--analyzer", sv.analyzer)->check(CLI::IsMember({"rules", "model", "mock"}));
  v->add_option("--lexicon", sv.lexicon)->envname("QWERTY_LEXICON");
  v->add_option("--mock-fixture", sv.mock_fixture);
  v->add_option("--model-addr", sv.model_addr);
  v->add_option("--max-uploads", sv.max_uploads)->check(CLI::Range(1, 1024));
  v->add_option("--workers", sv.workers)->check(CLI::Range(1, 256));
  v->add_option("--expiry-interval", sv.expiry_seconds, "Seconds between retention sweeps");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& pe) {
    const int code = app.exit(pe, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*a) return cmd_analyze(analyze, out, err);
    if (*s) return cmd_segment(seg, out, err);
    if (*e) return cmd_eval(ev, out, err);
    if (*v) return cmd_serve(sv, out);
  } catch (const UsageError& ue) {
    err << "error: " << ue.what() << "\n";
    return kExitUsage;
  } catch (const Error& ex) {
    err << "error: " << error_code_name(ex.code()) << ": " << ex.what() << "\n";
    switch (ex.code()) {
      case ErrorCode::kConfigError:
      case ErrorCode::kLexiconParseError:
      case ErrorCode::kInvalidArgument:
        return kExitUsage;
      default:
        return kExitDataError;
    }
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitDataError;
  }
  return kExitUsage;
}

}  // namespace qwerty::cli
