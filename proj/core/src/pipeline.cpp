#include "qwerty/pipeline.hpp"

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>

#include "qwerty/error.hpp"

namespace qwerty {

std::vector<SceneVerdict> analyze_scenes(std::span<const Scene> scenes, const Analyzer& analyzer,
                                         std::size_t workers, Progress* progress) {
  const std::vector<SceneBatch> batches = batch_scenes(scenes, analyzer.config());
  std::vector<SceneVerdict> verdicts(scenes.size());
  if (progress) progress->total.store(scenes.size());

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto work = [&] {
    for (std::size_t b = next.fetch_add(1); b < batches.size(); b = next.fetch_add(1)) {
      try {
        std::vector<Scene> batch;
        batch.reserve(batches[b].size());
        for (std::size_t i : batches[b]) batch.push_back(scenes[i]);
        std::vector<SceneVerdict> out = analyzer.analyze_batch(batch);
        for (std::size_t k = 0; k < batches[b].size(); ++k) verdicts[batches[b][k]] = std::move(out[k]);
        if (progress) progress->completed.fetch_add(batches[b].size());
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };

  const std::size_t n = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(batches.size(), 1));
  if (n == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n);
    for (std::size_t i = 0; i < n; ++i) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
  return verdicts;
}

PipelineResult run_pipeline(const RawDocument& raw, const Analyzer& analyzer,
                            const PipelineOptions& options, Progress* progress, std::string file_id) {
  PipelineResult result;
  result.document = ingest(raw, options.detection);
  result.scenes = segment(result.document, options.segmenter);
  const std::vector<SceneVerdict> verdicts =
      analyze_scenes(result.scenes, analyzer, options.workers, progress);
  result.report = build_report(std::move(file_id), result.scenes, verdicts);
  if (progress) progress->done.store(true);
  return result;
}

}  // namespace qwerty
