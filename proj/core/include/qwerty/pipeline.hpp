#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "qwerty/analyzer.hpp"
#include "qwerty/ingest.hpp"
#include "qwerty/report.hpp"
#include "qwerty/segmenter.hpp"

namespace qwerty {

// Updated once per finished batch. completed never decreases.
struct Progress {
  std::atomic<std::size_t> completed{0};
  std::atomic<std::size_t> total{0};
  std::atomic<bool> done{false};
};

struct PipelineOptions {
  DetectionOptions detection;
  SegmenterOptions segmenter;
  std::size_t workers = 4;
};

struct PipelineResult {
  DecodedDocument document;
  std::vector<Scene> scenes;
  Report report;
};

// ingest -> segment -> analyze (batched, bounded parallelism) -> aggregate.
// file_id empty means "generate one".
PipelineResult run_pipeline(const RawDocument& raw, const Analyzer& analyzer,
                            const PipelineOptions& options, Progress* progress = nullptr,
                            std::string file_id = {});

// Analyze already-segmented scenes; verdicts come back in scene order.
std::vector<SceneVerdict> analyze_scenes(std::span<const Scene> scenes, const Analyzer& analyzer,
                                         std::size_t workers, Progress* progress = nullptr);

}  // namespace qwerty
