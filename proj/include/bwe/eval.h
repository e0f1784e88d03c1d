// Copyright 2026 The bwe-lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef BWE_EVAL_H_
#define BWE_EVAL_H_

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "bwe/controller.h"
#include "bwe/pipeline.h"
#include "bwe/train.h"

namespace bwe {

// Anything that turns a clip's low band into a wide-band estimate. The clip
// is passed whole so oracle pipelines can read its reference pitch or audio.
using Pipeline = std::function<AudioBuffer(const LabeledClip&)>;

// Wraps a plain low-band -> wide-band function.
Pipeline FromFunction(std::function<AudioBuffer(const AudioBuffer&)> f);

enum class PitchMode { kOracle, kEstimate, kFile };
PitchMode ParsePitchMode(const std::string& s);  // "oracle", "estimate", "file"

struct PipelineOptions {
  // null, sbr, ddsp-mono, ddsp-noise, ddsp-cyclic, ddsp-poly
  std::string model = "null";
  std::shared_ptr<const Controller> checkpoint;
  SbrConfig sbr;
  int iterations = 5;
  PitchMode pitch = PitchMode::kOracle;
  std::string pitch_file;  // kFile only: a CSV, or a directory of <clip id>.csv
  std::uint64_t seed = 0;
};

const std::vector<std::string>& PipelineNames();

// Throws std::invalid_argument for unknown names or a checkpoint whose
// variant does not fit the pipeline.
Pipeline MakePipeline(const PipelineOptions& options);

struct MetricRecord {
  std::string clip_id;
  std::string model;
  double lsd = 0.0;
  double runtime_ms = 0.0;
  double realtime_pct = 0.0;
};

struct MetricSummary {
  std::string model;
  std::size_t count = 0;
  double mean_lsd = 0.0;
  double std_lsd = 0.0;  // sample standard deviation
  double mean_realtime_pct = 0.0;
};

MetricSummary Summarize(const std::string& model, const std::vector<MetricRecord>& records);

struct EvalOptions {
  int jobs = 1;  // worker cap; results keep clip order regardless
  LsdOptions lsd;
};

// Scores every clip against its wide-band reference. Throws DataError for an
// empty clip list.
std::vector<MetricRecord> Evaluate(const std::string& model, const Pipeline& pipeline,
                                   const std::vector<LabeledClip>& clips,
                                   const EvalOptions& options = {});

void WriteMetricsCsv(const std::string& path, const std::vector<MetricRecord>& records);
void WriteMetricsJsonl(const std::string& path, const std::vector<MetricRecord>& records);
std::vector<MetricRecord> ReadMetricsCsv(const std::string& path);

// Plain-text ranking by mean LSD, best first.
std::string CompareTable(const std::vector<MetricSummary>& summaries);

struct EnvironmentInfo {
  std::string cpu;
  unsigned hardware_threads = 0;
  std::string compiler;
  std::string build_type;
  std::string os;
};
EnvironmentInfo Fingerprint();
std::string ToJson(const EnvironmentInfo& env);

struct BenchResult {
  std::string model;
  std::vector<double> realtime_pct;  // one per measured repetition
  double median_pct = 0.0;
  double q1_pct = 0.0;
  double q3_pct = 0.0;
  double iqr_pct() const { return q3_pct - q1_pct; }
};

// Each repetition processes every clip once; its score is the total wall
// time over the total audio duration. Warmup repetitions are discarded.
BenchResult BenchInference(const std::string& model, const Pipeline& pipeline,
                           const std::vector<LabeledClip>& clips, int repetitions,
                           int warmup = 1);

// Linear-interpolated quantile of unsorted values, q in [0, 1].
double Quantile(std::vector<double> v, double q);

}  // namespace bwe

#endif  // BWE_EVAL_H_
