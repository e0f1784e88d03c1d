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

#include "bwe/eval.h"

#include <json.hpp>
#include <spdlog/spdlog.h>
#include <sys/utsname.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "bwe/loss.h"

namespace bwe {

Pipeline FromFunction(std::function<AudioBuffer(const AudioBuffer&)> f) {
  return [f = std::move(f)](const LabeledClip& c) { return f(c.lb); };
}

PitchMode ParsePitchMode(const std::string& s) {
  if (s == "oracle") return PitchMode::kOracle;
  if (s == "estimate" || s == "estimated") return PitchMode::kEstimate;
  if (s == "file") return PitchMode::kFile;
  throw std::invalid_argument("unknown pitch source '" + s + "' (oracle, estimate, file)");
}

const std::vector<std::string>& PipelineNames() {
  static const std::vector<std::string> names{"null",       "sbr",         "ddsp-mono",
                                              "ddsp-noise", "ddsp-cyclic", "ddsp-poly"};
  return names;
}

namespace {

std::unique_ptr<PitchProvider> ProviderFor(const PipelineOptions& o, const LabeledClip& c) {
  switch (o.pitch) {
    case PitchMode::kOracle:
      if (!c.has_truth) throw DataError("clip " + c.id + " has no ground-truth pitch");
      return MakeFixedProvider(c.truth);
    case PitchMode::kEstimate:
      return MakeEstimatorProvider();
    case PitchMode::kFile:
      // A directory holds one <clip id>.csv per clip.
      if (std::filesystem::is_directory(o.pitch_file)) {
        return MakeFileProvider((std::filesystem::path(o.pitch_file) / (c.id + ".csv")).string());
      }
      return MakeFileProvider(o.pitch_file);
  }
  throw std::logic_error("unreachable");
}

const Controller& NeedCheckpoint(const PipelineOptions& o, std::initializer_list<Variant> ok) {
  if (!o.checkpoint) throw std::invalid_argument(o.model + " needs a checkpoint");
  const Variant v = o.checkpoint->config().variant;
  if (std::find(ok.begin(), ok.end(), v) == ok.end()) {
    throw std::invalid_argument(o.model + " cannot run a " + VariantName(v) + " checkpoint");
  }
  return *o.checkpoint;
}

}  // namespace

Pipeline MakePipeline(const PipelineOptions& o) {
  const std::string& m = o.model;
  if (m == "null") return FromFunction(BweNull);
  if (m == "sbr") {
    o.sbr.Validate();
    return [o](const LabeledClip& c) {
      return BweSbr(c.lb, o.sbr, o.sbr.phase == SbrPhase::kOracle ? &c.wb : nullptr);
    };
  }
  if (m == "ddsp-mono" || m == "ddsp-noise") {
    NeedCheckpoint(o, m == "ddsp-mono" ? std::initializer_list<Variant>{Variant::kMonoDec}
                                       : std::initializer_list<Variant>{Variant::kNoiseOnly});
    return [o](const LabeledClip& c) {
      return BweDdspMono(c.lb, *o.checkpoint, *ProviderFor(o, c), o.seed);
    };
  }
  if (m == "ddsp-cyclic") {
    NeedCheckpoint(o, {Variant::kMonoDec});
    if (o.iterations < 1) throw std::invalid_argument("cyclic: iterations must be >= 1");
    return [o](const LabeledClip& c) {
      return BweDdspCyclic(c.lb, *o.checkpoint, *ProviderFor(o, c), o.iterations, o.seed);
    };
  }
  if (m == "ddsp-poly") {
    NeedCheckpoint(o, {Variant::kPolyDec});
    return [o](const LabeledClip& c) {
      return BweDdspPoly(c.lb, *o.checkpoint, *ProviderFor(o, c), o.seed);
    };
  }
  throw std::invalid_argument("unknown model '" + m + "'");
}

MetricSummary Summarize(const std::string& model, const std::vector<MetricRecord>& records) {
  MetricSummary s;
  s.model = model;
  s.count = records.size();
  if (records.empty()) return s;
  for (const auto& r : records) {
    s.mean_lsd += r.lsd;
    s.mean_realtime_pct += r.realtime_pct;
  }
  const double n = static_cast<double>(records.size());
  s.mean_lsd /= n;
  s.mean_realtime_pct /= n;
  if (records.size() > 1) {
    double ss = 0.0;
    for (const auto& r : records) ss += (r.lsd - s.mean_lsd) * (r.lsd - s.mean_lsd);
    s.std_lsd = std::sqrt(ss / (n - 1.0));
  }
  return s;
}

std::vector<MetricRecord> Evaluate(const std::string& model, const Pipeline& pipeline,
                                   const std::vector<LabeledClip>& clips,
                                   const EvalOptions& options) {
  if (clips.empty()) throw DataError("evaluate: no clips to score");
  std::vector<MetricRecord> out(clips.size());
  std::vector<std::exception_ptr> errors(clips.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < clips.size();) {
      try {
        const LabeledClip& c = clips[i];
        const auto t0 = std::chrono::steady_clock::now();
        const AudioBuffer y = pipeline(c);
        const auto t1 = std::chrono::steady_clock::now();
        if (y.size() != c.wb.size()) {
          throw std::runtime_error("pipeline " + model + " changed the length of " + c.id);
        }
        MetricRecord& r = out[i];
        r.clip_id = c.id;
        r.model = model;
        r.lsd = Lsd(c.wb, y, options.lsd);
        r.runtime_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        const double dur_ms = 1000.0 * c.wb.size() / c.wb.sample_rate;
        r.realtime_pct = 100.0 * r.runtime_ms / dur_ms;
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int jobs = std::clamp(options.jobs, 1, static_cast<int>(clips.size()));
  if (jobs == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

void WriteMetricsCsv(const std::string& path, const std::vector<MetricRecord>& records) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write " + path);
  f << "clip_id,model,lsd,runtime_ms,realtime_pct\n" << std::setprecision(10);
  for (const auto& r : records) {
    f << r.clip_id << ',' << r.model << ',' << r.lsd << ',' << r.runtime_ms << ','
      << r.realtime_pct << '\n';
  }
}

void WriteMetricsJsonl(const std::string& path, const std::vector<MetricRecord>& records) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write " + path);
  for (const auto& r : records) {
    nlohmann::json j{{"clip_id", r.clip_id},
                     {"model", r.model},
                     {"lsd", r.lsd},
                     {"runtime_ms", r.runtime_ms},
                     {"realtime_pct", r.realtime_pct}};
    f << j.dump() << '\n';
  }
}

std::vector<MetricRecord> ReadMetricsCsv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot read " + path);
  std::string line;
  if (!std::getline(f, line) || line != "clip_id,model,lsd,runtime_ms,realtime_pct") {
    throw DataError(path + ": not a metrics file");
  }
  std::vector<MetricRecord> out;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream in(line);
    MetricRecord r;
    std::string lsd, ms, pct;
    if (!std::getline(in, r.clip_id, ',') || !std::getline(in, r.model, ',') ||
        !std::getline(in, lsd, ',') || !std::getline(in, ms, ',') || !std::getline(in, pct)) {
      throw DataError(path + ": malformed row '" + line + "'");
    }
    try {
      r.lsd = std::stod(lsd);
      r.runtime_ms = std::stod(ms);
      r.realtime_pct = std::stod(pct);
    } catch (const std::exception&) {
      throw DataError(path + ": malformed number in '" + line + "'");
    }
    out.push_back(r);
  }
  return out;
}

std::string CompareTable(const std::vector<MetricSummary>& summaries) {
  auto sorted = summaries;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const auto& a, const auto& b) { return a.mean_lsd < b.mean_lsd; });
  std::ostringstream os;
  os << std::left << std::setw(5) << "rank" << std::setw(14) << "model" << std::right
     << std::setw(7) << "clips" << std::setw(10) << "lsd" << std::setw(9) << "sd"
     << std::setw(12) << "rt_pct" << '\n';
  os << std::fixed;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const auto& s = sorted[i];
    os << std::left << std::setw(5) << i + 1 << std::setw(14) << s.model << std::right
       << std::setw(7) << s.count << std::setprecision(3) << std::setw(10) << s.mean_lsd
       << std::setw(9) << s.std_lsd << std::setprecision(2) << std::setw(12)
       << s.mean_realtime_pct << '\n';
  }
  return os.str();
}

EnvironmentInfo Fingerprint() {
  EnvironmentInfo e;
  std::ifstream cpuinfo("/proc/cpuinfo");
  for (std::string line; std::getline(cpuinfo, line);) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) e.cpu = line.substr(colon + 2);
      break;
    }
  }
  if (e.cpu.empty()) e.cpu = "unknown";
  e.hardware_threads = std::thread::hardware_concurrency();
#if defined(__clang__)
  e.compiler = "clang " __clang_version__;
#elif defined(__GNUC__)
  e.compiler = "gcc " __VERSION__;
#else
  e.compiler = "unknown";
#endif
#if defined(__OPTIMIZE__)
  e.build_type = "optimized";
#else
  e.build_type = "debug";
#endif
  utsname u{};
  e.os = uname(&u) == 0 ? std::string(u.sysname) + " " + u.release : "unknown";
  return e;
}

std::string ToJson(const EnvironmentInfo& env) {
  return nlohmann::json{{"cpu", env.cpu},
                        {"hardware_threads", env.hardware_threads},
                        {"compiler", env.compiler},
                        {"build", env.build_type},
                        {"os", env.os}}
      .dump();
}

double Quantile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

BenchResult BenchInference(const std::string& model, const Pipeline& pipeline,
                           const std::vector<LabeledClip>& clips, int repetitions, int warmup) {
  if (clips.empty()) throw DataError("bench: no clips");
  if (repetitions < 1 || warmup < 0) throw std::invalid_argument("bench: bad repetition count");
  double audio_s = 0.0;
  for (const auto& c : clips) audio_s += static_cast<double>(c.wb.size()) / c.wb.sample_rate;
  BenchResult r;
  r.model = model;
  for (int rep = 0; rep < warmup + repetitions; ++rep) {
    const auto t0 = std::chrono::steady_clock::now();
    for (const auto& c : clips) {
      const AudioBuffer y = pipeline(c);
      if (y.size() != c.lb.size()) throw std::runtime_error("bench: length changed");
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (rep >= warmup) r.realtime_pct.push_back(100.0 * s / audio_s);
  }
  r.median_pct = Quantile(r.realtime_pct, 0.5);
  r.q1_pct = Quantile(r.realtime_pct, 0.25);
  r.q3_pct = Quantile(r.realtime_pct, 0.75);
  spdlog::debug("bench {}: median {:.2f}% iqr {:.2f}", model, r.median_pct, r.iqr_pct());
  return r;
}

}  // namespace bwe
