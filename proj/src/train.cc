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

#include "bwe/train.h"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>

#include "bwe/optim.h"
#include "bwe/pipeline.h"
#include "bwe/rng.h"
#include "bwe/signal.h"

namespace bwe {

namespace {

constexpr char kCacheMagic[8] = {'B', 'W', 'E', 'C', 'L', 'I', 'P', '1'};

void WriteSamples(std::ofstream& f, const std::vector<double>& v) {
  const std::uint64_t n = v.size();
  f.write(reinterpret_cast<const char*>(&n), sizeof n);
  f.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
}

bool ReadSamples(std::ifstream& f, std::vector<double>& v) {
  std::uint64_t n = 0;
  if (!f.read(reinterpret_cast<char*>(&n), sizeof n) || n > (1ull << 32)) return false;
  v.resize(n);
  return static_cast<bool>(
      f.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double))));
}

std::string CachePath(const DatasetManifest& m, const std::string& split, double cutoff_hz,
                      const std::string& dir) {
  char name[96];
  std::snprintf(name, sizeof name, "clips_%016llx_%s_%.0f.bin",
                static_cast<unsigned long long>(ManifestHash(m)), split.c_str(), cutoff_hz);
  return (std::filesystem::path(dir) / name).string();
}

// Audio pairs from a cache file, empty when missing or stale.
std::vector<std::pair<std::vector<double>, std::vector<double>>> ReadCache(
    const std::string& path, std::size_t expected) {
  std::ifstream f(path, std::ios::binary);
  char magic[8];
  std::uint64_t count = 0;
  if (!f || !f.read(magic, 8) || std::memcmp(magic, kCacheMagic, 8) != 0 ||
      !f.read(reinterpret_cast<char*>(&count), sizeof count) || count != expected) {
    return {};
  }
  std::vector<std::pair<std::vector<double>, std::vector<double>>> out(count);
  for (auto& [wb, lb] : out) {
    if (!ReadSamples(f, wb) || !ReadSamples(f, lb)) return {};
  }
  return out;
}

void WriteCache(const std::string& path, const std::vector<LabeledClip>& clips) {
  std::filesystem::create_directories(std::filesystem::path(path).parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) {
      spdlog::warn("cannot write clip cache {}", path);
      return;
    }
    f.write(kCacheMagic, 8);
    const std::uint64_t count = clips.size();
    f.write(reinterpret_cast<const char*>(&count), sizeof count);
    for (const auto& c : clips) {
      WriteSamples(f, c.wb.samples);
      WriteSamples(f, c.lb.samples);
    }
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

std::vector<LabeledClip> LoadLabeledClips(const DatasetManifest& manifest,
                                          const std::string& split,
                                          const std::string& base_dir, double cutoff_hz,
                                          int max_voices, int hop, const std::string& cache_dir) {
  const auto specs = manifest.Split(split);
  if (specs.empty()) {
    throw DataError("split '" + split + "' of the " + manifest.kind + " dataset is empty");
  }
  const std::string cache = cache_dir.empty() ? "" : CachePath(manifest, split, cutoff_hz, cache_dir);
  auto cached = cache.empty() ? decltype(ReadCache("", 0)){} : ReadCache(cache, specs.size());
  std::vector<LabeledClip> out;
  out.reserve(specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const ClipSpec* spec = specs[i];
    LabeledClip c;
    c.id = spec->id;
    if (!cached.empty()) {
      c.wb = AudioBuffer(std::move(cached[i].first), manifest.sample_rate);
      c.lb = AudioBuffer(std::move(cached[i].second), manifest.sample_rate);
    } else {
      c.wb = LoadClipAudio(*spec, base_dir, manifest.sample_rate);
      c.lb = LowPass(c.wb, cutoff_hz);
    }
    if (spec->kind != ClipKind::kCorpus) {
      c.truth = OraclePitch(*spec, PitchFrames(c.wb.size(), hop), max_voices, hop);
      c.has_truth = true;
    }
    out.push_back(std::move(c));
  }
  if (!cache.empty() && cached.empty()) WriteCache(cache, out);
  return out;
}

void TrainConfig::Validate() const {
  if (steps < 0 || batch < 1 || plateau_steps < 1 || max_halvings < 0 || !(lr0 > 0.0) ||
      !(crop_s > 0.0) || checkpoint_every < 0 || log_every < 1 || clip_norm < 0.0) {
    throw std::invalid_argument("train config: values must be positive");
  }
  mss.Validate();
}

double PlateauSchedule::Observe(std::uint64_t step, double loss) {
  if (!seen_ || loss < best_loss_) {
    seen_ = true;
    best_loss_ = loss;
    best_step_ = step;
  } else if (step - best_step_ >= static_cast<std::uint64_t>(patience_) &&
             halvings_ < max_halvings_) {
    lr_ *= 0.5;
    ++halvings_;
    best_step_ = step;
  }
  return lr_;
}

void PlateauSchedule::Restore(double lr, double best_loss, std::uint64_t best_step,
                              int halvings) {
  lr_ = lr;
  best_loss_ = best_loss;
  best_step_ = best_step;
  halvings_ = halvings;
  seen_ = std::isfinite(best_loss);
}

TrainCrop MakeCrop(const LabeledClip& clip, const ModelConfig& model, PitchSource pitch,
                   std::size_t start_frame, std::size_t n_samples) {
  const std::size_t start = start_frame * model.hop;
  if (start + n_samples > clip.wb.size()) throw std::invalid_argument("crop: past the clip end");
  auto slice = [&](const AudioBuffer& a) {
    return AudioBuffer(std::vector<double>(a.samples.begin() + start,
                                           a.samples.begin() + start + n_samples),
                       a.sample_rate);
  };
  TrainCrop c;
  c.target = slice(clip.wb);
  const AudioBuffer lb = slice(clip.lb);
  const int voices = model.voices();
  MultiPitchTrack tracks;
  tracks.max_voices = std::max(voices, 1);
  if (voices > 0) {
    if (pitch == PitchSource::kEstimated) {
      tracks = MakeEstimatorProvider()->Track(lb, voices);
    } else {
      if (!clip.has_truth) {
        throw DataError("clip " + clip.id + " has no ground-truth pitch");
      }
      const std::size_t frames = PitchFrames(n_samples, model.hop);
      for (const auto& tr : clip.truth.tracks) {
        PitchTrack cut;
        cut.hop = tr.hop;
        for (std::size_t f = 0; f < frames; ++f) {
          const std::size_t src = std::min(start_frame + f, tr.f0.size() - 1);
          cut.f0.push_back(tr.f0.empty() ? 0.0 : tr.f0[src]);
          cut.confidence.push_back(tr.confidence.empty() ? 1.0 : tr.confidence[src]);
        }
        if (cut.voiced_count() > 0) tracks.tracks.push_back(std::move(cut));
      }
      if (static_cast<int>(tracks.tracks.size()) > voices) tracks.tracks.resize(voices);
    }
  }
  c.features = ExtractFeatures(lb, tracks, model);
  return c;
}

namespace {

double CropLoss(const Controller& model, const TrainCrop& crop, const MssConfig& mss,
                std::uint64_t seed, nn::Tape& t, double scale) {
  const ControlVars v = model.Forward(t, crop.features);
  const nn::Var y = SynthesizeOp(t, v, crop.features.f0, model.config(), crop.target.size(), seed);
  nn::Var loss = MssLossOp(t, y, crop.target, mss);
  const double value = t.value(loss)(0, 0);
  if (t.requires_grad()) {
    t.Backward(nn::Scale(t, loss, scale));
  }
  return value;
}

bool GradsFinite(const nn::ParamStore& p) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!p.grad(i).allFinite()) return false;
  }
  return true;
}

}  // namespace

double EvaluateLoss(const Controller& model, const std::vector<TrainCrop>& crops,
                    const MssConfig& mss, std::uint64_t seed) {
  double total = 0.0;
  for (std::size_t i = 0; i < crops.size(); ++i) {
    nn::Tape t(false);
    total += CropLoss(model, crops[i], mss, MixSeed(seed, i), t, 1.0);
  }
  return crops.empty() ? 0.0 : total / static_cast<double>(crops.size());
}

std::vector<LossRecord> Train(Controller& model, const std::vector<LabeledClip>& clips,
                              const TrainConfig& config, const TrainRun& run) {
  config.Validate();
  if (clips.empty()) throw DataError("training split is empty");
  const ModelConfig& mc = model.config();
  auto& params = model.params();
  MssConfig mss = config.mss;
  mss.cutoff_hz = mc.cutoff_hz;

  nn::Adam adam(nn::AdamConfig{config.lr0});
  PlateauSchedule schedule(config.lr0, config.plateau_steps, config.max_halvings);
  if (run.resume) {
    const TrainingState& s = *run.resume;
    if (!s.adam_m.empty()) {
      adam.first_moments() = s.adam_m;
      adam.second_moments() = s.adam_v;
    }
    schedule.Restore(s.lr, s.best_loss, s.best_step, s.halvings);
    adam.set_lr(s.lr);
  }

  auto save = [&] {
    if (run.checkpoint_path.empty()) return;
    TrainingState s;
    s.adam_m = adam.first_moments();
    s.adam_v = adam.second_moments();
    s.lr = schedule.lr();
    s.best_loss = schedule.best_loss();
    s.best_step = schedule.best_step();
    s.halvings = schedule.halvings();
    s.train_seed = config.seed;
    SaveCheckpoint(run.checkpoint_path, model, &s);
  };

  std::ofstream log;
  if (!run.loss_log_path.empty()) {
    const bool fresh = params.step == 0;
    log.open(run.loss_log_path, fresh ? std::ios::trunc : std::ios::app);
    if (!log) throw DataError("cannot write loss log " + run.loss_log_path);
    if (fresh) log << "step,loss,lr\n";
  }

  const auto crop_len = static_cast<std::size_t>(std::llround(config.crop_s * mc.sample_rate));
  std::vector<LossRecord> records;
  while (params.step < static_cast<std::uint64_t>(config.steps)) {
    const std::uint64_t step = params.step;
    Rng rng(MixSeed(config.seed, step));
    params.ZeroGrad();
    double batch_loss = 0.0;
    for (int b = 0; b < config.batch; ++b) {
      const auto& clip = clips[rng.UniformInt(0, static_cast<std::int64_t>(clips.size()) - 1)];
      const std::size_t len = std::min(crop_len, clip.wb.size());
      const std::size_t max_frame = (clip.wb.size() - len) / mc.hop;
      const auto frame = static_cast<std::size_t>(rng.UniformInt(0, static_cast<std::int64_t>(max_frame)));
      const TrainCrop crop = MakeCrop(clip, mc, config.pitch, frame, len);
      nn::Tape t;
      const double l = CropLoss(model, crop, mss, rng.NextU64(), t, 1.0 / config.batch);
      if (!std::isfinite(l)) {
        throw NumericError("training diverged at step " + std::to_string(step) +
                           ": non-finite loss on clip " + clip.id);
      }
      t.AddParamGradsTo(params);
      batch_loss += l / config.batch;
    }
    if (!GradsFinite(params)) {
      throw NumericError("training diverged at step " + std::to_string(step) +
                         ": non-finite gradient");
    }
    if (config.clip_norm > 0.0) nn::ClipGradNorm(params, config.clip_norm);
    adam.set_lr(schedule.lr());
    const LossRecord rec{step, batch_loss, schedule.lr()};
    adam.Step(params);
    schedule.Observe(step, batch_loss);
    records.push_back(rec);
    if (log) log << rec.step << "," << rec.loss << "," << rec.lr << "\n";
    if (run.on_step) run.on_step(rec);
    if (step % config.log_every == 0) {
      spdlog::info("step {} loss {:.4f} lr {:.3g}", step, batch_loss, rec.lr);
    }
    if (config.checkpoint_every > 0 && params.step % config.checkpoint_every == 0) save();
  }
  save();
  return records;
}

}  // namespace bwe
