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

#ifndef BWE_TRAIN_H_
#define BWE_TRAIN_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bwe/controller.h"
#include "bwe/data.h"
#include "bwe/loss.h"

namespace bwe {

// A clip with its wide-band reference, low band and ground-truth pitch.
struct LabeledClip {
  std::string id;
  AudioBuffer wb;
  AudioBuffer lb;
  MultiPitchTrack truth;
  bool has_truth = false;  // corpus clips carry no pitch metadata
};

// Renders or reads every clip of a split. Throws DataError when the split
// is empty. With a cache_dir, the wide-band and low-band audio of the split
// is stored there on first use, keyed by manifest hash, split and cutoff.
std::vector<LabeledClip> LoadLabeledClips(const DatasetManifest& manifest,
                                          const std::string& split,
                                          const std::string& base_dir,
                                          double cutoff_hz, int max_voices = 5,
                                          int hop = 256,
                                          const std::string& cache_dir = "");

enum class PitchSource { kOracle, kEstimated };

struct TrainConfig {
  int steps = 25000;
  int batch = 32;
  double lr0 = 1e-3;
  int plateau_steps = 2500;
  int max_halvings = 4;
  MssConfig mss;
  double crop_s = 4.0;
  PitchSource pitch = PitchSource::kOracle;
  std::uint64_t seed = 0;
  int checkpoint_every = 500;  // 0 disables intermediate checkpoints
  int log_every = 50;
  double clip_norm = 3.0;  // global gradient L2 norm; 0 disables

  void Validate() const;
};

// Halves the rate when the best loss has not improved for `patience`
// observed steps, at most max_halvings times; the patience window restarts
// after every halving.
class PlateauSchedule {
 public:
  PlateauSchedule(double lr0, int patience, int max_halvings)
      : lr_(lr0), patience_(patience), max_halvings_(max_halvings) {}

  // Returns the rate to use for the next step.
  double Observe(std::uint64_t step, double loss);

  double lr() const { return lr_; }
  int halvings() const { return halvings_; }
  double best_loss() const { return best_loss_; }
  std::uint64_t best_step() const { return best_step_; }
  void Restore(double lr, double best_loss, std::uint64_t best_step, int halvings);

 private:
  double lr_;
  int patience_;
  int max_halvings_;
  int halvings_ = 0;
  bool seen_ = false;
  double best_loss_ = 0.0;
  std::uint64_t best_step_ = 0;
};

struct LossRecord {
  std::uint64_t step = 0;
  double loss = 0.0;
  double lr = 0.0;
};

struct TrainRun {
  std::string checkpoint_path;  // written at intervals and at the end
  std::string loss_log_path;    // CSV step,loss,lr
  std::optional<TrainingState> resume;
  std::function<void(const LossRecord&)> on_step;
};

// Trains from model.params().step up to config.steps. Each step draws its
// batch from an RNG seeded by (seed, step), so an interrupted run resumed
// from a checkpoint follows the same trajectory.
// Throws NumericError when the loss or a gradient stops being finite.
std::vector<LossRecord> Train(Controller& model,
                              const std::vector<LabeledClip>& clips,
                              const TrainConfig& config,
                              const TrainRun& run = {});

// One training example cut from a clip.
struct TrainCrop {
  ControllerFeatures features;
  AudioBuffer target;
};

TrainCrop MakeCrop(const LabeledClip& clip, const ModelConfig& model,
                   PitchSource pitch, std::size_t start_frame,
                   std::size_t n_samples);

// Mean MSS loss of the model over the given crops (no gradients).
double EvaluateLoss(const Controller& model, const std::vector<TrainCrop>& crops,
                    const MssConfig& mss, std::uint64_t seed);

}  // namespace bwe

#endif  // BWE_TRAIN_H_
