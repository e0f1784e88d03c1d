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

#ifndef BWE_CONTROLLER_H_
#define BWE_CONTROLLER_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bwe/audio.h"
#include "bwe/common.h"
#include "bwe/layers.h"
#include "bwe/nn.h"
#include "bwe/pitch.h"

namespace bwe {

enum class Variant { kMonoDec, kNoiseOnly, kPolyDec };

std::string VariantName(Variant v);
Variant ParseVariant(const std::string& name);  // throws std::invalid_argument

struct ModelConfig {
  Variant variant = Variant::kMonoDec;
  int n_harmonics = 100;
  int n_noise = 65;
  int gru_units = 512;
  int mlp_width = 512;
  int z_dim = 512;
  int max_voices = 5;  // poly only
  int n_mfcc = 30;
  int hop = 256;
  int sample_rate = kDefaultSampleRate;
  double cutoff_hz = 2000.0;

  void Validate() const;  // throws std::invalid_argument
  int voices() const { return variant == Variant::kPolyDec ? max_voices : (variant == Variant::kMonoDec ? 1 : 0); }

  // Flat key=value text, one entry per line.
  std::string ToText() const;
  static ModelConfig FromText(const std::string& text);
};

// Per-frame decoder inputs for one clip.
struct ControllerFeatures {
  Matrix mfcc;                         // [T x n_mfcc]
  std::vector<std::vector<double>> f0; // one held-voiced track per slot
  std::vector<double> loudness_db;     // [T]
  std::size_t n_samples = 0;

  std::size_t frames() const { return static_cast<std::size_t>(mfcc.rows()); }
};

// Features from the low-band input. Pitch tracks are placed into slots
// (highest mean f0 first) and unvoiced frames hold the last voiced value.
ControllerFeatures ExtractFeatures(const AudioBuffer& x_lb,
                                   const MultiPitchTrack& pitch,
                                   const ModelConfig& config);

double F0Input(double hz);          // MIDI / 127, 0 for unvoiced
double LoudnessInput(double db);    // (dB + 90) / 90

struct ControlVars {
  std::vector<nn::Var> amps;  // one [T x H] per voice slot
  nn::Var noise;              // [T x K]
};

struct Controls {
  std::vector<Matrix> amps;
  Matrix noise;
};

class Controller {
 public:
  Controller(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }

  // MFCC -> normalization -> GRU -> dense, [T x z_dim].
  nn::Var Encode(nn::Tape& t, const Matrix& mfcc) const;
  // Dispatches on the variant. f0 needs voices() entries.
  ControlVars Decode(nn::Tape& t, nn::Var z,
                     const std::vector<std::vector<double>>& f0,
                     const std::vector<double>& loudness_db) const;
  ControlVars Forward(nn::Tape& t, const ControllerFeatures& f) const;
  // Inference without gradient bookkeeping.
  Controls Infer(const ControllerFeatures& f) const;

  // Hash over the variant, sizes and every tensor name and shape.
  std::uint64_t ArchitectureHash() const;

 private:
  nn::Var HeadAmps(nn::Tape& t, const nn::Dense& head, nn::Var h) const;
  nn::Var ScalarColumn(nn::Tape& t, const std::vector<double>& v, double (*fn)(double)) const;

  ModelConfig config_;
  nn::ParamStore params_;
  std::size_t norm_scale_ = 0, norm_shift_ = 0;
  nn::GruLayer enc_gru_;
  nn::Dense enc_out_;
  std::vector<nn::Mlp> f0_mlps_;
  nn::Mlp l_mlp_, z_mlp_;
  nn::GruLayer dec_gru_;
  nn::Mlp dec_mlp_;
  std::vector<nn::Dense> amp_heads_;
  nn::Dense noise_head_;
};

// Optimizer and schedule state carried in a checkpoint so training can
// resume where it stopped.
struct TrainingState {
  std::vector<Matrix> adam_m;
  std::vector<Matrix> adam_v;
  double lr = 1e-3;
  double best_loss = 0.0;
  std::uint64_t best_step = 0;
  int halvings = 0;
  std::uint64_t train_seed = 0;
};

void SaveCheckpoint(const std::string& path, const Controller& model,
                    const TrainingState* state = nullptr);

struct LoadedCheckpoint {
  Controller model;
  std::optional<TrainingState> state;
};

// Throws DataError on bad magic, unsupported version, hash mismatch, or a
// variant other than `expected` when given.
LoadedCheckpoint LoadCheckpoint(const std::string& path,
                                std::optional<Variant> expected = std::nullopt);

}  // namespace bwe

#endif  // BWE_CONTROLLER_H_
