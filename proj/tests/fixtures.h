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

// Shared setups for the model-level tests and the acceptance run.

#ifndef BWE_TESTS_FIXTURES_H_
#define BWE_TESTS_FIXTURES_H_

#include <cstdint>

#include "bwe/controller.h"
#include "bwe/data.h"
#include "bwe/loss.h"
#include "bwe/optim.h"
#include "bwe/pipeline.h"
#include "bwe/signal.h"

namespace fixtures {

// Small controller used for gradient checks: GRU 8, H = 10, K_n = 9.
inline bwe::ModelConfig ScaledConfig(bwe::Variant v) {
  bwe::ModelConfig c;
  c.variant = v;
  c.n_harmonics = 10;
  c.n_noise = 9;
  c.gru_units = 8;
  c.mlp_width = 8;
  c.z_dim = 8;
  c.max_voices = 2;
  c.sample_rate = 16000;
  return c;
}

// A 0.25 s wide-band clip of a single note and its low band.
struct ShortClip {
  bwe::AudioBuffer wb;
  bwe::AudioBuffer lb;
  bwe::MultiPitchTrack truth;
};

inline ShortClip Shorten(bwe::ClipSpec spec, double seconds) {
  spec.duration_s = seconds;
  for (auto& n : spec.notes) {
    n.attack_s = 0.02;
    n.sustain_s = seconds;
    n.decay_s = 0.05;
  }
  auto clip = bwe::RenderClip(spec);
  ShortClip out;
  out.wb = clip.audio;
  out.lb = bwe::LowPass(clip.audio, 2000.0);
  out.truth = clip.truth;
  return out;
}

inline ShortClip MakeShortClip(int midi, std::uint64_t seed, double seconds = 0.25) {
  return Shorten(bwe::MakeMonoClip(midi, 20, seed), seconds);
}

inline ShortClip MakeShortChord(int root, int notes, std::uint64_t seed, double seconds = 0.25) {
  return Shorten(bwe::MakePolyClip(root, notes, seed), seconds);
}

// End-to-end gradient check of the MSS loss through controller and
// synthesizer with respect to every controller parameter.
inline bwe::nn::GradCheckReport ModelGradCheck(bwe::Controller& model, const ShortClip& clip,
                                               std::uint64_t seed,
                                               std::vector<double> follow_up_eps = {}) {
  const auto features = bwe::ExtractFeatures(clip.lb, clip.truth, model.config());
  bwe::MssConfig mss;
  auto f = [&](bwe::nn::Tape& t) {
    const auto controls = model.Forward(t, features);
    const auto y = bwe::SynthesizeOp(t, controls, features.f0, model.config(),
                                     clip.wb.size(), seed);
    return bwe::MssLossOp(t, y, clip.wb, mss);
  };
  bwe::nn::GradCheckOptions opts;
  opts.eps = 1e-4;
  opts.follow_up_eps = std::move(follow_up_eps);
  opts.tolerance = 1e-3;
  return bwe::nn::GradCheck(f, model.params(), opts);
}

}  // namespace fixtures

#endif  // BWE_TESTS_FIXTURES_H_
