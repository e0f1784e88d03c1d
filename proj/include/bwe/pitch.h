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

#ifndef BWE_PITCH_H_
#define BWE_PITCH_H_

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "bwe/audio.h"
#include "bwe/common.h"

namespace bwe {

// f0 per frame in Hz, 0 for unvoiced. Frame t is centered on sample t * hop.
struct PitchTrack {
  std::vector<double> f0;
  std::vector<double> confidence;
  int hop = 256;

  std::size_t size() const { return f0.size(); }
  std::size_t voiced_count() const;
  double mean_voiced() const;  // 0 when no frame is voiced
};

// Up to max_voices tracks, strongest first. All tracks share one framing.
struct MultiPitchTrack {
  std::vector<PitchTrack> tracks;
  int max_voices = 5;
};

double MidiToHz(double midi);
double HzToMidi(double hz);

// Frames for a signal of n samples (same count as the analysis STFT).
std::size_t PitchFrames(std::size_t n_samples, int hop);

// Replaces unvoiced frames with the previous voiced value; leading unvoiced
// frames take the first voiced value. All-unvoiced tracks stay at 0.
std::vector<double> HoldVoiced(const PitchTrack& track);

struct YinConfig {
  double fmin = 65.0;
  double fmax = 1800.0;
  double threshold = 0.15;  // aperiodicity above this is unvoiced
  int window = 1024;        // integration length
  int hop = 256;
};

PitchTrack EstimateF0Mono(const AudioBuffer& x, const YinConfig& config = {});

struct MultiF0Config {
  int max_voices = 5;
  double fmin = 65.0;
  double fmax = 1800.0;
  int fft_size = 4096;
  int hop = 256;
  int n_harmonics = 8;
  double harmonic_decay = 0.8;    // salience weight ratio between harmonics
  double peak_to_floor = 6.0;     // fundamental peak vs frame median magnitude
  double min_relative_peak = 0.02; // fundamental peak vs frame maximum
  double relative_salience = 0.1; // stop when below this fraction of the first
};

MultiPitchTrack EstimateMultiF0(const AudioBuffer& x,
                                const MultiF0Config& config = {});

// Constant ground-truth tracks.
PitchTrack ConstantTrack(double hz, std::size_t n_frames, int hop = 256);
MultiPitchTrack ConstantTracks(const std::vector<double>& hz,
                               std::size_t n_frames, int max_voices,
                               int hop = 256);

// CSV with header "time_s,f0_hz,voice_index,confidence". Reading accepts the
// two-column form too. Rows are assigned to the nearest frame.
void WritePitchFile(const std::string& path, const MultiPitchTrack& tracks,
                    int sample_rate);
MultiPitchTrack LoadPitchFile(const std::string& path, int sample_rate,
                              std::size_t n_frames, int hop = 256,
                              int max_voices = 5);

// Sorts active tracks by descending mean voiced f0 and pads or trims to
// max_voices entries with all-zero tracks.
MultiPitchTrack ToSlots(const MultiPitchTrack& tracks, std::size_t n_frames,
                        int max_voices);

class PitchProvider {
 public:
  virtual ~PitchProvider() = default;
  virtual MultiPitchTrack Track(const AudioBuffer& x, int max_voices) const = 0;
  virtual std::string name() const = 0;
};

// Built-in estimators: YIN for one voice, harmonic salience otherwise.
std::unique_ptr<PitchProvider> MakeEstimatorProvider();
// Returns the given tracks regardless of the input (oracle metadata).
std::unique_ptr<PitchProvider> MakeFixedProvider(MultiPitchTrack tracks);
std::unique_ptr<PitchProvider> MakeFileProvider(std::string path);

}  // namespace bwe

#endif  // BWE_PITCH_H_
