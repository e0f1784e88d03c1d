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

#ifndef BWE_DATA_H_
#define BWE_DATA_H_

#include <cstdint>
#include <string>
#include <vector>

#include "bwe/audio.h"
#include "bwe/pitch.h"

namespace bwe {

inline constexpr int kMinMidi = 48;  // C3
inline constexpr int kMaxMidi = 92;  // G#6
inline constexpr double kClipSeconds = 4.0;
inline constexpr double kNoteSnrDb = 10.0;

// One generated note: a 1/h^2 harmonic series plus pink noise, shaped by an
// envelope and scaled by a gain.
struct NoteSpec {
  int midi = 69;
  int n_harmonics = 10;
  double attack_s = 0.0;
  double decay_s = 0.0;
  double sustain_level = 1.0;
  double sustain_s = 0.0;
  double gain = 1.0;      // per-note gain in [0.75, 1]
  double mix_gain = 1.0;  // chord weight in [0.5, 1]; 1 for single notes
  std::uint64_t seed = 0;
};

enum class ClipKind { kMono, kPoly, kCorpus };

struct ClipSpec {
  std::string id;
  ClipKind kind = ClipKind::kMono;
  std::string split = "train";
  std::string path;  // audio file, relative to the manifest directory
  double duration_s = kClipSeconds;
  std::vector<NoteSpec> notes;  // synthetic clips only
  // Corpus clips: source file and offset into it.
  std::string source;
  double offset_s = 0.0;
};

struct DatasetManifest {
  int version = 1;
  std::string kind;  // "mono", "poly" or "corpus"
  std::uint64_t seed = 0;
  int sample_rate = kDefaultSampleRate;
  std::vector<ClipSpec> clips;

  std::vector<const ClipSpec*> Split(const std::string& name) const;
};

// Quantizes generator floats to the manifest's fixed precision so that a
// written and re-read manifest renders identical audio.
double QuantizeMeta(double v);

NoteSpec RandomNote(int midi, int n_harmonics, std::uint64_t seed);

// Throws std::invalid_argument on out-of-range pitches, bad harmonic counts
// or envelope values, and (for chords) duplicate pitch classes.
void ValidateClipSpec(const ClipSpec& spec);

struct NoteParts {
  std::vector<double> harmonic;  // before envelope and gain
  std::vector<double> noise;     // pink noise at the note SNR
  std::vector<double> envelope;
};

NoteParts GenerateNoteParts(const NoteSpec& note, double duration_s,
                            int sample_rate);

struct SynthClip {
  AudioBuffer audio;
  MultiPitchTrack truth;
  // Final scale applied to keep the peak at or below 1 (1 if untouched).
  double peak_scale = 1.0;
  std::vector<std::vector<double>> notes;  // each note before mixing
};

// Note i = peak_guard_i * gain_i * envelope_i * (harmonic_i + noise_i);
// clip = peak_scale * sum_i mix_gain_i * note_i.
SynthClip RenderClip(const ClipSpec& spec, int sample_rate = kDefaultSampleRate,
                     int hop = 256);

ClipSpec MakeMonoClip(int midi, int n_harmonics, std::uint64_t seed);
// Root plus n_notes - 1 notes from the root's major scale, all with
// distinct pitch classes.
ClipSpec MakePolyClip(int root_midi, int n_notes, std::uint64_t seed);

// Deterministic train/test assignment: shuffle with the seed, first
// floor(ratio * N) entries to train.
void AssignSplits(std::vector<ClipSpec>& clips, double train_ratio,
                  std::uint64_t seed);

DatasetManifest GenMonoDataset(std::uint64_t seed);
DatasetManifest GenPolyDataset(std::uint64_t seed);

// Splits every readable WAV under dir into fixed-length clips; unreadable
// files are skipped with a warning. Splits are assigned per file.
DatasetManifest IngestCorpus(const std::string& dir, double clip_seconds = 4.0,
                             double split_ratio = 0.9, std::uint64_t seed = 0);

void WriteManifest(const std::string& path, const DatasetManifest& manifest);
DatasetManifest ReadManifest(const std::string& path);
std::string SerializeManifest(const DatasetManifest& manifest);
std::uint64_t ManifestHash(const DatasetManifest& manifest);

// Writes each synthetic clip as WAV under dir and fills in clip paths.
void MaterializeDataset(DatasetManifest& manifest, const std::string& dir);

// Audio for one clip: synthetic clips are rendered from their spec, corpus
// clips are cut from their source file.
AudioBuffer LoadClipAudio(const ClipSpec& spec, const std::string& base_dir,
                          int sample_rate = kDefaultSampleRate);

// Ground-truth pitch for synthetic clips; throws DataError otherwise.
MultiPitchTrack OraclePitch(const ClipSpec& spec, std::size_t n_frames,
                            int max_voices, int hop = 256);

}  // namespace bwe

#endif  // BWE_DATA_H_
