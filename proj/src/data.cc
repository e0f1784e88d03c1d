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

#include "bwe/data.h"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "bwe/common.h"
#include "bwe/rng.h"
#include "bwe/signal.h"
#include "bwe/stft.h"
#include "bwe/synth.h"

namespace fs = std::filesystem;

namespace bwe {

namespace {

constexpr int kHarmonicChoices[3] = {10, 15, 20};
constexpr int kMajorScale[7] = {0, 2, 4, 5, 7, 9, 11};
// Peak ceiling applied when a note or mix would clip.
constexpr double kPeakCeiling = 0.99;

std::string KindName(ClipKind k) {
  switch (k) {
    case ClipKind::kMono: return "mono";
    case ClipKind::kPoly: return "poly";
    case ClipKind::kCorpus: return "corpus";
  }
  return "mono";
}

ClipKind ParseKind(const std::string& s) {
  if (s == "mono") return ClipKind::kMono;
  if (s == "poly") return ClipKind::kPoly;
  if (s == "corpus") return ClipKind::kCorpus;
  throw DataError("manifest: unknown clip kind '" + s + "'");
}

void Shuffle(std::vector<std::size_t>& idx, std::uint64_t seed) {
  Rng rng(seed);
  for (std::size_t i = idx.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.UniformInt(0, static_cast<std::int64_t>(i) - 1));
    std::swap(idx[i - 1], idx[j]);
  }
}

std::string Fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string Escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '%' || c == ' ' || c == '=' || c == '\t' || c == '\n') {
      char buf[4];
      std::snprintf(buf, sizeof(buf), "%%%02X", static_cast<unsigned char>(c));
      out += buf;
    } else {
      out += c;
    }
  }
  return out;
}

std::string Unescape(const std::string& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%' && i + 2 < s.size()) {
      out += static_cast<char>(std::stoi(s.substr(i + 1, 2), nullptr, 16));
      i += 2;
    } else {
      out += s[i];
    }
  }
  return out;
}

double ParseDouble(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || !std::isfinite(v)) {
    throw DataError("manifest: bad number for " + what + ": '" + s + "'");
  }
  return v;
}

std::uint64_t ParseU64(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  std::uint64_t v = 0;
  try {
    v = std::stoull(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size()) throw DataError("manifest: bad integer for " + what);
  return v;
}

std::vector<std::string> SplitOn(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(s);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  return out;
}

std::string EncodeNote(const NoteSpec& n) {
  return std::to_string(n.midi) + ":" + std::to_string(n.n_harmonics) + ":" +
         Fixed(n.attack_s) + ":" + Fixed(n.decay_s) + ":" +
         Fixed(n.sustain_level) + ":" + Fixed(n.sustain_s) + ":" +
         Fixed(n.gain) + ":" + Fixed(n.mix_gain) + ":" + std::to_string(n.seed);
}

NoteSpec DecodeNote(const std::string& s) {
  const auto f = SplitOn(s, ':');
  if (f.size() != 9) throw DataError("manifest: note needs 9 fields: '" + s + "'");
  NoteSpec n;
  n.midi = static_cast<int>(ParseDouble(f[0], "midi"));
  n.n_harmonics = static_cast<int>(ParseDouble(f[1], "harmonics"));
  n.attack_s = ParseDouble(f[2], "attack");
  n.decay_s = ParseDouble(f[3], "decay");
  n.sustain_level = ParseDouble(f[4], "sustain level");
  n.sustain_s = ParseDouble(f[5], "sustain");
  n.gain = ParseDouble(f[6], "gain");
  n.mix_gain = ParseDouble(f[7], "mix gain");
  n.seed = ParseU64(f[8], "seed");
  return n;
}

}  // namespace

std::vector<const ClipSpec*> DatasetManifest::Split(const std::string& name) const {
  std::vector<const ClipSpec*> out;
  for (const auto& c : clips) {
    if (c.split == name) out.push_back(&c);
  }
  return out;
}

double QuantizeMeta(double v) { return std::round(v * 1e6) / 1e6; }

NoteSpec RandomNote(int midi, int n_harmonics, std::uint64_t seed) {
  Rng rng(MixSeed(seed, 0x4e));
  NoteSpec n;
  n.midi = midi;
  n.n_harmonics = n_harmonics;
  n.attack_s = QuantizeMeta(rng.Uniform(0.0, 0.3));
  n.decay_s = QuantizeMeta(rng.Uniform(0.0, 0.3));
  n.sustain_level = QuantizeMeta(rng.Uniform(0.5, 1.0));
  n.sustain_s = QuantizeMeta(rng.Uniform(0.0, 2.0));
  n.gain = QuantizeMeta(rng.Uniform(0.75, 1.0));
  n.mix_gain = 1.0;
  n.seed = rng.NextU64();
  return n;
}

void ValidateClipSpec(const ClipSpec& spec) {
  if (!(spec.duration_s > 0.0)) throw std::invalid_argument("clip: duration must be positive");
  if (spec.kind == ClipKind::kCorpus) return;
  if (spec.notes.empty()) throw std::invalid_argument("clip: synthetic clip without notes");
  if (spec.kind == ClipKind::kMono && spec.notes.size() != 1) {
    throw std::invalid_argument("clip: mono clip must have one note");
  }
  if (spec.kind == ClipKind::kPoly && (spec.notes.size() < 2 || spec.notes.size() > 5)) {
    throw std::invalid_argument("clip: chords have 2 to 5 notes");
  }
  std::vector<bool> seen(12, false);
  for (const auto& n : spec.notes) {
    if (n.midi < kMinMidi || n.midi > kMaxMidi) {
      throw std::invalid_argument("clip: MIDI pitch " + std::to_string(n.midi) + " outside [48, 92]");
    }
    if (n.n_harmonics <= 0) throw std::invalid_argument("clip: harmonic count must be positive");
    if (n.attack_s < 0 || n.decay_s < 0 || n.sustain_s < 0 || n.sustain_level < 0 ||
        n.sustain_level > 1 || n.gain < 0 || n.mix_gain < 0) {
      throw std::invalid_argument("clip: envelope or gain out of range");
    }
    if (spec.kind == ClipKind::kPoly) {
      const int pc = n.midi % 12;
      if (seen[pc]) throw std::invalid_argument("clip: duplicate pitch class in chord");
      seen[pc] = true;
    }
  }
}

NoteParts GenerateNoteParts(const NoteSpec& note, double duration_s, int sample_rate) {
  const auto n = static_cast<std::size_t>(std::llround(duration_s * sample_rate));
  const int hop = 256;
  const int frames = NumFrames(n, hop);
  const double f0 = MidiToHz(note.midi);
  std::vector<double> f0_frames(frames, f0);
  Matrix amps(frames, note.n_harmonics);
  for (int h = 0; h < note.n_harmonics; ++h) amps.col(h).setConstant(1.0 / ((h + 1.0) * (h + 1.0)));

  NoteParts parts;
  parts.harmonic = HarmonicSynth(f0_frames, amps, hop, n, sample_rate, MixSeed(note.seed, 1)).samples;
  parts.noise = PinkNoise(n, MixSeed(note.seed, 2), sample_rate).samples;
  const double ps = MeanPower(parts.harmonic);
  const double pn = MeanPower(parts.noise);
  const double scale = std::sqrt(ps / (pn * std::pow(10.0, kNoteSnrDb / 10.0)));
  for (double& v : parts.noise) v *= scale;
  parts.envelope = AsdEnvelope(note.attack_s, note.decay_s, note.sustain_level,
                               note.sustain_s, duration_s, sample_rate);
  parts.envelope.resize(n, 0.0);
  return parts;
}

SynthClip RenderClip(const ClipSpec& spec, int sample_rate, int hop) {
  if (spec.kind == ClipKind::kCorpus) {
    throw DataError("clip " + spec.id + ": corpus clips are not synthetic");
  }
  ValidateClipSpec(spec);
  const auto n = static_cast<std::size_t>(std::llround(spec.duration_s * sample_rate));
  SynthClip out;
  std::vector<double> mix(n, 0.0);
  for (const auto& note : spec.notes) {
    const auto parts = GenerateNoteParts(note, spec.duration_s, sample_rate);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = note.gain * parts.envelope[i] * (parts.harmonic[i] + parts.noise[i]);
    }
    const double peak = Peak(y);
    if (peak > 1.0) {
      for (double& v : y) v *= kPeakCeiling / peak;
    }
    for (std::size_t i = 0; i < n; ++i) mix[i] += note.mix_gain * y[i];
    out.notes.push_back(std::move(y));
  }
  const double peak = Peak(mix);
  if (peak > 1.0) {
    out.peak_scale = kPeakCeiling / peak;
    for (double& v : mix) v *= out.peak_scale;
  }
  out.audio = AudioBuffer(std::move(mix), sample_rate);
  out.truth = OraclePitch(spec, PitchFrames(n, hop), std::max<int>(5, static_cast<int>(spec.notes.size())), hop);
  return out;
}

ClipSpec MakeMonoClip(int midi, int n_harmonics, std::uint64_t seed) {
  ClipSpec c;
  c.kind = ClipKind::kMono;
  char id[64];
  std::snprintf(id, sizeof(id), "mono_m%03d_h%02d", midi, n_harmonics);
  c.id = id;
  c.notes.push_back(RandomNote(midi, n_harmonics, seed));
  ValidateClipSpec(c);
  return c;
}

ClipSpec MakePolyClip(int root_midi, int n_notes, std::uint64_t seed) {
  if (n_notes < 2 || n_notes > 5) throw std::invalid_argument("chord: 2 to 5 notes");
  if (root_midi < kMinMidi || root_midi > kMaxMidi) {
    throw std::invalid_argument("chord: root outside [48, 92]");
  }
  Rng rng(MixSeed(seed, 0x9c));
  ClipSpec c;
  c.kind = ClipKind::kPoly;
  char id[64];
  std::snprintf(id, sizeof(id), "poly_m%03d_n%d", root_midi, n_notes);
  c.id = id;

  std::vector<int> pitches{root_midi};
  std::vector<bool> used(12, false);
  used[root_midi % 12] = true;
  while (static_cast<int>(pitches.size()) < n_notes) {
    std::vector<int> candidates;
    for (int m = kMinMidi; m <= kMaxMidi; ++m) {
      const int interval = ((m - root_midi) % 12 + 12) % 12;
      if (used[m % 12]) continue;
      if (std::find(std::begin(kMajorScale), std::end(kMajorScale), interval) == std::end(kMajorScale)) continue;
      candidates.push_back(m);
    }
    const int m = candidates[static_cast<std::size_t>(rng.UniformInt(0, static_cast<std::int64_t>(candidates.size()) - 1))];
    used[m % 12] = true;
    pitches.push_back(m);
  }
  for (int m : pitches) {
    const int h = kHarmonicChoices[rng.UniformInt(0, 2)];
    NoteSpec note = RandomNote(m, h, rng.NextU64());
    note.mix_gain = QuantizeMeta(rng.Uniform(0.5, 1.0));
    c.notes.push_back(note);
  }
  ValidateClipSpec(c);
  return c;
}

void AssignSplits(std::vector<ClipSpec>& clips, double train_ratio, std::uint64_t seed) {
  std::vector<std::size_t> idx(clips.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Shuffle(idx, MixSeed(seed, 0x5b));
  const auto n_train = static_cast<std::size_t>(std::floor(train_ratio * static_cast<double>(clips.size()) + 1e-9));
  for (std::size_t r = 0; r < idx.size(); ++r) clips[idx[r]].split = r < n_train ? "train" : "test";
}

DatasetManifest GenMonoDataset(std::uint64_t seed) {
  DatasetManifest m;
  m.kind = "mono";
  m.seed = seed;
  for (int midi = kMinMidi; midi <= kMaxMidi; ++midi) {
    for (int h : kHarmonicChoices) {
      m.clips.push_back(MakeMonoClip(midi, h, MixSeed(seed, static_cast<std::uint64_t>(midi * 100 + h))));
    }
  }
  AssignSplits(m.clips, 0.9, seed);
  return m;
}

DatasetManifest GenPolyDataset(std::uint64_t seed) {
  DatasetManifest m;
  m.kind = "poly";
  m.seed = seed;
  for (int midi = kMinMidi; midi <= kMaxMidi; ++midi) {
    for (int n = 2; n <= 5; ++n) {
      m.clips.push_back(MakePolyClip(midi, n, MixSeed(seed, static_cast<std::uint64_t>(10000 + midi * 10 + n))));
    }
  }
  AssignSplits(m.clips, 0.9, seed);
  return m;
}

DatasetManifest IngestCorpus(const std::string& dir, double clip_seconds,
                             double split_ratio, std::uint64_t seed) {
  if (!(clip_seconds > 0.0) || !(split_ratio >= 0.0 && split_ratio <= 1.0)) {
    throw std::invalid_argument("ingest: bad clip length or split ratio");
  }
  if (!fs::is_directory(dir)) throw DataError("ingest: not a directory: " + dir);
  std::vector<std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::string ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".wav") files.push_back(fs::relative(e.path(), dir).generic_string());
  }
  std::sort(files.begin(), files.end());

  struct FileClips {
    std::string rel;
    int count;
  };
  std::vector<FileClips> usable;
  for (const auto& rel : files) {
    try {
      const AudioBuffer a = ReadWav((fs::path(dir) / rel).string());
      const int count = static_cast<int>(std::floor(a.duration_s() / clip_seconds + 1e-9));
      if (count > 0) usable.push_back({rel, count});
    } catch (const std::exception& e) {
      spdlog::warn("ingest: skipping {}: {}", rel, e.what());
    }
  }
  if (usable.empty()) throw DataError("ingest: no usable audio in " + dir);

  std::vector<std::size_t> order(usable.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Shuffle(order, MixSeed(seed, 0x17));
  const auto n_train = static_cast<std::size_t>(std::floor(split_ratio * static_cast<double>(usable.size()) + 1e-9));
  std::vector<std::string> split(usable.size());
  for (std::size_t r = 0; r < order.size(); ++r) split[order[r]] = r < n_train ? "train" : "test";

  DatasetManifest m;
  m.kind = "corpus";
  m.seed = seed;
  for (std::size_t f = 0; f < usable.size(); ++f) {
    for (int k = 0; k < usable[f].count; ++k) {
      ClipSpec c;
      c.kind = ClipKind::kCorpus;
      c.id = usable[f].rel + "#" + std::to_string(k);
      c.split = split[f];
      c.duration_s = QuantizeMeta(clip_seconds);
      c.source = usable[f].rel;
      c.offset_s = QuantizeMeta(k * clip_seconds);
      m.clips.push_back(std::move(c));
    }
  }
  return m;
}

std::string SerializeManifest(const DatasetManifest& m) {
  std::ostringstream out;
  out << "# bwe-lab dataset manifest\n";
  out << "version=" << m.version << "\n";
  out << "kind=" << m.kind << "\n";
  out << "seed=" << m.seed << "\n";
  out << "sample_rate=" << m.sample_rate << "\n";
  for (const auto& c : m.clips) {
    out << "clip id=" << Escape(c.id) << " kind=" << KindName(c.kind)
        << " split=" << c.split << " duration=" << Fixed(c.duration_s);
    if (!c.path.empty()) out << " path=" << Escape(c.path);
    if (c.kind == ClipKind::kCorpus) {
      out << " source=" << Escape(c.source) << " offset=" << Fixed(c.offset_s);
    } else {
      out << " notes=";
      for (std::size_t i = 0; i < c.notes.size(); ++i) {
        if (i) out << '|';
        out << EncodeNote(c.notes[i]);
      }
    }
    out << "\n";
  }
  return out.str();
}

std::uint64_t ManifestHash(const DatasetManifest& m) {
  return Fnv1a64(SerializeManifest(m));
}

void WriteManifest(const std::string& path, const DatasetManifest& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write manifest " + path);
  out << SerializeManifest(m);
}

DatasetManifest ReadManifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read manifest " + path);
  DatasetManifest m;
  std::string line;
  int line_no = 0;
  bool have_version = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const std::string where = path + ":" + std::to_string(line_no);
    if (line.rfind("clip ", 0) == 0) {
      std::map<std::string, std::string> kv;
      std::istringstream ss(line.substr(5));
      std::string tok;
      while (ss >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) throw DataError(where + ": expected key=value");
        kv[tok.substr(0, eq)] = tok.substr(eq + 1);
      }
      ClipSpec c;
      if (!kv.count("id") || !kv.count("kind") || !kv.count("split")) {
        throw DataError(where + ": clip needs id, kind and split");
      }
      c.id = Unescape(kv["id"]);
      c.kind = ParseKind(kv["kind"]);
      c.split = kv["split"];
      if (kv.count("duration")) c.duration_s = ParseDouble(kv["duration"], "duration");
      if (kv.count("path")) c.path = Unescape(kv["path"]);
      if (c.kind == ClipKind::kCorpus) {
        if (!kv.count("source")) throw DataError(where + ": corpus clip needs source");
        c.source = Unescape(kv["source"]);
        if (kv.count("offset")) c.offset_s = ParseDouble(kv["offset"], "offset");
      } else {
        if (!kv.count("notes")) throw DataError(where + ": synthetic clip needs notes");
        for (const auto& s : SplitOn(kv["notes"], '|')) c.notes.push_back(DecodeNote(s));
        try {
          ValidateClipSpec(c);
        } catch (const std::invalid_argument& e) {
          throw DataError(where + ": " + e.what());
        }
      }
      m.clips.push_back(std::move(c));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError(where + ": expected key=value");
    const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    if (key == "version") {
      m.version = static_cast<int>(ParseDouble(value, "version"));
      if (m.version != 1) throw DataError(where + ": unsupported manifest version");
      have_version = true;
    } else if (key == "kind") {
      m.kind = value;
    } else if (key == "seed") {
      m.seed = ParseU64(value, "seed");
    } else if (key == "sample_rate") {
      m.sample_rate = static_cast<int>(ParseDouble(value, "sample_rate"));
    } else {
      throw DataError(where + ": unknown key '" + key + "'");
    }
  }
  if (!have_version) throw DataError(path + ": missing version line");
  return m;
}

void MaterializeDataset(DatasetManifest& m, const std::string& dir) {
  fs::create_directories(fs::path(dir) / "audio");
  for (auto& c : m.clips) {
    if (c.kind == ClipKind::kCorpus) continue;
    c.path = "audio/" + c.id + ".wav";
    WriteWav((fs::path(dir) / c.path).string(), RenderClip(c, m.sample_rate).audio,
             WavEncoding::kFloat32);
  }
}

AudioBuffer LoadClipAudio(const ClipSpec& spec, const std::string& base_dir, int sample_rate) {
  if (spec.kind == ClipKind::kCorpus) {
    const fs::path src = fs::path(spec.source).is_absolute() ? fs::path(spec.source)
                                                             : fs::path(base_dir) / spec.source;
    AudioBuffer a = ReadWav(src.string(), sample_rate);
    const auto begin = static_cast<std::size_t>(std::llround(spec.offset_s * sample_rate));
    const auto len = static_cast<std::size_t>(std::llround(spec.duration_s * sample_rate));
    if (begin + len > a.size()) throw DataError("clip " + spec.id + " runs past the end of " + spec.source);
    return AudioBuffer(std::vector<double>(a.samples.begin() + begin, a.samples.begin() + begin + len),
                       sample_rate);
  }
  if (!spec.path.empty()) {
    const fs::path p = fs::path(base_dir) / spec.path;
    if (fs::exists(p)) return ReadWav(p.string(), sample_rate);
  }
  return RenderClip(spec, sample_rate).audio;
}

MultiPitchTrack OraclePitch(const ClipSpec& spec, std::size_t n_frames, int max_voices, int hop) {
  if (spec.kind == ClipKind::kCorpus || spec.notes.empty()) {
    throw DataError("clip " + spec.id + " has no pitch metadata");
  }
  std::vector<double> hz;
  for (const auto& n : spec.notes) hz.push_back(MidiToHz(n.midi));
  std::sort(hz.begin(), hz.end(), std::greater<>());
  if (static_cast<int>(hz.size()) > max_voices) hz.resize(max_voices);
  return ConstantTracks(hz, n_frames, max_voices, hop);
}

}  // namespace bwe
