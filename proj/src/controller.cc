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

#include "bwe/controller.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "bwe/features.h"
#include "bwe/rng.h"

namespace bwe {

std::string VariantName(Variant v) {
  switch (v) {
    case Variant::kMonoDec: return "mono_dec";
    case Variant::kNoiseOnly: return "noise_only";
    case Variant::kPolyDec: return "poly_dec";
  }
  return "mono_dec";
}

Variant ParseVariant(const std::string& name) {
  if (name == "mono_dec" || name == "mono") return Variant::kMonoDec;
  if (name == "noise_only" || name == "noise") return Variant::kNoiseOnly;
  if (name == "poly_dec" || name == "poly") return Variant::kPolyDec;
  throw std::invalid_argument("unknown model variant '" + name + "'");
}

void ModelConfig::Validate() const {
  if (n_harmonics <= 0 || n_noise < 2 || gru_units <= 0 || mlp_width <= 0 ||
      z_dim <= 0 || n_mfcc <= 0 || hop <= 0 || sample_rate <= 0) {
    throw std::invalid_argument("model config: sizes must be positive");
  }
  if (variant == Variant::kPolyDec && max_voices <= 0) {
    throw std::invalid_argument("model config: poly variant needs max_voices > 0");
  }
  if (!(cutoff_hz > 0.0) || cutoff_hz >= sample_rate / 2.0) {
    throw std::invalid_argument("model config: cutoff must be in (0, Nyquist)");
  }
}

std::string ModelConfig::ToText() const {
  std::ostringstream o;
  o << "variant=" << VariantName(variant) << "\n"
    << "n_harmonics=" << n_harmonics << "\n"
    << "n_noise=" << n_noise << "\n"
    << "gru_units=" << gru_units << "\n"
    << "mlp_width=" << mlp_width << "\n"
    << "z_dim=" << z_dim << "\n"
    << "max_voices=" << max_voices << "\n"
    << "n_mfcc=" << n_mfcc << "\n"
    << "hop=" << hop << "\n"
    << "sample_rate=" << sample_rate << "\n"
    << "cutoff_hz=" << cutoff_hz << "\n";
  return o.str();
}

ModelConfig ModelConfig::FromText(const std::string& text) {
  ModelConfig c;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError("model config: expected key=value: " + line);
    const std::string k = line.substr(0, eq), v = line.substr(eq + 1);
    try {
      if (k == "variant") c.variant = ParseVariant(v);
      else if (k == "n_harmonics") c.n_harmonics = std::stoi(v);
      else if (k == "n_noise") c.n_noise = std::stoi(v);
      else if (k == "gru_units") c.gru_units = std::stoi(v);
      else if (k == "mlp_width") c.mlp_width = std::stoi(v);
      else if (k == "z_dim") c.z_dim = std::stoi(v);
      else if (k == "max_voices") c.max_voices = std::stoi(v);
      else if (k == "n_mfcc") c.n_mfcc = std::stoi(v);
      else if (k == "hop") c.hop = std::stoi(v);
      else if (k == "sample_rate") c.sample_rate = std::stoi(v);
      else if (k == "cutoff_hz") c.cutoff_hz = std::stod(v);
      else throw DataError("model config: unknown key '" + k + "'");
    } catch (const std::invalid_argument& e) {
      throw DataError("model config: bad value for " + k + ": " + e.what());
    }
  }
  return c;
}

double F0Input(double hz) { return hz > 0.0 ? HzToMidi(hz) / 127.0 : 0.0; }

double LoudnessInput(double db) { return (db + 90.0) / 90.0; }

ControllerFeatures ExtractFeatures(const AudioBuffer& x_lb, const MultiPitchTrack& pitch,
                                   const ModelConfig& config) {
  if (x_lb.sample_rate != config.sample_rate) {
    throw std::invalid_argument("features: input sample rate differs from the model's");
  }
  ControllerFeatures f;
  f.n_samples = x_lb.size();
  MfccParams mp;
  mp.n_coeffs = config.n_mfcc;
  mp.fmax = config.sample_rate / 2.0;
  mp.overlap = 1.0 - static_cast<double>(config.hop) / mp.fft_size;
  f.mfcc = Mfcc(x_lb, mp);
  const auto frames = static_cast<std::size_t>(f.mfcc.rows());
  f.loudness_db = AWeightedLoudness(x_lb, 1024, config.hop).values;
  f.loudness_db.resize(frames, kLoudnessFloorDb);
  const int voices = config.voices();
  if (static_cast<int>(pitch.tracks.size()) > voices && voices > 0) {
    throw std::invalid_argument("features: " + std::to_string(pitch.tracks.size()) +
                                " pitch tracks for a model with " + std::to_string(voices) +
                                " voice slots");
  }
  if (voices > 0) {
    const auto slots = ToSlots(pitch, frames, voices);
    for (const auto& tr : slots.tracks) f.f0.push_back(HoldVoiced(tr));
  }
  return f;
}

// ---------------------------------------------------------------- model

Controller::Controller(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  config_.Validate();
  params_.init_seed = seed;
  Rng rng(seed);
  const int w = config_.mlp_width;
  norm_scale_ = params_.Add("enc.norm.scale", Matrix::Ones(1, config_.n_mfcc));
  norm_shift_ = params_.Add("enc.norm.shift", Matrix::Zero(1, config_.n_mfcc));
  enc_gru_ = nn::GruLayer::Create(params_, rng, "enc.gru", config_.n_mfcc, config_.gru_units);
  enc_out_ = nn::Dense::Create(params_, rng, "enc.out", config_.gru_units, config_.z_dim);

  const int voices = config_.voices();
  for (int i = 0; i < voices; ++i) {
    f0_mlps_.push_back(nn::Mlp::Create(params_, rng, "dec.f0." + std::to_string(i), 1, w));
  }
  l_mlp_ = nn::Mlp::Create(params_, rng, "dec.loudness", 1, w);
  z_mlp_ = nn::Mlp::Create(params_, rng, "dec.z", config_.z_dim, w);
  dec_gru_ = nn::GruLayer::Create(params_, rng, "dec.gru", (voices + 2) * w, config_.gru_units);
  dec_mlp_ = nn::Mlp::Create(params_, rng, "dec.mlp", config_.gru_units, w);
  for (int i = 0; i < voices; ++i) {
    amp_heads_.push_back(nn::Dense::Create(params_, rng, "dec.amps." + std::to_string(i), w,
                                           config_.n_harmonics + 1));
  }
  noise_head_ = nn::Dense::Create(params_, rng, "dec.noise", w, config_.n_noise);
}

nn::Var Controller::Encode(nn::Tape& t, const Matrix& mfcc) const {
  if (mfcc.cols() != config_.n_mfcc) throw std::invalid_argument("encode: MFCC width mismatch");
  nn::Var x = t.Constant(mfcc);
  x = nn::AffineCols(t, x, t.Param(params_, norm_scale_), t.Param(params_, norm_shift_));
  x = enc_gru_(t, params_, x);
  return enc_out_(t, params_, x);
}

nn::Var Controller::ScalarColumn(nn::Tape& t, const std::vector<double>& v,
                                 double (*fn)(double)) const {
  Matrix m(static_cast<Eigen::Index>(v.size()), 1);
  for (std::size_t i = 0; i < v.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = fn(v[i]);
  return t.Constant(std::move(m));
}

nn::Var Controller::HeadAmps(nn::Tape& t, const nn::Dense& head, nn::Var h) const {
  // Column 0 is the global amplitude, the rest the harmonic distribution.
  nn::Var logits = head(t, params_, h);
  nn::Var amp = nn::ModifiedSigmoid(t, nn::SliceCols(t, logits, 0, 1));
  nn::Var dist = nn::SoftmaxRows(t, nn::SliceCols(t, logits, 1, config_.n_harmonics));
  return nn::MulColBroadcast(t, amp, dist);
}

ControlVars Controller::Decode(nn::Tape& t, nn::Var z, const std::vector<std::vector<double>>& f0,
                               const std::vector<double>& loudness_db) const {
  const auto frames = t.value(z).rows();
  const int voices = config_.voices();
  if (static_cast<int>(f0.size()) != voices) {
    throw std::invalid_argument("decode: expected " + std::to_string(voices) + " f0 tracks");
  }
  if (static_cast<Eigen::Index>(loudness_db.size()) != frames) {
    throw std::invalid_argument("decode: loudness frame count mismatch");
  }
  std::vector<nn::Var> parts;
  for (int i = 0; i < voices; ++i) {
    if (static_cast<Eigen::Index>(f0[i].size()) != frames) {
      throw std::invalid_argument("decode: f0 frame count mismatch");
    }
    parts.push_back(f0_mlps_[i](t, params_, ScalarColumn(t, f0[i], F0Input)));
  }
  parts.push_back(l_mlp_(t, params_, ScalarColumn(t, loudness_db, LoudnessInput)));
  parts.push_back(z_mlp_(t, params_, z));
  nn::Var h = dec_gru_(t, params_, nn::ConcatCols(t, parts));
  h = dec_mlp_(t, params_, h);

  ControlVars out;
  for (int i = 0; i < voices; ++i) out.amps.push_back(HeadAmps(t, amp_heads_[i], h));
  out.noise = nn::ModifiedSigmoid(t, noise_head_(t, params_, h));
  return out;
}

ControlVars Controller::Forward(nn::Tape& t, const ControllerFeatures& f) const {
  return Decode(t, Encode(t, f.mfcc), f.f0, f.loudness_db);
}

Controls Controller::Infer(const ControllerFeatures& f) const {
  nn::Tape t(false);
  const ControlVars v = Forward(t, f);
  Controls c;
  for (const auto& a : v.amps) c.amps.push_back(t.value(a));
  c.noise = t.value(v.noise);
  return c;
}

std::uint64_t Controller::ArchitectureHash() const {
  std::ostringstream o;
  o << "variant=" << VariantName(config_.variant) << ";H=" << config_.n_harmonics
    << ";K=" << config_.n_noise << ";gru=" << config_.gru_units << ";mlp=" << config_.mlp_width
    << ";z=" << config_.z_dim << ";voices=" << config_.voices() << ";mfcc=" << config_.n_mfcc
    << ";gates=zrn";
  for (std::size_t i = 0; i < params_.size(); ++i) {
    o << ";" << params_.name(i) << ":" << params_.value(i).rows() << "x" << params_.value(i).cols();
  }
  return Fnv1a64(o.str());
}

// ----------------------------------------------------------- checkpoint

namespace {

constexpr char kMagic[8] = {'D', 'D', 'S', 'P', 'B', 'W', 'E', '1'};
constexpr std::uint32_t kVersion = 1;

// Little-endian writers; the supported hosts are little-endian, which is
// checked once at load.
template <typename T>
void Put(std::ostream& o, T v) {
  o.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

void PutString(std::ostream& o, const std::string& s) {
  Put<std::uint32_t>(o, static_cast<std::uint32_t>(s.size()));
  o.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void PutMatrix(std::ostream& o, const Matrix& m) {
  Put<std::uint32_t>(o, static_cast<std::uint32_t>(m.rows()));
  Put<std::uint32_t>(o, static_cast<std::uint32_t>(m.cols()));
  o.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
}

template <typename T>
T Get(std::istream& in, const std::string& path) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw DataError("checkpoint " + path + " is truncated");
  return v;
}

std::string GetString(std::istream& in, const std::string& path) {
  const auto n = Get<std::uint32_t>(in, path);
  if (n > (1u << 24)) throw DataError("checkpoint " + path + ": implausible string length");
  std::string s(n, '\0');
  in.read(s.data(), n);
  if (!in) throw DataError("checkpoint " + path + " is truncated");
  return s;
}

Matrix GetMatrix(std::istream& in, const std::string& path) {
  const auto r = Get<std::uint32_t>(in, path);
  const auto c = Get<std::uint32_t>(in, path);
  if (static_cast<std::uint64_t>(r) * c > (1ull << 30)) {
    throw DataError("checkpoint " + path + ": implausible tensor size");
  }
  Matrix m(r, c);
  in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
  if (!in) throw DataError("checkpoint " + path + " is truncated");
  return m;
}

}  // namespace

void SaveCheckpoint(const std::string& path, const Controller& model, const TrainingState* state) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream o(tmp, std::ios::binary);
    if (!o) throw DataError("cannot write checkpoint " + path);
    o.write(kMagic, sizeof(kMagic));
    Put<std::uint32_t>(o, kVersion);
    Put<std::uint64_t>(o, model.ArchitectureHash());
    const auto& p = model.params();
    Put<std::uint64_t>(o, p.init_seed);
    Put<std::uint64_t>(o, p.step);
    PutString(o, model.config().ToText());
    Put<std::uint32_t>(o, static_cast<std::uint32_t>(p.size()));
    for (std::size_t i = 0; i < p.size(); ++i) {
      PutString(o, p.name(i));
      PutMatrix(o, p.value(i));
    }
    Put<std::uint8_t>(o, state ? 1 : 0);
    if (state) {
      Put<double>(o, state->lr);
      Put<double>(o, state->best_loss);
      Put<std::uint64_t>(o, state->best_step);
      Put<std::int32_t>(o, state->halvings);
      Put<std::uint64_t>(o, state->train_seed);
      Put<std::uint32_t>(o, static_cast<std::uint32_t>(state->adam_m.size()));
      for (std::size_t i = 0; i < state->adam_m.size(); ++i) {
        PutMatrix(o, state->adam_m[i]);
        PutMatrix(o, state->adam_v[i]);
      }
    }
    if (!o) throw DataError("failed writing checkpoint " + path);
  }
  std::rename(tmp.c_str(), path.c_str());
}

LoadedCheckpoint LoadCheckpoint(const std::string& path, std::optional<Variant> expected) {
  const std::uint16_t probe = 1;
  if (*reinterpret_cast<const std::uint8_t*>(&probe) != 1) {
    throw DataError("checkpoints require a little-endian host");
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read checkpoint " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw DataError("checkpoint " + path + ": bad magic bytes");
  }
  const auto version = Get<std::uint32_t>(in, path);
  if (version != kVersion) {
    throw DataError("checkpoint " + path + ": unsupported version " + std::to_string(version));
  }
  const auto hash = Get<std::uint64_t>(in, path);
  const auto init_seed = Get<std::uint64_t>(in, path);
  const auto step = Get<std::uint64_t>(in, path);
  const ModelConfig config = ModelConfig::FromText(GetString(in, path));
  if (expected && config.variant != *expected) {
    throw DataError("checkpoint " + path + " holds a " + VariantName(config.variant) +
                    " model, expected " + VariantName(*expected));
  }
  LoadedCheckpoint out{Controller(config, init_seed), std::nullopt};
  auto& p = out.model.params();
  if (out.model.ArchitectureHash() != hash) {
    throw DataError("checkpoint " + path + ": architecture hash mismatch");
  }
  const auto count = Get<std::uint32_t>(in, path);
  if (count != p.size()) throw DataError("checkpoint " + path + ": tensor count mismatch");
  for (std::size_t i = 0; i < count; ++i) {
    const std::string name = GetString(in, path);
    Matrix m = GetMatrix(in, path);
    if (name != p.name(i) || m.rows() != p.value(i).rows() || m.cols() != p.value(i).cols()) {
      throw DataError("checkpoint " + path + ": tensor '" + name + "' does not match the architecture");
    }
    p.value(i) = std::move(m);
  }
  p.step = step;
  if (Get<std::uint8_t>(in, path)) {
    TrainingState s;
    s.lr = Get<double>(in, path);
    s.best_loss = Get<double>(in, path);
    s.best_step = Get<std::uint64_t>(in, path);
    s.halvings = Get<std::int32_t>(in, path);
    s.train_seed = Get<std::uint64_t>(in, path);
    const auto n = Get<std::uint32_t>(in, path);
    if (n != 0 && n != p.size()) throw DataError("checkpoint " + path + ": optimizer state mismatch");
    for (std::size_t i = 0; i < n; ++i) {
      s.adam_m.push_back(GetMatrix(in, path));
      s.adam_v.push_back(GetMatrix(in, path));
    }
    out.state = std::move(s);
  }
  return out;
}

}  // namespace bwe
