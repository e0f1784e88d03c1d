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

#include "bwe/audio.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "bwe/common.h"

namespace bwe {

void Validate(const AudioBuffer& x) {
  if (x.sample_rate <= 0) {
    throw std::invalid_argument("sample rate must be positive");
  }
  for (double v : x.samples) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("audio contains non-finite samples");
    }
  }
}

double Energy(std::span<const double> x) {
  double e = 0.0;
  for (double v : x) e += v * v;
  return e;
}

double MeanPower(std::span<const double> x) {
  return x.empty() ? 0.0 : Energy(x) / static_cast<double>(x.size());
}

double Peak(std::span<const double> x) {
  double p = 0.0;
  for (double v : x) p = std::max(p, std::abs(v));
  return p;
}

namespace {

static_assert(std::endian::native == std::endian::little,
              "WAV I/O assumes a little-endian host");

template <typename T>
T ReadLe(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

template <typename T>
void AppendLe(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

}  // namespace

AudioBuffer ReadWav(const std::string& path, int target_rate) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || bytes.compare(0, 4, "RIFF") != 0 ||
      bytes.compare(8, 4, "WAVE") != 0) {
    throw DataError(path + ": not a RIFF/WAVE file");
  }

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const char* data = nullptr;
  std::size_t data_len = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::string id = bytes.substr(pos, 4);
    const auto len = ReadLe<std::uint32_t>(bytes.data() + pos + 4);
    const std::size_t body = pos + 8;
    if (body + len > bytes.size() && id != "data") {
      throw DataError(path + ": truncated chunk " + id);
    }
    if (id == "fmt ") {
      if (len < 16) throw DataError(path + ": short fmt chunk");
      format = ReadLe<std::uint16_t>(bytes.data() + body);
      channels = ReadLe<std::uint16_t>(bytes.data() + body + 2);
      rate = ReadLe<std::uint32_t>(bytes.data() + body + 4);
      bits = ReadLe<std::uint16_t>(bytes.data() + body + 14);
      if (format == 0xFFFE && len >= 26) {
        // WAVE_FORMAT_EXTENSIBLE: the sub-format GUID starts with the tag.
        format = ReadLe<std::uint16_t>(bytes.data() + body + 24);
      }
    } else if (id == "data") {
      data = bytes.data() + body;
      data_len = std::min<std::size_t>(len, bytes.size() - body);
    }
    pos = body + len + (len & 1);
  }
  if (channels == 0 || rate == 0 || data == nullptr) {
    throw DataError(path + ": missing fmt or data chunk");
  }
  const bool is_float = format == 3;
  if (!(format == 1 || is_float) ||
      (is_float && bits != 32 && bits != 64) ||
      (!is_float && bits != 8 && bits != 16 && bits != 24 && bits != 32)) {
    throw DataError(path + ": unsupported WAV encoding");
  }

  const std::size_t bytes_per_sample = bits / 8;
  const std::size_t frame_bytes = bytes_per_sample * channels;
  const std::size_t n_frames = data_len / frame_bytes;
  std::vector<double> mono(n_frames, 0.0);
  for (std::size_t i = 0; i < n_frames; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const char* p = data + i * frame_bytes + c * bytes_per_sample;
      double v = 0.0;
      if (is_float) {
        v = bits == 32 ? ReadLe<float>(p) : ReadLe<double>(p);
      } else if (bits == 8) {
        v = (static_cast<unsigned char>(*p) - 128.0) / 128.0;
      } else if (bits == 16) {
        v = ReadLe<std::int16_t>(p) / 32768.0;
      } else if (bits == 24) {
        std::int32_t s = static_cast<unsigned char>(p[0]) |
                         (static_cast<unsigned char>(p[1]) << 8) |
                         (static_cast<std::int32_t>(static_cast<signed char>(p[2])) << 16);
        v = s / 8388608.0;
      } else {
        v = ReadLe<std::int32_t>(p) / 2147483648.0;
      }
      acc += v;
    }
    mono[i] = acc / channels;
  }

  AudioBuffer out(std::move(mono), static_cast<int>(rate));
  if (target_rate > 0 && target_rate != out.sample_rate) {
    out.samples = Resample(out.samples, out.sample_rate, target_rate);
    out.sample_rate = target_rate;
  }
  Validate(out);
  return out;
}

void WriteWav(const std::string& path, const AudioBuffer& x,
              WavEncoding encoding) {
  Validate(x);
  const bool pcm = encoding == WavEncoding::kPcm16;
  const std::uint16_t bits = pcm ? 16 : 32;
  const std::uint32_t data_len =
      static_cast<std::uint32_t>(x.size() * (bits / 8));

  std::string out;
  out.reserve(44 + data_len);
  out += "RIFF";
  AppendLe<std::uint32_t>(out, 36 + data_len);
  out += "WAVEfmt ";
  AppendLe<std::uint32_t>(out, 16);
  AppendLe<std::uint16_t>(out, pcm ? 1 : 3);
  AppendLe<std::uint16_t>(out, 1);
  AppendLe<std::uint32_t>(out, static_cast<std::uint32_t>(x.sample_rate));
  AppendLe<std::uint32_t>(out,
                          static_cast<std::uint32_t>(x.sample_rate) * bits / 8);
  AppendLe<std::uint16_t>(out, bits / 8);
  AppendLe<std::uint16_t>(out, bits);
  out += "data";
  AppendLe<std::uint32_t>(out, data_len);
  for (double v : x.samples) {
    if (pcm) {
      const double c = std::clamp(v, -1.0, 32767.0 / 32768.0);
      AppendLe<std::int16_t>(out,
                             static_cast<std::int16_t>(std::lround(c * 32768.0)));
    } else {
      AppendLe<float>(out, static_cast<float>(v));
    }
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

namespace {

double BesselI0(double x) {
  double sum = 1.0, term = 1.0;
  const double q = x * x / 4.0;
  for (int k = 1; k < 64; ++k) {
    term *= q / (k * k);
    sum += term;
    if (term < sum * 1e-17) break;
  }
  return sum;
}

}  // namespace

std::vector<double> Resample(std::span<const double> x, int from_rate,
                             int to_rate) {
  if (from_rate <= 0 || to_rate <= 0) {
    throw std::invalid_argument("resample rates must be positive");
  }
  if (from_rate == to_rate) return {x.begin(), x.end()};

  constexpr int kZeroCrossings = 32;
  constexpr double kBeta = 8.6;
  const double ratio = static_cast<double>(to_rate) / from_rate;
  // Cutoff relative to the input rate's Nyquist.
  const double cutoff = 0.95 * std::min(1.0, ratio);
  const double half_width = kZeroCrossings / cutoff;
  constexpr int kTable = 8192;
  std::vector<double> window(kTable + 2);
  const double i0_beta = BesselI0(kBeta);
  for (int i = 0; i <= kTable + 1; ++i) {
    const double r = std::min(1.0, static_cast<double>(i) / kTable);
    window[i] = BesselI0(kBeta * std::sqrt(1.0 - r * r)) / i0_beta;
  }

  const auto n_out = static_cast<std::size_t>(
      std::ceil(static_cast<double>(x.size()) * ratio));
  std::vector<double> y(n_out, 0.0);
  const auto n_in = static_cast<std::int64_t>(x.size());
  for (std::size_t j = 0; j < n_out; ++j) {
    const double t = static_cast<double>(j) / ratio;
    const auto lo = static_cast<std::int64_t>(std::ceil(t - half_width));
    const auto hi = static_cast<std::int64_t>(std::floor(t + half_width));
    double acc = 0.0;
    for (std::int64_t i = std::max<std::int64_t>(lo, 0);
         i <= std::min(hi, n_in - 1); ++i) {
      const double d = static_cast<double>(i) - t;
      const double pos = std::min(1.0, std::abs(d) / half_width) * kTable;
      const auto idx = static_cast<int>(pos);
      const double frac = pos - idx;
      const double win = window[idx] + frac * (window[idx + 1] - window[idx]);
      const double arg = kPi * cutoff * d;
      const double sinc = std::abs(arg) < 1e-12 ? 1.0 : std::sin(arg) / arg;
      acc += x[static_cast<std::size_t>(i)] * cutoff * sinc * win;
    }
    y[j] = acc;
  }
  return y;
}

}  // namespace bwe
