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

// bwe_lab: dataset generation, training, extension, evaluation and
// benchmarking from one binary.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "bwe/data.h"
#include "bwe/eval.h"
#include "bwe/run_config.h"
#include "bwe/signal.h"
#include "bwe/train.h"

namespace fs = std::filesystem;

namespace {

constexpr char kManifestName[] = "manifest.txt";

// One configurable setting. Its long option, config key and resolved-config
// entry share the name.
struct Key {
  std::string name;
  std::string fallback;
  std::string help;
  bool flag = false;
};

// A subcommand whose settings resolve as defaults < --config file < flags.
class Command {
 public:
  Command(CLI::App& parent, const std::string& name, const std::string& help,
          std::vector<Key> keys)
      : app_(parent.add_subcommand(name, help)), keys_(std::move(keys)) {
    app_->add_option("--config", config_path_, "flat key=value file (a resolved config works)")
        ->check(CLI::ExistingFile);
    for (const Key& k : keys_) {
      if (k.flag) {
        options_[k.name] = app_->add_flag("--" + k.name, flags_[k.name], k.help);
      } else {
        options_[k.name] = app_->add_option("--" + k.name, values_[k.name],
                                            k.help + (k.fallback.empty() ? "" : " [" + k.fallback + "]"));
      }
    }
  }

  CLI::App* app() { return app_; }

  void Positional(const std::string& name, const std::string& help) {
    options_[name] = app_->add_option(name, values_[name], help)->required();
  }

  bwe::RunConfig Resolve() const {
    bwe::RunConfig c;
    for (const Key& k : keys_) c.Set(k.name, k.flag ? (k.fallback.empty() ? "false" : k.fallback) : k.fallback);
    if (!config_path_.empty()) c.Merge(bwe::RunConfig::Load(config_path_));
    for (const auto& [name, opt] : options_) {
      if (opt->count() == 0) continue;
      if (flags_.count(name)) {
        c.Set(name, flags_.at(name) ? "true" : "false");
      } else {
        c.Set(name, values_.at(name));
      }
    }
    return c;
  }

 private:
  CLI::App* app_;
  std::vector<Key> keys_;
  std::string config_path_;
  std::map<std::string, std::string> values_;
  std::map<std::string, bool> flags_;
  std::map<std::string, CLI::Option*> options_;
};

std::string CacheDir() {
  const char* env = std::getenv("BWE_LAB_CACHE");
  return env ? std::string(env) : std::string();
}

void RequireNonEmpty(const bwe::RunConfig& c, const std::string& key) {
  if (c.Get(key).empty()) throw std::invalid_argument("--" + key + " is required");
}

int Jobs(const bwe::RunConfig& c) {
  return c.GetBool("deterministic") ? 1 : std::max(1, c.GetInt("jobs"));
}

std::vector<Key> ModelKeys() {
  return {{"variant", "mono_dec", "mono_dec, noise_only or poly_dec"},
          {"harmonics", "100", "harmonic amplitudes per voice"},
          {"noise-bands", "65", "noise filter bands"},
          {"gru-units", "512", "encoder and decoder GRU width"},
          {"mlp-width", "512", "MLP width"},
          {"z-dim", "512", "latent width"},
          {"max-voices", "5", "voice slots of the polyphonic decoder"},
          {"cutoff-hz", "2000", "low-band cutoff"}};
}

bwe::ModelConfig ModelFrom(const bwe::RunConfig& c) {
  bwe::ModelConfig m;
  m.variant = bwe::ParseVariant(c.Get("variant"));
  m.n_harmonics = c.GetInt("harmonics");
  m.n_noise = c.GetInt("noise-bands");
  m.gru_units = c.GetInt("gru-units");
  m.mlp_width = c.GetInt("mlp-width");
  m.z_dim = c.GetInt("z-dim");
  m.max_voices = c.GetInt("max-voices");
  m.cutoff_hz = c.GetDouble("cutoff-hz");
  m.Validate();
  return m;
}

bwe::DatasetManifest LoadData(const std::string& dir) {
  return bwe::ReadManifest((fs::path(dir) / kManifestName).string());
}

// ---- gen-data -------------------------------------------------------------

int GenData(const bwe::RunConfig& c) {
  RequireNonEmpty(c, "out");
  const std::string kind = c.Get("kind");
  const fs::path out = c.Get("out");
  const fs::path manifest_path = out / kManifestName;
  if (fs::exists(out) && !fs::is_empty(out)) {
    if (!c.GetBool("force")) {
      throw std::invalid_argument(out.string() + " is not empty (use --force to overwrite)");
    }
    // Only what gen-data itself writes is removed.
    fs::remove(manifest_path);
    fs::remove_all(out / "audio");
  }
  bwe::DatasetManifest m;
  if (kind == "mono") {
    m = bwe::GenMonoDataset(c.GetU64("seed"));
  } else if (kind == "poly") {
    m = bwe::GenPolyDataset(c.GetU64("seed"));
  } else if (kind == "corpus") {
    RequireNonEmpty(c, "input");
    m = bwe::IngestCorpus(c.Get("input"), c.GetDouble("clip-seconds"), c.GetDouble("split-ratio"),
                          c.GetU64("seed"));
  } else {
    throw std::invalid_argument("--kind must be mono, poly or corpus");
  }
  fs::create_directories(out);
  bwe::MaterializeDataset(m, out.string());
  bwe::WriteManifest(manifest_path.string(), m);
  c.Save((out / "gen-data.cfg").string());
  std::size_t train = m.Split("train").size(), test = m.Split("test").size();
  std::cout << m.clips.size() << " clips (" << train << " train, " << test << " test) in "
            << out.string() << "\nmanifest hash " << std::hex << bwe::ManifestHash(m) << std::dec
            << '\n';
  return 0;
}

// ---- train ----------------------------------------------------------------

int TrainCmd(const bwe::RunConfig& c) {
  RequireNonEmpty(c, "data");
  RequireNonEmpty(c, "out");
  const fs::path out = c.Get("out");
  fs::create_directories(out);
  const std::string ckpt = (out / "model.ckpt").string();

  bwe::TrainConfig tc;
  tc.steps = c.GetInt("steps");
  tc.batch = c.GetInt("batch");
  tc.lr0 = c.GetDouble("lr");
  tc.plateau_steps = c.GetInt("plateau-steps");
  tc.max_halvings = c.GetInt("max-halvings");
  tc.crop_s = c.GetDouble("crop-seconds");
  tc.seed = c.GetU64("seed");
  tc.checkpoint_every = c.GetInt("checkpoint-every");
  tc.log_every = c.GetInt("log-every");
  tc.clip_norm = c.GetDouble("clip-norm");
  tc.mss.fft_sizes.clear();
  for (const auto& s : c.GetList("fft-sizes")) tc.mss.fft_sizes.push_back(std::stoi(s));
  tc.mss.high_band_only = c.GetBool("high-band-only");
  const std::string pitch = c.Get("pitch");
  if (pitch == "oracle") {
    tc.pitch = bwe::PitchSource::kOracle;
  } else if (pitch == "estimate") {
    tc.pitch = bwe::PitchSource::kEstimated;
  } else {
    throw std::invalid_argument("--pitch must be oracle or estimate for training");
  }
  tc.Validate();

  const bwe::ModelConfig mc = ModelFrom(c);
  std::unique_ptr<bwe::Controller> model;
  bwe::TrainRun run;
  run.checkpoint_path = ckpt;
  run.loss_log_path = (out / "loss.csv").string();
  if (c.GetBool("resume") && fs::exists(ckpt)) {
    auto loaded = bwe::LoadCheckpoint(ckpt, mc.variant);
    if (loaded.model.config().ToText() != mc.ToText()) {
      spdlog::warn("resuming with the checkpoint's model settings, which differ from the request");
    }
    model = std::make_unique<bwe::Controller>(std::move(loaded.model));
    run.resume = loaded.state;
    spdlog::info("resuming {} at step {}", ckpt, model->params().step);
  } else {
    model = std::make_unique<bwe::Controller>(mc, c.GetU64("seed"));
  }
  spdlog::info("{} with {} parameters", bwe::VariantName(mc.variant),
               bwe::nn::ParamCount(model->params()));

  const auto manifest = LoadData(c.Get("data"));
  const auto clips = bwe::LoadLabeledClips(manifest, "train", c.Get("data"), mc.cutoff_hz,
                                           std::max(mc.max_voices, 1), mc.hop, CacheDir());
  c.Save((out / "train.cfg").string());
  const auto records = bwe::Train(*model, clips, tc, run);
  if (!records.empty()) {
    std::cout << "trained to step " << model->params().step << ", last loss "
              << records.back().loss << ", checkpoint " << ckpt << '\n';
  } else {
    std::cout << "nothing to do: checkpoint already at step " << model->params().step << '\n';
  }
  return 0;
}

// ---- shared pipeline settings ---------------------------------------------

std::vector<Key> PipelineKeys() {
  return {{"pitch", "oracle", "oracle, estimate or file"},
          {"pitch-file", "", "pitch CSV, or a directory of <clip id>.csv"},
          {"sbr-alpha", "0.5", "SBR energy-matching fraction"},
          {"sbr-bands", "3", "SBR replications"},
          {"iterations", "5", "cyclic iterations"},
          {"seed", "0", "synthesis seed"}};
}

bwe::PipelineOptions PipelineFrom(const bwe::RunConfig& c, const std::string& model,
                                  std::shared_ptr<const bwe::Controller> ckpt) {
  bwe::PipelineOptions o;
  o.model = model;
  o.checkpoint = std::move(ckpt);
  o.pitch = bwe::ParsePitchMode(c.Get("pitch"));
  o.pitch_file = c.Get("pitch-file");
  if (o.pitch == bwe::PitchMode::kFile && o.pitch_file.empty()) {
    throw std::invalid_argument("--pitch file needs --pitch-file");
  }
  o.sbr.match_fraction = c.GetDouble("sbr-alpha");
  o.sbr.n_replications = c.GetInt("sbr-bands");
  o.iterations = c.GetInt("iterations");
  o.seed = c.GetU64("seed");
  return o;
}

// Loads each checkpoint a model list needs, once.
class CheckpointSet {
 public:
  explicit CheckpointSet(const bwe::RunConfig& c) : config_(c) {}

  std::shared_ptr<const bwe::Controller> For(const std::string& model) {
    std::string key;
    std::optional<bwe::Variant> v;
    if (model == "ddsp-mono" || model == "ddsp-cyclic") {
      key = "mono-checkpoint";
      v = bwe::Variant::kMonoDec;
    } else if (model == "ddsp-noise") {
      key = "noise-checkpoint";
      v = bwe::Variant::kNoiseOnly;
    } else if (model == "ddsp-poly") {
      key = "poly-checkpoint";
      v = bwe::Variant::kPolyDec;
    } else {
      return nullptr;
    }
    const std::string path = config_.Get(key);
    if (path.empty()) throw std::invalid_argument(model + " needs --" + key);
    auto& slot = loaded_[path];
    if (!slot) slot = std::make_shared<bwe::Controller>(bwe::LoadCheckpoint(path, v).model);
    return slot;
  }

 private:
  const bwe::RunConfig& config_;
  std::map<std::string, std::shared_ptr<const bwe::Controller>> loaded_;
};

std::vector<Key> EvalKeys() {
  auto keys = PipelineKeys();
  const std::vector<Key> more{
      {"data", "", "dataset directory"},
      {"split", "test", "manifest split"},
      {"models", "null,sbr", "comma-separated pipelines"},
      {"mono-checkpoint", "", "mono_dec checkpoint (ddsp-mono, ddsp-cyclic)"},
      {"noise-checkpoint", "", "noise_only checkpoint"},
      {"poly-checkpoint", "", "poly_dec checkpoint"},
      {"cutoff-hz", "2000", "low-band cutoff"},
      {"max-voices", "5", "oracle voices per clip"},
      {"out", "", "output directory"},
      {"jobs", "1", "worker cap"},
      {"deterministic", "", "single-threaded", true}};
  keys.insert(keys.end(), more.begin(), more.end());
  return keys;
}

std::vector<bwe::LabeledClip> EvalClips(const bwe::RunConfig& c) {
  RequireNonEmpty(c, "data");
  const auto manifest = LoadData(c.Get("data"));
  return bwe::LoadLabeledClips(manifest, c.Get("split"), c.Get("data"), c.GetDouble("cutoff-hz"),
                               c.GetInt("max-voices"), 256, CacheDir());
}

// Orderings the method is expected to show on synthetic data.
void PrintOrderings(const std::map<std::string, double>& mean) {
  const std::pair<const char*, const char*> expected[] = {
      {"ddsp-mono", "sbr"},  {"sbr", "null"},          {"ddsp-mono", "ddsp-noise"},
      {"ddsp-poly", "ddsp-mono"}, {"ddsp-poly", "sbr"}, {"ddsp-cyclic", "ddsp-mono"}};
  for (const auto& [a, b] : expected) {
    if (!mean.count(a) || !mean.count(b)) continue;
    std::cout << "ordering " << a << " < " << b << ": "
              << (mean.at(a) < mean.at(b) ? "PASS" : "FAIL") << '\n';
  }
}

int EvalCmd(const bwe::RunConfig& c, bool compare) {
  const auto clips = EvalClips(c);
  CheckpointSet ckpts(c);
  bwe::EvalOptions eo;
  eo.jobs = Jobs(c);
  std::vector<bwe::MetricRecord> all;
  std::vector<bwe::MetricSummary> summaries;
  std::map<std::string, double> mean;
  for (const auto& name : c.GetList("models")) {
    const auto pipe = bwe::MakePipeline(PipelineFrom(c, name, ckpts.For(name)));
    const auto recs = bwe::Evaluate(name, pipe, clips, eo);
    all.insert(all.end(), recs.begin(), recs.end());
    summaries.push_back(bwe::Summarize(name, recs));
    mean[name] = summaries.back().mean_lsd;
    std::printf("%-12s LSD %.3f +- %.3f over %zu clips, %.2f%% real time\n", name.c_str(),
                summaries.back().mean_lsd, summaries.back().std_lsd, summaries.back().count,
                summaries.back().mean_realtime_pct);
  }
  if (!c.Get("out").empty()) {
    const fs::path out = c.Get("out");
    fs::create_directories(out);
    bwe::WriteMetricsCsv((out / "metrics.csv").string(), all);
    bwe::WriteMetricsJsonl((out / "metrics.jsonl").string(), all);
    nlohmann::json j = nlohmann::json::array();
    for (const auto& s : summaries) {
      j.push_back({{"model", s.model}, {"clips", s.count}, {"mean_lsd", s.mean_lsd},
                   {"std_lsd", s.std_lsd}, {"mean_realtime_pct", s.mean_realtime_pct}});
    }
    std::ofstream((out / "summary.json").string()) << j.dump(2) << '\n';
    c.Save((out / "eval.cfg").string());
  }
  if (compare) {
    std::cout << '\n' << bwe::CompareTable(summaries);
    PrintOrderings(mean);
  }
  return 0;
}

// ---- bench ----------------------------------------------------------------

int BenchCmd(const bwe::RunConfig& c) {
  auto clips = EvalClips(c);
  const auto n = static_cast<std::size_t>(std::max(1, c.GetInt("clips")));
  if (clips.size() > n) clips.resize(n);
  CheckpointSet ckpts(c);
  const auto env = bwe::Fingerprint();
  spdlog::info("environment {}", bwe::ToJson(env));
  std::vector<bwe::BenchResult> results;
  std::vector<double> lsd;
  for (const auto& name : c.GetList("models")) {
    const auto pipe = bwe::MakePipeline(PipelineFrom(c, name, ckpts.For(name)));
    results.push_back(bwe::BenchInference(name, pipe, clips, c.GetInt("reps"), c.GetInt("warmup")));
    const auto& r = results.back();
    std::printf("%-12s realtime_pct %.3f (iqr %.3f, %zu reps)\n", name.c_str(), r.median_pct,
                r.iqr_pct(), r.realtime_pct.size());
    if (!c.Get("plot-data").empty()) {
      lsd.push_back(bwe::Summarize(name, bwe::Evaluate(name, pipe, clips)).mean_lsd);
    }
  }
  if (!c.Get("out").empty()) {
    const fs::path out = c.Get("out");
    fs::create_directories(out);
    std::ofstream f(out / "bench.csv");
    f << "model,realtime_pct,q1_pct,q3_pct,reps\n";
    for (const auto& r : results) {
      f << r.model << ',' << r.median_pct << ',' << r.q1_pct << ',' << r.q3_pct << ','
        << r.realtime_pct.size() << '\n';
    }
    std::ofstream(out / "environment.json") << bwe::ToJson(env) << '\n';
    c.Save((out / "bench.cfg").string());
  }
  if (!c.Get("plot-data").empty()) {
    std::ofstream f(c.Get("plot-data"));
    if (!f) throw bwe::DataError("cannot write " + c.Get("plot-data"));
    f << "model,lsd,realtime_pct,realtime_iqr\n";
    for (std::size_t i = 0; i < results.size(); ++i) {
      f << results[i].model << ',' << lsd[i] << ',' << results[i].median_pct << ','
        << results[i].iqr_pct() << '\n';
    }
  }
  return 0;
}

// ---- extend ---------------------------------------------------------------

void DumpResiduals(const std::string& dir, const bwe::CyclicTrace& trace) {
  fs::create_directories(dir);
  for (std::size_t i = 0; i < trace.residual_mags.size(); ++i) {
    std::ofstream f(fs::path(dir) / ("residual_" + std::to_string(i) + ".csv"));
    const bwe::Matrix& m = trace.residual_mags[i];
    for (Eigen::Index t = 0; t < m.rows(); ++t) {
      for (Eigen::Index k = 0; k < m.cols(); ++k) f << (k ? "," : "") << m(t, k);
      f << '\n';
    }
  }
}

int ExtendCmd(const bwe::RunConfig& c) {
  const std::string model = c.Get("model");
  std::shared_ptr<const bwe::Controller> ckpt;
  if (model.rfind("ddsp-", 0) == 0) {
    RequireNonEmpty(c, "checkpoint");
    ckpt = std::make_shared<bwe::Controller>(bwe::LoadCheckpoint(c.Get("checkpoint")).model);
  }
  auto options = PipelineFrom(c, model, ckpt);
  if (options.pitch == bwe::PitchMode::kOracle) {
    throw std::invalid_argument("extend has no ground-truth pitch; use --pitch estimate or file");
  }
  if (options.sbr.phase == bwe::SbrPhase::kOracle) options.sbr.phase = bwe::SbrPhase::kReplicated;
  const auto pipe = bwe::MakePipeline(options);

  bwe::LabeledClip clip;
  clip.id = fs::path(c.Get("input")).stem().string();
  clip.wb = bwe::ReadWav(c.Get("input"));
  clip.lb = c.GetBool("lowpass") ? bwe::LowPass(clip.wb, c.GetDouble("cutoff-hz")) : clip.wb;
  bwe::AudioBuffer y;
  if (model == "ddsp-cyclic" && !c.Get("dump-residuals").empty()) {
    bwe::CyclicTrace trace;
    trace.keep_spectra = true;
    auto pitch = options.pitch == bwe::PitchMode::kFile ? bwe::MakeFileProvider(options.pitch_file)
                                                        : bwe::MakeEstimatorProvider();
    y = bwe::BweDdspCyclic(clip.lb, *ckpt, *pitch, options.iterations, options.seed, &trace);
    DumpResiduals(c.Get("dump-residuals"), trace);
  } else {
    y = pipe(clip);
  }
  const std::string enc = c.Get("encoding");
  if (enc != "float32" && enc != "pcm16") throw std::invalid_argument("--encoding float32 or pcm16");
  bwe::WriteWav(c.Get("output"), y,
                enc == "pcm16" ? bwe::WavEncoding::kPcm16 : bwe::WavEncoding::kFloat32);
  std::cout << "wrote " << c.Get("output") << " (" << y.duration_s() << " s, " << model << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bwe_lab: audio bandwidth extension with harmonic-plus-noise synthesis"};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "only warnings and errors");

  Command gen(app, "gen-data", "generate or ingest a dataset",
              {{"kind", "mono", "mono, poly or corpus"},
               {"seed", "0", "generator seed"},
               {"out", "", "output directory"},
               {"input", "", "corpus directory of WAV files"},
               {"clip-seconds", "4", "corpus clip length"},
               {"split-ratio", "0.9", "corpus train fraction"},
               {"force", "", "overwrite a non-empty output directory", true}});

  auto train_keys = ModelKeys();
  const std::vector<Key> train_more{
      {"data", "", "dataset directory"},
      {"out", "", "run directory (checkpoint, loss log, resolved config)"},
      {"steps", "25000", "total optimizer steps"},
      {"batch", "32", "crops per step"},
      {"lr", "0.001", "initial learning rate"},
      {"plateau-steps", "2500", "steps without improvement before halving"},
      {"max-halvings", "4", "learning-rate halvings"},
      {"crop-seconds", "4", "training crop length"},
      {"pitch", "oracle", "oracle or estimate"},
      {"seed", "0", "initialization and sampling seed"},
      {"checkpoint-every", "500", "steps between checkpoints"},
      {"log-every", "50", "steps between progress lines"},
      {"clip-norm", "3", "global gradient norm cap, 0 disables"},
      {"fft-sizes", "2048,1024,512,256,128,64", "loss FFT sizes"},
      {"high-band-only", "true", "restrict the loss to the missing band"},
      {"resume", "", "continue from the run directory's checkpoint", true},
      {"jobs", "1", "worker cap"},
      {"deterministic", "", "single-threaded", true}};
  train_keys.insert(train_keys.end(), train_more.begin(), train_more.end());
  Command train(app, "train", "train a controller", train_keys);

  auto extend_keys = PipelineKeys();
  extend_keys[0].fallback = "estimate";
  const std::vector<Key> extend_more{
      {"model", "null", "null, sbr, ddsp-mono, ddsp-noise, ddsp-cyclic or ddsp-poly"},
      {"checkpoint", "", "controller checkpoint for ddsp models"},
      {"cutoff-hz", "2000", "cutoff used by --lowpass"},
      {"lowpass", "", "band-limit the input first", true},
      {"encoding", "float32", "output WAV encoding: float32 or pcm16"},
      {"dump-residuals", "", "directory for per-iteration residual CSVs (cyclic)"}};
  extend_keys.insert(extend_keys.end(), extend_more.begin(), extend_more.end());
  Command extend(app, "extend", "extend one WAV file", extend_keys);
  extend.Positional("input", "low-band WAV");
  extend.Positional("output", "extended WAV");

  Command eval(app, "eval", "score pipelines on a dataset split", EvalKeys());
  bool compare = false;
  eval.app()->add_flag("--compare", compare, "print a ranking table and expected orderings");

  auto bench_keys = EvalKeys();
  bench_keys.push_back({"reps", "5", "measured repetitions"});
  bench_keys.push_back({"warmup", "1", "discarded repetitions"});
  bench_keys.push_back({"clips", "10", "clips per repetition"});
  bench_keys.push_back({"plot-data", "", "CSV of mean LSD against real-time percentage"});
  Command bench(app, "bench", "measure inference speed", bench_keys);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  if (quiet) spdlog::set_level(spdlog::level::warn);

  try {
    if (gen.app()->parsed()) return GenData(gen.Resolve());
    if (train.app()->parsed()) return TrainCmd(train.Resolve());
    if (extend.app()->parsed()) return ExtendCmd(extend.Resolve());
    if (eval.app()->parsed()) return EvalCmd(eval.Resolve(), compare);
    if (bench.app()->parsed()) return BenchCmd(bench.Resolve());
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const bwe::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
