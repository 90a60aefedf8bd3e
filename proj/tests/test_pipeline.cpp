#include <doctest.h>

#include <fstream>
#include <iterator>

#include "octrasl/io.hpp"
#include "octrasl/pipeline.hpp"
#include "support.hpp"

using namespace octrasl;
using octrasl::testing::TempDir;

namespace {

SynthSpec small_spec() {
  SynthSpec s;
  s.n = 5;
  s.width = 64;
  s.height = 64;
  s.seed = 4;
  return s;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

nlohmann::json without_timings(nlohmann::json j) {
  j.erase("timings");
  return j;
}

}  // namespace

TEST_CASE("noiseless aligned stack compounds to the clean phantom") {
  SynthSpec spec = small_spec();
  spec.max_translation = 0.0;
  spec.max_rotation = 0.0;
  spec.speckle_sigma = 0.0;
  spec.sparse_fraction = 0.0;
  DenoiseConfig cfg;
  cfg.input = spec;
  const DenoiseOutput out = denoise(cfg);
  const Image clean = render_phantom(spec.base, spec.width, spec.height);
  CHECK((out.image.vec() - clean.vec()).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("denoised output beats every input frame and the baseline") {
  SynthSpec spec;
  spec.n = 10;
  spec.speckle_sigma = 0.1;
  spec.sparse_fraction = 0.01;
  spec.seed = 6;
  DenoiseConfig cfg;
  cfg.input = spec;
  const DenoiseOutput out = denoise(cfg);

  const SynthStack s = synth_stack(spec);
  const MetricReport ours = evaluate(out.image, s.truth.rois);
  for (const Image& frame : s.stack) CHECK(ours.avg_snr > evaluate(frame, s.truth.rois).avg_snr);
  REQUIRE(out.baseline_image);
  CHECK(ours.avg_snr > evaluate(*out.baseline_image, s.truth.rois).avg_snr);

  const auto& labels = out.report.metrics;
  REQUIRE(labels.size() == 3);
  CHECK(labels[0].label == "input");
  CHECK(labels[1].label == "rasl_median");
  CHECK(labels[2].label == "baseline_median");
}

TEST_CASE("compounding input covers pixels outside the joint mask") {
  SynthSpec spec = small_spec();
  spec.speckle_sigma = 0.0;
  spec.sparse_fraction = 0.0;
  const SynthStack s = synth_stack(spec);
  const RaslResult r = rasl_align(s.stack, RaslConfig{});
  const auto [m, valid] = compounding_input(s.stack, r);
  CHECK(m.rows() == r.low_rank.rows());
  for (Index p = 0; p < m.rows(); ++p) CHECK(valid.row(p).any());
  for (Index p = 0; p < m.rows(); ++p) {
    if (r.valid[static_cast<std::size_t>(p)]) CHECK(m.row(p) == r.low_rank.row(p));
  }
}

TEST_CASE("report JSON round trips") {
  DenoiseConfig cfg;
  cfg.input = small_spec();
  cfg.rasl.lambda = 0.02;
  cfg.rasl.inner.mu0 = 0.7;
  const DenoiseOutput out = denoise(cfg);
  const nlohmann::json j = out.report;
  const RunReport back = j.get<RunReport>();
  CHECK(nlohmann::json(back) == j);
  CHECK(back.config.rasl.lambda == 0.02);
  CHECK(back.config.rasl.inner.mu0 == 0.7);
  CHECK(back.history.size() == out.report.history.size());
  CHECK(back.taus.size() == 5);
}

TEST_CASE("unset optional settings serialize as auto") {
  const nlohmann::json j = RaslConfig{};
  CHECK(j.at("lambda") == "auto");
  CHECK(j.at("inner").at("mu0") == "auto");
  const RaslConfig back = j.get<RaslConfig>();
  CHECK_FALSE(back.lambda.has_value());
  CHECK(back.smoothing == 1.0);
  CHECK(back.fix_gauge);
}

TEST_CASE("replaying a report reproduces the run") {
  TempDir dir("replay");
  DenoiseConfig cfg;
  cfg.input = small_spec();
  run_denoise(cfg, dir.path / "a.png", dir.path / "a.json");
  const RunReport first = read_json(dir.path / "a.json").get<RunReport>();
  run_denoise(first.config, dir.path / "b.png", dir.path / "b.json");
  CHECK(slurp(dir.path / "a.png") == slurp(dir.path / "b.png"));
  nlohmann::json ja = without_timings(read_json(dir.path / "a.json"));
  nlohmann::json jb = without_timings(read_json(dir.path / "b.json"));
  ja.erase("outputs");
  jb.erase("outputs");
  CHECK(ja == jb);
}

TEST_CASE("manifest input runs end to end") {
  TempDir dir("manifest_run");
  const SynthStack s = synth_stack(small_spec());
  StackManifest mf;
  for (std::size_t i = 0; i < s.stack.size(); ++i) {
    const std::string name = "f" + std::to_string(i) + ".png";
    write_png16(dir.path / name, s.stack[i]);
    mf.paths.emplace_back(name);
  }
  write_manifest(dir.path / "stack.txt", mf);
  write_rois(dir.path / "rois.txt", s.truth.rois);
  DenoiseConfig cfg;
  cfg.input = dir.path / "stack.txt";
  cfg.rois = dir.path / "rois.txt";
  cfg.method = CompoundMethod::mean;
  const DenoiseOutput out = run_denoise(cfg, dir.path / "out.png", dir.path / "report.json");
  CHECK(std::filesystem::exists(dir.path / "out.png"));
  CHECK(out.report.frames == 5);
  CHECK(out.report.metrics.size() == 3);
  CHECK(out.report.metrics[1].label == "rasl_mean");
  CHECK(read_png(dir.path / "out.png").frame() == Frame{64, 64});
}

TEST_CASE("pipeline errors carry the stage name") {
  TempDir dir("stage_err");
  DenoiseConfig cfg;
  cfg.input = dir.path / "missing.txt";
  try {
    denoise(cfg);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::io);
    CHECK(std::string(e.what()).rfind("load", 0) == 0);
  }
  SynthSpec bad = small_spec();
  bad.n = 1;
  cfg.input = bad;
  CHECK_THROWS_AS(denoise(cfg), Error);
}

TEST_CASE("synth spec files") {
  TempDir dir("spec");
  std::ofstream(dir.path / "s.json") << R"({"n": 7, "base": "blobs", "seed": 11})";
  const SynthSpec s = read_synth_spec(dir.path / "s.json");
  CHECK(s.n == 7);
  CHECK(s.base == PhantomKind::blobs);
  CHECK(s.seed == 11);
  CHECK(s.width == 128);
  std::ofstream(dir.path / "bad.json") << R"({"n": "many"})";
  CHECK_THROWS_AS(read_synth_spec(dir.path / "bad.json"), Error);
  std::ofstream(dir.path / "broken.json") << "{";
  CHECK_THROWS_AS(read_synth_spec(dir.path / "broken.json"), Error);
}

TEST_CASE("replay configs come back from reports") {
  TempDir dir("replay_cfg");
  DenoiseConfig cfg;
  cfg.input = small_spec();
  cfg.rasl.smoothing = 0.5;
  cfg.method = CompoundMethod::mean;
  run_denoise(cfg, dir.path / "a.png", dir.path / "a.json");
  CHECK(nlohmann::json(read_replay_config(dir.path / "a.json")) == nlohmann::json(cfg));
  std::ofstream(dir.path / "no_config.json") << R"({"frames": 3})";
  CHECK_THROWS_AS(read_replay_config(dir.path / "no_config.json"), Error);
  std::ofstream(dir.path / "bad_config.json") << R"({"config": {"method": 7}})";
  CHECK_THROWS_AS(read_replay_config(dir.path / "bad_config.json"), Error);
}
