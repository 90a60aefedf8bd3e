// Command line front end: synth, align, rpca, denoise, metrics.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "octrasl/io.hpp"
#include "octrasl/pipeline.hpp"
#include "octrasl/rpca.hpp"

namespace fs = std::filesystem;
using namespace octrasl;

namespace {

std::optional<double> parse_auto(const std::string& s, const char* what) {
  if (s == "auto") return std::nullopt;
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorKind::invalid_input, std::string(what) + " must be 'auto' or a number, got '" + s + "'");
}

bool is_json(const fs::path& p) { return p.extension() == ".json"; }

StackSource source_from(const fs::path& input, std::optional<std::uint64_t> seed) {
  if (!is_json(input)) return input;
  SynthSpec spec = read_synth_spec(input);
  if (seed) spec.seed = *seed;
  return spec;
}

// A text matrix starts with a line of numbers; anything else is a manifest.
bool looks_like_matrix(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw Error(ErrorKind::io, "cannot open " + p.string());
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) continue;
    if (tok.front() == '#') return false;
    try {
      std::size_t used = 0;
      std::stod(tok, &used);
      return used == tok.size();
    } catch (const std::exception&) {
      return false;
    }
  }
  return false;
}

void write_stack_dir(const fs::path& dir, const Matrix& m, Frame frame, const std::string& stem) {
  fs::create_directories(dir);
  StackManifest mf;
  mf.source_id = stem;
  for (Index i = 0; i < m.cols(); ++i) {
    char name[64];
    std::snprintf(name, sizeof name, "%s_%03d.png", stem.c_str(), static_cast<int>(i));
    write_png16(dir / name, Image(frame, m.col(i)));
    mf.paths.emplace_back(name);
  }
  write_manifest(dir / "manifest.txt", mf);
}

struct RaslFlags {
  std::string model = "rigid";
  std::string lambda = "auto";
  double outer_tol = 1e-3;
  int outer_max_iters = 50;
  double inner_tol = 1e-7;
  int inner_max_iters = 500;
  double smoothing = 1.0;
  bool free_gauge = false;

  void attach(CLI::App* app) {
    app->add_option("--model", model, "translation | rigid | similarity | affine")
        ->check(CLI::IsMember({"translation", "rigid", "similarity", "affine"}));
    app->add_option("--lambda", lambda, "sparse weight, or 'auto' for 1/sqrt(pixels)");
    app->add_option("--outer-tol", outer_tol, "stop when every parameter step is below this");
    app->add_option("--outer-max-iters", outer_max_iters);
    app->add_option("--inner-tol", inner_tol);
    app->add_option("--inner-max-iters", inner_max_iters);
    app->add_option("--smoothing", smoothing, "Gaussian blur (px) of the copies used to estimate motion; 0 disables");
    app->add_flag("--free-gauge", free_gauge, "keep the common part of each update");
  }

  RaslConfig config() const {
    RaslConfig c;
    c.model = parse_transform_kind(model);
    c.lambda = parse_auto(lambda, "--lambda");
    c.outer_tol = outer_tol;
    c.outer_max_iters = outer_max_iters;
    c.inner.tol = inner_tol;
    c.inner.max_iters = inner_max_iters;
    c.smoothing = smoothing;
    c.fix_gauge = !free_gauge;
    c.validate();
    return c;
  }
};

void print_metrics(const RunReport& r) {
  for (const auto& m : r.metrics) {
    std::printf("  %-16s avg SNR %8.3f dB   avg CNR %8.4f\n", m.label.c_str(), m.metrics.avg_snr, m.metrics.avg_cnr);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Speckle reduction of repeated B-scans by joint alignment and low-rank plus sparse decomposition"};
  app.require_subcommand(1);
  std::string stage_name;

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic misaligned noisy stack with ground truth");
  fs::path synth_spec_path, synth_out;
  std::optional<std::uint64_t> synth_seed;
  synth->add_option("--spec", synth_spec_path, "synthetic stack spec (JSON)")->required();
  synth->add_option("--out-dir", synth_out, "output directory")->required();
  synth->add_option("--seed", synth_seed, "override the spec seed");

  // align
  auto* align = app.add_subcommand("align", "batch-align a stack and write the transforms");
  fs::path align_input, align_report, align_out_dir;
  std::optional<std::uint64_t> align_seed;
  RaslFlags align_flags;
  align->add_option("--input", align_input, "manifest, or synthetic spec (.json)")->required();
  align->add_option("--report", align_report, "JSON report path")->required();
  align->add_option("--out-dir", align_out_dir, "also write the low-rank frames here");
  align->add_option("--seed", align_seed, "seed for synthetic input");
  align_flags.attach(align);

  // rpca
  auto* rpca = app.add_subcommand("rpca", "low-rank plus sparse split of a fixed matrix or stack");
  fs::path rpca_input, rpca_out_l, rpca_out_s;
  std::string rpca_lambda = "auto", rpca_mu0 = "auto";
  RpcaConfig rpca_cfg;
  rpca->add_option("--input", rpca_input, "text matrix or image manifest")->required();
  rpca->add_option("--lambda", rpca_lambda, "sparse weight, or 'auto' for 1/sqrt(max(rows, cols))");
  rpca->add_option("--tol", rpca_cfg.tol);
  rpca->add_option("--max-iters", rpca_cfg.max_iters);
  rpca->add_option("--mu0", rpca_mu0, "initial penalty, or 'auto' for 1.25/||D||_2");
  rpca->add_option("--rho", rpca_cfg.rho);
  rpca->add_option("--out-l", rpca_out_l, "low-rank output (.txt matrix, or directory for stacks)")->required();
  rpca->add_option("--out-s", rpca_out_s, "sparse output (.txt matrix, or directory for stacks)")->required();

  // denoise
  auto* den = app.add_subcommand("denoise", "align, decompose and compound a stack into one image");
  fs::path den_input, den_out, den_report, den_rois, den_replay;
  std::string den_method = "median";
  std::optional<std::uint64_t> den_seed;
  bool den_no_baseline = false;
  RaslFlags den_flags;
  den->add_option("--input", den_input, "manifest, or synthetic spec (.json)");
  den->add_option("--replay", den_replay, "rerun with the configuration echoed in a previous report");
  den->add_option("--method", den_method, "median | mean")->check(CLI::IsMember({"median", "mean"}));
  den->add_option("--out", den_out, "output 16-bit PNG")->required();
  den->add_option("--report", den_report, "JSON run report")->required();
  den->add_option("--rois", den_rois, "ROI file for SNR/CNR");
  den->add_option("--seed", den_seed, "seed for synthetic input");
  den->add_flag("--no-baseline", den_no_baseline, "skip the integer-shift registration comparison");
  den_flags.attach(den);

  // metrics
  auto* met = app.add_subcommand("metrics", "SNR/CNR of an image over ROIs");
  fs::path met_image, met_rois, met_report;
  met->add_option("--image", met_image, "PNG image")->required();
  met->add_option("--rois", met_rois, "ROI file")->required();
  met->add_option("--report", met_report, "JSON output");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      stage_name = "synth";
      SynthSpec spec = read_synth_spec(synth_spec_path);
      if (synth_seed) spec.seed = *synth_seed;
      const SynthStack s = synth_stack(spec);
      fs::create_directories(synth_out);
      StackManifest mf;
      mf.source_id = "synth seed " + std::to_string(spec.seed);
      for (std::size_t i = 0; i < s.stack.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "frame_%03zu.png", i);
        write_png16(synth_out / name, s.stack[i]);
        mf.paths.emplace_back(name);
      }
      write_manifest(synth_out / "manifest.txt", mf);
      write_png16(synth_out / "clean.png", s.truth.clean);
      write_rois(synth_out / "rois.txt", s.truth.rois);
      write_json(synth_out / "ground_truth.json", nlohmann::json{{"spec", spec}, {"taus", s.truth.taus}});
      std::printf("wrote %zu frames to %s\n", s.stack.size(), synth_out.c_str());
    } else if (*align) {
      stage_name = "align";
      const RaslConfig cfg = align_flags.config();
      const ImageStack stack = load_source(source_from(align_input, align_seed));
      const RaslResult r = rasl_align(stack, cfg);
      write_json(align_report, alignment_report(r, cfg));
      if (!align_out_dir.empty()) write_stack_dir(align_out_dir, r.low_rank, r.frame, "lowrank");
      std::printf("%s after %d outer iterations\n", r.converged ? "converged" : "stopped", r.outer_iters);
    } else if (*rpca) {
      stage_name = "rpca";
      rpca_cfg.lambda = parse_auto(rpca_lambda, "--lambda");
      rpca_cfg.mu0 = parse_auto(rpca_mu0, "--mu0");
      const bool matrix_input = looks_like_matrix(rpca_input);
      Matrix d;
      Frame frame;
      if (matrix_input) {
        d = read_matrix_text(rpca_input);
      } else {
        const ImageStack stack = load_stack(read_manifest(rpca_input));
        frame = stack.front().frame();
        d = stack_matrix(stack);
      }
      const RpcaResult r = rpca_ialm(d, rpca_cfg);
      auto emit = [&](const fs::path& out, const Matrix& m, const char* stem) {
        if (matrix_input || out.extension() == ".txt") write_matrix_text(out, m);
        else write_stack_dir(out, m, frame, stem);
      };
      emit(rpca_out_l, r.low_rank, "lowrank");
      emit(rpca_out_s, r.sparse, "sparse");
      std::printf("%s after %d iterations, residual %.3e\n", r.converged ? "converged" : "stopped", r.iterations,
                  r.final_residual);
    } else if (*den) {
      stage_name = "denoise";
      DenoiseConfig cfg;
      if (!den_replay.empty()) {
        cfg = read_replay_config(den_replay);
      } else {
        if (den_input.empty()) throw Error(ErrorKind::invalid_input, "--input or --replay is required");
        cfg.input = source_from(den_input, den_seed);
        cfg.rasl = den_flags.config();
        cfg.method = parse_compound_method(den_method);
        if (!den_rois.empty()) cfg.rois = den_rois;
        cfg.with_baseline = !den_no_baseline;
      }
      const DenoiseOutput out = run_denoise(cfg, den_out, den_report);
      std::printf("%s after %d outer iterations; wrote %s\n", out.report.converged ? "converged" : "stopped",
                  out.report.outer_iters, den_out.c_str());
      print_metrics(out.report);
    } else if (*met) {
      stage_name = "metrics";
      const Image img = read_png(met_image);
      const auto rois = read_rois(met_rois);
      const MetricReport rep = evaluate(img, rois);
      for (std::size_t m = 0; m < rep.snr.size(); ++m) {
        std::printf("feature %zu: SNR %8.3f dB  CNR %8.4f\n", m, rep.snr[m], rep.cnr[m]);
      }
      std::printf("average:   SNR %8.3f dB  CNR %8.4f\n", rep.avg_snr, rep.avg_cnr);
      if (!met_report.empty()) write_json(met_report, nlohmann::json(rep));
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "octrasl %s: %s error: %s\n", stage_name.c_str(), std::string(to_string(e.kind())).c_str(),
                 e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "octrasl %s: %s\n", stage_name.c_str(), e.what());
    return 1;
  }
  return 0;
}
