#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "octrasl/baseline.hpp"
#include "octrasl/compound.hpp"
#include "octrasl/metrics.hpp"
#include "octrasl/rasl.hpp"
#include "octrasl/synth.hpp"

namespace octrasl {

/// Where the stack comes from: a manifest of PNG files or a synthetic spec.
using StackSource = std::variant<std::filesystem::path, SynthSpec>;

struct DenoiseConfig {
  StackSource input;
  RaslConfig rasl;
  CompoundMethod method = CompoundMethod::median;
  /// ROI file; synthetic inputs fall back to the generator's ROIs.
  std::optional<std::filesystem::path> rois;
  /// Also run integer-shift registration plus compounding for comparison.
  bool with_baseline = true;
};

struct MethodMetrics {
  std::string label;
  MetricReport metrics;
};

struct RunReport {
  DenoiseConfig config;
  int frames = 0;
  Frame frame;
  double lambda = 0.0;
  int outer_iters = 0;
  bool converged = false;
  std::vector<OuterRecord> history;
  std::vector<TransformParams> taus;
  std::vector<TransformParams> baseline_taus;
  std::vector<MethodMetrics> metrics;
  /// Wall-clock seconds per stage. Not reproducible across runs.
  std::map<std::string, double> timings;
  std::map<std::string, std::string> outputs;
};

struct DenoiseOutput {
  Image image;
  std::optional<Image> baseline_image;
  RaslResult rasl;
  RunReport report;
};

/// Loads or synthesizes the stack, aligns it, compounds the low-rank part and
/// evaluates metrics when ROIs are available. Errors are rethrown with the
/// stage name prepended.
DenoiseOutput denoise(const DenoiseConfig& cfg);

/// `denoise`, then writes the image (16-bit PNG) and the JSON report.
DenoiseOutput run_denoise(const DenoiseConfig& cfg, const std::filesystem::path& out_png,
                          const std::filesystem::path& report_path);

ImageStack load_source(const StackSource& source);

/// Stacks the output of an alignment for compounding: the low-rank columns on
/// jointly valid pixels, and the warped inputs (edge values where no image
/// covers a pixel) elsewhere.
std::pair<Matrix, ValidityMatrix> compounding_input(const ImageStack& stack, const RaslResult& rasl);

Image compound_baseline(const BaselineResult& baseline, CompoundMethod method);

// JSON forms used by reports and spec files.
void to_json(nlohmann::json& j, const TransformParams& t);
void from_json(const nlohmann::json& j, TransformParams& t);
void to_json(nlohmann::json& j, const OuterRecord& r);
void from_json(const nlohmann::json& j, OuterRecord& r);
void to_json(nlohmann::json& j, const RaslConfig& c);
void from_json(const nlohmann::json& j, RaslConfig& c);
void to_json(nlohmann::json& j, const SynthSpec& s);
void from_json(const nlohmann::json& j, SynthSpec& s);
void to_json(nlohmann::json& j, const MetricReport& m);
void from_json(const nlohmann::json& j, MetricReport& m);
void to_json(nlohmann::json& j, const DenoiseConfig& c);
void from_json(const nlohmann::json& j, DenoiseConfig& c);
void to_json(nlohmann::json& j, const RunReport& r);
void from_json(const nlohmann::json& j, RunReport& r);

/// Report written by `align`: history plus final transforms with their matrices.
nlohmann::json alignment_report(const RaslResult& result, const RaslConfig& cfg);

SynthSpec read_synth_spec(const std::filesystem::path& path);
// Config recorded in a denoise report, for replaying the run.
DenoiseConfig read_replay_config(const std::filesystem::path& report_path);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace octrasl
