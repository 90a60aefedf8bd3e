#include "octrasl/pipeline.hpp"

#include <chrono>
#include <fstream>

#include "octrasl/io.hpp"

namespace octrasl {

using nlohmann::json;

namespace {

template <class F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    rethrow_with_context(e, name);
  }
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json("auto"); }

std::optional<double> read_optional_number(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() != "auto") throw Error(ErrorKind::invalid_input, "expected a number or \"auto\"");
    return std::nullopt;
  }
  return j.get<double>();
}

class Stopwatch {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

}  // namespace

void to_json(json& j, const TransformParams& t) {
  j = json{{"model", to_string(t.kind)}, {"params", std::vector<double>(t.p.data(), t.p.data() + t.p.size())}};
}

void from_json(const json& j, TransformParams& t) {
  t.kind = parse_transform_kind(j.at("model").get<std::string>());
  const auto p = j.at("params").get<std::vector<double>>();
  t.p = Eigen::Map<const Vector>(p.data(), static_cast<Index>(p.size()));
  t.validate();
}

void to_json(json& j, const OuterRecord& r) {
  j = json{{"iteration", r.iteration},          {"objective", r.objective},
           {"residual", r.residual},            {"max_delta", r.max_delta},
           {"inner_iterations", r.inner_iterations}, {"valid_fraction", r.valid_fraction}};
}

void from_json(const json& j, OuterRecord& r) {
  j.at("iteration").get_to(r.iteration);
  j.at("objective").get_to(r.objective);
  j.at("residual").get_to(r.residual);
  j.at("max_delta").get_to(r.max_delta);
  j.at("inner_iterations").get_to(r.inner_iterations);
  j.at("valid_fraction").get_to(r.valid_fraction);
}

void to_json(json& j, const RaslConfig& c) {
  j = json{{"model", to_string(c.model)},
           {"lambda", optional_number(c.lambda)},
           {"outer_max_iters", c.outer_max_iters},
           {"outer_tol", c.outer_tol},
           {"smoothing", c.smoothing},
           {"fix_gauge", c.fix_gauge},
           {"inner",
            {{"tol", c.inner.tol},
             {"max_iters", c.inner.max_iters},
             {"mu0", optional_number(c.inner.mu0)},
             {"rho", c.inner.rho},
             {"mu_max_factor", c.inner.mu_max_factor}}}};
}

void from_json(const json& j, RaslConfig& c) {
  c = RaslConfig{};
  if (j.contains("model")) c.model = parse_transform_kind(j.at("model").get<std::string>());
  if (j.contains("lambda")) c.lambda = read_optional_number(j.at("lambda"));
  if (j.contains("outer_max_iters")) j.at("outer_max_iters").get_to(c.outer_max_iters);
  if (j.contains("outer_tol")) j.at("outer_tol").get_to(c.outer_tol);
  if (j.contains("smoothing")) j.at("smoothing").get_to(c.smoothing);
  if (j.contains("fix_gauge")) j.at("fix_gauge").get_to(c.fix_gauge);
  if (j.contains("inner")) {
    const json& in = j.at("inner");
    if (in.contains("tol")) in.at("tol").get_to(c.inner.tol);
    if (in.contains("max_iters")) in.at("max_iters").get_to(c.inner.max_iters);
    if (in.contains("mu0")) c.inner.mu0 = read_optional_number(in.at("mu0"));
    if (in.contains("rho")) in.at("rho").get_to(c.inner.rho);
    if (in.contains("mu_max_factor")) in.at("mu_max_factor").get_to(c.inner.mu_max_factor);
  }
  c.validate();
}

void to_json(json& j, const SynthSpec& s) {
  json transient = json::array();
  for (const auto& t : s.transient) {
    transient.push_back(
        {{"x", t.x}, {"y", t.y}, {"sigma", t.sigma}, {"contrast", t.contrast}, {"frames", t.frames}});
  }
  j = json{{"base", to_string(s.base)},
           {"width", s.width},
           {"height", s.height},
           {"n", s.n},
           {"max_translation", s.max_translation},
           {"max_rotation", s.max_rotation},
           {"speckle_sigma", s.speckle_sigma},
           {"sparse_fraction", s.sparse_fraction},
           {"seed", s.seed},
           {"transient", transient}};
}

void from_json(const json& j, SynthSpec& s) {
  s = SynthSpec{};
  if (j.contains("base")) s.base = parse_phantom_kind(j.at("base").get<std::string>());
  if (j.contains("width")) j.at("width").get_to(s.width);
  if (j.contains("height")) j.at("height").get_to(s.height);
  if (j.contains("n")) j.at("n").get_to(s.n);
  if (j.contains("max_translation")) j.at("max_translation").get_to(s.max_translation);
  if (j.contains("max_rotation")) j.at("max_rotation").get_to(s.max_rotation);
  if (j.contains("speckle_sigma")) j.at("speckle_sigma").get_to(s.speckle_sigma);
  if (j.contains("sparse_fraction")) j.at("sparse_fraction").get_to(s.sparse_fraction);
  if (j.contains("seed")) j.at("seed").get_to(s.seed);
  if (j.contains("transient")) {
    for (const json& t : j.at("transient")) {
      TransientFeature f;
      t.at("x").get_to(f.x);
      t.at("y").get_to(f.y);
      if (t.contains("sigma")) t.at("sigma").get_to(f.sigma);
      if (t.contains("contrast")) t.at("contrast").get_to(f.contrast);
      t.at("frames").get_to(f.frames);
      s.transient.push_back(std::move(f));
    }
  }
  s.validate();
}

void to_json(json& j, const MetricReport& m) {
  json features = json::array();
  for (const auto& f : m.features) features.push_back({{"mean", f.mean}, {"std", f.std}});
  j = json{{"snr", m.snr},
           {"cnr", m.cnr},
           {"avg_snr", m.avg_snr},
           {"avg_cnr", m.avg_cnr},
           {"background", {{"mean", m.background.mean}, {"std", m.background.std}}},
           {"features", features}};
}

void from_json(const json& j, MetricReport& m) {
  j.at("snr").get_to(m.snr);
  j.at("cnr").get_to(m.cnr);
  j.at("avg_snr").get_to(m.avg_snr);
  j.at("avg_cnr").get_to(m.avg_cnr);
  m.background = {j.at("background").at("mean").get<double>(), j.at("background").at("std").get<double>()};
  m.features.clear();
  for (const json& f : j.at("features")) m.features.push_back({f.at("mean").get<double>(), f.at("std").get<double>()});
}

void to_json(json& j, const DenoiseConfig& c) {
  j = json::object();
  if (const auto* path = std::get_if<std::filesystem::path>(&c.input)) {
    j["input"] = {{"manifest", path->string()}};
  } else {
    j["input"] = {{"synth", std::get<SynthSpec>(c.input)}};
  }
  j["rasl"] = c.rasl;
  j["method"] = to_string(c.method);
  j["rois"] = c.rois ? json(c.rois->string()) : json(nullptr);
  j["with_baseline"] = c.with_baseline;
}

void from_json(const json& j, DenoiseConfig& c) {
  c = DenoiseConfig{};
  const json& in = j.at("input");
  if (in.contains("manifest")) {
    c.input = std::filesystem::path(in.at("manifest").get<std::string>());
  } else {
    c.input = in.at("synth").get<SynthSpec>();
  }
  if (j.contains("rasl")) c.rasl = j.at("rasl").get<RaslConfig>();
  if (j.contains("method")) c.method = parse_compound_method(j.at("method").get<std::string>());
  if (j.contains("rois") && !j.at("rois").is_null()) c.rois = std::filesystem::path(j.at("rois").get<std::string>());
  if (j.contains("with_baseline")) j.at("with_baseline").get_to(c.with_baseline);
}

void to_json(json& j, const RunReport& r) {
  json metrics = json::object();
  for (const auto& m : r.metrics) metrics[m.label] = m.metrics;
  j = json{{"config", r.config},
           {"frames", r.frames},
           {"frame", {{"width", r.frame.width}, {"height", r.frame.height}}},
           {"lambda", r.lambda},
           {"outer_iters", r.outer_iters},
           {"converged", r.converged},
           {"history", r.history},
           {"taus", r.taus},
           {"baseline_taus", r.baseline_taus},
           {"metrics", metrics},
           {"timings", r.timings},
           {"outputs", r.outputs}};
}

void from_json(const json& j, RunReport& r) {
  r = RunReport{};
  r.config = j.at("config").get<DenoiseConfig>();
  j.at("frames").get_to(r.frames);
  r.frame = {j.at("frame").at("width").get<int>(), j.at("frame").at("height").get<int>()};
  j.at("lambda").get_to(r.lambda);
  j.at("outer_iters").get_to(r.outer_iters);
  j.at("converged").get_to(r.converged);
  j.at("history").get_to(r.history);
  j.at("taus").get_to(r.taus);
  j.at("baseline_taus").get_to(r.baseline_taus);
  for (const auto& [label, m] : j.at("metrics").items()) r.metrics.push_back({label, m.get<MetricReport>()});
  j.at("timings").get_to(r.timings);
  j.at("outputs").get_to(r.outputs);
}

json alignment_report(const RaslResult& result, const RaslConfig& cfg) {
  json transforms = json::array();
  for (const auto& t : result.taus) {
    json jt = t;
    const Eigen::Matrix3d m = to_matrix(t);
    std::vector<double> rows;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) rows.push_back(m(r, c));
    }
    jt["matrix"] = rows;
    transforms.push_back(std::move(jt));
  }
  return json{{"config", cfg},
              {"frame", {{"width", result.frame.width}, {"height", result.frame.height}}},
              {"lambda", result.lambda},
              {"outer_iters", result.outer_iters},
              {"converged", result.converged},
              {"history", result.history},
              {"transforms", transforms}};
}

namespace {

template <class T>
T decode(const json& j, const std::filesystem::path& path) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::invalid_input, path.string() + ": " + e.what());
  }
}

}  // namespace

SynthSpec read_synth_spec(const std::filesystem::path& path) { return decode<SynthSpec>(read_json(path), path); }

DenoiseConfig read_replay_config(const std::filesystem::path& report_path) {
  const json j = read_json(report_path);
  if (!j.contains("config")) throw Error(ErrorKind::invalid_input, report_path.string() + ": no config section");
  return decode<DenoiseConfig>(j.at("config"), report_path);
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::io, path.string() + ": " + e.what());
  }
}

ImageStack load_source(const StackSource& source) {
  if (const auto* path = std::get_if<std::filesystem::path>(&source)) return load_stack(read_manifest(*path));
  return synth_stack(std::get<SynthSpec>(source)).stack;
}

std::pair<Matrix, ValidityMatrix> compounding_input(const ImageStack& stack, const RaslResult& rasl) {
  const Index m = rasl.frame.pixels();
  const auto n = static_cast<Index>(stack.size());
  Matrix values = rasl.low_rank;
  ValidityMatrix valid = ValidityMatrix::Constant(m, n, true);

  std::vector<WarpResult> warped;
  for (std::size_t i = 0; i < stack.size(); ++i) warped.push_back(warp_extended(stack[i], rasl.taus[i], rasl.frame));
  for (Index p = 0; p < m; ++p) {
    const auto up = static_cast<std::size_t>(p);
    if (rasl.valid[up]) continue;
    bool any = false;
    for (Index i = 0; i < n; ++i) {
      const WarpResult& w = warped[static_cast<std::size_t>(i)];
      values(p, i) = w.image.vec()(p);
      valid(p, i) = w.valid[up] != 0;
      any = any || valid(p, i);
    }
    if (!any) valid.row(p).setConstant(true);
  }
  return {std::move(values), std::move(valid)};
}

Image compound_baseline(const BaselineResult& baseline, CompoundMethod method) {
  const Frame frame = check_stack(baseline.aligned, 1);
  const auto n = static_cast<Index>(baseline.aligned.size());
  Matrix values = stack_matrix(baseline.aligned);
  ValidityMatrix valid(frame.pixels(), n);
  for (Index i = 0; i < n; ++i) {
    for (Index p = 0; p < frame.pixels(); ++p) {
      valid(p, i) = baseline.valid[static_cast<std::size_t>(i)][static_cast<std::size_t>(p)] != 0;
    }
  }
  return compound(values, method, valid, frame);
}

DenoiseOutput denoise(const DenoiseConfig& cfg) {
  Stopwatch clock;
  std::vector<Roi> rois;
  ImageStack stack;
  if (const auto* spec = std::get_if<SynthSpec>(&cfg.input)) {
    SynthStack s = stage("synthesize", [&] { return synth_stack(*spec); });
    stack = std::move(s.stack);
    rois = std::move(s.truth.rois);
  } else {
    stack = stage("load", [&] { return load_source(cfg.input); });
  }
  if (cfg.rois) rois = stage("load rois", [&] { return read_rois(*cfg.rois); });

  RunReport report;
  report.config = cfg;
  report.timings["load"] = clock.lap();

  RaslResult rasl = stage("align", [&] { return rasl_align(stack, cfg.rasl); });
  report.timings["align"] = clock.lap();

  Image image = stage("compound", [&] {
    auto [values, valid] = compounding_input(stack, rasl);
    return compound(values, cfg.method, valid, rasl.frame);
  });
  report.timings["compound"] = clock.lap();

  std::optional<Image> baseline_image;
  if (cfg.with_baseline) {
    BaselineResult base = stage("baseline", [&] { return baseline_translation_align(stack); });
    baseline_image = stage("baseline", [&] { return compound_baseline(base, cfg.method); });
    report.baseline_taus = base.taus;
    report.timings["baseline"] = clock.lap();
  }

  if (!rois.empty()) {
    stage("metrics", [&] {
      const std::string suffix = "_" + std::string(to_string(cfg.method));
      report.metrics.push_back({"input", evaluate(stack.front(), rois)});
      report.metrics.push_back({"rasl" + suffix, evaluate(image, rois)});
      if (baseline_image) report.metrics.push_back({"baseline" + suffix, evaluate(*baseline_image, rois)});
      return 0;
    });
    report.timings["metrics"] = clock.lap();
  }

  report.frames = static_cast<int>(stack.size());
  report.frame = rasl.frame;
  report.lambda = rasl.lambda;
  report.outer_iters = rasl.outer_iters;
  report.converged = rasl.converged;
  report.history = rasl.history;
  report.taus = rasl.taus;
  return {std::move(image), std::move(baseline_image), std::move(rasl), std::move(report)};
}

DenoiseOutput run_denoise(const DenoiseConfig& cfg, const std::filesystem::path& out_png,
                          const std::filesystem::path& report_path) {
  DenoiseOutput out = denoise(cfg);
  stage("write", [&] {
    write_png16(out_png, out.image);
    out.report.outputs["image"] = out_png.string();
    out.report.outputs["report"] = report_path.string();
    write_json(report_path, out.report);
    return 0;
  });
  return out;
}

}  // namespace octrasl
