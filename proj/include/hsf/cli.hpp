// Copyright Contributors to the hsf project
// SPDX-License-Identifier: Apache-2.0
//
// The `hsf` command line. run() parses arguments, dispatches to a subcommand and maps
// failures onto exit codes:
//   0 success, 1 usage error, 2 I/O error, 3 validation error, 4 numeric error,
//   5 a verification check or replay comparison failed.
//
// Every command that writes files also writes a JSON manifest next to them holding the
// arguments, a snapshot of the effective options, FNV-1a hashes of inputs and outputs, the
// seed and the tool version. `hsf replay` re-runs a manifest and compares output hashes.
#pragma once

#include "hsf/alignment.hpp"
#include "hsf/fixtures.hpp"
#include "hsf/hash.hpp"
#include "hsf/marching_cubes.hpp"
#include "hsf/renderer.hpp"
#include "hsf/schedules.hpp"
#include "hsf/verify.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace hsf::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kUsage = 1, kIo = 2, kValidation = 3, kNumeric = 4, kCheckFailed = 5 };

namespace fs = std::filesystem;

/// Options shared by the rendering commands.
struct SceneOptions {
  std::string field;
  std::string weights;
  std::string template_path;
  bool no_deform = false;
  std::string pose;
  std::string camera;
  double mu = kPi / 2;
  double nu = kPi / 2;
  int resolution = 64;
  int samples = 48;
  int importance = 0;
  int upsample = 4;
  std::vector<double> background = {1.0, 1.0, 1.0};
  std::string background_image;
  std::string deform_mode = "eq11";
  double alpha = 0.25;
  bool cull = false;
  std::optional<std::uint64_t> seed;
  bool f32 = false;
  std::string out;
};

struct Manifest {
  std::string command;
  std::vector<std::string> args;
  std::string config;
  std::map<std::string, std::string> inputs;
  std::map<std::string, std::string> outputs;
  std::optional<std::uint64_t> seed;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["tool"] = "hsf";
    j["version"] = kVersion;
    j["command"] = command;
    j["args"] = args;
    j["config"] = config;
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    j["seed"] = seed ? nlohmann::json(*seed) : nlohmann::json(nullptr);
    return j;
  }

  static Manifest from_json(const nlohmann::json& j) {
    Manifest m;
    try {
      m.command = j.at("command").get<std::string>();
      m.args = j.at("args").get<std::vector<std::string>>();
      m.config = j.value("config", std::string());
      m.inputs = j.value("inputs", std::map<std::string, std::string>{});
      m.outputs = j.value("outputs", std::map<std::string, std::string>{});
      if (j.contains("seed") && !j.at("seed").is_null()) m.seed = j.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("malformed manifest: ") + e.what());
    }
    return m;
  }
};

namespace detail {

inline void add_input(Manifest& m, const std::string& path) {
  if (!path.empty()) m.inputs[path] = hash_file(path);
}

/// Records every file written into dir (manifest excluded) under its relative path.
inline void record_outputs(Manifest& m, const fs::path& dir, const std::vector<fs::path>& files) {
  for (const auto& f : files) m.outputs[fs::relative(f, dir).generic_string()] = hash_file(f.string());
}

inline void write_manifest(const Manifest& m, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest '" + path.string() + "'");
  out << m.to_json().dump(2) << "\n";
}

inline Manifest read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("manifest '" + path + "': " + e.what());
  }
  return Manifest::from_json(j);
}

inline fs::path ensure_dir(const std::string& dir) {
  if (dir.empty()) throw ValidationError("--out is required");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
  return fs::path(dir);
}

/// A pose file (JSON with p_n and p_h) or six comma-separated radians: neck xyz, head xyz.
inline BodyPose parse_pose(const std::string& spec) {
  if (spec.empty()) return {};
  if (fs::exists(spec)) return load_pose(spec);
  std::vector<double> v;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw IoError("pose '" + spec + "' is neither a readable file nor six comma-separated numbers");
    }
  }
  if (v.size() != 6) throw ValidationError("inline pose needs six values (neck xyz, head xyz), got " +
                                           std::to_string(v.size()));
  const BodyPose p{Vec3(v[0], v[1], v[2]), Vec3(v[3], v[4], v[5])};
  if (!p.is_finite()) throw ValidationError("pose is not finite");
  return p;
}

inline void add_scene_options(CLI::App* cmd, SceneOptions& o, bool with_camera) {
  cmd->add_option("--field", o.field, "Tri-grid file (.hsfg); the built-in test field when omitted");
  cmd->add_option("--weights", o.weights, "Decoder weights (.hsfw); required with --field");
  cmd->add_option("--template", o.template_path, "Rigged template OBJ; the built-in stand-in when omitted");
  cmd->add_flag("--no-deform", o.no_deform, "Render the canonical field without a body deformation");
  if (with_camera) {
    cmd->add_option("--pose", o.pose, "Pose JSON file or 'nx,ny,nz,hx,hy,hz' in radians");
    cmd->add_option("--camera", o.camera, "Camera JSON (extrinsic/intrinsic or mu/nu); overrides --mu/--nu");
    cmd->add_option("--mu", o.mu, "Camera yaw in radians (pi/2 is frontal)");
  }
  cmd->add_option("--nu", o.nu, "Camera pitch in radians, strictly inside (0, pi)");
  cmd->add_option("--resolution", o.resolution, "Neural rendering resolution (multiple of 4 in 8..1024)");
  cmd->add_option("--samples", o.samples, "Stratified samples per ray");
  cmd->add_option("--importance", o.importance, "Extra importance samples per ray (0 disables the pass)");
  cmd->add_option("--upsample", o.upsample, "Bilinear upsampling factor");
  cmd->add_option("--background", o.background, "Background color r g b in [0, 1]")->expected(3);
  cmd->add_option("--background-image", o.background_image, "Background PNG, resized to the render");
  cmd->add_option("--deform-mode", o.deform_mode, "Deformation field: eq11 (local frame) or eq10 (baseline)")
      ->check(CLI::IsMember({"eq10", "eq11", "baseline", "local_frame"}));
  cmd->add_option("--alpha", o.alpha, "Shell thickness of the local-frame field");
  cmd->add_flag("--cull", o.cull, "Keep only template faces that touch the [-1, 1]^3 render volume");
  cmd->add_option("--seed", o.seed, "Jitter stratified samples with this seed");
  cmd->add_flag("--f32", o.f32, "Also write float32 dumps (.f32) of every image");
  cmd->add_option("--out", o.out, "Output directory")->required();
}

struct Scene {
  NeuralField field;
  std::shared_ptr<const RiggedTemplate> rig;
  RenderConfig config;
};

inline Scene load_scene(const SceneOptions& o, Manifest& m) {
  Scene s;
  if (o.field.empty() != o.weights.empty()) throw ValidationError("--field and --weights must be given together");
  if (o.field.empty()) {
    s.field = make_portrait_field();
  } else {
    s.field = NeuralField(load_grid(o.field), load_weights(o.weights));
    add_input(m, o.field);
    add_input(m, o.weights);
  }
  if (!o.no_deform) {
    if (o.template_path.empty()) {
      s.rig = std::make_shared<const RiggedTemplate>(generate_standin_template());
    } else {
      s.rig = std::make_shared<const RiggedTemplate>(load_template(o.template_path));
      add_input(m, o.template_path);
      add_input(m, rig_sidecar_path(o.template_path));
    }
  }
  RenderConfig& c = s.config;
  c.resolution = o.resolution;
  c.samples_per_ray = o.samples;
  c.importance_samples = o.importance;
  c.upsample_factor = o.upsample;
  if (o.background.size() != 3) throw ValidationError("--background needs three values");
  c.background_color = Vec3(o.background[0], o.background[1], o.background[2]);
  if (!o.background_image.empty()) {
    c.background_image = std::make_shared<const Image>(load_png(o.background_image));
    add_input(m, o.background_image);
  }
  c.deformation.mode = parse_deform_mode(o.deform_mode);
  c.deformation.alpha = o.alpha;
  if (o.cull) c.deformation.cull_bbox = Eigen::AlignedBox3d(Vec3::Constant(-1.0), Vec3::Constant(1.0));
  c.jitter_seed = o.seed;
  m.seed = o.seed;
  c.validate();
  return s;
}

inline CameraParams scene_camera(const SceneOptions& o, Manifest& m) {
  if (!o.camera.empty()) {
    add_input(m, o.camera);
    return load_camera(o.camera);
  }
  return camera_from_spherical(o.mu, o.nu);
}

inline std::vector<fs::path> save_image(const fs::path& dir, const std::string& stem, const Image& img, bool f32) {
  std::vector<fs::path> files = {dir / (stem + ".png")};
  save_png(files.back().string(), img);
  if (f32) {
    files.push_back(dir / (stem + ".f32"));
    save_f32(files.back().string(), img);
  }
  return files;
}

inline std::string frame_name(const std::string& prefix, int k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%03d", prefix.c_str(), k);
  return buf;
}

/// Effective option values of a parsed subcommand as command-line tokens.
inline std::string snapshot(const CLI::App* cmd) { return cmd->config_to_str(true, false); }

// ---------------------------------------------------------------------------------------------
// Commands

inline int cmd_render(const SceneOptions& o, Manifest& m) {
  const Scene s = load_scene(o, m);
  const BodyPose pose = parse_pose(o.pose);
  if (!o.pose.empty() && fs::exists(o.pose)) add_input(m, o.pose);
  const CameraParams cam = scene_camera(o, m);
  const RenderOutput out = render(s.field, s.rig, pose, cam, s.config);
  const fs::path dir = ensure_dir(o.out);
  std::vector<fs::path> files;
  for (const auto& [stem, img] : {std::pair<const char*, const Image*>{"raw", &out.raw}, {"mask", &out.mask},
                                  {"composed", &out.composed}, {"upsampled", &out.upsampled}}) {
    const auto written = save_image(dir, stem, *img, o.f32);
    files.insert(files.end(), written.begin(), written.end());
  }
  save_camera((dir / "camera.json").string(), cam);
  files.push_back(dir / "camera.json");
  record_outputs(m, dir, files);
  write_manifest(m, dir / "manifest.json");
  std::printf("rendered %dx%d (upsampled %dx%d) to %s\n", out.composed.width, out.composed.height,
              out.upsampled.width, out.upsampled.height, dir.string().c_str());
  return kOk;
}

inline int cmd_turntable(const SceneOptions& o, int frames, Manifest& m) {
  if (frames < 1) throw ValidationError("--frames must be >= 1");
  const Scene s = load_scene(o, m);
  const BodyPose pose = parse_pose(o.pose);
  if (!o.pose.empty() && fs::exists(o.pose)) add_input(m, o.pose);
  const auto outs = render_turntable(s.field, s.rig, pose, o.nu, frames, s.config);
  const fs::path dir = ensure_dir(o.out);
  std::vector<fs::path> files;
  std::vector<Image> sheet;
  for (int k = 0; k < frames; ++k) {
    const auto written = save_image(dir, frame_name("frame", k), outs[k].composed, o.f32);
    files.insert(files.end(), written.begin(), written.end());
    sheet.push_back(outs[k].composed);
    std::printf("frame %3d  mu = %+.6f\n", k, turntable_mu(k, frames));
  }
  save_png((dir / "sheet.png").string(), tile_images(sheet, 8));
  files.push_back(dir / "sheet.png");
  record_outputs(m, dir, files);
  write_manifest(m, dir / "manifest.json");
  return kOk;
}

inline int cmd_posesweep(SceneOptions o, const std::string& pose_a, const std::string& pose_b, int frames,
                         Manifest& m) {
  if (frames < 1) throw ValidationError("--frames must be >= 1");
  const bool both = o.deform_mode == "both";
  if (both) o.deform_mode = "eq11";
  const Scene s = load_scene(o, m);
  if (!s.rig) throw ValidationError("posesweep needs a template; drop --no-deform");
  const BodyPose a = parse_pose(pose_a);
  const BodyPose b = parse_pose(pose_b);
  for (const auto& p : {pose_a, pose_b}) {
    if (fs::exists(p)) add_input(m, p);
  }
  const CameraParams cam = scene_camera(o, m);
  RenderConfig eq10 = s.config;
  eq10.deformation.mode = DeformMode::baseline_eq10;
  const fs::path dir = ensure_dir(o.out);
  std::vector<fs::path> files;
  std::vector<Image> top, bottom;
  for (int k = 0; k < frames; ++k) {
    const double t = frames == 1 ? 0.0 : static_cast<double>(k) / (frames - 1);
    const BodyPose p{(1.0 - t) * a.neck + t * b.neck, (1.0 - t) * a.head + t * b.head};
    const Image main = render(s.field, s.rig, p, cam, s.config).composed;
    const std::string prefix = both ? "eq11" : to_string(s.config.deformation.mode);
    auto written = save_image(dir, frame_name(prefix, k), main, o.f32);
    files.insert(files.end(), written.begin(), written.end());
    top.push_back(main);
    if (both) {
      const Image base = render(s.field, s.rig, p, cam, eq10).composed;
      written = save_image(dir, frame_name("eq10", k), base, o.f32);
      files.insert(files.end(), written.begin(), written.end());
      bottom.push_back(base);
      std::printf("frame %3d  t = %.3f  mean L1(eq10, eq11) = %.6f\n", k, t, mean_abs_difference(base, main));
    } else {
      std::printf("frame %3d  t = %.3f\n", k, t);
    }
  }
  std::vector<Image> sheet = top;
  sheet.insert(sheet.end(), bottom.begin(), bottom.end());
  save_png((dir / "sheet.png").string(), tile_images(sheet, frames));
  files.push_back(dir / "sheet.png");
  record_outputs(m, dir, files);
  write_manifest(m, dir / "manifest.json");
  return kOk;
}

struct IsoOptions {
  std::string field;
  std::string weights;
  std::optional<double> sphere;
  std::optional<double> level;
  int res = 128;
  std::string out;
};

inline int cmd_isosurface(const IsoOptions& o, Manifest& m) {
  if (o.out.empty()) throw ValidationError("--out is required");
  TriangleMesh mesh;
  double level = 0.0;
  if (o.sphere) {
    AnalyticSphereField sphere;
    sphere.radius = *o.sphere;
    sphere.edge_width = 0.1;
    if (!(sphere.radius > 0.0)) throw ValidationError("--sphere radius must be positive");
    level = o.level.value_or(sphere.surface_level());
    mesh = extract_isosurface([&](const Vec3& x) { return sphere.density(x); }, level, o.res);
  } else {
    if (o.field.empty() != o.weights.empty()) throw ValidationError("--field and --weights must be given together");
    NeuralField field = o.field.empty() ? make_portrait_field()
                                        : NeuralField(load_grid(o.field), load_weights(o.weights));
    add_input(m, o.field);
    add_input(m, o.weights);
    level = o.level.value_or(10.0);
    mesh = extract_isosurface(field.grid, field.decoder, level, o.res);
  }
  const fs::path out(o.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  save_obj(out.string(), mesh);
  if (mesh.num_faces() == 0) {
    std::fprintf(stderr, "warning: level %g does not cross the field; wrote an empty mesh\n", level);
  }
  m.outputs[out.filename().string()] = hash_file(out.string());
  write_manifest(m, out.string() + ".manifest.json");
  std::printf("%zu vertices, %zu faces at level %g (grid %d) -> %s\n", mesh.num_vertices(), mesh.num_faces(), level,
              o.res, out.string().c_str());
  return kOk;
}

struct AlignOptions {
  std::string input;
  std::string template_path;
  std::string out;
  std::string overlay_dir;
  bool rigid_only = false;
};

inline int cmd_align(const AlignOptions& o, Manifest& m) {
  std::ifstream in(o.input);
  if (!in) throw IoError("cannot open records '" + o.input + "'");
  add_input(m, o.input);
  RiggedTemplate rig;
  if (o.template_path.empty()) {
    rig = generate_standin_template();
  } else {
    rig = load_template(o.template_path);
    add_input(m, o.template_path);
  }
  const fs::path out(o.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  std::ofstream labels(out);
  if (!labels) throw IoError("cannot write labels '" + o.out + "'");
  if (!o.overlay_dir.empty()) ensure_dir(o.overlay_dir);
  AlignmentOptions opt;
  opt.allow_scale = !o.rigid_only;
  const fs::path base = fs::path(o.input).parent_path();
  std::vector<fs::path> overlays;
  const auto stats = align_jsonl(in, labels, rig, opt, [&](int line, const AlignmentInput& rec, const AlignmentResult& r) {
    if (o.overlay_dir.empty()) return;
    Image src;
    if (!rec.image_path.empty()) {
      const fs::path p = fs::path(rec.image_path).is_absolute() ? fs::path(rec.image_path) : base / rec.image_path;
      if (fs::exists(p)) src = load_png(p.string());
    }
    const Image overlay = render_overlay(r, rig, src, rec.image_width, rec.image_height);
    overlays.push_back(fs::path(o.overlay_dir) / (frame_name("overlay", line) + ".png"));
    save_png(overlays.back().string(), overlay);
  });
  labels.close();
  m.outputs[out.filename().string()] = hash_file(out.string());
  for (const auto& p : overlays) m.outputs[p.filename().string()] = hash_file(p.string());
  write_manifest(m, out.string() + ".manifest.json");
  std::printf("aligned %d record(s), %d failed -> %s\n", stats.ok, stats.failed, o.out.c_str());
  return stats.failed == 0 ? kOk : kValidation;
}

inline int cmd_verify(const std::string& suite, const std::string& data_dir) {
  VerifyContext ctx;
  ctx.data_dir = data_dir;
  int failed = 0;
  run_checks(suite, ctx, [&](const CheckResult& r) {
    std::printf("%s\n", format_check(r).c_str());
    std::fflush(stdout);
    if (!r.pass) ++failed;
  });
  std::printf("%s\n", failed == 0 ? "all checks passed" : (std::to_string(failed) + " check(s) failed").c_str());
  return failed == 0 ? kOk : kCheckFailed;
}

inline int cmd_schedule(const std::vector<double>& at) {
  std::vector<TrainingClock> clocks;
  if (at.empty()) {
    clocks = schedule_breakpoints();
  } else {
    for (double v : at) clocks.push_back(TrainingClock::millions(v));
  }
  std::printf("%10s  %5s  %-8s  %-6s  %11s  %8s  %10s\n", "images(M)", "stage", "Gamma_G", "L_preg", "lambda_preg",
              "swap_p", "resolution");
  for (const auto& c : clocks) {
    const ScheduleRow r = schedule_at(c);
    const char* preg = r.stage.preg_full_weight ? "full" : (r.stage.preg_active ? "decay" : "off");
    std::printf("%10.4g  %5d  %-8s  %-6s  %11.4f  %8.4f  %6d^2\n", c.in_millions(), r.stage.stage,
                r.stage.gamma_g_frozen ? "freeze" : "training", preg, r.lambda_preg, r.swap_probability,
                r.neural_resolution);
    if (!r.stage.warning.empty()) std::fprintf(stderr, "warning: %s\n", r.stage.warning.c_str());
  }
  return kOk;
}

inline int cmd_fixtures(const std::string& out_dir, Manifest& m) {
  const fs::path dir = ensure_dir(out_dir);
  write_fixtures(dir.string());
  std::vector<fs::path> files;
  for (const char* name : {"standin.obj", "standin.rig.json", "test_field.hsfg", "test_field.hsfw", "golden.json"}) {
    files.push_back(dir / name);
  }
  record_outputs(m, dir, files);
  write_manifest(m, dir / "manifest.json");
  std::printf("wrote fixtures to %s\n", dir.string().c_str());
  return kOk;
}

}  // namespace detail

int run(const std::vector<std::string>& args);

namespace detail {

/// Where a command's manifest lives for a given argument list.
inline fs::path manifest_location(const Manifest& m) {
  std::string out;
  for (std::size_t i = 0; i + 1 < m.args.size(); ++i) {
    if (m.args[i] == "--out") out = m.args[i + 1];
  }
  for (const auto& a : m.args) {
    if (a.rfind("--out=", 0) == 0) out = a.substr(6);
  }
  if (out.empty()) throw ValidationError("manifest arguments carry no --out");
  if (m.command == "isosurface" || m.command == "align") return out + ".manifest.json";
  return fs::path(out) / "manifest.json";
}

inline int cmd_replay(const std::string& manifest_path, const std::string& out_override) {
  const Manifest old = read_manifest(manifest_path);
  for (const auto& [path, hash] : old.inputs) {
    if (!fs::exists(path)) throw IoError("replay input '" + path + "' is missing");
    if (hash_file(path) != hash) std::fprintf(stderr, "warning: input '%s' changed since the manifest\n", path.c_str());
  }
  Manifest redo = old;
  if (!out_override.empty()) {
    for (std::size_t i = 0; i < redo.args.size(); ++i) {
      if (redo.args[i] == "--out" && i + 1 < redo.args.size()) redo.args[i + 1] = out_override;
      if (redo.args[i].rfind("--out=", 0) == 0) redo.args[i] = "--out=" + out_override;
    }
  }
  const int code = run(redo.args);
  if (code != kOk) return code;
  const Manifest fresh = read_manifest(manifest_location(redo).string());
  int mismatches = 0;
  for (const auto& [name, hash] : old.outputs) {
    const auto it = fresh.outputs.find(name);
    if (it == fresh.outputs.end() || it->second != hash) {
      std::printf("differs: %s\n", name.c_str());
      ++mismatches;
    }
  }
  if (fresh.outputs.size() != old.outputs.size()) ++mismatches;
  std::printf("replay %s: %zu output(s) compared\n", mismatches == 0 ? "matches" : "DIFFERS", old.outputs.size());
  return mismatches == 0 ? kOk : kCheckFailed;
}

inline int exit_code(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::io:
      return kIo;
    case ErrorKind::validation:
      return kValidation;
    case ErrorKind::numeric:
      return kNumeric;
  }
  return kValidation;
}

}  // namespace detail

/// Runs the CLI on args (without the program name) and returns the process exit code.
inline int run(const std::vector<std::string>& args) {
  CLI::App app{"hsf: posed tri-grid field rendering, deformation and alignment tools", "hsf"};
  app.set_version_flag("--version", kVersion);
  app.set_config("--config", "", "TOML config file; command-line flags take precedence");
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  app.footer(
      "Exit codes: 0 ok, 1 usage, 2 I/O, 3 validation, 4 numeric, 5 check or replay failure.\n"
      "HSF_THREADS sets the worker count (default: hardware concurrency).");

  SceneOptions scene;
  auto* render_cmd = app.add_subcommand("render", "Render one view: raw, mask, composed and upsampled PNGs");
  detail::add_scene_options(render_cmd, scene, true);

  int frames = 8;
  auto* turn_cmd = app.add_subcommand("turntable", "Render a full 360 degree yaw sweep at fixed pitch");
  detail::add_scene_options(turn_cmd, scene, false);
  turn_cmd->add_option("--pose", scene.pose, "Pose JSON file or 'nx,ny,nz,hx,hy,hz' in radians");
  turn_cmd->add_option("--frames", frames, "Number of frames");

  std::string pose_a, pose_b;
  auto* sweep_cmd = app.add_subcommand("posesweep", "Render poses interpolated between two neck/head poses");
  detail::add_scene_options(sweep_cmd, scene, true);
  sweep_cmd->remove_option(sweep_cmd->get_option("--pose"));
  sweep_cmd->remove_option(sweep_cmd->get_option("--deform-mode"));
  sweep_cmd->add_option("--deform-mode", scene.deform_mode, "eq10, eq11, or both (writes both and reports L1)")
      ->check(CLI::IsMember({"eq10", "eq11", "baseline", "local_frame", "both"}));
  sweep_cmd->add_option("--pose-a", pose_a, "Start pose (file or six numbers)")->required();
  sweep_cmd->add_option("--pose-b", pose_b, "End pose (file or six numbers)")->required();
  sweep_cmd->add_option("--frames", frames, "Number of frames");

  detail::IsoOptions iso;
  auto* iso_cmd = app.add_subcommand("isosurface", "Extract a density iso-surface with marching cubes");
  iso_cmd->add_option("--field", iso.field, "Tri-grid file; the built-in test field when omitted");
  iso_cmd->add_option("--weights", iso.weights, "Decoder weights; required with --field");
  iso_cmd->add_option("--sphere", iso.sphere, "Use an analytic sphere of this radius instead of a field");
  iso_cmd->add_option("--level", iso.level, "Density level (default 10, or the sphere surface)");
  iso_cmd->add_option("--res", iso.res, "Lattice resolution per axis (>= 8)");
  iso_cmd->add_option("--out", iso.out, "Output OBJ path")->required();

  detail::AlignOptions align;
  auto* align_cmd = app.add_subcommand("align", "Align upstream body estimates to normalized camera labels");
  align_cmd->add_option("--input", align.input, "JSON-lines records")->required();
  align_cmd->add_option("--template", align.template_path, "Rigged template OBJ; the built-in stand-in when omitted");
  align_cmd->add_option("--out", align.out, "Output JSON-lines labels")->required();
  align_cmd->add_option("--overlay-dir", align.overlay_dir, "Write template wireframe overlays here");
  align_cmd->add_flag("--rigid-only", align.rigid_only, "Fit rotation and translation only (no scale)");
  align_cmd->footer(
      "Each output line holds camera[25] (extrinsic then intrinsic, row-major), pose[6] (neck, head),\n"
      "crop, residual and scale, or {line, error} for a record that failed.\n"
      "Mirrored training samples: flip the image horizontally and pair it with the flipped camera\n"
      "(negate x in world and image) and flipped pose (negate the y and z axis-angle components).");

  std::string suite = "all";
  std::string data_dir;
  auto* verify_cmd = app.add_subcommand("verify", "Run oracle checks and print a pass/fail table");
  verify_cmd->add_option("--suite", suite, "geometry, deform, render, schedule or all")
      ->check(CLI::IsMember(verify_suites()));
  verify_cmd->add_option("--data", data_dir, "Fixture directory (generated assets when omitted)");

  std::vector<double> at;
  auto* sched_cmd = app.add_subcommand("schedule", "Print the training schedule table");
  sched_cmd->add_option("--at", at, "Clock values in millions of images (default: every breakpoint)");

  std::string fixtures_out;
  auto* fix_cmd = app.add_subcommand("fixtures", "Write the stand-in template, test field and golden hashes");
  fix_cmd->add_option("--out", fixtures_out, "Output directory")->required();

  std::string manifest_path, replay_out;
  auto* replay_cmd = app.add_subcommand("replay", "Re-run a manifest and compare output hashes");
  replay_cmd->add_option("manifest", manifest_path, "Manifest JSON")->required();
  replay_cmd->add_option("--out", replay_out, "Write to this location instead of the original one");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    Manifest m;
    m.args = args;
    if (const auto* config = app.get_config_ptr(); config != nullptr && config->count() > 0) {
      detail::add_input(m, config->as<std::string>());
    }
    for (auto* cmd : app.get_subcommands()) {
      m.command = cmd->get_name();
      m.config = detail::snapshot(cmd);
    }
    if (render_cmd->parsed()) return detail::cmd_render(scene, m);
    if (turn_cmd->parsed()) return detail::cmd_turntable(scene, frames, m);
    if (sweep_cmd->parsed()) return detail::cmd_posesweep(scene, pose_a, pose_b, frames, m);
    if (iso_cmd->parsed()) return detail::cmd_isosurface(iso, m);
    if (align_cmd->parsed()) return detail::cmd_align(align, m);
    if (verify_cmd->parsed()) return detail::cmd_verify(suite, data_dir);
    if (sched_cmd->parsed()) return detail::cmd_schedule(at);
    if (fix_cmd->parsed()) return detail::cmd_fixtures(fixtures_out, m);
    if (replay_cmd->parsed()) return detail::cmd_replay(manifest_path, replay_out);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return detail::exit_code(e);
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kValidation;
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kIo;
  }
  return kUsage;
}

}  // namespace hsf::cli
