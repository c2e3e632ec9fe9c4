// Copyright Contributors to the hsf project
// SPDX-License-Identifier: Apache-2.0
//
// Shipped test assets: the stand-in template, the portrait test field and golden render hashes.
//
// Layout of a fixture directory:
//   standin.obj, standin.rig.json   rigged stand-in template
//   test_field.hsfg, test_field.hsfw portrait test field (grid + decoder weights)
//   golden.json                      hashes of the golden scene rendered at 64 and 128
#pragma once

#include "hsf/body_model.hpp"
#include "hsf/camera.hpp"
#include "hsf/hash.hpp"
#include "hsf/procedural_field.hpp"
#include "hsf/renderer.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <memory>
#include <string>

namespace hsf {

struct Fixtures {
  std::shared_ptr<const RiggedTemplate> rig;
  NeuralField field;
  /// Directory the assets came from; empty when they were generated in memory.
  std::string source;
};

/// Posed scene whose renders are pinned by golden.json.
struct GoldenScene {
  BodyPose pose{Vec3(0.15, 0.35, 0.0), Vec3(0.05, 0.2, 0.0)};
  double mu = 1.35;
  double nu = 1.45;

  CameraParams camera() const { return camera_from_spherical(mu, nu); }
  RenderConfig config(int resolution, int threads = 0) const {
    RenderConfig cfg;
    cfg.resolution = resolution;
    cfg.threads = threads;
    return cfg;
  }
};

inline Fixtures generate_fixtures() {
  Fixtures f;
  f.rig = std::make_shared<const RiggedTemplate>(generate_standin_template());
  f.field = make_portrait_field();
  return f;
}

inline bool fixtures_present(const std::string& dir) {
  namespace fs = std::filesystem;
  for (const char* name : {"standin.obj", "standin.rig.json", "test_field.hsfg", "test_field.hsfw"}) {
    if (!fs::exists(fs::path(dir) / name)) return false;
  }
  return true;
}

inline Fixtures load_fixtures(const std::string& dir) {
  namespace fs = std::filesystem;
  Fixtures f;
  f.rig = std::make_shared<const RiggedTemplate>(load_template((fs::path(dir) / "standin.obj").string()));
  f.field = NeuralField(load_grid((fs::path(dir) / "test_field.hsfg").string()),
                        load_weights((fs::path(dir) / "test_field.hsfw").string()));
  f.source = dir;
  return f;
}

/// Fixtures from dir when all files are there, otherwise generated in memory.
inline Fixtures load_or_generate_fixtures(const std::string& dir) {
  return !dir.empty() && fixtures_present(dir) ? load_fixtures(dir) : generate_fixtures();
}

inline std::string golden_path(const std::string& dir) { return (std::filesystem::path(dir) / "golden.json").string(); }

inline nlohmann::json golden_hashes(const Fixtures& f, const GoldenScene& scene = {}) {
  nlohmann::json j;
  j["pose"] = scene.pose.as_array();
  j["mu"] = scene.mu;
  j["nu"] = scene.nu;
  for (int res : {64, 128}) {
    const RenderOutput out = render(f.field, f.rig, scene.pose, scene.camera(), scene.config(res));
    j["composed_" + std::to_string(res)] = hash_image(out.composed);
    j["mask_" + std::to_string(res)] = hash_image(out.mask);
  }
  // Neutral pose, frontal camera, default settings: what a bare `hsf render` produces.
  const RenderOutput frontal = render(f.field, f.rig, BodyPose{}, camera_from_spherical(kPi / 2, kPi / 2), RenderConfig{});
  j["frontal_composed_64"] = hash_image(frontal.composed);
  return j;
}

/// Writes every fixture file into dir, goldens included.
inline void write_fixtures(const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const Fixtures f = generate_fixtures();
  save_template((fs::path(dir) / "standin.obj").string(), *f.rig);
  save_grid((fs::path(dir) / "test_field.hsfg").string(), f.field.grid);
  save_weights((fs::path(dir) / "test_field.hsfw").string(), f.field.decoder);
  // Goldens are rendered from the files just written so they pin the shipped bytes.
  const nlohmann::json g = golden_hashes(load_fixtures(dir));
  std::ofstream out(golden_path(dir));
  if (!out) throw IoError("cannot write '" + golden_path(dir) + "'");
  out << g.dump(2) << "\n";
}

}  // namespace hsf
