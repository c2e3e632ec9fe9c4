// Copyright Contributors to the hsf project
// SPDX-License-Identifier: Apache-2.0
//
// Renders the built-in portrait field on the stand-in body with a turned head and writes
// the composed and upsampled images.
//
//   render_portrait [out_dir]
#include "hsf/procedural_field.hpp"
#include "hsf/renderer.hpp"

#include <cstdio>
#include <filesystem>

int main(int argc, char** argv) {
  const std::filesystem::path out = argc > 1 ? argv[1] : ".";
  std::filesystem::create_directories(out);

  const hsf::NeuralField field = hsf::make_portrait_field();
  const auto rig = std::make_shared<const hsf::RiggedTemplate>(hsf::generate_standin_template());
  const hsf::BodyPose pose{hsf::Vec3(0.0, 0.3, 0.0), hsf::Vec3(0.1, 0.2, 0.0)};
  const hsf::CameraParams camera = hsf::camera_from_spherical(1.3, 1.5);

  hsf::RenderConfig cfg;
  cfg.resolution = 64;
  cfg.importance_samples = 16;
  const hsf::RenderOutput img = hsf::render(field, rig, pose, camera, cfg);

  hsf::save_png((out / "portrait.png").string(), img.composed);
  hsf::save_png((out / "portrait_up.png").string(), img.upsampled);
  std::printf("wrote %s (%dx%d) and an upsampled %dx%d copy\n", (out / "portrait.png").string().c_str(),
              img.composed.width, img.composed.height, img.upsampled.width, img.upsampled.height);
  return 0;
}
