// Copyright Contributors to the hsf project
// SPDX-License-Identifier: Apache-2.0
//
// Prints the displacement both deformation fields assign to a few observation-space
// points, plus the canonical point the renderer samples.
#include "hsf/deformation.hpp"

#include <cstdio>

int main() {
  const auto rig = std::make_shared<const hsf::RiggedTemplate>(hsf::generate_standin_template());
  const hsf::BodyPose pose{hsf::Vec3(0.0, 0.5, 0.0), hsf::Vec3(0.0, 0.3, 0.0)};
  const hsf::DeformationContext ctx = hsf::build_context(rig, pose);

  const hsf::Vec3 points[] = {{0.0, 0.2, 0.12}, {0.08, 0.15, 0.05}, {0.0, -0.1, 0.1}, {0.6, 0.6, 0.6}};
  std::printf("%-26s %-26s %-26s %-26s\n", "observation", "local frame dx", "baseline dx", "canonical");
  for (const auto& x : points) {
    const hsf::Vec3 a = hsf::deform_local_frame(ctx, x);
    const hsf::Vec3 b = hsf::deform_baseline(ctx, x);
    const hsf::Vec3 c = hsf::warp_point(ctx, x);
    std::printf("(%6.3f %6.3f %6.3f)   (%6.3f %6.3f %6.3f)   (%6.3f %6.3f %6.3f)   (%6.3f %6.3f %6.3f)\n", x.x(),
                x.y(), x.z(), a.x(), a.y(), a.z(), b.x(), b.y(), b.z(), c.x(), c.y(), c.z());
  }
  return 0;
}
