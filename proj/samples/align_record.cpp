// Copyright Contributors to the hsf project
// SPDX-License-Identifier: Apache-2.0
//
// Builds one synthetic estimator record, aligns it to the template and prints the
// normalized camera label and crop.
#include "hsf/alignment.hpp"

#include <cstdio>

int main() {
  const hsf::RiggedTemplate rig = hsf::generate_standin_template();

  hsf::AlignmentInput record;
  record.body.trans = hsf::Vec3(0.05, -0.3, 0.1);
  record.body.rot = hsf::Vec3(0.0, 0.4, 0.0);
  hsf::embed_neck_head_pose(record.body, hsf::BodyPose{hsf::Vec3(0.1, 0.2, 0.0), hsf::Vec3(0.0, 0.1, 0.0)});
  record.fixed_camera = hsf::camera_from_spherical(1.7, 1.5);

  const hsf::AlignmentResult res = hsf::solve_alignment(record, rig);
  std::printf("%s\n", hsf::alignment_result_to_json(res, "").dump(2).c_str());
  return 0;
}
