#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "commands.h"
#include "gforge/error.h"
#include "gforge/nn/checkpoint.h"
#include "json.hpp"

namespace {

using namespace gforge::cli;

constexpr const char* kToolVersion = "0.1.0";

int report(const std::string& kind, const std::string& message, int code) {
  std::cerr << nlohmann::json{{"error", kind}, {"message", message}}.dump() << '\n';
  return code;
}

void add_frame_set(CLI::App* c, FrameSetArgs& f) {
  c->add_option("--manifest", f.manifest, "JSON-lines frame manifest")->required();
  c->add_option("--poses", f.poses, "pose file")->required();
  c->add_option("--camera", f.camera, "camera file")->required();
  c->add_option("--depth-convention", f.depth_convention,
                "stored depth: ray (distance along the ray) or z; default ray for equirectangular, z for pinhole")
      ->check(CLI::IsMember({"ray", "z"}));
}

void add_completer(CLI::App* c, CompleterArgs& a) {
  c->add_option("--checkpoint", a.checkpoint, "trained checkpoint (EMA weights are used)");
  c->add_flag("--passthrough", a.passthrough, "use the guidance itself as the prediction");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gforge: point-cloud guidance and view completion"};
  app.require_subcommand(0, 1);
  bool version = false;
  app.add_flag("--version", version, "print tool, config schema and checkpoint format versions");

  AccumulateArgs acc;
  auto* c_acc = app.add_subcommand("accumulate", "lift manifest frames into a world-frame point cloud");
  add_frame_set(c_acc, acc.frames);
  c_acc->add_option("--voxel-size", acc.voxel_size, "keep one point per voxel of this edge (meters)");
  c_acc->add_option("--out", acc.out, "output PLY")->required();

  RenderArgs ren;
  auto* c_ren = app.add_subcommand("render", "z-buffer a point cloud into guidance PNGs");
  c_ren->add_option("--cloud", ren.cloud, "input PLY")->required();
  c_ren->add_option("--poses", ren.poses, "pose file")->required();
  c_ren->add_option("--pose-id", ren.pose_id, "target pose id")->required();
  c_ren->add_option("--camera", ren.camera, "camera file")->required();
  c_ren->add_option("--splat-radius", ren.splat_radius, "extra pixels covered around each point");
  c_ren->add_option("--out-dir", ren.out_dir, "output directory")->required();

  MaskArgs msk;
  auto* c_msk = app.add_subcommand("mask", "randomly occlude a guidance image");
  c_msk->add_option("--rgb", msk.rgb, "guidance rgb PNG")->required();
  c_msk->add_option("--depth", msk.depth, "guidance depth PNG (mm, 0 = invalid)")->required();
  c_msk->add_option("--seed", msk.seed, "random seed");
  c_msk->add_option("--max-fraction", msk.max_fraction, "upper bound of the masked share");
  c_msk->add_option("--mask-mode", msk.mask_mode, "rectangles or pixels")->check(CLI::IsMember({"rectangles", "pixels"}));
  c_msk->add_option("--out-dir", msk.out_dir, "output directory")->required();

  TrainArgs trn;
  auto* c_trn = app.add_subcommand("train", "train the generator/discriminator pair on a dataset directory");
  c_trn->add_option("--dataset", trn.dataset, "directory with camera.json, poses.json, frames.jsonl")->required();
  c_trn->add_option("--config", trn.config, "training config JSON");
  c_trn->add_option("--steps", trn.steps, "training steps");
  c_trn->add_option("--seed", trn.seed, "seed for initialization, pair sampling and masking");
  c_trn->add_option("--batch-size", trn.batch_size, "pairs per step");
  c_trn->add_option("--max-fraction", trn.max_fraction, "random masking upper bound");
  c_trn->add_option("--dtype", trn.dtype, "f32 or f64")->check(CLI::IsMember({"f32", "f64"}));
  c_trn->add_option("--log", trn.log, "JSON-lines loss log");
  c_trn->add_option("--log-every", trn.log_every, "log interval in steps");
  c_trn->add_option("--out", trn.out, "output checkpoint")->required();

  RolloutArgs rol;
  auto* c_rol = app.add_subcommand("rollout", "predict a sequence of target views, accumulating predictions");
  add_frame_set(c_rol, rol.frames);
  c_rol->add_option("--targets", rol.targets, "pose file listing target poses in order")->required();
  add_completer(c_rol, rol.completer);
  c_rol->add_flag("--no-accumulate", rol.no_accumulate, "render every step from the context cloud only");
  c_rol->add_option("--out-dir", rol.out_dir, "output directory")->required();

  AlignArgs aln;
  auto* c_aln = app.add_subcommand("align", "least-squares scale of dense relative depth onto sparse depth");
  c_aln->add_option("--dense", aln.dense, "dense depth PNG (optional PATH.json sidecar with meters_per_unit)")
      ->required();
  c_aln->add_option("--sparse", aln.sparse, "sparse depth PNG, 0 = invalid (same sidecar rule)")->required();
  c_aln->add_flag("--with-shift", aln.with_shift, "fit scale and shift");
  c_aln->add_option("--min-coverage", aln.min_coverage, "coverage filter threshold");
  c_aln->add_option("--out", aln.out, "aligned depth PNG");

  PerturbArgs per;
  auto* c_per = app.add_subcommand("perturb", "synthesize views at randomly perturbed trajectory poses");
  add_frame_set(c_per, per.frames);
  add_completer(c_per, per.completer);
  c_per->add_option("--seed", per.seed, "random seed");
  c_per->add_option("--horiz", per.horiz, "horizontal half-range (meters)");
  c_per->add_option("--vert", per.vert, "vertical half-range (meters)");
  c_per->add_option("--max-tries", per.max_tries, "draws before falling back to the original pose");
  c_per->add_option("--out-dir", per.out_dir, "output directory")->required();

  SynthArgs syn;
  auto* c_syn = app.add_subcommand("synth", "render a synthetic textured-room dataset");
  c_syn->add_option("--out-dir", syn.out_dir, "output directory")->required();
  c_syn->add_option("--camera", syn.camera, "equirectangular or pinhole")
      ->check(CLI::IsMember({"equirectangular", "pinhole"}));
  c_syn->add_option("--width", syn.width, "image width");
  c_syn->add_option("--height", syn.height, "image height");
  c_syn->add_option("--frames", syn.frames, "number of frames");
  c_syn->add_option("--spacing", syn.spacing, "distance between consecutive frames (meters)");
  c_syn->add_option("--yaw-step", syn.yaw_step_deg, "yaw increment between frames (degrees)");
  c_syn->add_option("--seed", syn.seed, "texture seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report("invalid_argument", e.what(), 1);
  }

  if (version) {
    std::cout << nlohmann::json{{"gforge", kToolVersion},
                                {"config_schema_version", gforge::nn::kConfigSchemaVersion},
                                {"checkpoint_format_version", gforge::nn::kCheckpointVersion}}
                     .dump()
              << '\n';
    return 0;
  }

  try {
    if (c_acc->parsed()) cmd_accumulate(acc);
    else if (c_ren->parsed()) cmd_render(ren);
    else if (c_msk->parsed()) cmd_mask(msk);
    else if (c_trn->parsed()) cmd_train(trn);
    else if (c_rol->parsed()) cmd_rollout(rol);
    else if (c_aln->parsed()) cmd_align(aln);
    else if (c_per->parsed()) cmd_perturb(per);
    else if (c_syn->parsed()) cmd_synth(syn);
    else {
      std::cout << app.help();
      return 1;
    }
  } catch (const gforge::Error& e) {
    return report(gforge::error_kind_name(e.kind()), e.what(), e.kind() == gforge::ErrorKind::kNumerical ? 2 : 1);
  } catch (const std::filesystem::filesystem_error& e) {
    return report("io", e.what(), 1);
  } catch (const std::exception& e) {
    return report("internal", e.what(), 1);
  }
  return 0;
}
