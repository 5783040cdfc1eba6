// cosnet command line tool: sharpen, forward, gradcheck, train-toy, eval,
// ablate.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "cosnet/checkpoint.hpp"
#include "cosnet/error.hpp"
#include "cosnet/gradcheck.hpp"
#include "cosnet/metrics.hpp"
#include "cosnet/model.hpp"
#include "cosnet/pnm.hpp"
#include "cosnet/sharpen.hpp"
#include "cosnet/toy_data.hpp"
#include "cosnet/train.hpp"

namespace {

using namespace cosnet;

struct SharpenArgs {
  std::string input, output;
  int radius = 2;
  double k = 1.0;
  bool report = false;
};

int run_sharpen(const SharpenArgs& args) {
  const ImageBuffer image = load_image(args.input);
  const RealImage f = to_real(image);
  const RealImage blurred = box_blur(f, args.radius);
  const UnsharpResult result = unsharp_mask(f, blurred, args.k);
  save_image(to_bytes(result.sharpened), args.output);
  if (args.report) {
    const EdgeStrengthReport r = edge_strength_report(f, result.sharpened);
    std::printf("edge strength  original   %.6f\n", r.original);
    std::printf("edge strength  sharpened  %.6f\n", r.sharpened);
  }
  return 0;
}

struct ForwardArgs {
  std::string config, ckpt, input, out;
  std::string dump;  // optional .cosf path
};

int run_forward(const ForwardArgs& args) {
  const RunConfig rc = load_run_config(args.config);
  Model model = build_model(rc.model, rc.seed);
  load_checkpoint_into(args.ckpt, model);

  const ImageBuffer image = load_image(args.input);
  if (image.channels != rc.model.input_channels) {
    throw ValueError("input has " + std::to_string(image.channels) + " channels, model expects " +
                     std::to_string(rc.model.input_channels));
  }
  const Tensor x = image_to_tensor(image);
  const ForwardTrace trace = model_forward_trace(model, x);
  const LabelMap mask = logits_to_labels(trace.logits);
  save_mask(mask, default_palette(rc.model.num_classes), args.out);
  if (!args.dump.empty()) {
    dump_features(args.dump, {{"f1", trace.pyramid.f1},
                              {"f2", trace.pyramid.f2},
                              {"f3", trace.pyramid.f3},
                              {"f4", trace.pyramid.f4},
                              {"f5", trace.pyramid.f5},
                              {"logits", trace.logits}});
  }
  std::printf("mask written to %s (%dx%d, %d classes)\n", args.out.c_str(), image.width,
              image.height, rc.model.num_classes);
  return 0;
}

int run_gradcheck(uint64_t seed, const std::string& config_path) {
  auto entries = run_gradient_suite(seed);
  if (!config_path.empty()) {
    const RunConfig rc = load_run_config(config_path);
    entries.push_back(run_model_gradcheck(rc.model, seed));
  }
  bool all_ok = true;
  std::printf("%-24s %-12s %-12s\n", "check", "max rel err", "tolerance");
  for (const auto& entry : entries) {
    const bool ok = entry.ok();
    all_ok = all_ok && ok;
    std::printf("%-24s %-12.3e %-12.0e %s\n", entry.name.c_str(), entry.report.max_rel_error,
                entry.tolerance, ok ? "ok" : "FAIL");
    if (!ok) std::printf("  worst: %s\n", entry.report.worst.c_str());
  }
  return all_ok ? 0 : 1;
}

struct TrainArgs {
  std::string config, out, curve;
  int iters = 300;
  uint64_t seed = 0;  // dataset seed; model init seed comes from the config
  int images = 8;
  int size = 64;
  double lr = 1e-3;
};

int run_train_toy(const TrainArgs& args) {
  const RunConfig rc = load_run_config(args.config);
  Model model = build_model(rc.model, rc.seed);

  ToySpec spec;
  spec.seed = args.seed;
  spec.num_images = args.images;
  spec.height = args.size;
  spec.width = args.size;
  spec.num_classes = rc.model.num_classes;
  const ToyDataset data = generate_toy_dataset(spec);

  TrainOptions opts;
  opts.iters = args.iters;
  opts.base_lr = args.lr;
  const TrainResult result = train_toy(model, data, opts);

  std::printf("%-8s %-12s %-12s\n", "iter", "lr", "loss");
  for (size_t i = 0; i < result.losses.size(); ++i) {
    if (i % 10 == 0 || i + 1 == result.losses.size()) {
      std::printf("%-8zu %-12.6g %-12.6g\n", i, result.lrs[i], result.losses[i]);
    }
  }
  std::printf("final training mIoU: %.4f\n", result.final_miou);

  if (!args.curve.empty()) {
    std::ofstream csv(args.curve);
    if (!csv) throw IoError("cannot open '" + args.curve + "' for writing");
    csv << "iter,lr,loss\n";
    for (size_t i = 0; i < result.losses.size(); ++i) {
      csv << i << "," << result.lrs[i] << "," << result.losses[i] << "\n";
    }
  }
  if (!args.out.empty()) {
    save_checkpoint(args.out, rc, model.store);
    std::printf("checkpoint written to %s\n", args.out.c_str());
  }
  return 0;
}

struct EvalArgs {
  std::string pred_dir, gt_dir;
  int classes = 5;
  int ignore = -1;
  bool has_ignore = false;
};

int run_eval(const EvalArgs& args) {
  const Palette palette = default_palette(args.classes);
  std::map<std::string, std::filesystem::path> preds;
  for (const auto& entry : std::filesystem::directory_iterator(args.pred_dir)) {
    if (entry.is_regular_file()) preds[entry.path().filename().string()] = entry.path();
  }
  ConfusionMatrix conf(args.classes);
  int pairs = 0;
  for (const auto& entry : std::filesystem::directory_iterator(args.gt_dir)) {
    if (!entry.is_regular_file()) continue;
    auto it = preds.find(entry.path().filename().string());
    if (it == preds.end()) continue;
    const LabelMap gt = load_mask(entry.path().string(), palette);
    const LabelMap pred = load_mask(it->second.string(), palette);
    conf.accumulate(pred, gt, args.has_ignore ? args.ignore : -1);
    ++pairs;
  }
  if (pairs == 0) throw ValueError("no matching prediction/ground-truth file pairs found");

  const auto iou = conf.class_iou();
  std::printf("evaluated %d image pairs, %llu pixels\n", pairs,
              (unsigned long long)conf.total());
  std::printf("%-10s %s\n", "class", "IoU (%)");
  for (int c = 0; c < args.classes; ++c) {
    if (std::isnan(iou[size_t(c)])) {
      std::printf("%-10d (no pixels; excluded from mean)\n", c);
    } else {
      std::printf("%-10d %.2f\n", c, 100.0 * iou[size_t(c)]);
    }
  }
  std::printf("mIoU       %.2f\n", 100.0 * conf.miou());
  std::printf("pix. acc.  %.2f\n", 100.0 * conf.pixel_accuracy());
  if (conf.ignored() > 0) {
    std::printf("note: %llu pixels carried the ignore label %d and were excluded\n",
                (unsigned long long)conf.ignored(), args.ignore);
  }
  return 0;
}

int run_ablate(const std::string& config_path) {
  const RunConfig rc = load_run_config(config_path);
  std::printf("%-6s %-6s %-6s %-6s %s\n", "row", "MCFS", "SM", "BEM", "parameters");
  int64_t previous = 0;
  bool monotone = true;
  for (int row = 1; row <= 4; ++row) {
    const ModelConfig variant = rc.model.ablation_variant(row);
    Model model = build_model(variant, rc.seed);
    const int64_t count = model.store.parameter_count();
    std::printf("%-6d %-6s %-6s %-6s %lld\n", row, variant.use_mcfs ? "yes" : "no",
                variant.use_sm ? "yes" : "no", variant.use_bem ? "yes" : "no",
                (long long)count);
    monotone = monotone && count > previous;
    previous = count;
  }
  std::printf("parameter counts strictly increasing: %s\n", monotone ? "yes" : "NO");
  return monotone ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"COSNet reference toolkit: boundary-enhanced semantic segmentation on the CPU"};
  app.require_subcommand(1);

  SharpenArgs sharpen_args;
  CLI::App* sharpen = app.add_subcommand("sharpen", "Classical unsharp masking / high boost");
  sharpen->add_option("--input", sharpen_args.input, "Input image (P5/P6)")->required();
  sharpen->add_option("--output", sharpen_args.output, "Output image path")->required();
  sharpen->add_option("--radius", sharpen_args.radius, "Box blur radius (default 2)");
  sharpen->add_option("--k", sharpen_args.k, "Mask weight; 1 = unsharp, >1 = high boost");
  sharpen->add_flag("--report", sharpen_args.report, "Print edge strength before/after");

  ForwardArgs forward_args;
  CLI::App* forward = app.add_subcommand("forward", "Segment an image with a trained model");
  forward->add_option("--config", forward_args.config, "Run config JSON")->required();
  forward->add_option("--ckpt", forward_args.ckpt, "Checkpoint file (.cosk)")->required();
  forward->add_option("--input", forward_args.input, "Input image (P6)")->required();
  forward->add_option("--out", forward_args.out, "Output mask path (P6)")->required();
  forward->add_option("--dump-features", forward_args.dump,
                      "Write stage features and logits to a .cosf file");

  uint64_t gradcheck_seed = 7;
  std::string gradcheck_config;
  CLI::App* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient suite");
  gradcheck->add_option("--seed", gradcheck_seed, "RNG seed for the random fixtures");
  gradcheck->add_option("--config", gradcheck_config,
                        "Also spot-check the full model built from this run config");

  TrainArgs train_args;
  CLI::App* train = app.add_subcommand("train-toy", "Overfit the synthetic toy dataset");
  train->add_option("--config", train_args.config, "Run config JSON")->required();
  train->add_option("--iters", train_args.iters, "Training iterations (default 300)");
  train->add_option("--seed", train_args.seed, "Toy dataset seed (default 0)");
  train->add_option("--out", train_args.out, "Checkpoint output path");
  train->add_option("--curve", train_args.curve, "Write iter,lr,loss CSV here");
  train->add_option("--images", train_args.images, "Dataset size (default 8)");
  train->add_option("--size", train_args.size, "Canvas extent, multiple of 32 (default 64)");
  train->add_option("--lr", train_args.lr, "Base learning rate (default 1e-3)");

  EvalArgs eval_args;
  CLI::App* eval = app.add_subcommand("eval", "Score predicted masks against ground truth");
  eval->add_option("--pred-dir", eval_args.pred_dir, "Directory of predicted masks")->required();
  eval->add_option("--gt-dir", eval_args.gt_dir, "Directory of ground-truth masks")->required();
  eval->add_option("--classes", eval_args.classes, "Class count (default 5)");
  auto* ignore_opt = eval->add_option("--ignore", eval_args.ignore, "Ignore label value");

  std::string ablate_config;
  CLI::App* ablate = app.add_subcommand("ablate", "Build the four enhancement-module variants");
  ablate->add_option("--config", ablate_config, "Run config JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help() << std::flush;
    return 2;
  }

  try {
    if (sharpen->parsed()) return run_sharpen(sharpen_args);
    if (forward->parsed()) return run_forward(forward_args);
    if (gradcheck->parsed()) return run_gradcheck(gradcheck_seed, gradcheck_config);
    if (train->parsed()) return run_train_toy(train_args);
    if (eval->parsed()) {
      eval_args.has_ignore = ignore_opt->count() > 0;
      return run_eval(eval_args);
    }
    if (ablate->parsed()) return run_ablate(ablate_config);
  } catch (const cosnet::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
