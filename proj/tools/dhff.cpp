#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "dhff/detect.hpp"
#include "dhff/iist.hpp"
#include "dhff/metrics.hpp"
#include "dhff/ocsvm.hpp"
#include "dhff/synth.hpp"
#include "run_config.hpp"

namespace fs = std::filesystem;
using namespace dhff;

namespace {

int run_transform(const std::string& optical_path,
                  const std::string& sar_path,
                  const std::string& weights_path,
                  const std::string& config_path, const std::string& out_path,
                  const std::string& trace_path) {
  const Image opt = load_pnm(optical_path);
  const Image sar = load_pnm(sar_path);
  const VggWeights w = load_weights(weights_path);
  IistConfig cfg;
  if (!config_path.empty()) cfg = parse_config_file(config_path);

  const IistResult res = iist_run(opt, sar, w, cfg);
  save_pnm(res.t2, out_path);
  if (!trace_path.empty()) {
    std::ofstream tf(trace_path);
    if (!tf) throw std::runtime_error("cannot open trace file " + trace_path);
    write_trace_jsonl(res.trace, tf);
  }
  std::cout << "transform: " << res.trace.size() << " stage(s), final loss "
            << res.trace.back().loss << "\n";
  return 0;
}

int run_detect(const std::string& pre_path, const std::string& post_path,
               const std::string& method, const std::string& mask_path,
               double nu, double gamma, int radius,
               const std::string& out_path, const std::string& model_path) {
  const Image pre = load_pnm(pre_path);
  const Image post = load_pnm(post_path);
  if (!pre.same_shape(post))
    throw std::runtime_error("detect: pre/post dimensions differ");

  ChangeMap map;
  if (method == "otsu") {
    const OtsuResult r = otsu_threshold(difference_image(pre, post));
    std::cout << "otsu threshold: " << r.threshold << "\n";
    map = r.map;
  } else {  // ocsvm
    std::vector<double> train;
    if (!mask_path.empty()) {
      const ChangeMap mask = image_to_changemap(load_pnm(mask_path));
      train = features_from_mask(pre, post, radius, mask);
    } else {
      std::cout << "ocsvm: no --train-mask given, self-training on the 50% "
                   "lowest-difference pixels\n";
      train = self_training_features(pre, post, radius);
    }
    OcsvmTrainConfig tc;
    tc.nu = nu;
    tc.gamma = gamma;
    const OcsvmModel model =
        ocsvm_train(train, pixel_feature_dim(pre.channels), tc);
    if (model.degenerate)
      std::cout << "ocsvm: degenerate training set (all samples identical)\n";
    if (!model_path.empty()) {
      std::ofstream mf(model_path);
      if (!mf)
        throw std::runtime_error("cannot open model file " + model_path);
      save_ocsvm_json(model, mf);
    }
    map = ocsvm_detect(model, pre, post, radius);
  }
  save_pnm(changemap_to_image(map), out_path);
  return 0;
}

int run_evaluate(const std::string& pred_path, const std::string& truth_path,
                 bool as_json) {
  const ChangeMap pred = image_to_changemap(load_pnm(pred_path));
  const ChangeMap truth = image_to_changemap(load_pnm(truth_path));
  const ConfusionCounts c = confusion(pred, truth);
  const MetricsReport r = compute_metrics(c);
  if (as_json)
    std::cout << metrics_json(r, c) << "\n";
  else
    std::cout << metrics_csv(r) << "\n";
  return 0;
}

int run_synth(std::uint64_t seed, int size, double change_fraction,
              const std::string& out_dir, double sar_downscale) {
  if (!(sar_downscale >= 1.0))
    throw std::runtime_error("synth: --sar-downscale must be >= 1");
  SynthPair p = gen_pair(seed, size, change_fraction);
  fs::create_directories(out_dir);
  save_pnm(p.optical, (fs::path(out_dir) / "opt.ppm").string());
  Image sar = p.sar;
  if (sar_downscale > 1.0) {
    const int s = std::max(1, int(size / sar_downscale));
    sar = bilinear_resize(sar, s, s);
  }
  save_pnm(sar, (fs::path(out_dir) / "sar.pgm").string());
  save_pnm(changemap_to_image(p.truth),
           (fs::path(out_dir) / "truth.pgm").string());
  return 0;
}

int run_init_weights(std::uint64_t seed, const std::string& out_path) {
  save_weights(random_base_weights(seed), out_path);
  return 0;
}

// Appendix-style sweep: pooling mode x content layer on one synthetic
// pair, Otsu detection, Ra/Ka per configuration.
int run_compare(std::uint64_t seed, int size, double change_fraction,
                std::uint64_t weights_seed, int outer_iters,
                const std::string& config_path, const std::string& out_path) {
  const SynthPair p = gen_pair(seed, size, change_fraction);
  const VggWeights w = random_base_weights(weights_seed);

  IistConfig base;
  if (!config_path.empty()) base = parse_config_file(config_path);
  base.max_outer_iters = outer_iters;

  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) throw std::runtime_error("cannot open " + out_path);
    os = &file;
  }
  *os << "pooling,content_layer,Ra,Ka\n";
  const std::pair<PoolingMode, const char*> pools[] = {
      {PoolingMode::Max, "max"}, {PoolingMode::Average, "average"}};
  const std::pair<ContentLayer, const char*> layers[] = {
      {ContentLayer::Conv3_4, "conv3-4"},
      {ContentLayer::Conv4_4, "conv4-4"},
      {ContentLayer::Conv5_4, "conv5-4"}};
  for (const auto& [pm, pname] : pools)
    for (const auto& [cl, cname] : layers) {
      IistConfig cfg = base;
      cfg.pooling = pm;
      cfg.content_layer = cl;
      const IistResult res = iist_run(p.optical, p.sar, w, cfg);
      const OtsuResult det =
          otsu_threshold(difference_image(p.optical, res.t2));
      const MetricsReport r = compute_metrics(confusion(det.map, p.truth));
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.2f,%.2f", 100.0 * r.ra,
                    100.0 * r.ka);
      *os << pname << "," << cname << "," << buf << "\n";
      std::cout << "compare: " << pname << "/" << cname << " done\n";
    }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DHFF heterogeneous change detection pipeline"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  // transform
  std::string t_opt, t_sar, t_weights, t_config, t_out, t_trace;
  CLI::App* t = app.add_subcommand(
      "transform", "Transform a SAR image into the optical feature space");
  t->add_option("--optical", t_opt, "Pre-event optical PPM")->required();
  t->add_option("--sar", t_sar, "Post-event SAR PGM/PPM")->required();
  t->add_option("--weights", t_weights, "DHFFW1 weight file")->required();
  t->add_option("--config", t_config, "key = value configuration file");
  t->add_option("--out", t_out, "Output PPM path")->required();
  t->add_option("--trace", t_trace, "Per-stage JSON-lines trace path");

  // detect
  std::string d_pre, d_post, d_method, d_mask, d_out, d_model;
  double d_nu = 0.1, d_gamma = 8.0;
  int d_radius = 1;
  CLI::App* d = app.add_subcommand(
      "detect", "Detect changes between a homogeneous image pair");
  d->add_option("--pre", d_pre, "Pre-event image")->required();
  d->add_option("--post", d_post, "Post-event (transformed) image")
      ->required();
  d->add_option("--method", d_method, "otsu or ocsvm")
      ->required()
      ->check(CLI::IsMember({"otsu", "ocsvm"}));
  d->add_option("--train-mask", d_mask,
                "PGM mask of unchanged pixels (white = train sample)");
  d->add_option("--nu", d_nu, "OCSVM nu in (0,1]");
  d->add_option("--gamma", d_gamma, "OCSVM RBF width");
  d->add_option("--radius", d_radius, "Neighborhood radius for features");
  d->add_option("--model-out", d_model, "Write the trained model as JSON");
  d->add_option("--out", d_out, "Output change map PGM")->required();

  // evaluate
  std::string e_pred, e_truth;
  bool e_json = false;
  CLI::App* e = app.add_subcommand(
      "evaluate", "Score a change map against ground truth");
  e->add_option("--pred", e_pred, "Predicted change map PGM")->required();
  e->add_option("--truth", e_truth, "Ground-truth change map PGM")
      ->required();
  e->add_flag("--json", e_json, "Emit JSON instead of the CSV line");

  // synth
  std::uint64_t s_seed = 0;
  int s_size = 64;
  double s_change = 0.1, s_down = 1.0;
  std::string s_out;
  CLI::App* s = app.add_subcommand(
      "synth", "Generate a synthetic optical/SAR pair with ground truth");
  s->add_option("--seed", s_seed, "RNG seed")->required();
  s->add_option("--size", s_size, "Canvas size in pixels");
  s->add_option("--change-fraction", s_change, "Target changed fraction");
  s->add_option("--sar-downscale", s_down,
                "Write the SAR image at size/factor resolution");
  s->add_option("--out", s_out, "Output directory")->required();

  // init-weights
  std::uint64_t w_seed = 0;
  std::string w_out;
  CLI::App* iw = app.add_subcommand(
      "init-weights", "Write random base weights in DHFFW1 format");
  iw->add_option("--seed", w_seed, "RNG seed")->required();
  iw->add_option("--out", w_out, "Output weight file")->required();

  // compare
  std::uint64_t c_seed = 3, c_wseed = 42;
  int c_size = 64, c_n = 1;
  double c_change = 0.1;
  std::string c_out, c_config;
  CLI::App* c = app.add_subcommand(
      "compare",
      "Sweep pooling modes and content layers on one synthetic pair");
  c->add_option("--seed", c_seed, "Scene seed");
  c->add_option("--size", c_size, "Canvas size");
  c->add_option("--change-fraction", c_change, "Changed fraction");
  c->add_option("--weights-seed", c_wseed, "Base-weight seed");
  c->add_option("--outer-iters", c_n, "Max outer iterations per run");
  c->add_option("--config", c_config, "Base configuration file");
  c->add_option("--out", c_out, "CSV output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (t->parsed())
      return run_transform(t_opt, t_sar, t_weights, t_config, t_out, t_trace);
    if (d->parsed())
      return run_detect(d_pre, d_post, d_method, d_mask, d_nu, d_gamma,
                        d_radius, d_out, d_model);
    if (e->parsed()) return run_evaluate(e_pred, e_truth, e_json);
    if (s->parsed()) return run_synth(s_seed, s_size, s_change, s_out, s_down);
    if (iw->parsed()) return run_init_weights(w_seed, w_out);
    if (c->parsed())
      return run_compare(c_seed, c_size, c_change, c_wseed, c_n, c_config,
                         c_out);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 2;
}
