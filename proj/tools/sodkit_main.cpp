// Command-line front end: expansion/band/weight-map utilities, loss and
// metric reports, the forward pass, synthetic data, training and the loss
// ablation. Results go to stdout or files; logs go to stderr.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "sodkit/grid.hpp"
#include "sodkit/hda_loss.hpp"
#include "sodkit/metrics.hpp"
#include "sodkit/morphology.hpp"
#include "sodkit/parallel.hpp"
#include "sodkit/png_io.hpp"
#include "sodkit/synth.hpp"
#include "sodkit/topology.hpp"
#include "sodkit/trainer.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sodkit;

constexpr const char* kVersion = "sodkit 0.1.0";

enum class LogLevel { quiet = 0, info = 1, debug = 2 };

struct GlobalOpts {
  int threads = 0;  // 0 = all cores
  std::string log = "info";
  bool json_errors = false;
  bool strict = false;
};

GlobalOpts g_opts;
LogLevel g_log = LogLevel::info;
int g_exit = 0;

void log_info(const std::string& msg) {
  if (g_log >= LogLevel::info) std::cerr << "[info] " << msg << "\n";
}

void log_debug(const std::string& msg) {
  if (g_log >= LogLevel::debug) std::cerr << "[debug] " << msg << "\n";
}

void request_exit(int code) { g_exit = std::max(g_exit, code); }

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw DataError("cannot open file for writing: " + path);
  f << text;
  if (!f) throw DataError("write error on file: " + path);
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Accepts a flat JSON object of long option names, with one nested object
// per subcommand. Values already given on the command line win.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override {
    return "{}\n";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json j;
    try {
      input >> j;
    } catch (const json::parse_error& e) {
      throw CLI::FileError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CLI::FileError("config root must be a JSON object");
    std::vector<CLI::ConfigItem> items;
    walk(j, {}, items);
    return items;
  }

 private:
  static std::string scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }

  static void walk(const json& j, std::vector<std::string> parents,
                   std::vector<CLI::ConfigItem>& items) {
    for (const auto& [key, value] : j.items()) {
      if (value.is_object()) {
        auto deeper = parents;
        deeper.push_back(key);
        walk(value, deeper, items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array()) {
        for (const auto& el : value) item.inputs.push_back(scalar(el));
      } else {
        item.inputs.push_back(scalar(value));
      }
      items.push_back(item);
    }
  }
};

// --- expand-gt ---------------------------------------------------------

struct ExpandOpts {
  std::string gt_path, out_envelope, out_expanded;
  int iterations = 5;
};

void run_expand_gt(const ExpandOpts& o) {
  log_info("expand-gt: 3x3 element, iterations " + std::to_string(o.iterations));
  const BinaryMask gt = load_mask(o.gt_path);
  const ExpandedGt result = expand_gt(gt, StructuringSpec{3, o.iterations});
  save_mask(o.out_envelope, result.boundary_envelope);
  save_mask(o.out_expanded, result.expanded_gt);
  log_info("expanded " + o.gt_path + ": gt " + std::to_string(count_ones(gt)) + " px, envelope " +
           std::to_string(count_ones(result.boundary_envelope)) + " px, expanded " +
           std::to_string(count_ones(result.expanded_gt)) + " px");
}

// --- boundary-band -----------------------------------------------------

struct BandOpts {
  std::string gt_path, out_path;
  int radius = 10;
};

void run_boundary_band(const BandOpts& o) {
  const BinaryMask gt = load_mask(o.gt_path);
  const BinaryMask band = boundary_band(gt, o.radius);
  save_mask(o.out_path, band);
  log_info("band radius " + std::to_string(o.radius) + ": " + std::to_string(count_ones(band)) +
           " px");
}

// --- weights -----------------------------------------------------------

struct WeightsOpts {
  std::string gt_path, out_png, out_csv;
  int side = 30;
  int iterations = 5;
  bool raw_sum = false;
};

void run_weights(const WeightsOpts& o) {
  HdaConfig cfg;
  cfg.neighborhood_side = o.side;
  cfg.morph_iterations = o.iterations;
  cfg.normalize_neighborhood = !o.raw_sum;
  log_info("weights: side " + std::to_string(cfg.neighborhood_side) + ", iterations " +
           std::to_string(cfg.morph_iterations) +
           (cfg.normalize_neighborhood ? ", window means" : ", raw window sums"));

  const BinaryMask gt = load_mask(o.gt_path);
  const Grid omega = weight_map(gt, cfg);

  double peak = 0.0;
  for (double v : omega.values) peak = std::max(peak, v);

  GrayMap scaled(omega.height, omega.width);
  if (peak > 0.0) {
    for (size_t i = 0; i < omega.values.size(); ++i) scaled.values[i] = omega.values[i] / peak;
  }
  save_gray(o.out_png, scaled);

  if (!o.out_csv.empty()) {
    std::string csv;
    for (int r = 0; r < omega.height; ++r) {
      for (int c = 0; c < omega.width; ++c) {
        if (c) csv += ',';
        csv += fmt_double(omega.at(r, c));
      }
      csv += '\n';
    }
    write_text_file(o.out_csv, csv);
  }
  log_info("weight map peak " + fmt_double(peak) + " (png rescaled by peak)");
}

// --- loss --------------------------------------------------------------

struct LossOpts {
  std::string pred_path, gt_path, expanded_path, out_json;
  double lambda = 5.0;
  int side = 30;
  int iterations = 5;
  double beta = 1.0;
  bool raw_sum = false;
};

void run_loss(const LossOpts& o) {
  HdaConfig cfg;
  cfg.lambda = o.lambda;
  cfg.neighborhood_side = o.side;
  cfg.morph_iterations = o.iterations;
  cfg.normalize_neighborhood = !o.raw_sum;
  LevelWeights weights;
  weights.beta = o.beta;
  log_info("loss: lambda " + fmt_double(cfg.lambda) + ", side " +
           std::to_string(cfg.neighborhood_side) + ", iterations " +
           std::to_string(cfg.morph_iterations) + ", alpha 1/0.8/0.6/0.4, beta " +
           fmt_double(weights.beta));

  const GrayMap pred = load_gray(o.pred_path);
  const BinaryMask gt = load_mask(o.gt_path);
  const BinaryMask expanded = o.expanded_path.empty()
                                  ? expand_gt(gt, StructuringSpec{3, o.iterations}).expanded_gt
                                  : load_mask(o.expanded_path);

  // The same map fills the expanded-target slot and all four level slots;
  // the command reports the combined objective for one prediction.
  const std::vector<GrayMap> levels(4, pred);
  const TotalLoss result = total_loss(pred, expanded, levels, gt, weights, cfg);

  json out;
  out["ts_loss"] = result.ts.value;
  out["multi_level"] = result.multi_level;
  out["beta"] = weights.beta;
  out["total"] = result.total;
  json level_rows = json::array();
  bool any_degenerate = result.ts.degenerate;
  for (size_t i = 0; i < result.levels.size(); ++i) {
    json row;
    row["level"] = static_cast<int>(i) + 2;
    row["alpha"] = weights.alpha[i];
    row["value"] = result.levels[i].value;
    row["weighted_value"] = weights.alpha[i] * result.levels[i].value;
    row["degenerate"] = result.levels[i].degenerate;
    any_degenerate = any_degenerate || result.levels[i].degenerate;
    level_rows.push_back(row);
  }
  out["levels"] = level_rows;
  out["degenerate"] = any_degenerate;
  out["config"]["lambda"] = cfg.lambda;
  out["config"]["neighborhood_side"] = cfg.neighborhood_side;
  out["config"]["morph_iterations"] = cfg.morph_iterations;
  out["config"]["normalized_window"] = cfg.normalize_neighborhood;
  const std::string text = out.dump(2) + "\n";
  std::cout << text;
  if (!o.out_json.empty()) write_text_file(o.out_json, text);

  if (any_degenerate && g_opts.strict) request_exit(3);
}

// --- eval --------------------------------------------------------------

struct EvalOpts {
  std::string pred_dir, gt_dir;
  std::string out_json, out_curve, out_per_image;
  int mae_b_radius = 10;
  double beta_squared = 0.3;
  bool literal_f = false;
};

void run_eval(const EvalOpts& o) {
  EvalConfig cfg;
  cfg.mae_b_radius = o.mae_b_radius;
  cfg.fspec.beta_squared = o.beta_squared;
  cfg.fspec.literal_form = o.literal_f;
  cfg.threads = g_opts.threads;
  log_info("eval: mae_b radius " + std::to_string(cfg.mae_b_radius) + ", beta_squared " +
           fmt_double(cfg.fspec.beta_squared) +
           (cfg.fspec.literal_form ? " (literal form)" : ""));

  const MetricReport report = evaluate_dirs(o.pred_dir, o.gt_dir, cfg);
  const std::string report_json = report_to_json(report);

  std::cout << report_json;
  if (!o.out_json.empty()) write_text_file(o.out_json, report_json);
  if (!o.out_curve.empty()) write_text_file(o.out_curve, curve_to_csv(report.mean_curve));
  if (!o.out_per_image.empty()) write_text_file(o.out_per_image, per_image_to_csv(report));

  for (const std::string& err : report.errors) log_info("skipped " + err);
  log_info("evaluated " + std::to_string(report.count) + " image(s)");

  if (!report.errors.empty()) {
    request_exit(2);
  } else if (!report.degenerate_images.empty() && g_opts.strict) {
    request_exit(3);
  }
}

// --- forward -----------------------------------------------------------

struct ForwardOpts {
  std::string image_path, out_dir;
  int base_channels = 8;
  uint64_t seed = 0;
};

void run_forward(const ForwardOpts& o) {
  const GrayMap image = load_gray(o.image_path);
  TopologyConfig cfg;
  cfg.input_height = image.height;
  cfg.input_width = image.width;
  cfg.base_channels = o.base_channels;
  cfg.seed = o.seed;
  cfg.validate();

  std::error_code ec;
  fs::create_directories(o.out_dir, ec);
  if (ec) throw DataError("cannot create output directory: " + o.out_dir);

  const Network net(cfg);
  const Network::Outputs out = net.forward(replicate_channels(image, 3));

  save_gray((fs::path(o.out_dir) / "ts_pred.png").string(), out.ts_pred);
  save_gray((fs::path(o.out_dir) / "p2.png").string(), out.p2);
  save_gray((fs::path(o.out_dir) / "p3.png").string(), out.p3);
  save_gray((fs::path(o.out_dir) / "p4.png").string(), out.p4);
  save_gray((fs::path(o.out_dir) / "p5.png").string(), out.p5);
  log_info("forward pass on " + std::to_string(image.height) + "x" +
           std::to_string(image.width) + " image, 5 maps written to " + o.out_dir);
}

// --- audit-shapes ------------------------------------------------------

struct AuditOpts {
  int height = 64;
  int width = 64;
  int base_channels = 8;
};

void run_audit_shapes(const AuditOpts& o) {
  TopologyConfig cfg;
  cfg.input_height = o.height;
  cfg.input_width = o.width;
  cfg.base_channels = o.base_channels;
  cfg.validate();

  const std::vector<ShapeRow> expected = contract_table(cfg);
  const Network net(cfg);
  const std::vector<ShapeRow> actual = net.audit(Tensor3(3, o.height, o.width, 0.0));

  std::string out = "name,channels,height,width,reference_channels\n";
  for (const ShapeRow& row : actual) {
    out += row.name + ',' + std::to_string(row.channels) + ',' + std::to_string(row.height) +
           ',' + std::to_string(row.width) + ',' + std::to_string(row.reference_channels) + '\n';
  }
  std::cout << out;

  if (actual != expected) {
    throw DataError("audit-shapes: recorded shapes deviate from the contract table");
  }
  log_info("audited " + std::to_string(actual.size()) + " intermediates, all as expected");
}

// --- synth -------------------------------------------------------------

struct SynthOpts {
  std::string out_dir;
  int count = 8;
  uint64_t seed = 0;
  int size = 64;
  double contrast = 0.15;
  double noise = 0.05;
  double period = 12.0;
  std::string kind = "mixed";
};

void run_synth(const SynthOpts& o) {
  SetTemplate tmpl;
  tmpl.size = o.size;
  tmpl.contrast = o.contrast;
  tmpl.noise_sigma = o.noise;
  tmpl.texture_period = o.period;
  if (o.kind != "mixed") tmpl.shape_kind = shape_kind_from_string(o.kind);

  const SetResult result = generate_set(o.out_dir, o.count, o.seed, tmpl);
  log_info("wrote " + std::to_string(result.count) + " scene(s) and manifest.json to " +
           o.out_dir);
}

// --- train -------------------------------------------------------------

struct TrainOpts {
  std::string data_dir, out_model, out_trace;
  std::string mode = "hda";
  double lr = 0.1;
  int epochs = 50;
  uint64_t seed = 0;
  double lambda = 5.0;
  int side = 30;
  int iterations = 5;
};

std::vector<TrainItem> load_train_items(const std::string& data_dir, const HdaConfig& cfg) {
  std::vector<std::string> stems;
  if (!fs::is_directory(data_dir)) throw DataError("not a directory: " + data_dir);
  for (const auto& entry : fs::directory_iterator(data_dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name.rfind("img_", 0) == 0 && entry.path().extension() == ".png") {
      stems.push_back(entry.path().stem().string().substr(4));
    }
  }
  std::sort(stems.begin(), stems.end());
  if (stems.empty()) throw DataError("no img_*.png files in " + data_dir);

  std::vector<TrainItem> items;
  items.reserve(stems.size());
  for (const std::string& stem : stems) {
    const std::string img_path = (fs::path(data_dir) / ("img_" + stem + ".png")).string();
    const std::string gt_path = (fs::path(data_dir) / ("gt_" + stem + ".png")).string();
    if (!fs::exists(gt_path)) throw DataError("missing ground truth for img_" + stem + ".png");
    const GrayMap image = load_gray(img_path);
    BinaryMask gt = load_mask(gt_path);
    if (image.height != gt.height || image.width != gt.width) {
      throw DataError("shape mismatch for item " + stem);
    }
    items.push_back(make_train_item(stem, replicate_channels(image, 3), std::move(gt), cfg));
  }
  return items;
}

void run_train(const TrainOpts& o) {
  HdaConfig hda;
  hda.lambda = o.lambda;
  hda.neighborhood_side = o.side;
  hda.morph_iterations = o.iterations;

  TrainConfig cfg;
  cfg.learning_rate = o.lr;
  cfg.epochs = o.epochs;
  cfg.seed = o.seed;
  cfg.loss_mode = loss_mode_from_string(o.mode);
  log_info("train: loss " + o.mode + ", lr " + fmt_double(cfg.learning_rate) + ", epochs " +
           std::to_string(cfg.epochs) + ", lambda " + fmt_double(hda.lambda) + ", side " +
           std::to_string(hda.neighborhood_side) + ", iterations " +
           std::to_string(hda.morph_iterations));

  const std::vector<TrainItem> items = load_train_items(o.data_dir, hda);
  log_info("training on " + std::to_string(items.size()) + " item(s)");
  const TrainResult result = train(items, cfg, hda);

  json out;
  out["schema_version"] = 1;
  out["feature_count"] = kFeatureCount;
  out["weights"] = result.model.weights;
  out["bias"] = result.model.bias;
  out["config"]["mode"] = o.mode;
  out["config"]["learning_rate"] = o.lr;
  out["config"]["epochs"] = o.epochs;
  out["config"]["seed"] = o.seed;
  out["config"]["lambda"] = o.lambda;
  out["config"]["neighborhood_side"] = o.side;
  out["config"]["morph_iterations"] = o.iterations;
  out["loss_trace"] = result.loss_trace;
  out["final_loss"] = result.loss_trace.back();
  write_text_file(o.out_model, out.dump(2) + "\n");

  if (!o.out_trace.empty()) {
    std::string csv = "epoch,loss\n";
    for (size_t e = 0; e < result.loss_trace.size(); ++e) {
      csv += std::to_string(e) + ',' + fmt_double(result.loss_trace[e]) + '\n';
    }
    write_text_file(o.out_trace, csv);
  }
  log_info("initial loss " + fmt_double(result.loss_trace.front()) + ", final loss " +
           fmt_double(result.loss_trace.back()));
}

// --- ablate ------------------------------------------------------------

struct AblateOpts {
  std::string out_json;
  std::string train_dir, test_dir;  // when set, PNG pairs replace generated scenes
  int train_count = 200;
  int test_count = 50;
  int size = 64;
  double contrast = 0.15;
  double noise = 0.05;
  int seeds = 5;
  uint64_t data_seed = 100;
  double lr = 1.0;
  int epochs = 300;
  double lambda = 5.0;
  int side = 30;
  int iterations = 5;
};

json metric_summary(const MetricReport& r) {
  json j;
  j["mae"] = r.mae;
  j["mae_b"] = r.mae_b ? json(*r.mae_b) : json(nullptr);
  j["max_f"] = r.max_f;
  j["s_measure"] = r.s_measure;
  return j;
}

void run_ablate(const AblateOpts& o) {
  HdaConfig hda;
  hda.lambda = o.lambda;
  hda.neighborhood_side = o.side;
  hda.morph_iterations = o.iterations;
  log_info("ablate: lr " + fmt_double(o.lr) + ", epochs " + std::to_string(o.epochs) +
           ", lambda " + fmt_double(hda.lambda) + ", side " +
           std::to_string(hda.neighborhood_side) + ", iterations " +
           std::to_string(hda.morph_iterations) + ", seeds " + std::to_string(o.seeds));

  std::vector<TrainItem> train_items, test_items;
  if (!o.train_dir.empty() || !o.test_dir.empty()) {
    if (o.train_dir.empty() || o.test_dir.empty()) {
      throw ContractError("ablate: --train and --test must be given together");
    }
    train_items = load_train_items(o.train_dir, hda);
    test_items = load_train_items(o.test_dir, hda);
    log_info("loaded " + std::to_string(train_items.size()) + " train / " +
             std::to_string(test_items.size()) + " test items");
  } else {
    SetTemplate tmpl;
    tmpl.size = o.size;
    tmpl.contrast = o.contrast;
    tmpl.noise_sigma = o.noise;

    log_info("generating " + std::to_string(o.train_count) + " train / " +
             std::to_string(o.test_count) + " test scenes (size " + std::to_string(o.size) +
             ", contrast " + fmt_double(o.contrast) + ", noise " + fmt_double(o.noise) + ")");
    const std::vector<Scene> train_scenes = generate_scenes(o.train_count, o.data_seed, tmpl);
    const std::vector<Scene> test_scenes = generate_scenes(o.test_count, o.data_seed + 1, tmpl);

    const auto to_items = [&](const std::vector<Scene>& scenes, const char* prefix) {
      std::vector<TrainItem> items;
      items.reserve(scenes.size());
      for (size_t i = 0; i < scenes.size(); ++i) {
        char stem[32];
        std::snprintf(stem, sizeof(stem), "%s_%04zu", prefix, i);
        items.push_back(make_train_item(stem, scenes[i].image, scenes[i].gt, hda));
      }
      return items;
    };
    train_items = to_items(train_scenes, "train");
    test_items = to_items(test_scenes, "test");
  }

  TrainConfig base;
  base.learning_rate = o.lr;
  base.epochs = o.epochs;

  std::vector<uint64_t> seeds;
  for (int s = 1; s <= o.seeds; ++s) seeds.push_back(static_cast<uint64_t>(s));

  EvalConfig eval_cfg;
  eval_cfg.threads = g_opts.threads;

  const AblationReport report = ablate(train_items, test_items, base, hda, seeds, eval_cfg);

  json out;
  out["seeds"] = seeds;
  json rows = json::array();
  for (const AblationSeedRow& row : report.rows) {
    json r;
    r["seed"] = row.seed;
    r["baseline"] = metric_summary(row.baseline);
    r["weighted"] = metric_summary(row.weighted);
    rows.push_back(r);
    log_info("seed " + std::to_string(row.seed) + ": mae_b " +
             (row.baseline.mae_b ? fmt_double(*row.baseline.mae_b) : "n/a") + " -> " +
             (row.weighted.mae_b ? fmt_double(*row.weighted.mae_b) : "n/a") + ", mae " +
             fmt_double(row.baseline.mae) + " -> " + fmt_double(row.weighted.mae));
  }
  out["rows"] = rows;
  out["comparable"] = report.comparable;
  out["mae_b_wins"] = report.mae_b_wins;
  out["mae_non_worse"] = report.mae_non_worse;

  const std::string text = out.dump(2) + "\n";
  std::cout << text;
  if (!o.out_json.empty()) write_text_file(o.out_json, text);
}

// --- wiring ------------------------------------------------------------

bool has_flag(int argc, char** argv, const std::string& flag) {
  for (int i = 1; i < argc; ++i) {
    if (argv[i] == flag) return true;
  }
  return false;
}

void report_error(const char* type, const std::string& message) {
  if (g_opts.json_errors) {
    json j;
    j["error"]["type"] = type;
    j["error"]["message"] = message;
    std::cerr << j.dump() << "\n";
  } else {
    std::cerr << "error: " << message << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  g_opts.json_errors = has_flag(argc, argv, "--json-errors");

  CLI::App app{"salient-object toolkit: expanded targets, difference-aware losses, "
               "metrics, forward topology, synthetic data and the loss ablation"};
  app.require_subcommand(1);
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON file with default option values");
  app.add_option("--threads", g_opts.threads, "worker threads (0 = all cores)")
      ->check(CLI::Range(0, 1024));
  app.add_option("--log", g_opts.log, "log verbosity")
      ->check(CLI::IsMember({"quiet", "info", "debug"}))
      ->each([](const std::string& v) {
        g_log = v == "quiet" ? LogLevel::quiet : v == "debug" ? LogLevel::debug : LogLevel::info;
      });
  app.add_flag("--json-errors", g_opts.json_errors, "report errors as JSON on stderr");
  app.add_flag("--strict", g_opts.strict, "exit 3 when results are degenerate");

  auto* version_cmd = app.add_subcommand("version", "print the tool version");
  version_cmd->callback([] { std::cout << kVersion << "\n"; });

  ExpandOpts expand_opts;
  auto* expand_cmd =
      app.add_subcommand("expand-gt", "boundary envelope and expanded target for a mask");
  expand_cmd->add_option("--gt", expand_opts.gt_path, "ground-truth mask PNG")
      ->required()
      ->check(CLI::ExistingFile);
  expand_cmd->add_option("--out-envelope", expand_opts.out_envelope, "envelope PNG path")
      ->required();
  expand_cmd->add_option("--out-expanded", expand_opts.out_expanded, "expanded PNG path")
      ->required();
  expand_cmd->add_option("--iterations", expand_opts.iterations, "dilate/erode iterations")
      ->check(CLI::Range(0, 1000));
  expand_cmd->callback([&] { run_expand_gt(expand_opts); });

  BandOpts band_opts;
  auto* band_cmd = app.add_subcommand("boundary-band", "band of pixels near the mask boundary");
  band_cmd->add_option("--gt", band_opts.gt_path, "ground-truth mask PNG")
      ->required()
      ->check(CLI::ExistingFile);
  band_cmd->add_option("--out", band_opts.out_path, "band PNG path")->required();
  band_cmd->add_option("--radius", band_opts.radius, "band radius in pixels")
      ->check(CLI::Range(1, 1000));
  band_cmd->callback([&] { run_boundary_band(band_opts); });

  WeightsOpts weights_opts;
  auto* weights_cmd = app.add_subcommand("weights", "difference-aware weight map for a mask");
  weights_cmd->add_option("--gt", weights_opts.gt_path, "ground-truth mask PNG")
      ->required()
      ->check(CLI::ExistingFile);
  weights_cmd->add_option("--out", weights_opts.out_png, "weight map PNG (rescaled by its peak)")
      ->required();
  weights_cmd->add_option("--csv", weights_opts.out_csv, "optional CSV with raw values");
  weights_cmd->add_option("--side", weights_opts.side, "averaging window side")
      ->check(CLI::Range(1, 4096));
  weights_cmd->add_option("--iterations", weights_opts.iterations, "dilate/erode iterations")
      ->check(CLI::Range(0, 1000));
  weights_cmd->add_flag("--raw-sum", weights_opts.raw_sum,
                        "use raw window sums instead of window means");
  weights_cmd->callback([&] { run_weights(weights_opts); });

  LossOpts loss_opts;
  auto* loss_cmd = app.add_subcommand("loss", "combined training objective for one prediction");
  loss_cmd->add_option("--pred", loss_opts.pred_path, "prediction PNG")
      ->required()
      ->check(CLI::ExistingFile);
  loss_cmd->add_option("--gt", loss_opts.gt_path, "ground-truth mask PNG")
      ->required()
      ->check(CLI::ExistingFile);
  loss_cmd->add_option("--expanded", loss_opts.expanded_path,
                       "expanded target PNG (derived from --gt when omitted)")
      ->check(CLI::ExistingFile);
  loss_cmd->add_option("--json", loss_opts.out_json, "write the component report here too");
  loss_cmd->add_option("--lambda", loss_opts.lambda, "weight-map strength")
      ->check(CLI::NonNegativeNumber);
  loss_cmd->add_option("--side", loss_opts.side, "averaging window side")
      ->check(CLI::Range(1, 4096));
  loss_cmd->add_option("--iterations", loss_opts.iterations, "dilate/erode iterations")
      ->check(CLI::Range(0, 1000));
  loss_cmd->add_option("--beta", loss_opts.beta, "multi-level term weight")
      ->check(CLI::PositiveNumber);
  loss_cmd->add_flag("--raw-sum", loss_opts.raw_sum,
                     "use raw window sums instead of window means");
  loss_cmd->callback([&] { run_loss(loss_opts); });

  EvalOpts eval_opts;
  auto* eval_cmd = app.add_subcommand("eval", "metric report for a prediction directory");
  eval_cmd->add_option("--pred-dir", eval_opts.pred_dir, "directory with prediction PNGs")
      ->required()
      ->check(CLI::ExistingDirectory);
  eval_cmd->add_option("--gt-dir", eval_opts.gt_dir, "directory with ground-truth PNGs")
      ->required()
      ->check(CLI::ExistingDirectory);
  eval_cmd->add_option("--report", eval_opts.out_json, "write the report JSON here too");
  eval_cmd->add_option("--curves", eval_opts.out_curve, "write the mean curve CSV");
  eval_cmd->add_option("--per-image", eval_opts.out_per_image, "write the per-image CSV");
  eval_cmd->add_option("--mae-b-radius", eval_opts.mae_b_radius, "boundary band radius")
      ->check(CLI::Range(1, 1000));
  eval_cmd->add_option("--beta-squared", eval_opts.beta_squared, "F-measure beta^2")
      ->check(CLI::PositiveNumber);
  eval_cmd->add_flag("--literal-f", eval_opts.literal_f,
                     "use the (1+b)^2 form of the F-measure with b^2 = beta-squared");
  eval_cmd->callback([&] { run_eval(eval_opts); });

  ForwardOpts forward_opts;
  auto* forward_cmd = app.add_subcommand("forward", "run the random-weight forward pass");
  forward_cmd->add_option("--image", forward_opts.image_path, "input image PNG")
      ->required()
      ->check(CLI::ExistingFile);
  forward_cmd->add_option("--out-dir", forward_opts.out_dir, "directory for the 5 output maps")
      ->required();
  forward_cmd->add_option("--base-channels", forward_opts.base_channels,
                          "encoder width multiplier")
      ->check(CLI::Range(4, 64));
  forward_cmd->add_option("--seed", forward_opts.seed, "weight initialization seed");
  forward_cmd->callback([&] { run_forward(forward_opts); });

  AuditOpts audit_opts;
  auto* audit_cmd =
      app.add_subcommand("audit-shapes", "print and verify the intermediate shape table");
  audit_cmd->set_help_flag("--help", "print this help message and exit");
  audit_cmd->add_option("--h,--height", audit_opts.height, "input height")
      ->check(CLI::Range(32, 4096));
  audit_cmd->add_option("--w,--width", audit_opts.width, "input width")
      ->check(CLI::Range(32, 4096));
  audit_cmd->add_option("--base-channels", audit_opts.base_channels, "encoder width multiplier")
      ->check(CLI::Range(4, 64));
  audit_cmd->callback([&] { run_audit_shapes(audit_opts); });

  SynthOpts synth_opts;
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic image/mask set");
  synth_cmd->add_option("--out,--out-dir", synth_opts.out_dir, "output directory")->required();
  synth_cmd->add_option("--count", synth_opts.count, "number of scenes")
      ->check(CLI::Range(1, 100000));
  synth_cmd->add_option("--seed", synth_opts.seed, "base seed");
  synth_cmd->add_option("--size", synth_opts.size, "square image size")
      ->check(CLI::Range(16, 4096));
  synth_cmd->add_option("--contrast", synth_opts.contrast, "foreground texture strength")
      ->check(CLI::Range(0.0, 1.0));
  synth_cmd->add_option("--noise", synth_opts.noise, "additive noise sigma")
      ->check(CLI::Range(0.0, 0.5));
  synth_cmd->add_option("--period", synth_opts.period, "texture period in pixels")
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--kind", synth_opts.kind, "shape kind")
      ->check(CLI::IsMember({"blob", "ring", "bar", "multi", "mixed"}));
  synth_cmd->callback([&] { run_synth(synth_opts); });

  TrainOpts train_opts;
  auto* train_cmd = app.add_subcommand("train", "fit the per-pixel model on an image set");
  train_cmd->add_option("--data,--data-dir", train_opts.data_dir,
                        "directory with img_/gt_ pairs")
      ->required()
      ->check(CLI::ExistingDirectory);
  train_cmd->add_option("--out,--out-model", train_opts.out_model, "model JSON path")
      ->required();
  train_cmd->add_option("--trace", train_opts.out_trace, "optional per-epoch loss CSV");
  train_cmd->add_option("--loss,--mode", train_opts.mode, "training loss")
      ->check(CLI::IsMember({"hda", "bce_iou"}));
  train_cmd->add_option("--lr", train_opts.lr, "learning rate")->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--epochs", train_opts.epochs, "training epochs")
      ->check(CLI::Range(1, 100000));
  train_cmd->add_option("--seed", train_opts.seed, "initialization seed");
  train_cmd->add_option("--lambda", train_opts.lambda, "weight-map strength")
      ->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--side", train_opts.side, "averaging window side")
      ->check(CLI::Range(1, 4096));
  train_cmd->add_option("--iterations", train_opts.iterations, "dilate/erode iterations")
      ->check(CLI::Range(0, 1000));
  train_cmd->callback([&] { run_train(train_opts); });

  AblateOpts ablate_opts;
  auto* ablate_cmd =
      app.add_subcommand("ablate", "compare bce_iou and hda training across seeds");
  ablate_cmd->add_option("--report,--out-json", ablate_opts.out_json,
                         "write the report JSON here too");
  ablate_cmd->add_option("--train", ablate_opts.train_dir,
                         "train on img_/gt_ pairs from this directory")
      ->check(CLI::ExistingDirectory);
  ablate_cmd->add_option("--test", ablate_opts.test_dir,
                         "evaluate on img_/gt_ pairs from this directory")
      ->check(CLI::ExistingDirectory);
  ablate_cmd->add_option("--train-count", ablate_opts.train_count, "generated training scenes")
      ->check(CLI::Range(1, 100000));
  ablate_cmd->add_option("--test-count", ablate_opts.test_count, "generated held-out scenes")
      ->check(CLI::Range(1, 100000));
  ablate_cmd->add_option("--size", ablate_opts.size, "scene size")->check(CLI::Range(16, 4096));
  ablate_cmd->add_option("--contrast", ablate_opts.contrast, "foreground texture strength")
      ->check(CLI::Range(0.0, 1.0));
  ablate_cmd->add_option("--noise", ablate_opts.noise, "additive noise sigma")
      ->check(CLI::Range(0.0, 0.5));
  ablate_cmd->add_option("--seeds", ablate_opts.seeds, "number of training seeds")
      ->check(CLI::Range(1, 100));
  ablate_cmd->add_option("--data-seed", ablate_opts.data_seed, "scene generation seed");
  ablate_cmd->add_option("--lr", ablate_opts.lr, "learning rate")
      ->check(CLI::NonNegativeNumber);
  ablate_cmd->add_option("--epochs", ablate_opts.epochs, "training epochs")
      ->check(CLI::Range(1, 100000));
  ablate_cmd->add_option("--lambda", ablate_opts.lambda, "weight-map strength")
      ->check(CLI::NonNegativeNumber);
  ablate_cmd->add_option("--side", ablate_opts.side, "averaging window side")
      ->check(CLI::Range(1, 4096));
  ablate_cmd->add_option("--iterations", ablate_opts.iterations, "dilate/erode iterations")
      ->check(CLI::Range(0, 1000));
  ablate_cmd->callback([&] { run_ablate(ablate_opts); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("usage", e.what());
    return 1;
  } catch (const ContractError& e) {
    report_error("usage", e.what());
    return 1;
  } catch (const DataError& e) {
    report_error("data", e.what());
    return 2;
  } catch (const std::exception& e) {
    report_error("internal", e.what());
    return 2;
  }

  return g_exit;
}
