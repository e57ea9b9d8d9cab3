// Golden-fixture tests for the command line tool. Every subcommand is run
// through the real binary; produced files and captured streams are compared
// byte for byte against checked-in fixtures. Pass --bless (or set
// SODKIT_BLESS) to regenerate the fixtures after an intentional change.

#define DOCTEST_CONFIG_IMPLEMENT
#include "doctest.h"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sodkit/grid.hpp"
#include "sodkit/png_io.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace sodkit;

namespace {

bool g_bless = false;

std::string cli_path() { return SODKIT_CLI_PATH; }
fs::path golden_dir() { return fs::path(SODKIT_GOLDEN_DIR); }

std::string read_text(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  f << text;
}

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

// Runs the tool with the given argument string, capturing both streams.
CliResult run_cli(const std::string& args, const testsup::TempDir& scratch) {
  const std::string out_file = scratch.str("cli_stdout.bin");
  const std::string err_file = scratch.str("cli_stderr.bin");
  const std::string cmd = "\"" + cli_path() + "\" " + args + " 1>\"" + out_file + "\" 2>\"" +
                          err_file + "\"";
  const int raw = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = read_text(out_file);
  r.err = read_text(err_file);
  return r;
}

// Compares bytes against the named fixture, or rewrites it under --bless.
void compare_golden(const std::string& name, const std::string& actual) {
  const fs::path path = golden_dir() / name;
  if (g_bless) {
    fs::create_directories(path.parent_path());
    write_text(path, actual);
    MESSAGE("blessed ", name, " (", actual.size(), " bytes)");
    return;
  }
  REQUIRE_MESSAGE(fs::exists(path),
                  "missing fixture ", name, "; run cli_tests --bless to create it");
  const std::string expected = read_text(path);
  if (actual == expected) return;
  size_t i = 0;
  while (i < actual.size() && i < expected.size() && actual[i] == expected[i]) ++i;
  FAIL_CHECK(name, " differs from fixture at byte ", i, " (actual ", actual.size(),
             " bytes, fixture ", expected.size(), " bytes)");
}

void compare_golden_file(const std::string& name, const fs::path& produced) {
  REQUIRE_MESSAGE(fs::exists(produced), "tool did not produce ", produced.string());
  compare_golden(name, read_text(produced));
}

// Log headers precede the JSON error object on stderr; take the last line.
std::string last_line(const std::string& text) {
  size_t end = text.find_last_not_of('\n');
  if (end == std::string::npos) return {};
  const size_t start = text.rfind('\n', end);
  return text.substr(start == std::string::npos ? 0 : start + 1, end - start);
}

// Standard tiny scene set shared by several fixtures.
void make_scenes(const testsup::TempDir& dir, const std::string& leaf, int count) {
  const CliResult r = run_cli(
      "synth --out \"" + dir.str(leaf) + "\" --count " + std::to_string(count) +
          " --size 32 --seed 42",
      dir);
  REQUIRE_MESSAGE(r.code == 0, "scene generation failed: ", r.err);
}

}  // namespace

TEST_CASE("version prints the tool banner") {
  testsup::TempDir dir("cli_version");
  const CliResult r = run_cli("version", dir);
  CHECK(r.code == 0);
  CHECK(r.err.empty());
  compare_golden("version.txt", r.out);
}

TEST_CASE("usage errors exit with code 1") {
  testsup::TempDir dir("cli_usage");
  CHECK(run_cli("", dir).code == 1);
  CHECK(run_cli("frobnicate", dir).code == 1);
  CHECK(run_cli("loss", dir).code == 1);  // missing required options
  CHECK(run_cli("weights --gt /nonexistent/mask.png --out x.png", dir).code == 1);

  const CliResult plain = run_cli("frobnicate", dir);
  CHECK(plain.err.find("error") != std::string::npos);

  const CliResult as_json = run_cli("--json-errors frobnicate", dir);
  CHECK(as_json.code == 1);
  const nlohmann::json j = nlohmann::json::parse(last_line(as_json.err));
  CHECK(j["error"]["type"] == "usage");
  CHECK(j["error"]["message"].is_string());
}

TEST_CASE("synth writes stable scene files and a manifest") {
  testsup::TempDir dir("cli_synth");
  make_scenes(dir, "scn", 3);

  compare_golden_file("synth/img_0000.png", dir.str("scn/img_0000.png"));
  compare_golden_file("synth/gt_0000.png", dir.str("scn/gt_0000.png"));
  compare_golden_file("synth/img_0002.png", dir.str("scn/img_0002.png"));
  compare_golden_file("synth/gt_0002.png", dir.str("scn/gt_0002.png"));
  compare_golden_file("synth/manifest.json", dir.str("scn/manifest.json"));
}

TEST_CASE("expand-gt writes stable envelope and expanded masks") {
  testsup::TempDir dir("cli_expand");
  make_scenes(dir, "scn", 1);
  const std::string gt = dir.str("scn/gt_0000.png");

  CliResult r = run_cli("expand-gt --gt \"" + gt + "\" --out-envelope \"" + dir.str("env.png") +
                            "\" --out-expanded \"" + dir.str("exp.png") + "\"",
                        dir);
  REQUIRE_MESSAGE(r.code == 0, r.err);
  compare_golden_file("expand/envelope.png", dir.str("env.png"));
  compare_golden_file("expand/expanded.png", dir.str("exp.png"));

  r = run_cli("expand-gt --gt \"" + gt + "\" --iterations 2 --out-envelope \"" +
                  dir.str("env2.png") + "\" --out-expanded \"" + dir.str("exp2.png") + "\"",
              dir);
  REQUIRE_MESSAGE(r.code == 0, r.err);
  compare_golden_file("expand/envelope_it2.png", dir.str("env2.png"));
}

TEST_CASE("boundary-band writes a stable band mask") {
  testsup::TempDir dir("cli_band");
  make_scenes(dir, "scn", 1);

  const CliResult r = run_cli("boundary-band --gt \"" + dir.str("scn/gt_0000.png") +
                                  "\" --out \"" + dir.str("band.png") + "\" --radius 4",
                              dir);
  REQUIRE_MESSAGE(r.code == 0, r.err);
  compare_golden_file("band/band_r4.png", dir.str("band.png"));
}

TEST_CASE("weights writes stable map images and value tables") {
  testsup::TempDir dir("cli_weights");
  make_scenes(dir, "scn", 1);
  const std::string gt = dir.str("scn/gt_0000.png");

  CliResult r = run_cli("weights --gt \"" + gt + "\" --side 10 --out \"" + dir.str("w.png") +
                            "\" --csv \"" + dir.str("w.csv") + "\"",
                        dir);
  REQUIRE_MESSAGE(r.code == 0, r.err);
  compare_golden_file("weights/map_s10.png", dir.str("w.png"));
  compare_golden_file("weights/map_s10.csv", dir.str("w.csv"));

  r = run_cli("weights --gt \"" + gt + "\" --side 10 --raw-sum --out \"" + dir.str("raw.png") +
                  "\" --csv \"" + dir.str("raw.csv") + "\"",
              dir);
  REQUIRE_MESSAGE(r.code == 0, r.err);
  compare_golden_file("weights/map_raw.csv", dir.str("raw.csv"));
}

TEST_CASE("loss reports stable component values") {
  testsup::TempDir dir("cli_loss");
  make_scenes(dir, "scn", 1);
  const std::string pred = dir.str("scn/img_0000.png");
  const std::string gt = dir.str("scn/gt_0000.png");

  CliResult r = run_cli(
      "loss --pred \"" + pred + "\" --gt \"" + gt + "\" --json \"" + dir.str("loss.json") + "\"",
      dir);
  REQUIRE_MESSAGE(r.code == 0, r.err);
  compare_golden("loss/report.json", r.out);
  CHECK(r.out == read_text(dir.str("loss.json")));

  r = run_cli("loss --pred \"" + pred + "\" --gt \"" + gt + "\" --lambda 0", dir);
  REQUIRE_MESSAGE(r.code == 0, r.err);
  compare_golden("loss/report_lambda0.json", r.out);
}

TEST_CASE("config file supplies defaults and explicit flags win") {
  testsup::TempDir dir("cli_config");
  make_scenes(dir, "scn", 1);
  const std::string pred = dir.str("scn/img_0000.png");
  const std::string gt = dir.str("scn/gt_0000.png");
  write_text(dir.str("cfg.json"), "{\"loss\": {\"lambda\": 0}}\n");

  const std::string base = "loss --pred \"" + pred + "\" --gt \"" + gt + "\"";
  const CliResult from_flag = run_cli(base + " --lambda 0", dir);
  const CliResult from_config = run_cli("--config \"" + dir.str("cfg.json") + "\" " + base, dir);
  const CliResult overridden =
      run_cli("--config \"" + dir.str("cfg.json") + "\" " + base + " --lambda 5", dir);
  const CliResult plain = run_cli(base, dir);  // default lambda 5

  REQUIRE(from_flag.code == 0);
  REQUIRE(from_config.code == 0);
  REQUIRE(overridden.code == 0);
  REQUIRE(plain.code == 0);
  CHECK(from_config.out == from_flag.out);
  CHECK(overridden.out == plain.out);
  CHECK(from_config.out != plain.out);
}

TEST_CASE("forward writes five stable prediction maps") {
  testsup::TempDir dir("cli_forward");
  make_scenes(dir, "scn", 1);

  const CliResult r = run_cli("forward --image \"" + dir.str("scn/img_0000.png") +
                                  "\" --out-dir \"" + dir.str("fw") +
                                  "\" --base-channels 4 --seed 9",
                              dir);
  REQUIRE_MESSAGE(r.code == 0, r.err);
  compare_golden_file("forward/ts_pred.png", dir.str("fw/ts_pred.png"));
  compare_golden_file("forward/p2.png", dir.str("fw/p2.png"));
  compare_golden_file("forward/p3.png", dir.str("fw/p3.png"));
  compare_golden_file("forward/p4.png", dir.str("fw/p4.png"));
  compare_golden_file("forward/p5.png", dir.str("fw/p5.png"));
}

TEST_CASE("audit-shapes prints the stable intermediate table") {
  testsup::TempDir dir("cli_audit");

  CliResult r = run_cli("audit-shapes", dir);
  REQUIRE_MESSAGE(r.code == 0, r.err);
  compare_golden("audit/table_64x64_base8.csv", r.out);

  r = run_cli("audit-shapes --h 96 --w 64 --base-channels 4", dir);
  REQUIRE_MESSAGE(r.code == 0, r.err);
  compare_golden("audit/table_96x64_base4.csv", r.out);
}

TEST_CASE("eval writes stable reports, curves and per-image tables") {
  testsup::TempDir dir("cli_eval");
  make_scenes(dir, "scn", 3);
  fs::create_directories(dir.str("preds"));
  fs::create_directories(dir.str("gts"));
  for (int i = 0; i < 3; ++i) {
    const std::string stem = "scene_" + std::to_string(i);
    const std::string idx = "000" + std::to_string(i);
    fs::copy_file(dir.str("scn/img_" + idx + ".png"), dir.str("preds/" + stem + ".png"));
    fs::copy_file(dir.str("scn/gt_" + idx + ".png"), dir.str("gts/" + stem + ".png"));
  }

  const CliResult r = run_cli("eval --pred-dir \"" + dir.str("preds") + "\" --gt-dir \"" +
                                  dir.str("gts") + "\" --report \"" + dir.str("report.json") +
                                  "\" --curves \"" + dir.str("curves.csv") +
                                  "\" --per-image \"" + dir.str("per_image.csv") + "\"",
                              dir);
  REQUIRE_MESSAGE(r.code == 0, r.err);
  compare_golden_file("eval/report.json", dir.str("report.json"));
  compare_golden_file("eval/curves.csv", dir.str("curves.csv"));
  compare_golden_file("eval/per_image.csv", dir.str("per_image.csv"));
  CHECK(r.out == read_text(dir.str("report.json")));
}

TEST_CASE("eval lists pairing problems and exits with code 2") {
  testsup::TempDir dir("cli_eval_mismatch");
  make_scenes(dir, "scn", 2);
  fs::create_directories(dir.str("preds"));
  fs::create_directories(dir.str("gts"));
  fs::copy_file(dir.str("scn/img_0000.png"), dir.str("preds/scene_0.png"));
  fs::copy_file(dir.str("scn/gt_0000.png"), dir.str("gts/scene_0.png"));
  fs::copy_file(dir.str("scn/gt_0001.png"), dir.str("gts/scene_1.png"));    // no prediction
  fs::copy_file(dir.str("scn/img_0001.png"), dir.str("preds/scene_2.png"));  // no ground truth

  const CliResult r = run_cli("eval --pred-dir \"" + dir.str("preds") + "\" --gt-dir \"" +
                                  dir.str("gts") + "\" --report \"" + dir.str("report.json") +
                                  "\"",
                              dir);
  CHECK(r.code == 2);
  compare_golden_file("eval/report_mismatch.json", dir.str("report.json"));
  const nlohmann::json j = nlohmann::json::parse(read_text(dir.str("report.json")));
  REQUIRE(j["errors"].size() == 2);
  CHECK(j["errors"][0] == "scene_1: missing prediction");
  CHECK(j["errors"][1] == "scene_2: missing ground truth");
}

TEST_CASE("strict mode turns degenerate inputs into exit code 3") {
  testsup::TempDir dir("cli_strict");
  fs::create_directories(dir.str("preds"));
  fs::create_directories(dir.str("gts"));
  save_gray(dir.str("preds/flat.png"), GrayMap(16, 16, 0.5));
  save_mask(dir.str("gts/flat.png"), BinaryMask(16, 16, 0));  // empty mask

  const std::string args =
      "eval --pred-dir \"" + dir.str("preds") + "\" --gt-dir \"" + dir.str("gts") + "\"";
  CHECK(run_cli(args, dir).code == 0);
  CHECK(run_cli("--strict " + args, dir).code == 3);
}

TEST_CASE("train writes a stable model and loss trace") {
  testsup::TempDir dir("cli_train");
  make_scenes(dir, "scn", 4);

  CliResult r = run_cli("train --data \"" + dir.str("scn") + "\" --out \"" +
                            dir.str("model.json") + "\" --trace \"" + dir.str("trace.csv") +
                            "\" --epochs 4 --lr 0.5 --seed 3",
                        dir);
  REQUIRE_MESSAGE(r.code == 0, r.err);
  compare_golden_file("train/model.json", dir.str("model.json"));
  compare_golden_file("train/trace.csv", dir.str("trace.csv"));

  r = run_cli("train --data \"" + dir.str("scn") + "\" --out \"" + dir.str("model_bce.json") +
                  "\" --loss bce_iou --epochs 4 --lr 0.5 --seed 3",
              dir);
  REQUIRE_MESSAGE(r.code == 0, r.err);
  compare_golden_file("train/model_bce.json", dir.str("model_bce.json"));
}

TEST_CASE("train without usable pairs exits with code 2") {
  testsup::TempDir dir("cli_train_empty");
  fs::create_directories(dir.str("empty"));
  const CliResult r = run_cli(
      "train --data \"" + dir.str("empty") + "\" --out \"" + dir.str("model.json") + "\"", dir);
  CHECK(r.code == 2);
}

TEST_CASE("ablate writes a stable comparison report") {
  testsup::TempDir dir("cli_ablate");
  const CliResult r = run_cli(
      "ablate --train-count 4 --test-count 2 --size 32 --seeds 2 --epochs 4 --lr 0.5 "
      "--report \"" +
          dir.str("ab.json") + "\"",
      dir);
  REQUIRE_MESSAGE(r.code == 0, r.err);
  compare_golden_file("ablate/report.json", dir.str("ab.json"));
  CHECK(r.out == read_text(dir.str("ab.json")));
}

TEST_CASE("corrupt input files exit with a data error") {
  testsup::TempDir dir("cli_corrupt");
  make_scenes(dir, "scn", 1);
  const std::string whole = read_text(dir.str("scn/gt_0000.png"));
  write_text(dir.str("broken.png"), whole.substr(0, 20));

  const std::string args = "loss --pred \"" + dir.str("broken.png") + "\" --gt \"" +
                           dir.str("scn/gt_0000.png") + "\"";
  CHECK(run_cli(args, dir).code == 2);

  const CliResult as_json = run_cli("--json-errors " + args, dir);
  CHECK(as_json.code == 2);
  const nlohmann::json j = nlohmann::json::parse(last_line(as_json.err));
  CHECK(j["error"]["type"] == "data");
}

int main(int argc, char** argv) {
  std::vector<char*> passed;
  for (int i = 0; i < argc; ++i) {
    if (std::string(argv[i]) == "--bless") {
      g_bless = true;
    } else {
      passed.push_back(argv[i]);
    }
  }
  if (std::getenv("SODKIT_BLESS") != nullptr) g_bless = true;

  doctest::Context ctx;
  ctx.applyCommandLine(static_cast<int>(passed.size()), passed.data());
  return ctx.run();
}
