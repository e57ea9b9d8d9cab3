#include "sodkit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "sodkit/png_io.hpp"
#include "sodkit/rng.hpp"

namespace sodkit {

namespace {

constexpr double kPi = 3.14159265358979323846;

uint64_t item_seed(uint64_t base_seed, uint64_t index) {
  return splitmix64_mix(splitmix64_mix(base_seed) ^ splitmix64_mix(index ^ 0x5851f42d4c957f2dULL));
}

struct Texture {
  double dir_x, dir_y, phase, amplitude, offset, period;

  double value(int x, int y) const {
    const double arg = 2.0 * kPi * (dir_x * x + dir_y * y) / period + phase;
    return offset + amplitude * std::sin(arg);
  }
};

Texture draw_texture(Rng& rng, double amplitude, double period) {
  const double phi = rng.uniform(0.0, kPi);
  const double phase = rng.uniform(0.0, 2.0 * kPi);
  return Texture{std::cos(phi), std::sin(phi), phase, amplitude, 0.35, period};
}

BinaryMask draw_shape(Rng& rng, ShapeKind kind, int n) {
  BinaryMask gt(n, n);
  const double N = static_cast<double>(n);

  const auto fill_disc = [&](double cx, double cy, double r_inner, double r_outer) {
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) {
        const double dx = x + 0.5 - cx;
        const double dy = y + 0.5 - cy;
        const double d = std::sqrt(dx * dx + dy * dy);
        if (d >= r_inner && d <= r_outer) gt.at(y, x) = 1;
      }
    }
  };

  switch (kind) {
    case ShapeKind::blob: {
      const double cx = N / 2.0 + rng.uniform(-N / 8.0, N / 8.0);
      const double cy = N / 2.0 + rng.uniform(-N / 8.0, N / 8.0);
      const double rho = rng.uniform(0.20, 0.30) * N;
      const double p1 = rng.uniform(0.0, 2.0 * kPi);
      const double p2 = rng.uniform(0.0, 2.0 * kPi);
      for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
          const double dx = x + 0.5 - cx;
          const double dy = y + 0.5 - cy;
          const double theta = std::atan2(dy, dx);
          const double r =
              rho * (1.0 + 0.12 * std::sin(2.0 * theta + p1) + 0.08 * std::sin(3.0 * theta + p2));
          if (std::sqrt(dx * dx + dy * dy) <= r) gt.at(y, x) = 1;
        }
      }
      break;
    }
    case ShapeKind::ring: {
      const double cx = N / 2.0 + rng.uniform(-N / 16.0, N / 16.0);
      const double cy = N / 2.0 + rng.uniform(-N / 16.0, N / 16.0);
      const double r_outer = rng.uniform(0.25, 0.35) * N;
      const double r_inner = rng.uniform(0.35, 0.55) * r_outer;
      fill_disc(cx, cy, r_inner, r_outer);
      break;
    }
    case ShapeKind::bar: {
      const double cx = N / 2.0 + rng.uniform(-N / 16.0, N / 16.0);
      const double cy = N / 2.0 + rng.uniform(-N / 16.0, N / 16.0);
      const double angle = rng.uniform(0.0, kPi);
      const double half_len = rng.uniform(0.25, 0.40) * N;
      const double half_wid = rng.uniform(0.08, 0.125) * N;
      const double ca = std::cos(angle), sa = std::sin(angle);
      for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
          const double dx = x + 0.5 - cx;
          const double dy = y + 0.5 - cy;
          const double u = dx * ca + dy * sa;
          const double v = -dx * sa + dy * ca;
          if (std::fabs(u) <= half_len && std::fabs(v) <= half_wid) gt.at(y, x) = 1;
        }
      }
      break;
    }
    case ShapeKind::multi: {
      const int k = 2 + static_cast<int>(rng.below(3));
      const double quad[4][2] = {{0.25, 0.25}, {0.75, 0.25}, {0.25, 0.75}, {0.75, 0.75}};
      for (int j = 0; j < k; ++j) {
        const double cx = quad[j][0] * N + rng.uniform(-0.05, 0.05) * N;
        const double cy = quad[j][1] * N + rng.uniform(-0.05, 0.05) * N;
        const double r = rng.uniform(0.11, 0.16) * N;
        fill_disc(cx, cy, 0.0, r);
      }
      break;
    }
  }
  return gt;
}

}  // namespace

std::string to_string(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::blob:
      return "blob";
    case ShapeKind::ring:
      return "ring";
    case ShapeKind::bar:
      return "bar";
    case ShapeKind::multi:
      return "multi";
  }
  throw ContractError("to_string: invalid ShapeKind");
}

ShapeKind shape_kind_from_string(const std::string& name) {
  if (name == "blob") return ShapeKind::blob;
  if (name == "ring") return ShapeKind::ring;
  if (name == "bar") return ShapeKind::bar;
  if (name == "multi") return ShapeKind::multi;
  throw ContractError("unknown shape kind: " + name);
}

void SceneSpec::validate() const {
  if (size < 16) throw ContractError("SceneSpec: size must be >= 16, got " + std::to_string(size));
  if (!(contrast >= 0.0 && contrast <= 1.0)) {
    throw ContractError("SceneSpec: contrast must lie in [0, 1]");
  }
  if (!(noise_sigma >= 0.0 && noise_sigma <= 0.5)) {
    throw ContractError("SceneSpec: noise_sigma must lie in [0, 0.5]");
  }
  if (!(texture_period > 0.0)) throw ContractError("SceneSpec: texture_period must be > 0");
}

Scene generate(const SceneSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);

  // Draw order is fixed: background texture, foreground texture, shape
  // parameters, then per-pixel noise in row-major order.
  const Texture bg = draw_texture(rng, 0.12, spec.texture_period);
  const Texture fg = draw_texture(rng, 0.08, spec.texture_period);
  const BinaryMask gt = draw_shape(rng, spec.shape_kind, spec.size);

  GrayMap luma(spec.size, spec.size);
  for (int y = 0; y < spec.size; ++y) {
    for (int x = 0; x < spec.size; ++x) {
      double v = bg.value(x, y);
      if (gt.at(y, x)) v += spec.contrast * fg.value(x, y);
      if (spec.noise_sigma > 0.0) v += spec.noise_sigma * rng.normal();
      luma.at(y, x) = std::clamp(v, 0.0, 1.0);
    }
  }

  Scene scene;
  scene.image = replicate_channels(luma, 3);
  scene.gt = gt;
  scene.area_fraction = static_cast<double>(count_ones(gt)) /
                        static_cast<double>(gt.values.size());
  return scene;
}

namespace {

SceneSpec item_spec(int index, uint64_t base_seed, const SetTemplate& tmpl) {
  SceneSpec spec;
  spec.seed = item_seed(base_seed, static_cast<uint64_t>(index));
  spec.size = tmpl.size;
  spec.contrast = tmpl.contrast;
  spec.noise_sigma = tmpl.noise_sigma;
  spec.texture_period = tmpl.texture_period;
  spec.shape_kind =
      tmpl.shape_kind ? *tmpl.shape_kind : static_cast<ShapeKind>(index % 4);
  return spec;
}

}  // namespace

std::vector<Scene> generate_scenes(int count, uint64_t base_seed, const SetTemplate& tmpl) {
  if (count < 1) throw ContractError("generate_scenes: count must be >= 1");
  std::vector<Scene> scenes;
  scenes.reserve(count);
  for (int i = 0; i < count; ++i) {
    scenes.push_back(generate(item_spec(i, base_seed, tmpl)));
  }
  return scenes;
}

SetResult generate_set(const std::string& out_dir, int count, uint64_t base_seed,
                       const SetTemplate& tmpl) {
  if (count < 1) throw ContractError("generate_set: count must be >= 1");
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create output directory: " + out_dir);

  SetResult result;
  result.count = count;

  nlohmann::json items = nlohmann::json::array();
  for (int i = 0; i < count; ++i) {
    const SceneSpec spec = item_spec(i, base_seed, tmpl);
    const Scene scene = generate(spec);

    char name[32];
    std::snprintf(name, sizeof(name), "img_%04d.png", i);
    save_gray((fs::path(out_dir) / name).string(), channel_mean(scene.image));
    std::snprintf(name, sizeof(name), "gt_%04d.png", i);
    save_mask((fs::path(out_dir) / name).string(), scene.gt);

    SetItem item{i, spec.seed, spec.shape_kind, scene.area_fraction};
    result.items.push_back(item);

    nlohmann::json row;
    row["index"] = item.index;
    row["seed"] = item.seed;
    row["shape_kind"] = to_string(item.kind);
    row["area_fraction"] = item.area_fraction;
    items.push_back(row);
  }

  nlohmann::json manifest;
  manifest["schema_version"] = 1;
  manifest["base_seed"] = base_seed;
  manifest["count"] = count;
  manifest["template"]["size"] = tmpl.size;
  manifest["template"]["contrast"] = tmpl.contrast;
  manifest["template"]["noise_sigma"] = tmpl.noise_sigma;
  manifest["template"]["texture_period"] = tmpl.texture_period;
  manifest["template"]["shape_kind"] =
      tmpl.shape_kind ? to_string(*tmpl.shape_kind) : std::string("mixed");
  manifest["items"] = items;

  std::ofstream f(fs::path(out_dir) / "manifest.json", std::ios::trunc);
  if (!f) throw DataError("cannot write manifest in " + out_dir);
  f << manifest.dump(2) << "\n";
  if (!f) throw DataError("write error on manifest in " + out_dir);
  return result;
}

}  // namespace sodkit
