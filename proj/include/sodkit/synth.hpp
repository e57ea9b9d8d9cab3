#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sodkit/grid.hpp"

namespace sodkit {

enum class ShapeKind { blob, ring, bar, multi };

std::string to_string(ShapeKind kind);
ShapeKind shape_kind_from_string(const std::string& name);

// One textured scene. The foreground region adds `contrast` times a second
// texture on top of the background texture; both share the same period, so
// only the local statistics separate the object from the background.
struct SceneSpec {
  uint64_t seed = 0;
  int size = 64;
  ShapeKind shape_kind = ShapeKind::blob;
  double contrast = 0.5;
  double noise_sigma = 0.0;    // additive Gaussian noise, clipped to [0, 1]
  double texture_period = 12.0;

  void validate() const;
};

struct Scene {
  Tensor3 image;  // three identical channels
  BinaryMask gt;
  double area_fraction = 0.0;
};

// Deterministic in the spec; shape parameters are bounded so the foreground
// covers between 5% and 60% of the frame.
Scene generate(const SceneSpec& spec);

// Settings shared by all items of a generated set.
struct SetTemplate {
  int size = 64;
  double contrast = 0.15;
  double noise_sigma = 0.05;
  double texture_period = 12.0;
  // A fixed kind, or unset to rotate through all four kinds.
  std::optional<ShapeKind> shape_kind;
};

struct SetItem {
  int index = 0;
  uint64_t seed = 0;
  ShapeKind kind = ShapeKind::blob;
  double area_fraction = 0.0;
};

struct SetResult {
  int count = 0;
  std::vector<SetItem> items;
};

// Writes img_%04d.png, gt_%04d.png and manifest.json into out_dir, which is
// created if needed. Item seeds derive from base_seed and the index only.
SetResult generate_set(const std::string& out_dir, int count, uint64_t base_seed,
                       const SetTemplate& tmpl);

// Same scenes without touching the filesystem.
std::vector<Scene> generate_scenes(int count, uint64_t base_seed, const SetTemplate& tmpl);

}  // namespace sodkit
