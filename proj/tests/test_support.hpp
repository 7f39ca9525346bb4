#pragma once

#include <random>
#include <string>
#include <vector>

#include "actrec/dataset.hpp"

namespace actrec::fixtures {

// One track from (x, y, w, h) tuples starting at `first`.
inline Track make_track(const std::string& object, FrameIndex first, const std::vector<Box>& boxes,
                        const std::string& label = "") {
  Track t{object, {}};
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    TrackedFrame f;
    f.frame = first + static_cast<FrameIndex>(i);
    f.object = object;
    f.box = boxes[i];
    if (!label.empty()) f.label = label;
    t.frames.push_back(f);
  }
  return t;
}

inline std::vector<Box> random_boxes(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> pos(0.0, 300.0), size(5.0, 80.0);
  std::vector<Box> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(Box{pos(rng), pos(rng), size(rng), size(rng)});
  return out;
}

// Small standard scenario for fast pipeline tests.
inline SyntheticConfig small_synthetic(int clips_per_activity = 8) {
  auto c = standard_synthetic_config();
  c.clips_per_activity = clips_per_activity;
  c.clip_length_range = {40, 80};
  return c;
}

}  // namespace actrec::fixtures
