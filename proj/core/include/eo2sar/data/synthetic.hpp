#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "eo2sar/data/dataset.hpp"

namespace eo2sar::data {

enum class Domain { eo_like, sar_like };

struct SyntheticConfig {
    int positive_count = 100;
    int negative_count = 100;
    int chip_size = 48;
    Domain domain = Domain::sar_like;
    int ship_min_px = 6;   // ship length range, pixels
    int ship_max_px = 14;
    uint64_t seed = 0;
};

// Pixel-aligned bounding box, x/y top-left.
struct Box {
    int x = 0, y = 0, w = 0, h = 0;
};

struct SyntheticChip {
    Image image;
    ChipRecord record;
    std::optional<Box> box;  // positives only
};

// Deterministic given the seed. SAR-like chips are multiplicative
// exponential speckle over a dark background; positives add a bright
// rotated-rectangle blob with smoothed edges. EO-like chips are a smooth
// low-frequency color background; positives add a gray/white ship rectangle
// with a dark wake hint. SAR attributes are sampled uniformly over the
// sensor and polarization enums and over (19, 47] degrees.
std::vector<SyntheticChip> generate_synthetic(const SyntheticConfig& config);

// Writes <root>/images/*.png, <root>/manifest.csv, and <root>/boxes.csv
// (header path,x,y,w,h, positives only).
Dataset write_dataset(const std::filesystem::path& root,
                      const std::vector<SyntheticChip>& chips);

// Reads <root>/boxes.csv back, row-addressed errors.
std::vector<std::pair<std::string, Box>> load_boxes(const std::filesystem::path& root);

}  // namespace eo2sar::data
