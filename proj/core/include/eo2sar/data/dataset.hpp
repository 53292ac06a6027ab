#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "eo2sar/data/image.hpp"
#include "eo2sar/nn/model.hpp"
#include "eo2sar/nn/train.hpp"

namespace eo2sar::data {

// Class indices are fixed: logits column 0 scores no_ship, column 1 ship.
enum class Label : int { no_ship = 0, ship = 1 };

enum class Sensor { none, GRDH, GRDM, SCNA };
enum class Polarization { none, HH, HV, VV, VH };

const char* to_string(Label label);
const char* to_string(Sensor sensor);
const char* to_string(Polarization polarization);

// One chip plus acquisition attributes. EO chips carry no SAR attributes
// (sensor/polarization none, angle absent); SAR chips carry all three.
struct ChipRecord {
    std::string path;  // relative to the dataset root
    Label label = Label::no_ship;
    Sensor sensor = Sensor::none;
    Polarization polarization = Polarization::none;
    std::optional<double> incidence_angle;  // degrees in [19, 47]
};

struct Dataset {
    std::filesystem::path root;
    std::vector<ChipRecord> records;
};

// Reads <root>/manifest.csv. Header must be exactly
// path,label,sensor,polarization,incidence_angle. Errors name the offending
// line: unknown enum token, unparsable or out-of-range angle, SAR attributes
// present without each other.
Dataset load_manifest(const std::filesystem::path& root);

// Writes <root>/manifest.csv in the same format, angles in shortest
// round-trip decimal form.
void write_manifest(const Dataset& dataset);

// Incidence bins partition (19, 47], right-inclusive:
// Small (19, 25], Medium (25, 35], Large (35, 47].
enum class AngleBin { small, medium, large };

const char* to_string(AngleBin bin);

// Throws DataError outside (19, 47].
AngleBin bin_incidence_angle(double degrees);

// Class-asymmetric split: per class, shuffle deterministically and take a
// prefix as train. Defaults follow the transfer protocol (80% of ships,
// 20% of non-ships train; the rest test).
struct SplitSpec {
    double positive_train_fraction = 0.8;
    double negative_train_fraction = 0.2;
    uint64_t seed = 0;
};

struct Split {
    std::vector<ChipRecord> train;
    std::vector<ChipRecord> test;
};

Split stratified_split(const std::vector<ChipRecord>& records, const SplitSpec& spec);

// Decodes one chip to a training example, resizing to the configured input
// size when the stored chip differs.
nn::Example load_example(const Dataset& dataset, const ChipRecord& record,
                         const nn::NetworkConfig& net);

std::vector<nn::Example> load_examples(const Dataset& dataset,
                                       const std::vector<ChipRecord>& records,
                                       const nn::NetworkConfig& net);

}  // namespace eo2sar::data
