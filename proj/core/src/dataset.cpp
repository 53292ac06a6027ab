#include "eo2sar/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "eo2sar/errors.hpp"
#include "eo2sar/rng.hpp"
#include "eo2sar/strings.hpp"

namespace eo2sar::data {

namespace {

constexpr const char* kManifestHeader = "path,label,sensor,polarization,incidence_angle";

[[noreturn]] void row_error(const std::filesystem::path& file, size_t line,
                            const std::string& what) {
    throw DataError(file.string() + " line " + std::to_string(line) + ": " + what);
}

}  // namespace

const char* to_string(Label label) { return label == Label::ship ? "ship" : "no_ship"; }

const char* to_string(Sensor sensor) {
    switch (sensor) {
        case Sensor::GRDH: return "GRDH";
        case Sensor::GRDM: return "GRDM";
        case Sensor::SCNA: return "SCNA";
        case Sensor::none: return "";
    }
    return "";
}

const char* to_string(Polarization polarization) {
    switch (polarization) {
        case Polarization::HH: return "HH";
        case Polarization::HV: return "HV";
        case Polarization::VV: return "VV";
        case Polarization::VH: return "VH";
        case Polarization::none: return "";
    }
    return "";
}

const char* to_string(AngleBin bin) {
    switch (bin) {
        case AngleBin::small: return "Small";
        case AngleBin::medium: return "Medium";
        case AngleBin::large: return "Large";
    }
    return "";
}

AngleBin bin_incidence_angle(double degrees) {
    if (!(degrees > 19.0) || !(degrees <= 47.0)) {
        throw DataError("incidence angle " + format_double(degrees) + " outside (19, 47]");
    }
    if (degrees <= 25.0) return AngleBin::small;
    if (degrees <= 35.0) return AngleBin::medium;
    return AngleBin::large;
}

Dataset load_manifest(const std::filesystem::path& root) {
    const std::filesystem::path file = root / "manifest.csv";
    std::ifstream in(file);
    if (!in) throw DataError("cannot open manifest: " + file.string());

    Dataset dataset;
    dataset.root = root;

    std::string line;
    if (!std::getline(in, line)) throw FormatError(file.string() + ": empty manifest");
    if (trim(line) != kManifestHeader) {
        throw FormatError(file.string() + ": header must be exactly \"" +
                          std::string(kManifestHeader) + "\", got \"" + std::string(trim(line)) +
                          "\"");
    }

    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split(trim(line), ',');
        if (fields.size() != 5) {
            row_error(file, line_no,
                      "expected 5 fields, got " + std::to_string(fields.size()));
        }

        ChipRecord record;
        record.path = std::string(trim(fields[0]));
        if (record.path.empty()) row_error(file, line_no, "empty path");

        const std::string label(trim(fields[1]));
        if (label == "ship") {
            record.label = Label::ship;
        } else if (label == "no_ship") {
            record.label = Label::no_ship;
        } else {
            row_error(file, line_no, "unknown label \"" + label + "\"");
        }

        const std::string sensor(trim(fields[2]));
        if (sensor == "GRDH") record.sensor = Sensor::GRDH;
        else if (sensor == "GRDM") record.sensor = Sensor::GRDM;
        else if (sensor == "SCNA") record.sensor = Sensor::SCNA;
        else if (!sensor.empty()) row_error(file, line_no, "unknown sensor \"" + sensor + "\"");

        const std::string pol(trim(fields[3]));
        if (pol == "HH") record.polarization = Polarization::HH;
        else if (pol == "HV") record.polarization = Polarization::HV;
        else if (pol == "VV") record.polarization = Polarization::VV;
        else if (pol == "VH") record.polarization = Polarization::VH;
        else if (!pol.empty()) row_error(file, line_no, "unknown polarization \"" + pol + "\"");

        const std::string angle(trim(fields[4]));
        if (!angle.empty()) {
            auto value = try_parse_double(angle);
            if (!value) row_error(file, line_no, "unparsable incidence angle \"" + angle + "\"");
            if (*value < 19.0 || *value > 47.0) {
                row_error(file, line_no,
                          "incidence angle " + angle + " outside [19, 47]");
            }
            record.incidence_angle = *value;
        }

        // SAR attributes travel together; a partial set is a broken row.
        const bool has_sensor = record.sensor != Sensor::none;
        const bool has_pol = record.polarization != Polarization::none;
        const bool has_angle = record.incidence_angle.has_value();
        if (has_sensor != has_pol || has_pol != has_angle) {
            row_error(file, line_no, "sensor, polarization, and incidence angle must be "
                                     "either all present or all absent");
        }

        std::error_code ec;
        if (!std::filesystem::exists(root / record.path, ec)) {
            row_error(file, line_no, "missing image file \"" + record.path + "\"");
        }
        dataset.records.push_back(std::move(record));
    }
    return dataset;
}

void write_manifest(const Dataset& dataset) {
    const std::filesystem::path file = dataset.root / "manifest.csv";
    std::ofstream out(file, std::ios::trunc);
    if (!out) throw DataError("cannot open manifest for writing: " + file.string());
    out << kManifestHeader << '\n';
    for (const ChipRecord& r : dataset.records) {
        out << r.path << ',' << to_string(r.label) << ',' << to_string(r.sensor) << ','
            << to_string(r.polarization) << ','
            << (r.incidence_angle ? format_double(*r.incidence_angle) : std::string()) << '\n';
    }
    if (!out) throw DataError("failed writing manifest: " + file.string());
}

Split stratified_split(const std::vector<ChipRecord>& records, const SplitSpec& spec) {
    if (spec.positive_train_fraction < 0.0 || spec.positive_train_fraction > 1.0 ||
        spec.negative_train_fraction < 0.0 || spec.negative_train_fraction > 1.0) {
        throw ConfigError("split fractions must lie in [0, 1]");
    }

    std::vector<size_t> positives, negatives;
    for (size_t i = 0; i < records.size(); ++i) {
        (records[i].label == Label::ship ? positives : negatives).push_back(i);
    }

    Split split;
    auto take = [&](std::vector<size_t>& indices, double fraction, const char* stream) {
        Rng rng(Rng::derive(spec.seed, stream));
        rng.shuffle(indices);
        const auto train_count =
            static_cast<size_t>(std::floor(fraction * static_cast<double>(indices.size())));
        for (size_t i = 0; i < indices.size(); ++i) {
            (i < train_count ? split.train : split.test).push_back(records[indices[i]]);
        }
    };
    take(positives, spec.positive_train_fraction, "split_pos");
    take(negatives, spec.negative_train_fraction, "split_neg");
    return split;
}

nn::Example load_example(const Dataset& dataset, const ChipRecord& record,
                         const nn::NetworkConfig& net) {
    Tensor<float> chip = to_tensor(read_png(dataset.root / record.path));
    if (chip.dim(1) != net.input_size || chip.dim(2) != net.input_size) {
        chip = resize_bilinear(chip, net.input_size, net.input_size);
    }
    if (net.input_channels == 1) {
        const int64_t plane = static_cast<int64_t>(net.input_size) * net.input_size;
        Tensor<float> mono(Shape{1, net.input_size, net.input_size});
        for (int64_t i = 0; i < plane; ++i) {
            mono[i] = (chip[i] + chip[plane + i] + chip[2 * plane + i]) / 3.0f;
        }
        chip = std::move(mono);
    } else if (net.input_channels != 3) {
        throw ConfigError("load_example: input_channels must be 1 or 3 to decode images, got " +
                          std::to_string(net.input_channels));
    }
    return nn::Example{std::move(chip), static_cast<int>(record.label)};
}

std::vector<nn::Example> load_examples(const Dataset& dataset,
                                       const std::vector<ChipRecord>& records,
                                       const nn::NetworkConfig& net) {
    std::vector<nn::Example> examples;
    examples.reserve(records.size());
    for (const ChipRecord& r : records) examples.push_back(load_example(dataset, r, net));
    return examples;
}

}  // namespace eo2sar::data
