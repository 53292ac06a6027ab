#include "eo2sar/eval/report.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "eo2sar/errors.hpp"

namespace eo2sar::eval {

namespace {

using nlohmann::json;

void finalize(CellMetrics& cell) {
    if (cell.ship_total > 0) {
        cell.recall_ship =
            static_cast<double>(cell.ship_correct) / static_cast<double>(cell.ship_total);
    }
    if (cell.no_ship_total > 0) {
        cell.recall_no_ship =
            static_cast<double>(cell.no_ship_correct) / static_cast<double>(cell.no_ship_total);
    }
    if (cell.recall_ship && cell.recall_no_ship) {
        cell.overall = (*cell.recall_ship + *cell.recall_no_ship) / 2.0;
    }
}

void count(CellMetrics& cell, int prediction, int label) {
    if (label == 1) {
        ++cell.ship_total;
        if (prediction == 1) ++cell.ship_correct;
    } else {
        ++cell.no_ship_total;
        if (prediction == 0) ++cell.no_ship_correct;
    }
}

Stratum sensor_stratum(data::Sensor sensor) {
    switch (sensor) {
        case data::Sensor::GRDH: return Stratum::GRDH;
        case data::Sensor::GRDM: return Stratum::GRDM;
        default: return Stratum::SCNA;
    }
}

Stratum polarization_stratum(data::Polarization pol) {
    switch (pol) {
        case data::Polarization::HH: return Stratum::HH;
        case data::Polarization::HV: return Stratum::HV;
        case data::Polarization::VV: return Stratum::VV;
        default: return Stratum::VH;
    }
}

Stratum angle_stratum(data::AngleBin bin) {
    switch (bin) {
        case data::AngleBin::small: return Stratum::Small;
        case data::AngleBin::medium: return Stratum::Medium;
        default: return Stratum::Large;
    }
}

json cell_to_json(const CellMetrics& cell) {
    json j;
    j["ship_total"] = cell.ship_total;
    j["ship_correct"] = cell.ship_correct;
    j["no_ship_total"] = cell.no_ship_total;
    j["no_ship_correct"] = cell.no_ship_correct;
    j["recall_ship"] = cell.recall_ship ? json(*cell.recall_ship) : json(nullptr);
    j["recall_no_ship"] = cell.recall_no_ship ? json(*cell.recall_no_ship) : json(nullptr);
    j["overall"] = cell.overall ? json(*cell.overall) : json(nullptr);
    return j;
}

CellMetrics cell_from_json(const json& j, const std::string& where) {
    CellMetrics cell;
    try {
        cell.ship_total = j.at("ship_total").get<int64_t>();
        cell.ship_correct = j.at("ship_correct").get<int64_t>();
        cell.no_ship_total = j.at("no_ship_total").get<int64_t>();
        cell.no_ship_correct = j.at("no_ship_correct").get<int64_t>();
        if (!j.at("recall_ship").is_null()) cell.recall_ship = j.at("recall_ship").get<double>();
        if (!j.at("recall_no_ship").is_null()) {
            cell.recall_no_ship = j.at("recall_no_ship").get<double>();
        }
        if (!j.at("overall").is_null()) cell.overall = j.at("overall").get<double>();
    } catch (const json::exception& e) {
        throw FormatError(where + ": " + e.what());
    }
    return cell;
}

}  // namespace

const char* to_string(Stratum stratum) {
    switch (stratum) {
        case Stratum::GRDH: return "GRDH";
        case Stratum::GRDM: return "GRDM";
        case Stratum::SCNA: return "SCNA";
        case Stratum::HH: return "HH";
        case Stratum::HV: return "HV";
        case Stratum::VV: return "VV";
        case Stratum::VH: return "VH";
        case Stratum::Small: return "Small";
        case Stratum::Medium: return "Medium";
        case Stratum::Large: return "Large";
        case Stratum::Overall: return "Overall";
    }
    return "";
}

std::pair<std::optional<double>, std::optional<double>> per_class_recall(
    const std::vector<int>& predictions, const std::vector<int>& labels) {
    if (predictions.size() != labels.size()) {
        throw DimensionError("per_class_recall: " + std::to_string(predictions.size()) +
                             " predictions vs " + std::to_string(labels.size()) + " labels");
    }
    CellMetrics cell;
    for (size_t i = 0; i < labels.size(); ++i) count(cell, predictions[i], labels[i]);
    finalize(cell);
    return {cell.recall_ship, cell.recall_no_ship};
}

EvalReport stratified_report(const std::vector<int>& predictions,
                             const std::vector<data::ChipRecord>& records) {
    if (predictions.size() != records.size()) {
        throw DimensionError("stratified_report: " + std::to_string(predictions.size()) +
                             " predictions vs " + std::to_string(records.size()) + " records");
    }
    EvalReport report;
    for (size_t i = 0; i < records.size(); ++i) {
        const data::ChipRecord& r = records[i];
        const int prediction = predictions[i];
        const int label = static_cast<int>(r.label);

        count(report.cell(Stratum::Overall), prediction, label);

        const bool has_sensor = r.sensor != data::Sensor::none;
        const bool has_pol = r.polarization != data::Polarization::none;
        const bool has_angle = r.incidence_angle.has_value();
        if (has_sensor != has_pol || has_pol != has_angle) {
            throw DataError("stratified_report: record \"" + r.path +
                            "\" carries a partial attribute set");
        }
        if (!has_sensor) continue;

        count(report.cell(sensor_stratum(r.sensor)), prediction, label);
        count(report.cell(polarization_stratum(r.polarization)), prediction, label);
        count(report.cell(angle_stratum(data::bin_incidence_angle(*r.incidence_angle))),
              prediction, label);
    }
    for (CellMetrics& cell : report.cells) finalize(cell);
    return report;
}

std::string format_round2(double value) {
    // Half-up at the second decimal: 0.495 -> "0.50".
    long long cents = std::llround(value * 100.0);
    std::string sign;
    if (cents < 0) {
        sign = "-";
        cents = -cents;
    }
    std::string frac = std::to_string(cents % 100);
    if (frac.size() < 2) frac.insert(frac.begin(), '0');
    return sign + std::to_string(cents / 100) + "." + frac;
}

void write_report_csv(const std::filesystem::path& path,
                      const std::vector<NamedReport>& reports) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open report for writing: " + path.string());

    out << "training,class";
    for (Stratum s : kStrata) out << ',' << to_string(s);
    out << '\n';

    auto row = [&](const NamedReport& named, const char* klass,
                   std::optional<double> CellMetrics::* field) {
        out << named.training << ',' << klass;
        for (Stratum s : kStrata) {
            const auto& value = named.report.cell(s).*field;
            out << ',' << (value ? format_round2(*value) : std::string("—"));
        }
        out << '\n';
    };
    for (const NamedReport& named : reports) {
        row(named, "Ship", &CellMetrics::recall_ship);
        row(named, "No ship", &CellMetrics::recall_no_ship);
        row(named, "Overall", &CellMetrics::overall);
    }
    if (!out) throw DataError("failed writing report: " + path.string());
}

void write_report_json(const std::filesystem::path& path,
                       const std::vector<NamedReport>& reports) {
    json root;
    root["models"] = json::array();
    for (const NamedReport& named : reports) {
        json model;
        model["training"] = named.training;
        json cells;
        for (Stratum s : kStrata) cells[to_string(s)] = cell_to_json(named.report.cell(s));
        model["cells"] = std::move(cells);
        root["models"].push_back(std::move(model));
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open report for writing: " + path.string());
    out << root.dump(2) << '\n';
    if (!out) throw DataError("failed writing report: " + path.string());
}

std::vector<NamedReport> load_report_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open report: " + path.string());
    json root;
    try {
        in >> root;
    } catch (const json::exception& e) {
        throw FormatError("report " + path.string() + ": " + e.what());
    }
    if (!root.is_object() || !root.contains("models") || !root["models"].is_array()) {
        throw FormatError("report " + path.string() + ": missing \"models\" array");
    }
    std::vector<NamedReport> reports;
    for (const json& model : root["models"]) {
        NamedReport named;
        if (!model.contains("training") || !model["training"].is_string() ||
            !model.contains("cells") || !model["cells"].is_object()) {
            throw FormatError("report " + path.string() + ": malformed model entry");
        }
        named.training = model["training"].get<std::string>();
        for (Stratum s : kStrata) {
            const char* key = to_string(s);
            if (!model["cells"].contains(key)) {
                throw FormatError("report " + path.string() + ": missing cell \"" +
                                  std::string(key) + "\"");
            }
            named.report.cell(s) = cell_from_json(
                model["cells"][key], "report " + path.string() + " cell " + key);
        }
        reports.push_back(std::move(named));
    }
    return reports;
}

}  // namespace eo2sar::eval
