#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "eo2sar/data/dataset.hpp"

namespace eo2sar::eval {

// Report columns, left to right. Sensor, polarization, and angle cells each
// partition the test set; Overall counts every record once.
enum class Stratum {
    GRDH,
    GRDM,
    SCNA,
    HH,
    HV,
    VV,
    VH,
    Small,
    Medium,
    Large,
    Overall
};

inline constexpr std::array<Stratum, 11> kStrata{
    Stratum::GRDH, Stratum::GRDM, Stratum::SCNA,  Stratum::HH,    Stratum::HV, Stratum::VV,
    Stratum::VH,   Stratum::Small, Stratum::Medium, Stratum::Large, Stratum::Overall};

const char* to_string(Stratum stratum);

// Recalls are absent (not zero) when the cell holds no samples of that
// class; overall is the mean of the two recalls when both exist.
struct CellMetrics {
    int64_t ship_total = 0;
    int64_t ship_correct = 0;
    int64_t no_ship_total = 0;
    int64_t no_ship_correct = 0;
    std::optional<double> recall_ship;
    std::optional<double> recall_no_ship;
    std::optional<double> overall;

    bool operator==(const CellMetrics&) const = default;
};

struct EvalReport {
    std::array<CellMetrics, kStrata.size()> cells;

    CellMetrics& cell(Stratum s) { return cells[static_cast<size_t>(s)]; }
    const CellMetrics& cell(Stratum s) const { return cells[static_cast<size_t>(s)]; }

    bool operator==(const EvalReport&) const = default;
};

// recall_c = correct_c / total_c, absent when total_c = 0. Predictions and
// labels use class indices (0 = no ship, 1 = ship).
std::pair<std::optional<double>, std::optional<double>> per_class_recall(
    const std::vector<int>& predictions, const std::vector<int>& labels);

// Bins each record into Overall plus one cell per attribute family it
// carries. Records with a partial attribute set (some SAR fields but not
// all) are refused.
EvalReport stratified_report(const std::vector<int>& predictions,
                             const std::vector<data::ChipRecord>& records);

// One Table-style block: three data rows (Ship / No ship / Overall) under a
// training label.
struct NamedReport {
    std::string training;
    EvalReport report;

    bool operator==(const NamedReport&) const = default;
};

// Header: training,class,GRDH,GRDM,SCNA,HH,HV,VV,VH,Small,Medium,Large,Overall
// Values round half up to 2 decimals; empty cells render as "—".
void write_report_csv(const std::filesystem::path& path,
                      const std::vector<NamedReport>& reports);

// Full precision, counts included; round-trips exactly.
void write_report_json(const std::filesystem::path& path,
                       const std::vector<NamedReport>& reports);
std::vector<NamedReport> load_report_json(const std::filesystem::path& path);

// CSV cell formatting, exposed for tests: 0.495 -> "0.50".
std::string format_round2(double value);

}  // namespace eo2sar::eval
