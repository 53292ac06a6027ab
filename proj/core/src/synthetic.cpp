#include "eo2sar/data/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "eo2sar/errors.hpp"
#include "eo2sar/rng.hpp"
#include "eo2sar/strings.hpp"

namespace eo2sar::data {

namespace {

struct ShipPose {
    double cx, cy;        // center, pixels
    double half_len, half_wid;
    double cos_t, sin_t;  // orientation
};

// Soft rotated-rectangle coverage in [0, 1]; edge is the ramp width.
double ship_coverage(const ShipPose& ship, double x, double y, double edge) {
    const double dx = x - ship.cx;
    const double dy = y - ship.cy;
    const double u = dx * ship.cos_t + dy * ship.sin_t;
    const double v = -dx * ship.sin_t + dy * ship.cos_t;
    const double du = std::abs(u) - ship.half_len;
    const double dv = std::abs(v) - ship.half_wid;
    const double fu = std::clamp(0.5 - du / edge, 0.0, 1.0);
    const double fv = std::clamp(0.5 - dv / edge, 0.0, 1.0);
    return fu * fv;
}

// Axis-aligned box over the rotated rectangle's corners, clamped to the chip.
Box ship_box(const ShipPose& ship, int size) {
    const double ex = ship.half_len * std::abs(ship.cos_t) + ship.half_wid * std::abs(ship.sin_t);
    const double ey = ship.half_len * std::abs(ship.sin_t) + ship.half_wid * std::abs(ship.cos_t);
    int x0 = std::clamp(static_cast<int>(std::floor(ship.cx - ex)), 0, size - 1);
    int y0 = std::clamp(static_cast<int>(std::floor(ship.cy - ey)), 0, size - 1);
    int x1 = std::clamp(static_cast<int>(std::ceil(ship.cx + ex)), 0, size - 1);
    int y1 = std::clamp(static_cast<int>(std::ceil(ship.cy + ey)), 0, size - 1);
    return Box{x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

ShipPose draw_ship(Rng& rng, const SyntheticConfig& config) {
    ShipPose ship;
    const double len =
        rng.uniform(static_cast<double>(config.ship_min_px), static_cast<double>(config.ship_max_px));
    ship.half_len = len / 2.0;
    ship.half_wid = std::max(1.0, len * rng.uniform(0.3, 0.5)) / 2.0;
    const double theta = rng.uniform(0.0, 3.14159265358979323846);
    ship.cos_t = std::cos(theta);
    ship.sin_t = std::sin(theta);
    // Keep the whole hull inside the chip with a small margin.
    const double margin = ship.half_len + 2.0;
    ship.cx = rng.uniform(margin, config.chip_size - margin);
    ship.cy = rng.uniform(margin, config.chip_size - margin);
    return ship;
}

Image render_sar(Rng& rng, const SyntheticConfig& config, bool positive, ShipPose* pose_out) {
    const int size = config.chip_size;
    Image image;
    image.width = size;
    image.height = size;
    image.channels = 1;
    image.pixels.resize(static_cast<size_t>(size) * size);

    const double sea = rng.uniform(0.03, 0.08);
    const double gx = rng.uniform(-0.3, 0.3);
    const double gy = rng.uniform(-0.3, 0.3);
    // Radar cross-section varies widely: most hulls return brightly, some
    // barely clear the sea floor.
    const double ship_refl =
        rng.bernoulli(0.18) ? rng.uniform(0.28, 0.42) : rng.uniform(0.60, 0.95);
    constexpr double speckle = 0.5;

    ShipPose ship{};
    double glint_cx = 0.0, glint_cy = 0.0, glint_peak = 0.0, glint_inv2s2 = 0.0;
    if (positive) {
        ship = draw_ship(rng, config);
        if (pose_out) *pose_out = ship;
        // Superstructure glint: a coherent bright return a few pixels wide on
        // every hull. Sea-state patches only spike isolated speckle pixels,
        // so a compact cluster this bright always means ship.
        const double along = rng.uniform(-0.6, 0.6) * ship.half_len;
        const double across = rng.uniform(-0.5, 0.5) * ship.half_wid;
        glint_cx = ship.cx + along * ship.cos_t - across * ship.sin_t;
        glint_cy = ship.cy + along * ship.sin_t + across * ship.cos_t;
        glint_peak = rng.uniform(0.75, 0.92);
        const double gs = rng.uniform(0.5, 0.8);
        glint_inv2s2 = 1.0 / (2.0 * gs * gs);
    }

    // Faint coherent point scatterers in both classes: sea-state texture at
    // speckle scale, well below any hull return, so they perturb saliency
    // without carrying label information.
    struct Scatterer {
        double cx, cy, amp, inv2s2;
    };
    std::vector<Scatterer> clutter;
    const int n_clutter = static_cast<int>(rng.uniform_int(4));
    for (int i = 0; i < n_clutter; ++i) {
        Scatterer s;
        s.cx = rng.uniform(2.0, static_cast<double>(size - 2));
        s.cy = rng.uniform(2.0, static_cast<double>(size - 2));
        s.amp = rng.uniform(0.10, 0.28);
        const double sigma = rng.uniform(0.6, 1.1);
        s.inv2s2 = 1.0 / (2.0 * sigma * sigma);
        clutter.push_back(s);
    }
    // Sea-state patches: wind-roughened sea, locally brighter but fully
    // speckled, in both classes and kept clear of the hull. The brightness is
    // drawn in absolute terms so the sea draw cannot push it out of the
    // dim-hull range; texture without coherent shape carries no label.
    const bool patch = rng.bernoulli(0.30);
    double patch_cx = 0.0, patch_cy = 0.0, patch_peak = 0.0, patch_inv2s2 = 0.0;
    if (patch) {
        patch_cx = patch_cy = size / 2.0;
        double farthest = -1.0;
        for (int attempt = 0; attempt < 16; ++attempt) {
            const double cx = rng.uniform(6.0, static_cast<double>(size - 6));
            const double cy = rng.uniform(6.0, static_cast<double>(size - 6));
            if (!positive) {
                patch_cx = cx;
                patch_cy = cy;
                break;
            }
            // The farthest of the attempts keeps the patch clear of the hull.
            const double d = std::hypot(cx - ship.cx, cy - ship.cy);
            if (d > farthest) {
                farthest = d;
                patch_cx = cx;
                patch_cy = cy;
            }
        }
        patch_peak = rng.uniform(0.30, 0.45);
        const double sigma = rng.uniform(3.5, 5.0);
        patch_inv2s2 = 1.0 / (2.0 * sigma * sigma);
    }

    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            double refl = sea * (1.0 + gx * (2.0 * x / size - 1.0) + gy * (2.0 * y / size - 1.0));
            if (patch) {
                const double dx = x - patch_cx;
                const double dy = y - patch_cy;
                const double g = std::exp(-(dx * dx + dy * dy) * patch_inv2s2);
                refl = refl + (patch_peak - refl) * g;
            }
            if (positive) {
                const double cover = ship_coverage(ship, x, y, 1.5);
                refl = refl + (ship_refl - refl) * cover;
                const double dxg = x - glint_cx;
                const double dyg = y - glint_cy;
                const double gg = std::exp(-(dxg * dxg + dyg * dyg) * glint_inv2s2);
                refl = refl + (glint_peak - refl) * gg;
            }
            const double noise = (1.0 - speckle) + speckle * rng.exponential();
            double value = refl * noise;
            for (const Scatterer& s : clutter) {
                const double dx = x - s.cx;
                const double dy = y - s.cy;
                value += s.amp * std::exp(-(dx * dx + dy * dy) * s.inv2s2);
            }
            image.pixels[static_cast<size_t>(y) * size + x] =
                static_cast<uint8_t>(std::lround(std::clamp(value, 0.0, 1.0) * 255.0));
        }
    }
    return image;
}

Image render_eo(Rng& rng, const SyntheticConfig& config, bool positive, ShipPose* pose_out) {
    const int size = config.chip_size;
    Image image;
    image.width = size;
    image.height = size;
    image.channels = 3;
    image.pixels.resize(static_cast<size_t>(size) * size * 3);

    // Smooth low-frequency sea: per-channel base plus two sinusoids.
    const double base[3] = {rng.uniform(0.10, 0.35), rng.uniform(0.20, 0.50),
                            rng.uniform(0.30, 0.65)};
    double amp[3][2], fx[3][2], fy[3][2], phase[3][2];
    for (int c = 0; c < 3; ++c) {
        for (int k = 0; k < 2; ++k) {
            amp[c][k] = rng.uniform(0.02, 0.08);
            fx[c][k] = rng.uniform(0.5, 2.5);
            fy[c][k] = rng.uniform(0.5, 2.5);
            phase[c][k] = rng.uniform(0.0, 6.28318530717958648);
        }
    }

    ShipPose ship{};
    double hull[3] = {0, 0, 0};
    double wake_dx = 0, wake_dy = 0;
    if (positive) {
        ship = draw_ship(rng, config);
        if (pose_out) *pose_out = ship;
        const double gray = rng.uniform(0.55, 0.90);
        for (double& h : hull) h = std::clamp(gray + rng.uniform(-0.04, 0.04), 0.0, 1.0);
        // Wake trails astern along the hull axis.
        const double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
        wake_dx = -sign * ship.cos_t;
        wake_dy = -sign * ship.sin_t;
    }

    // Clouds: bright smooth blobs in both classes, kept clear of the hull.
    // They force the classifier to key on hull-plus-wake structure instead
    // of treating any bright extended patch as a ship.
    struct Cloud {
        double cx, cy, inv2s2;
        double tint[3];
    };
    std::vector<Cloud> clouds;
    const int n_clouds = rng.bernoulli(0.55) ? 1 + static_cast<int>(rng.uniform_int(2)) : 0;
    for (int i = 0; i < n_clouds; ++i) {
        Cloud cl;
        cl.cx = cl.cy = size / 2.0;
        for (int attempt = 0; attempt < 16; ++attempt) {
            cl.cx = rng.uniform(4.0, static_cast<double>(size - 4));
            cl.cy = rng.uniform(4.0, static_cast<double>(size - 4));
            if (!positive) break;
            const double dx = cl.cx - ship.cx;
            const double dy = cl.cy - ship.cy;
            if (std::sqrt(dx * dx + dy * dy) > ship.half_len + 10.0) break;
        }
        const double sigma = rng.uniform(3.0, 6.5);
        cl.inv2s2 = 1.0 / (2.0 * sigma * sigma);
        const double white = rng.uniform(0.82, 0.97);
        cl.tint[0] = white;
        cl.tint[1] = white * rng.uniform(0.96, 1.0);
        cl.tint[2] = white * rng.uniform(0.92, 1.0);
        clouds.push_back(cl);
    }

    constexpr double tau = 6.28318530717958648;
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            double cover = 0.0, wake = 0.0;
            if (positive) {
                cover = ship_coverage(ship, x, y, 1.2);
                // Wake: an elongated soft streak starting at the stern.
                const double dx = x - (ship.cx + wake_dx * ship.half_len);
                const double dy = y - (ship.cy + wake_dy * ship.half_len);
                const double along = dx * wake_dx + dy * wake_dy;
                const double across = -dx * wake_dy + dy * wake_dx;
                if (along > 0.0) {
                    const double wake_len = 3.0 * ship.half_len;
                    const double fade = std::clamp(1.0 - along / wake_len, 0.0, 1.0);
                    const double lane =
                        std::clamp(1.0 - std::abs(across) / (ship.half_wid + 1.0), 0.0, 1.0);
                    wake = 0.35 * fade * lane;
                }
            }
            for (int c = 0; c < 3; ++c) {
                double v = base[c];
                for (int k = 0; k < 2; ++k) {
                    v += amp[c][k] *
                         std::sin(tau * (fx[c][k] * x + fy[c][k] * y) / size + phase[c][k]);
                }
                v *= 1.0 - wake;
                v = v + (hull[c] - v) * cover;
                for (const Cloud& cl : clouds) {
                    const double dx = x - cl.cx;
                    const double dy = y - cl.cy;
                    const double cc = std::exp(-(dx * dx + dy * dy) * cl.inv2s2);
                    v = v + (cl.tint[c] - v) * cc;
                }
                v += rng.normal(0.0, 0.01);
                image.pixels[(static_cast<size_t>(y) * size + x) * 3 + static_cast<size_t>(c)] =
                    static_cast<uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
            }
        }
    }
    return image;
}

Sensor draw_sensor(Rng& rng) {
    switch (rng.uniform_int(3)) {
        case 0: return Sensor::GRDH;
        case 1: return Sensor::GRDM;
        default: return Sensor::SCNA;
    }
}

Polarization draw_polarization(Rng& rng) {
    switch (rng.uniform_int(4)) {
        case 0: return Polarization::HH;
        case 1: return Polarization::HV;
        case 2: return Polarization::VV;
        default: return Polarization::VH;
    }
}

}  // namespace

std::vector<SyntheticChip> generate_synthetic(const SyntheticConfig& config) {
    if (config.positive_count < 0 || config.negative_count < 0) {
        throw ConfigError("synthetic: chip counts must be >= 0");
    }
    if (config.chip_size < 16) {
        throw ConfigError("synthetic: chip_size must be >= 16, got " +
                          std::to_string(config.chip_size));
    }
    if (config.ship_min_px < 3 || config.ship_max_px < config.ship_min_px ||
        config.ship_max_px > config.chip_size / 2) {
        throw ConfigError("synthetic: ship size range must satisfy 3 <= min <= max <= chip_size/2");
    }

    const bool sar = config.domain == Domain::sar_like;
    Rng rng(Rng::derive(config.seed, sar ? "synth_sar" : "synth_eo"));

    std::vector<SyntheticChip> chips;
    chips.reserve(static_cast<size_t>(config.positive_count + config.negative_count));
    const int total = config.positive_count + config.negative_count;
    for (int i = 0; i < total; ++i) {
        const bool positive = i < config.positive_count;
        SyntheticChip chip;
        ShipPose pose{};
        chip.image = sar ? render_sar(rng, config, positive, &pose)
                         : render_eo(rng, config, positive, &pose);

        char name[32];
        std::snprintf(name, sizeof(name), "images/chip_%05d.png", i);
        chip.record.path = name;
        chip.record.label = positive ? Label::ship : Label::no_ship;
        if (sar) {
            chip.record.sensor = draw_sensor(rng);
            chip.record.polarization = draw_polarization(rng);
            // 47 - 28u lands in (19, 47], exactly the bin domain.
            chip.record.incidence_angle = 47.0 - 28.0 * rng.uniform();
        }
        if (positive) chip.box = ship_box(pose, config.chip_size);
        chips.push_back(std::move(chip));
    }
    return chips;
}

Dataset write_dataset(const std::filesystem::path& root,
                      const std::vector<SyntheticChip>& chips) {
    std::filesystem::create_directories(root / "images");

    Dataset dataset;
    dataset.root = root;
    for (const SyntheticChip& chip : chips) {
        write_png(root / chip.record.path, chip.image);
        dataset.records.push_back(chip.record);
    }
    write_manifest(dataset);

    std::ofstream boxes(root / "boxes.csv", std::ios::trunc);
    if (!boxes) throw DataError("cannot write " + (root / "boxes.csv").string());
    boxes << "path,x,y,w,h\n";
    for (const SyntheticChip& chip : chips) {
        if (!chip.box) continue;
        boxes << chip.record.path << ',' << chip.box->x << ',' << chip.box->y << ','
              << chip.box->w << ',' << chip.box->h << '\n';
    }
    return dataset;
}

std::vector<std::pair<std::string, Box>> load_boxes(const std::filesystem::path& root) {
    const std::filesystem::path file = root / "boxes.csv";
    std::ifstream in(file);
    if (!in) throw DataError("cannot open boxes: " + file.string());

    std::string line;
    if (!std::getline(in, line) || trim(line) != "path,x,y,w,h") {
        throw FormatError(file.string() + ": header must be exactly \"path,x,y,w,h\"");
    }
    std::vector<std::pair<std::string, Box>> boxes;
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split(trim(line), ',');
        if (fields.size() != 5) {
            throw DataError(file.string() + " line " + std::to_string(line_no) +
                            ": expected 5 fields, got " + std::to_string(fields.size()));
        }
        Box box;
        int* slots[4] = {&box.x, &box.y, &box.w, &box.h};
        for (int i = 0; i < 4; ++i) {
            auto v = try_parse_int(fields[static_cast<size_t>(i) + 1]);
            if (!v) {
                throw DataError(file.string() + " line " + std::to_string(line_no) +
                                ": unparsable integer \"" + fields[static_cast<size_t>(i) + 1] +
                                "\"");
            }
            *slots[i] = static_cast<int>(*v);
        }
        boxes.emplace_back(std::string(trim(fields[0])), box);
    }
    return boxes;
}

}  // namespace eo2sar::data
