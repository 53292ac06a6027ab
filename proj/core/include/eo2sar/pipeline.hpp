#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "eo2sar/data/synthetic.hpp"
#include "eo2sar/eval/report.hpp"
#include "eo2sar/nn/train.hpp"

namespace eo2sar {

// Everything a command needs, assembled from a flat key=value config file
// plus command-line overrides. The single seed fans out to named streams
// (synth_eo, synth_sar, init, split, train, finetune) so any stage can be
// reproduced in isolation.
struct RunConfig {
    nn::NetworkConfig network;

    uint64_t seed = 0;

    int train_epochs = 100;
    int finetune_epochs = 50;
    int batch_size = 32;
    double learning_rate = 1e-4;

    data::SplitSpec split;

    // Synthetic generation, EO-like and SAR-like trees in one call.
    int eo_positives = 1000;
    int eo_negatives = 3000;
    int sar_positives = 1596;
    int sar_negatives = 7980;
    int chip_size = 0;  // 0 = network.input_size
    int ship_min_px = 6;
    int ship_max_px = 14;

    double cam_tau = 0.5;
    int cam_class = -1;  // -1 = predicted class
    int cam_count = 8;   // chips rendered per invocation
    std::string cam_method = "grad_cam";
    bool cam_panels = false;

    // Paths come from flags, not the config file.
    std::filesystem::path data_dir;
    std::filesystem::path out_dir;
    std::filesystem::path checkpoint;
    std::filesystem::path checkpoint_after;  // fine-tuned model for --panels
    std::vector<std::filesystem::path> report_inputs;
    std::string training_name;
    bool force = false;
};

// Applies one key=value pair; throws ConfigError on unknown keys or
// unparsable values.
void apply_kv(RunConfig& config, const std::string& key, const std::string& value);

// Reads a key=value file ('#' comments, blank lines allowed).
RunConfig load_run_config(const std::filesystem::path& path);

// Full dump in config-file syntax; written next to every artifact as
// run_config.txt so outputs carry their seed.
std::string run_config_to_text(const RunConfig& config);

// synth: <out>/eo and <out>/sar dataset trees. Refuses an existing
// non-empty output directory unless force is set.
void cmd_synth(const RunConfig& config);

// train: fits the network on every chip under data_dir, writes
// <out>/model.ckpt and <out>/train_log.csv.
void cmd_train(const RunConfig& config);

// finetune: starts from config.checkpoint, freezes the first conv stage,
// trains on the train side of the split of data_dir, writes
// <out>/model.ckpt and <out>/train_log.csv.
void cmd_finetune(const RunConfig& config);

// eval: classifies the test side of the split of data_dir with
// config.checkpoint, writes <out>/report.csv and <out>/report.json.
// Returns the report it wrote.
eval::NamedReport cmd_eval(const RunConfig& config);

// cam: renders overlay PNGs for the first cam_count test-split ship chips.
// With cam_panels, renders chip | checkpoint CAM | checkpoint_after CAM.
void cmd_cam(const RunConfig& config);

// report: merges eval JSON outputs into one grid, preserving input order.
void cmd_report(const RunConfig& config);

}  // namespace eo2sar
