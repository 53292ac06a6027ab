#include "eo2sar/pipeline.hpp"

#include <fstream>

#include "eo2sar/cam/cam.hpp"
#include "eo2sar/errors.hpp"
#include "eo2sar/rng.hpp"
#include "eo2sar/strings.hpp"

namespace eo2sar {

namespace {

int parse_int_value(const std::string& key, const std::string& value, int min_value) {
    auto v = try_parse_int(value);
    if (!v || *v < min_value || *v > (int64_t(1) << 31)) {
        throw ConfigError("config key " + key + ": expected an integer >= " +
                          std::to_string(min_value) + ", got \"" + value + "\"");
    }
    return static_cast<int>(*v);
}

double parse_double_value(const std::string& key, const std::string& value) {
    auto v = try_parse_double(value);
    if (!v) {
        throw ConfigError("config key " + key + ": expected a number, got \"" + value + "\"");
    }
    return *v;
}

std::array<int, 3> parse_triple_value(const std::string& key, const std::string& value) {
    auto parts = split(value, ',');
    if (parts.size() != 3) {
        throw ConfigError("config key " + key + ": expected three comma-separated integers, got \"" +
                          value + "\"");
    }
    std::array<int, 3> out{};
    for (size_t i = 0; i < 3; ++i) out[i] = parse_int_value(key, parts[i], 0);
    return out;
}

// Seed streams, one per pipeline stage.
uint64_t stage_seed(const RunConfig& config, const char* stage) {
    return Rng::derive(config.seed, stage);
}

int effective_chip_size(const RunConfig& config) {
    return config.chip_size > 0 ? config.chip_size : config.network.input_size;
}

void prepare_out_dir(const RunConfig& config, bool refuse_non_empty) {
    if (config.out_dir.empty()) throw ConfigError("an output directory is required (--out)");
    std::error_code ec;
    if (refuse_non_empty && std::filesystem::exists(config.out_dir, ec) &&
        !std::filesystem::is_empty(config.out_dir, ec) && !config.force) {
        throw DataError("output directory " + config.out_dir.string() +
                        " is not empty (pass --force to reuse it)");
    }
    std::filesystem::create_directories(config.out_dir);
    std::ofstream provenance(config.out_dir / "run_config.txt", std::ios::trunc);
    if (!provenance) {
        throw DataError("cannot write " + (config.out_dir / "run_config.txt").string());
    }
    provenance << run_config_to_text(config);
}

nn::TrainConfig make_train_config(const RunConfig& config, int epochs, const char* seed_stream) {
    nn::TrainConfig tc;
    tc.epochs = epochs;
    tc.batch_size = config.batch_size;
    tc.adam.learning_rate = config.learning_rate;
    tc.seed = stage_seed(config, seed_stream);
    return tc;
}

data::SplitSpec make_split_spec(const RunConfig& config) {
    data::SplitSpec spec = config.split;
    spec.seed = stage_seed(config, "split");
    return spec;
}

nn::Checkpoint load_required_checkpoint(const std::filesystem::path& path, const char* what) {
    if (path.empty()) {
        throw ConfigError(std::string(what) + " requires a checkpoint (--checkpoint)");
    }
    return nn::load_checkpoint(path);
}

std::string checkpoint_training_label(const nn::Checkpoint& checkpoint) {
    auto it = checkpoint.extras.find("training");
    return it == checkpoint.extras.end() ? std::string("model") : it->second;
}

}  // namespace

void apply_kv(RunConfig& config, const std::string& key, const std::string& value) {
    if (key == "seed") {
        auto v = try_parse_int(value);
        if (!v || *v < 0) {
            throw ConfigError("config key seed: expected a non-negative integer, got \"" + value +
                              "\"");
        }
        config.seed = static_cast<uint64_t>(*v);
    } else if (key == "network.input_channels") {
        config.network.input_channels = parse_int_value(key, value, 1);
    } else if (key == "network.input_size") {
        config.network.input_size = parse_int_value(key, value, 1);
    } else if (key == "network.conv_channels") {
        config.network.conv_channels = parse_triple_value(key, value);
    } else if (key == "network.kernel_sizes") {
        config.network.kernel_sizes = parse_triple_value(key, value);
    } else if (key == "network.strides") {
        config.network.strides = parse_triple_value(key, value);
    } else if (key == "network.paddings") {
        config.network.paddings = parse_triple_value(key, value);
    } else if (key == "network.dropout_p") {
        config.network.dropout_p = parse_double_value(key, value);
    } else if (key == "train.epochs") {
        config.train_epochs = parse_int_value(key, value, 0);
    } else if (key == "finetune.epochs") {
        config.finetune_epochs = parse_int_value(key, value, 0);
    } else if (key == "train.batch_size") {
        config.batch_size = parse_int_value(key, value, 1);
    } else if (key == "train.learning_rate") {
        config.learning_rate = parse_double_value(key, value);
    } else if (key == "split.positive_train_fraction") {
        config.split.positive_train_fraction = parse_double_value(key, value);
    } else if (key == "split.negative_train_fraction") {
        config.split.negative_train_fraction = parse_double_value(key, value);
    } else if (key == "synth.eo_positives") {
        config.eo_positives = parse_int_value(key, value, 0);
    } else if (key == "synth.eo_negatives") {
        config.eo_negatives = parse_int_value(key, value, 0);
    } else if (key == "synth.sar_positives") {
        config.sar_positives = parse_int_value(key, value, 0);
    } else if (key == "synth.sar_negatives") {
        config.sar_negatives = parse_int_value(key, value, 0);
    } else if (key == "synth.chip_size") {
        config.chip_size = parse_int_value(key, value, 0);
    } else if (key == "synth.ship_min_px") {
        config.ship_min_px = parse_int_value(key, value, 1);
    } else if (key == "synth.ship_max_px") {
        config.ship_max_px = parse_int_value(key, value, 1);
    } else if (key == "cam.tau") {
        config.cam_tau = parse_double_value(key, value);
    } else if (key == "cam.class") {
        auto v = try_parse_int(value);
        if (!v || *v < -1 || *v >= nn::NetworkConfig::num_classes) {
            throw ConfigError("config key cam.class: expected -1, 0, or 1, got \"" + value + "\"");
        }
        config.cam_class = static_cast<int>(*v);
    } else if (key == "cam.count") {
        config.cam_count = parse_int_value(key, value, 1);
    } else if (key == "cam.method") {
        if (value != "grad_cam" && value != "gap_cam") {
            throw ConfigError("config key cam.method: expected grad_cam or gap_cam, got \"" +
                              value + "\"");
        }
        config.cam_method = value;
    } else if (key == "cam.panels") {
        if (value == "true") config.cam_panels = true;
        else if (value == "false") config.cam_panels = false;
        else throw ConfigError("config key cam.panels: expected true or false, got \"" + value +
                               "\"");
    } else {
        throw ConfigError("unknown config key \"" + key + "\"");
    }
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    RunConfig config;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view text = trim(line);
        if (text.empty() || text.front() == '#') continue;
        const size_t eq = text.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError(path.string() + " line " + std::to_string(line_no) +
                              ": expected key=value");
        }
        apply_kv(config, std::string(trim(text.substr(0, eq))),
                 std::string(trim(text.substr(eq + 1))));
    }
    return config;
}

std::string run_config_to_text(const RunConfig& config) {
    auto triple = [](const std::array<int, 3>& a) {
        return std::to_string(a[0]) + "," + std::to_string(a[1]) + "," + std::to_string(a[2]);
    };
    std::string text;
    text += "seed=" + std::to_string(config.seed) + "\n";
    text += "network.input_channels=" + std::to_string(config.network.input_channels) + "\n";
    text += "network.input_size=" + std::to_string(config.network.input_size) + "\n";
    text += "network.conv_channels=" + triple(config.network.conv_channels) + "\n";
    text += "network.kernel_sizes=" + triple(config.network.kernel_sizes) + "\n";
    text += "network.strides=" + triple(config.network.strides) + "\n";
    text += "network.paddings=" + triple(config.network.paddings) + "\n";
    text += "network.dropout_p=" + format_double(config.network.dropout_p) + "\n";
    text += "train.epochs=" + std::to_string(config.train_epochs) + "\n";
    text += "finetune.epochs=" + std::to_string(config.finetune_epochs) + "\n";
    text += "train.batch_size=" + std::to_string(config.batch_size) + "\n";
    text += "train.learning_rate=" + format_double(config.learning_rate) + "\n";
    text += "split.positive_train_fraction=" + format_double(config.split.positive_train_fraction) +
            "\n";
    text += "split.negative_train_fraction=" + format_double(config.split.negative_train_fraction) +
            "\n";
    text += "synth.eo_positives=" + std::to_string(config.eo_positives) + "\n";
    text += "synth.eo_negatives=" + std::to_string(config.eo_negatives) + "\n";
    text += "synth.sar_positives=" + std::to_string(config.sar_positives) + "\n";
    text += "synth.sar_negatives=" + std::to_string(config.sar_negatives) + "\n";
    text += "synth.chip_size=" + std::to_string(config.chip_size) + "\n";
    text += "synth.ship_min_px=" + std::to_string(config.ship_min_px) + "\n";
    text += "synth.ship_max_px=" + std::to_string(config.ship_max_px) + "\n";
    text += "cam.tau=" + format_double(config.cam_tau) + "\n";
    text += "cam.class=" + std::to_string(config.cam_class) + "\n";
    text += "cam.count=" + std::to_string(config.cam_count) + "\n";
    text += "cam.method=" + config.cam_method + "\n";
    text += std::string("cam.panels=") + (config.cam_panels ? "true" : "false") + "\n";
    return text;
}

void cmd_synth(const RunConfig& config) {
    config.network.validate();
    prepare_out_dir(config, true);

    data::SyntheticConfig eo;
    eo.positive_count = config.eo_positives;
    eo.negative_count = config.eo_negatives;
    eo.chip_size = effective_chip_size(config);
    eo.domain = data::Domain::eo_like;
    eo.ship_min_px = config.ship_min_px;
    eo.ship_max_px = config.ship_max_px;
    eo.seed = stage_seed(config, "synth_eo");
    data::write_dataset(config.out_dir / "eo", data::generate_synthetic(eo));

    data::SyntheticConfig sar = eo;
    sar.positive_count = config.sar_positives;
    sar.negative_count = config.sar_negatives;
    sar.domain = data::Domain::sar_like;
    sar.seed = stage_seed(config, "synth_sar");
    data::write_dataset(config.out_dir / "sar", data::generate_synthetic(sar));
}

void cmd_train(const RunConfig& config) {
    config.network.validate();
    if (config.data_dir.empty()) throw ConfigError("train requires a dataset directory (--data)");
    prepare_out_dir(config, false);

    data::Dataset dataset = data::load_manifest(config.data_dir);
    std::vector<nn::Example> examples =
        data::load_examples(dataset, dataset.records, config.network);

    nn::ModelParams<float> params =
        nn::build_model<float>(config.network, stage_seed(config, "init"));
    nn::TrainResult result = nn::train(std::move(params), config.network, examples,
                                       make_train_config(config, config.train_epochs, "train"));

    nn::Checkpoint checkpoint;
    checkpoint.config = config.network;
    checkpoint.params = std::move(result.params);
    checkpoint.extras["training"] = "eo";
    checkpoint.extras["seed"] = std::to_string(config.seed);
    checkpoint.extras["epochs"] = std::to_string(config.train_epochs);
    nn::save_checkpoint(config.out_dir / "model.ckpt", checkpoint);
    nn::write_train_log_csv(config.out_dir / "train_log.csv", result.log);
}

void cmd_finetune(const RunConfig& config) {
    if (config.data_dir.empty()) {
        throw ConfigError("finetune requires a dataset directory (--data)");
    }
    nn::Checkpoint start = load_required_checkpoint(config.checkpoint, "finetune");
    prepare_out_dir(config, false);

    data::Dataset dataset = data::load_manifest(config.data_dir);
    data::Split split = data::stratified_split(dataset.records, make_split_spec(config));
    std::vector<nn::Example> examples = data::load_examples(dataset, split.train, start.config);

    nn::TrainResult result = nn::finetune(
        start, examples, make_train_config(config, config.finetune_epochs, "finetune"));

    nn::Checkpoint checkpoint;
    checkpoint.config = start.config;
    checkpoint.params = std::move(result.params);
    checkpoint.extras = start.extras;
    checkpoint.extras["training"] = "transfer";
    checkpoint.extras["seed"] = std::to_string(config.seed);
    checkpoint.extras["epochs"] = std::to_string(config.finetune_epochs);
    nn::save_checkpoint(config.out_dir / "model.ckpt", checkpoint);
    nn::write_train_log_csv(config.out_dir / "train_log.csv", result.log);
}

eval::NamedReport cmd_eval(const RunConfig& config) {
    if (config.data_dir.empty()) throw ConfigError("eval requires a dataset directory (--data)");
    nn::Checkpoint checkpoint = load_required_checkpoint(config.checkpoint, "eval");
    prepare_out_dir(config, false);

    data::Dataset dataset = data::load_manifest(config.data_dir);
    data::Split split = data::stratified_split(dataset.records, make_split_spec(config));
    std::vector<nn::Example> examples = data::load_examples(dataset, split.test, checkpoint.config);

    std::vector<int> predictions =
        nn::predict(checkpoint.params, checkpoint.config, examples, config.batch_size);

    eval::NamedReport named;
    named.training = config.training_name.empty() ? checkpoint_training_label(checkpoint)
                                                  : config.training_name;
    named.report = eval::stratified_report(predictions, split.test);

    eval::write_report_csv(config.out_dir / "report.csv", {named});
    eval::write_report_json(config.out_dir / "report.json", {named});
    return named;
}

void cmd_cam(const RunConfig& config) {
    if (config.data_dir.empty()) throw ConfigError("cam requires a dataset directory (--data)");
    nn::Checkpoint checkpoint = load_required_checkpoint(config.checkpoint, "cam");
    nn::Checkpoint after;
    if (config.cam_panels) {
        if (config.checkpoint_after.empty()) {
            throw ConfigError("cam --panels requires a second checkpoint (--after)");
        }
        after = nn::load_checkpoint(config.checkpoint_after);
        if (!(after.config == checkpoint.config)) {
            throw ConfigError("cam --panels: the two checkpoints disagree on the architecture");
        }
    }
    prepare_out_dir(config, false);

    data::Dataset dataset = data::load_manifest(config.data_dir);
    data::Split split = data::stratified_split(dataset.records, make_split_spec(config));

    const bool grad = config.cam_method == "grad_cam";
    if (!grad && config.cam_method != "gap_cam") {
        throw ConfigError("cam.method must be grad_cam or gap_cam, got \"" + config.cam_method +
                          "\"");
    }

    // Target class: the model's own prediction unless cam.class pins one.
    auto target_for = [&](const nn::Checkpoint& model, const nn::Example& example) {
        if (config.cam_class >= 0) return config.cam_class;
        std::vector<nn::Example> one;
        one.push_back(nn::Example{example.image, example.label});
        return nn::predict(model.params, model.config, one, 1)[0];
    };
    auto heatmap_for = [&](const nn::Checkpoint& model, const nn::Example& example) {
        const int target = target_for(model, example);
        return grad ? cam::grad_cam(model.params, model.config, example.image, target)
                    : cam::gap_cam(model.params, model.config, example.image, target);
    };

    int rendered = 0;
    for (const data::ChipRecord& record : split.test) {
        if (record.label != data::Label::ship) continue;
        if (rendered >= config.cam_count) break;
        nn::Example example = data::load_example(dataset, record, checkpoint.config);

        data::Image panel;
        if (config.cam_panels) {
            panel = cam::render_panels(example.image, heatmap_for(checkpoint, example),
                                       heatmap_for(after, example));
        } else {
            panel = cam::render_overlay(example.image, heatmap_for(checkpoint, example));
        }
        const std::string stem = std::filesystem::path(record.path).stem().string();
        data::write_png(config.out_dir / ("cam_" + stem + ".png"), panel);
        ++rendered;
    }
    if (rendered == 0) throw DataError("cam: no ship chips in the test split to render");
}

void cmd_report(const RunConfig& config) {
    if (config.report_inputs.empty()) {
        throw ConfigError("report requires at least one eval JSON (--inputs)");
    }
    prepare_out_dir(config, false);
    std::vector<eval::NamedReport> merged;
    for (const std::filesystem::path& input : config.report_inputs) {
        std::vector<eval::NamedReport> loaded = eval::load_report_json(input);
        merged.insert(merged.end(), loaded.begin(), loaded.end());
    }
    eval::write_report_csv(config.out_dir / "report.csv", merged);
    eval::write_report_json(config.out_dir / "report.json", merged);
}

}  // namespace eo2sar
