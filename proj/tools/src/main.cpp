#include <CLI11.hpp>

#include <cstdio>
#include <string>
#include <vector>

#include "eo2sar/errors.hpp"
#include "eo2sar/pipeline.hpp"

namespace {

struct Flags {
    std::string config_file;
    uint64_t seed = 0;
    std::string out_dir;
    std::string data_dir;
    std::string checkpoint;
    std::string after;
    std::string name;
    std::string method;
    std::vector<std::string> inputs;
    std::vector<std::string> overrides;
    int epochs = -1;
    int cam_count = 0;
    int cam_class = -2;
    double tau = -1.0;
    bool force = false;
    bool panels = false;
};

// Flag defaults mean "not given"; only explicit flags override the file.
eo2sar::RunConfig assemble(CLI::App* sub, const Flags& flags, bool epochs_are_finetune) {
    auto given = [sub](const std::string& name) {
        const CLI::Option* option = sub->get_option_no_throw(name);
        return option != nullptr && option->count() > 0;
    };
    eo2sar::RunConfig config;
    if (given("--config")) config = eo2sar::load_run_config(flags.config_file);
    for (const std::string& kv : flags.overrides) {
        const size_t eq = kv.find('=');
        if (eq == std::string::npos) {
            throw eo2sar::ConfigError("--set expects key=value, got \"" + kv + "\"");
        }
        eo2sar::apply_kv(config, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (given("--seed")) config.seed = flags.seed;
    if (given("--out")) config.out_dir = flags.out_dir;
    if (given("--data")) config.data_dir = flags.data_dir;
    if (given("--checkpoint")) config.checkpoint = flags.checkpoint;
    if (given("--after")) config.checkpoint_after = flags.after;
    if (given("--name")) config.training_name = flags.name;
    if (given("--force")) config.force = true;
    if (given("--epochs")) {
        (epochs_are_finetune ? config.finetune_epochs : config.train_epochs) = flags.epochs;
    }
    if (given("--tau")) config.cam_tau = flags.tau;
    if (given("--class")) config.cam_class = flags.cam_class;
    if (given("--count")) config.cam_count = flags.cam_count;
    if (given("--method")) {
        eo2sar::apply_kv(config, "cam.method", flags.method);
    }
    if (given("--panels")) config.cam_panels = true;
    for (const std::string& input : flags.inputs) config.report_inputs.emplace_back(input);
    return config;
}

void add_common(CLI::App* sub, Flags& flags) {
    sub->add_option("--config", flags.config_file, "key=value config file");
    sub->add_option("--seed", flags.seed, "global seed; every stage derives from it");
    sub->add_option("--out", flags.out_dir, "output directory");
    sub->add_option("--set", flags.overrides, "override one config key (key=value, repeatable)");
    sub->add_flag("--force", flags.force, "reuse a non-empty output directory");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"EO-to-SAR transfer learning for ship chip classification"};
    app.require_subcommand(1);
    Flags flags;

    CLI::App* synth = app.add_subcommand(
        "synth", "generate synthetic EO-like and SAR-like dataset trees");
    add_common(synth, flags);

    CLI::App* train = app.add_subcommand("train", "train the network on a chip dataset");
    add_common(train, flags);
    train->add_option("--data", flags.data_dir, "dataset root (manifest.csv + images/)");
    train->add_option("--epochs", flags.epochs, "training epochs");

    CLI::App* finetune = app.add_subcommand(
        "finetune", "fine-tune a checkpoint on the train side of a dataset split, "
                    "first conv stage frozen");
    add_common(finetune, flags);
    finetune->add_option("--data", flags.data_dir, "dataset root");
    finetune->add_option("--checkpoint", flags.checkpoint, "starting checkpoint");
    finetune->add_option("--epochs", flags.epochs, "fine-tuning epochs");

    CLI::App* eval = app.add_subcommand(
        "eval", "evaluate a checkpoint on the test side of a dataset split");
    add_common(eval, flags);
    eval->add_option("--data", flags.data_dir, "dataset root");
    eval->add_option("--checkpoint", flags.checkpoint, "checkpoint to evaluate");
    eval->add_option("--name", flags.name, "training label for the report rows");

    CLI::App* cam = app.add_subcommand(
        "cam", "render saliency overlays for test-split ship chips");
    add_common(cam, flags);
    cam->add_option("--data", flags.data_dir, "dataset root");
    cam->add_option("--checkpoint", flags.checkpoint, "checkpoint to explain");
    cam->add_option("--after", flags.after, "fine-tuned checkpoint for --panels");
    cam->add_option("--method", flags.method, "grad_cam or gap_cam");
    cam->add_option("--tau", flags.tau, "mask threshold in [0,1]");
    cam->add_option("--class", flags.cam_class, "-1 = model's predicted class, 0 or 1 to pin");
    cam->add_option("--count", flags.cam_count, "number of chips to render");
    cam->add_flag("--panels", flags.panels, "three-column chip | checkpoint | --after layout");

    CLI::App* report = app.add_subcommand("report", "merge eval JSON outputs into one grid");
    add_common(report, flags);
    report->add_option("--inputs", flags.inputs, "eval report.json files to merge");

    synth->callback([&] { eo2sar::cmd_synth(assemble(synth, flags, false)); });
    train->callback([&] { eo2sar::cmd_train(assemble(train, flags, false)); });
    finetune->callback([&] { eo2sar::cmd_finetune(assemble(finetune, flags, true)); });
    eval->callback([&] { eo2sar::cmd_eval(assemble(eval, flags, false)); });
    cam->callback([&] { eo2sar::cmd_cam(assemble(cam, flags, false)); });
    report->callback([&] { eo2sar::cmd_report(assemble(report, flags, false)); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const eo2sar::NumericError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    } catch (const eo2sar::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const eo2sar::DataError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
