#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "eo2sar/errors.hpp"
#include "eo2sar/nn/checkpoint.hpp"
#include "eo2sar/pipeline.hpp"
#include "test_util.hpp"

using namespace eo2sar;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    auto dir = fs::temp_directory_path() / "eo2sar_pipeline_test" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::vector<char> slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Tiny but real end-to-end scale: a few dozen chips, a couple of epochs.
RunConfig mini_config() {
    RunConfig cfg;
    cfg.network.input_channels = 1;
    cfg.network.input_size = 24;
    cfg.network.conv_channels = {4, 6, 8};
    cfg.seed = 3;
    cfg.train_epochs = 2;
    cfg.finetune_epochs = 2;
    cfg.batch_size = 16;
    cfg.eo_positives = 12;
    cfg.eo_negatives = 12;
    cfg.sar_positives = 10;
    cfg.sar_negatives = 20;
    cfg.ship_min_px = 6;
    cfg.ship_max_px = 10;
    return cfg;
}

int run_tool(const std::string& args) {
    const std::string cmd = std::string(EO2SAR_TOOL_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("key=value pairs map onto the run configuration") {
    RunConfig cfg;
    apply_kv(cfg, "seed", "99");
    CHECK(cfg.seed == 99);
    apply_kv(cfg, "network.input_size", "48");
    CHECK(cfg.network.input_size == 48);
    apply_kv(cfg, "network.conv_channels", "8,16,24");
    CHECK(cfg.network.conv_channels == std::array<int, 3>{8, 16, 24});
    apply_kv(cfg, "network.dropout_p", "0.25");
    CHECK(cfg.network.dropout_p == 0.25);
    apply_kv(cfg, "train.epochs", "7");
    CHECK(cfg.train_epochs == 7);
    apply_kv(cfg, "train.learning_rate", "0.001");
    CHECK(cfg.learning_rate == 0.001);
    apply_kv(cfg, "split.positive_train_fraction", "0.75");
    CHECK(cfg.split.positive_train_fraction == 0.75);
    apply_kv(cfg, "synth.sar_positives", "123");
    CHECK(cfg.sar_positives == 123);
    apply_kv(cfg, "cam.tau", "0.4");
    CHECK(cfg.cam_tau == 0.4);
    apply_kv(cfg, "cam.panels", "true");
    CHECK(cfg.cam_panels);

    CHECK_THROWS_AS(apply_kv(cfg, "no_such_key", "1"), ConfigError);
    CHECK_THROWS_AS(apply_kv(cfg, "seed", "banana"), ConfigError);
    CHECK_THROWS_AS(apply_kv(cfg, "network.conv_channels", "8,16"), ConfigError);
}

TEST_CASE("config files round-trip through the text dump") {
    auto dir = scratch("config");
    RunConfig cfg = mini_config();
    cfg.cam_method = "gap_cam";
    cfg.split.positive_train_fraction = 0.6;
    {
        std::ofstream out(dir / "run.cfg");
        out << run_config_to_text(cfg);
    }
    auto loaded = load_run_config(dir / "run.cfg");
    CHECK(loaded.seed == cfg.seed);
    CHECK(loaded.network == cfg.network);
    CHECK(loaded.train_epochs == cfg.train_epochs);
    CHECK(loaded.split.positive_train_fraction == 0.6);
    CHECK(loaded.cam_method == "gap_cam");
    CHECK(loaded.sar_negatives == cfg.sar_negatives);
}

TEST_CASE("config files report the offending line") {
    auto dir = scratch("badconfig");
    {
        std::ofstream out(dir / "bad.cfg");
        out << "# comment\n\nseed=4\nnot a pair\n";
    }
    try {
        load_run_config(dir / "bad.cfg");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("line 4") != std::string::npos);
    }
    // An unreadable config path is a configuration problem, same bucket as a
    // missing checkpoint path.
    CHECK_THROWS_AS(load_run_config(dir / "missing.cfg"), ConfigError);
}

TEST_CASE("the full pipeline runs and its artifacts connect") {
    auto root = scratch("endtoend");
    RunConfig cfg = mini_config();

    cfg.out_dir = root / "data";
    cmd_synth(cfg);
    CHECK(fs::exists(root / "data/eo/manifest.csv"));
    CHECK(fs::exists(root / "data/sar/manifest.csv"));
    CHECK(fs::exists(root / "data/sar/boxes.csv"));
    CHECK(fs::exists(root / "data/run_config.txt"));

    cfg.data_dir = root / "data/eo";
    cfg.out_dir = root / "eo_model";
    cmd_train(cfg);
    CHECK(fs::exists(root / "eo_model/model.ckpt"));
    CHECK(fs::exists(root / "eo_model/train_log.csv"));
    auto eo_ckpt = nn::load_checkpoint(root / "eo_model/model.ckpt");
    CHECK(eo_ckpt.extras.at("training") == "eo");
    CHECK(eo_ckpt.config == cfg.network);

    cfg.data_dir = root / "data/sar";
    cfg.checkpoint = root / "eo_model/model.ckpt";
    cfg.out_dir = root / "tl_model";
    cmd_finetune(cfg);
    auto tl_ckpt = nn::load_checkpoint(root / "tl_model/model.ckpt");
    CHECK(tl_ckpt.extras.at("training") == "transfer");
    CHECK(tensors_equal(tl_ckpt.params.conv1_k, eo_ckpt.params.conv1_k));
    CHECK_FALSE(tensors_equal(tl_ckpt.params.fc_w, eo_ckpt.params.fc_w));

    cfg.checkpoint = root / "tl_model/model.ckpt";
    cfg.out_dir = root / "eval";
    auto named = cmd_eval(cfg);
    CHECK(named.training == "transfer");
    CHECK(fs::exists(root / "eval/report.csv"));
    CHECK(fs::exists(root / "eval/report.json"));
    auto reports = eval::load_report_json(root / "eval/report.json");
    REQUIRE(reports.size() == 1);
    // The SAR test split of 10/20 at the default fractions is 2 ships and
    // 16 no-ships.
    CHECK(reports[0].report.cell(eval::Stratum::Overall).ship_total == 2);
    CHECK(reports[0].report.cell(eval::Stratum::Overall).no_ship_total == 16);

    cfg.out_dir = root / "cam";
    cfg.cam_count = 2;
    cmd_cam(cfg);
    int pngs = 0;
    for (auto& entry : fs::directory_iterator(root / "cam"))
        if (entry.path().extension() == ".png") ++pngs;
    CHECK(pngs == 2);

    // Merge two copies under distinct names.
    RunConfig merge = cfg;
    merge.report_inputs = {root / "eval/report.json", root / "eval/report.json"};
    merge.out_dir = root / "merged";
    cmd_report(merge);
    auto merged = eval::load_report_json(root / "merged/report.json");
    CHECK(merged.size() == 2);
}

TEST_CASE("training is reproducible at the artifact level") {
    auto root = scratch("determinism");
    RunConfig cfg = mini_config();
    cfg.eo_positives = 8;
    cfg.eo_negatives = 8;

    cfg.out_dir = root / "data";
    cmd_synth(cfg);

    cfg.data_dir = root / "data/eo";
    cfg.out_dir = root / "run_a";
    cmd_train(cfg);
    cfg.out_dir = root / "run_b";
    cmd_train(cfg);

    CHECK(slurp(root / "run_a/model.ckpt") == slurp(root / "run_b/model.ckpt"));
    CHECK(slurp(root / "run_a/train_log.csv") == slurp(root / "run_b/train_log.csv"));
}

TEST_CASE("synth refuses to clobber unless forced") {
    auto root = scratch("clobber");
    RunConfig cfg = mini_config();
    cfg.eo_positives = 2;
    cfg.eo_negatives = 2;
    cfg.sar_positives = 2;
    cfg.sar_negatives = 2;
    cfg.out_dir = root / "data";
    cmd_synth(cfg);
    CHECK_THROWS_AS(cmd_synth(cfg), DataError);
    cfg.force = true;
    CHECK_NOTHROW(cmd_synth(cfg));
}

TEST_CASE("commands validate their required paths") {
    RunConfig cfg = mini_config();
    cfg.out_dir.clear();
    CHECK_THROWS_AS(cmd_synth(cfg), ConfigError);

    RunConfig no_ckpt = mini_config();
    no_ckpt.data_dir = fs::temp_directory_path();
    no_ckpt.out_dir = scratch("nockpt");
    CHECK_THROWS_AS(cmd_finetune(no_ckpt), ConfigError);
}

TEST_CASE("the installed binary maps failures onto exit codes") {
    auto root = scratch("cli");

    CHECK(run_tool("--help") == 0);
    // No subcommand, unknown flag: usage errors.
    CHECK(run_tool("") == 2);
    CHECK(run_tool("synth --no-such-flag") == 2);
    // Missing checkpoint file: a data error.
    CHECK(run_tool("eval --data " + (root / "nowhere").string() + " --checkpoint " +
                   (root / "missing.ckpt").string() + " --out " + (root / "out").string()) == 3);
    // Bad config value: a config error.
    {
        std::ofstream out(root / "bad.cfg");
        out << "train.epochs=duck\n";
    }
    CHECK(run_tool("synth --config " + (root / "bad.cfg").string() + " --out " +
                   (root / "out2").string()) == 2);

    // A real tiny synth through the CLI.
    CHECK(run_tool("synth --seed 5 --out " + (root / "tiny").string() +
                   " --set synth.eo_positives=2 --set synth.eo_negatives=2"
                   " --set synth.sar_positives=2 --set synth.sar_negatives=2"
                   " --set synth.chip_size=24 --set synth.ship_max_px=10"
                   " --set network.input_size=24") == 0);
    CHECK(fs::exists(root / "tiny/eo/manifest.csv"));
}
