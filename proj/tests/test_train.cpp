#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "eo2sar/errors.hpp"
#include "eo2sar/nn/train.hpp"
#include "eo2sar/threading.hpp"
#include "test_util.hpp"

using namespace eo2sar;
using namespace eo2sar::nn;
namespace fs = std::filesystem;

namespace {

NetworkConfig small_net() {
    NetworkConfig c;
    c.input_channels = 1;
    c.input_size = 16;
    c.conv_channels = {4, 8, 8};
    c.dropout_p = 0.0;
    return c;
}

// Bright blobs on dark ground vs dark blobs on bright ground; trivially
// separable so the optimizer has no excuse.
std::vector<Example> separable_examples(int per_class, const NetworkConfig& net, uint64_t seed) {
    Rng rng(seed);
    std::vector<Example> out;
    const int s = net.input_size;
    for (int label = 1; label >= 0; --label) {
        for (int i = 0; i < per_class; ++i) {
            Example ex;
            ex.label = label;
            ex.image = Tensor<float>(Shape{net.input_channels, s, s});
            const float base = label == 1 ? 0.8f : 0.2f;
            for (auto& v : ex.image)
                v = base + static_cast<float>(rng.uniform(-0.1, 0.1));
            out.push_back(std::move(ex));
        }
    }
    return out;
}

}  // namespace

TEST_CASE("step count follows batches times epochs") {
    auto net = small_net();
    auto examples = separable_examples(32, net, 1);  // 64 total, 2 batches of 32
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.batch_size = 32;
    auto result = train(build_model<float>(net, 0), net, examples, cfg);
    CHECK(result.adam.t == 2);
    CHECK(result.log.epochs.size() == 1);
    CHECK(result.log.epochs[0].epoch == 1);

    // A 48-chip set makes one full batch and one short one.
    auto odd = separable_examples(24, net, 2);
    auto r2 = train(build_model<float>(net, 0), net, odd, cfg);
    CHECK(r2.adam.t == 2);
}

TEST_CASE("training is reproducible from the seed") {
    auto net = small_net();
    net.dropout_p = 0.5;  // exercise the dropout stream too
    auto examples = separable_examples(16, net, 3);
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 8;
    cfg.seed = 17;
    auto a = train(build_model<float>(net, 5), net, examples, cfg);
    auto b = train(build_model<float>(net, 5), net, examples, cfg);
    REQUIRE(a.log.epochs.size() == b.log.epochs.size());
    for (std::size_t i = 0; i < a.log.epochs.size(); ++i) {
        CHECK(a.log.epochs[i].mean_loss == b.log.epochs[i].mean_loss);
        CHECK(a.log.epochs[i].train_accuracy == b.log.epochs[i].train_accuracy);
    }
    auto an = a.params.named();
    auto bn = b.params.named();
    for (std::size_t i = 0; i < an.size(); ++i) CHECK(tensors_equal(*an[i].second, *bn[i].second));
}

TEST_CASE("results do not depend on the thread count") {
    auto net = small_net();
    auto examples = separable_examples(8, net, 4);
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 8;
    set_max_threads(1);
    auto serial = train(build_model<float>(net, 6), net, examples, cfg);
    set_max_threads(4);
    auto parallel = train(build_model<float>(net, 6), net, examples, cfg);
    set_max_threads(0);  // back to the default
    auto sn = serial.params.named();
    auto pn = parallel.params.named();
    for (std::size_t i = 0; i < sn.size(); ++i) CHECK(tensors_equal(*sn[i].second, *pn[i].second));
    CHECK(serial.log.epochs[1].mean_loss == parallel.log.epochs[1].mean_loss);
}

TEST_CASE("memorizes a small set and its smoothed loss never rises") {
    auto net = small_net();
    auto examples = separable_examples(8, net, 7);  // 16 chips
    TrainConfig cfg;
    cfg.epochs = 200;
    cfg.batch_size = 8;
    cfg.adam.learning_rate = 3e-3;
    auto result = train(build_model<float>(net, 9), net, examples, cfg);
    CHECK(result.log.epochs.back().train_accuracy == 1.0);

    // Smooth over ten-epoch windows; each window mean must not exceed the
    // previous one by more than float noise.
    std::vector<double> windows;
    for (std::size_t start = 0; start + 10 <= result.log.epochs.size(); start += 10) {
        double sum = 0;
        for (std::size_t i = start; i < start + 10; ++i) sum += result.log.epochs[i].mean_loss;
        windows.push_back(sum / 10);
    }
    for (std::size_t i = 1; i < windows.size(); ++i) CHECK(windows[i] <= windows[i - 1] + 1e-6);
}

TEST_CASE("rejects unusable datasets") {
    auto net = small_net();
    TrainConfig cfg;
    cfg.epochs = 1;
    CHECK_THROWS_AS(train(build_model<float>(net, 0), net, {}, cfg), DataError);

    auto one_class = separable_examples(4, net, 8);
    one_class.erase(one_class.begin() + 4, one_class.end());  // ships only
    CHECK_THROWS_AS(train(build_model<float>(net, 0), net, one_class, cfg), DataError);

    auto bad_shape = separable_examples(4, net, 8);
    bad_shape[0].image = Tensor<float>(Shape{1, 8, 8});
    CHECK_THROWS_AS(train(build_model<float>(net, 0), net, bad_shape, cfg), DataError);

    CHECK_THROWS_AS(
        train(build_model<float>(net, 0), net, separable_examples(4, net, 8),
              TrainConfig{.epochs = -1}),
        ConfigError);
}

TEST_CASE("zero epochs is the identity") {
    auto net = small_net();
    auto examples = separable_examples(4, net, 10);
    auto params = build_model<float>(net, 11);
    TrainConfig cfg;
    cfg.epochs = 0;
    auto result = train(params, net, examples, cfg);
    auto an = params.named();
    auto bn = result.params.named();
    for (std::size_t i = 0; i < an.size(); ++i) CHECK(tensors_equal(*an[i].second, *bn[i].second));
    CHECK(result.log.epochs.empty());
    CHECK(result.adam.t == 0);
}

TEST_CASE("finetuning pins the first conv stage") {
    auto net = small_net();
    auto examples = separable_examples(8, net, 12);
    Checkpoint start;
    start.config = net;
    start.params = build_model<float>(net, 13);
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 8;
    auto result = finetune(start, examples, cfg);
    CHECK(tensors_equal(result.params.conv1_k, start.params.conv1_k));
    CHECK(tensors_equal(result.params.conv1_b, start.params.conv1_b));
    CHECK_FALSE(tensors_equal(result.params.conv2_k, start.params.conv2_k));
    // Fresh optimizer state, so the clock restarts.
    CHECK(result.adam.t == 2 * cfg.epochs);
}

TEST_CASE("train log lands on disk with the expected columns") {
    auto net = small_net();
    auto examples = separable_examples(4, net, 14);
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 4;
    auto result = train(build_model<float>(net, 15), net, examples, cfg);

    auto dir = fs::temp_directory_path() / "eo2sar_train_test";
    fs::create_directories(dir);
    auto path = dir / "train_log.csv";
    write_train_log_csv(path, result.log);

    std::ifstream in(path);
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "epoch,mean_loss,train_accuracy");
    int rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ++rows;
        std::istringstream ss(line);
        std::string field;
        std::getline(ss, field, ',');
        CHECK(std::stoi(field) == rows);
        std::getline(ss, field, ',');
        CHECK(std::stod(field) >= 0.0);
        std::getline(ss, field, ',');
        const double acc = std::stod(field);
        CHECK(acc >= 0.0);
        CHECK(acc <= 1.0);
    }
    CHECK(rows == 2);
}

TEST_CASE("predict and accuracy agree") {
    auto net = small_net();
    auto examples = separable_examples(8, net, 16);
    auto params = build_model<float>(net, 17);
    auto labels = predict(params, net, examples);
    REQUIRE(labels.size() == examples.size());
    int correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == examples[i].label) ++correct;
    CHECK(accuracy(params, net, examples) ==
          doctest::Approx(static_cast<double>(correct) / examples.size()));
}
