#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "test_util.hpp"

#include "edgar/benchmark.hpp"
#include "edgar/config.hpp"
#include "edgar/model_io.hpp"

using namespace edgar;
using nlohmann::json;

namespace {

ModelBundle make_bundle(bool quantized, std::size_t n_categories = 2) {
    ModelBundle b;
    b.model = init_params([&] {
        NetworkConfig n;
        n.input_len = 48;
        n.conv = {{5, 4, 2}, {3, 4, 1}};
        n.hidden = 7;
        n.n_categories = n_categories;
        return n;
    }(), 3);
    b.metric.input_len = 48;
    b.metric.pre_trigger = 8;
    b.metric.offset = -3;
    b.min_cycle_s = 0.035;
    b.category_names.assign(n_categories, "");
    for (std::size_t c = 0; c < n_categories; ++c) b.category_names[c] = c == 0 ? "non-shot" : "kind" + std::to_string(c);
    if (quantized) {
        Rng rng(4);
        std::vector<std::vector<float>> calib(32, std::vector<float>(48));
        for (auto& s : calib)
            for (auto& v : s) v = static_cast<float>(3.0 * normal(rng));
        b.quantized = calibrate_and_quantize(b.model, calib);
    }
    return b;
}

std::string serialize(const ModelBundle& b) {
    std::ostringstream os;
    write_model(os, b);
    return os.str();
}

}  // namespace

TEST(RunConfigJson, RoundTrip) {
    const auto rc = benchmark_run_config(2, 5, 9);
    const json j = rc;
    const auto back = parse_run_config(j);
    EXPECT_EQ(json(back), j);
    EXPECT_EQ(back.network, rc.network);
    EXPECT_EQ(back.train.improvements, rc.train.improvements);
    EXPECT_TRUE(back.pretrain_synth.has_value());
    EXPECT_EQ(back.synth.bins.size(), rc.synth.bins.size());
    EXPECT_EQ(j["synth"]["bins"][2]["sequence"], "4-1-4-1");
}

TEST(RunConfigJson, MissingKeysTakeDefaults) {
    const auto rc = parse_run_config(json::parse(R"({"train": {"learning_rate": 0.01}})"));
    EXPECT_DOUBLE_EQ(rc.train.learning_rate, 0.01);
    EXPECT_EQ(rc.train.lr_patience, 20);
    EXPECT_EQ(rc.train.group_size, 20u);
    EXPECT_DOUBLE_EQ(rc.train.vat.xi, 1e-6);
    EXPECT_EQ(rc.network, NetworkConfig{});
    EXPECT_FALSE(rc.pretrain_synth.has_value());
}

TEST(RunConfigJson, UnknownKeysAreRejectedWithTheirPath) {
    try {
        parse_run_config(json::parse(R"({"train": {"learning_rte": 0.01}})"));
        FAIL() << "accepted a misspelt key";
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("train.learning_rte"), std::string::npos);
    }
    EXPECT_THROW(parse_run_config(json::parse(R"({"extra": 1})")), std::invalid_argument);
    EXPECT_THROW(parse_run_config(json::parse(R"({"network": {"conv": [{"kernel": 3, "stride": 2}]}})")), std::invalid_argument);
}

TEST(RunConfigJson, WrongTypesAndBadEnumsAreRejected) {
    EXPECT_THROW(parse_run_config(json::parse(R"({"train": {"max_epochs": "many"}})")), std::invalid_argument);
    EXPECT_THROW(parse_run_config(json::parse(R"({"synth": {"bins": [{"sequence": "volley"}]}})")), std::invalid_argument);
}

TEST(RunConfigJson, ValidateCatchesInconsistentSections) {
    auto rc = benchmark_run_config();
    EXPECT_NO_THROW(validate(rc));
    rc.metric.input_len = 64;
    EXPECT_THROW(validate(rc), std::invalid_argument);
    rc = benchmark_run_config();
    rc.network.n_categories = 3;
    EXPECT_THROW(validate(rc), std::invalid_argument);
    rc = benchmark_run_config();
    rc.train.stop_patience = 0;
    EXPECT_THROW(validate(rc), std::invalid_argument);
}

TEST(RunConfigJson, FileRoundTripAndErrors) {
    const auto dir = std::filesystem::temp_directory_path() / "edgar_config_test";
    std::filesystem::create_directories(dir);
    const auto path = dir / "run.json";
    const auto rc = benchmark_run_config(1, 3, 2);
    save_run_config(path, rc);
    EXPECT_EQ(json(load_run_config(path)), json(rc));
    {
        std::ofstream out(dir / "broken.json");
        out << "{\"train\": ";
    }
    EXPECT_THROW(load_run_config(dir / "broken.json"), std::invalid_argument);
    EXPECT_THROW(load_run_config(dir / "absent.json"), std::invalid_argument);
    std::filesystem::remove_all(dir);
}

// ---------------------------------------------------------------------------
// Model container

TEST(ModelFile, FloatModelRoundTripsBitExactly) {
    const auto b = make_bundle(false, 3);
    const auto bytes = serialize(b);
    std::istringstream in(bytes);
    const auto back = read_model(in);
    EXPECT_EQ(back.model, b.model);
    EXPECT_EQ(std::memcmp(back.model.params.data(), b.model.params.data(), b.model.params.size() * sizeof(double)), 0);
    EXPECT_EQ(back.metric.offset, -3);
    EXPECT_EQ(back.min_cycle_s, 0.035);
    EXPECT_EQ(back.category_names, b.category_names);
    EXPECT_FALSE(back.quantized.has_value());
    EXPECT_THROW((void)back.require_quantized(), std::invalid_argument);
    EXPECT_EQ(serialize(back), bytes);
}

TEST(ModelFile, QuantizedModelRoundTripsAndInfersIdentically) {
    const auto b = make_bundle(true);
    const auto bytes = serialize(b);
    std::istringstream in(bytes);
    const auto back = read_model(in);
    ASSERT_TRUE(back.quantized.has_value());
    EXPECT_EQ(*back.quantized, *b.quantized);
    EXPECT_EQ(serialize(back), bytes);
    QuantScratch s1(*b.quantized), s2(back.require_quantized());
    Rng rng(5);
    for (int i = 0; i < 50; ++i) {
        std::vector<float> x(48);
        for (auto& v : x) v = static_cast<float>(3.0 * normal(rng));
        const auto p1 = qforward(*b.quantized, x, s1);
        const auto p2 = qforward(*back.quantized, x, s2);
        EXPECT_TRUE(std::equal(p1.begin(), p1.end(), p2.begin()));
    }
}

TEST(ModelFile, RejectsCorruptFiles) {
    const auto bytes = serialize(make_bundle(true));
    for (std::size_t cut : {std::size_t{3}, std::size_t{20}, bytes.size() / 2, bytes.size() - 1}) {
        std::istringstream in(bytes.substr(0, cut));
        EXPECT_THROW(read_model(in), format_error) << "cut at " << cut;
    }
    std::string v = bytes;
    v[4] = 7;
    std::istringstream vin(v);
    EXPECT_THROW(read_model(vin), version_error);
    std::string m = bytes;
    m[1] = 'X';
    std::istringstream min(m);
    EXPECT_THROW(read_model(min), format_error);
}

TEST(ModelFile, SaveIsAtomicAndLoadable) {
    const auto dir = std::filesystem::temp_directory_path() / "edgar_model_test";
    std::filesystem::create_directories(dir);
    const auto b = make_bundle(true);
    save_model(dir / "m.edm", b);
    EXPECT_EQ(*load_model(dir / "m.edm").quantized, *b.quantized);
    EXPECT_THROW(load_model(dir / "missing.edm"), std::runtime_error);
    std::filesystem::remove_all(dir);
}
