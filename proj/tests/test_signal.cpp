#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "test_util.hpp"

using namespace edgar;

TEST(Split, ExactTenPercent) {
    const auto split = split_dataset(testutil::binned_dataset({10}), 0.10, 3);
    EXPECT_EQ(split.validation.size(), 1u);
    EXPECT_EQ(split.learning.size(), 9u);
}

TEST(Split, RoundsUpInFavourOfValidation) {
    const auto split = split_dataset(testutil::binned_dataset({5}), 0.10, 3);
    EXPECT_EQ(split.validation.size(), 1u);
    EXPECT_EQ(split.learning.size(), 4u);
}

TEST(Split, EveryBinRepresented) {
    const auto ds = testutil::binned_dataset({10, 5, 1});
    const auto split = split_dataset(ds, 0.10, 11);
    std::map<std::string, int> per_bin;
    for (const auto& r : split.validation.recordings) ++per_bin[r.series.bin_key.at("bin")];
    // ceil(0.1 * 10) = 1, ceil(0.1 * 5) = 1, ceil(0.1 * 1) = 1
    EXPECT_EQ(per_bin, (std::map<std::string, int>{{"0", 1}, {"1", 1}, {"2", 1}}));
}

TEST(Split, ExactMultiplesAreNotRoundedUp) {
    EXPECT_EQ(validation_share(30, 0.1), 3u);
    EXPECT_EQ(validation_share(100, 0.1), 10u);
    EXPECT_EQ(validation_share(7, 0.3), 3u);
}

TEST(Split, PartitionProperty) {
    Rng rng(42);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::size_t> sizes;
        const auto n_bins = uniform_int(rng, 1, 6);
        for (std::int64_t b = 0; b < n_bins; ++b) sizes.push_back(static_cast<std::size_t>(uniform_int(rng, 1, 25)));
        const double fraction = uniform(rng, 0.05, 0.6);
        const auto ds = testutil::binned_dataset(sizes);
        const auto split = split_dataset(ds, fraction, static_cast<std::uint64_t>(trial));
        std::multiset<std::string> all, out;
        for (const auto& r : ds.recordings) all.insert(r.series.series_id);
        for (const auto& r : split.learning.recordings) out.insert(r.series.series_id);
        for (const auto& r : split.validation.recordings) out.insert(r.series.series_id);
        EXPECT_EQ(all, out);
        std::map<std::string, std::size_t> val;
        for (const auto& r : split.validation.recordings) ++val[r.series.bin_key.at("bin")];
        for (std::size_t b = 0; b < sizes.size(); ++b) {
            const auto expected = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(sizes[b]) - 1e-9));
            EXPECT_EQ(val[std::to_string(b)], std::min(expected, sizes[b]));
        }
    }
}

TEST(Split, DeterministicPerSeed) {
    const auto ds = testutil::binned_dataset({20, 13});
    EXPECT_EQ(split_dataset(ds, 0.2, 9).validation, split_dataset(ds, 0.2, 9).validation);
}

TEST(Split, Errors) {
    EXPECT_THROW(split_dataset(Dataset{}, 0.1), std::invalid_argument);
    const auto ds = testutil::binned_dataset({4});
    EXPECT_THROW(split_dataset(ds, 0.0), std::invalid_argument);
    EXPECT_THROW(split_dataset(ds, 1.0), std::invalid_argument);
}

TEST(Labels, Validation) {
    EXPECT_THROW((WeakLabel{{-1}}).validate(), std::invalid_argument);
    EXPECT_THROW((WeakLabel{{}}).validate(), std::invalid_argument);
    EXPECT_NO_THROW((WeakLabel{{0, 3}}).validate());
    EXPECT_EQ((WeakLabel{{2, 3}}).n_categories(), 3u);
    TimeSeries s;
    s.sample_rate_hz = 0.0;
    EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(Merge, ConcatenatesAndChecksCategories) {
    const auto a = testutil::binned_dataset({3});
    auto b = testutil::binned_dataset({2});
    const std::vector<Dataset> parts{a, b};
    EXPECT_EQ(merge_datasets(parts).size(), 5u);
    b.category_names = {"non-shot", "live", "blank"};
    const std::vector<Dataset> bad{a, b};
    EXPECT_THROW(merge_datasets(bad), std::invalid_argument);
}

namespace {

Dataset synthetic_with_truth() {
    SynthConfig cfg;
    cfg.profiles = {testutil::small_profile()};
    cfg.bins = {{"test", Sequence::burst, 1, 3, 0, 2}, {"test", Sequence::non_shot_only, 1, 2, 0, 0}};
    return synthesize_dataset(cfg);
}

std::string serialize(const Dataset& ds) {
    std::ostringstream out;
    write_dataset(out, ds);
    return out.str();
}

}  // namespace

TEST(DatasetIo, RoundTripIsLossless) {
    auto ds = synthetic_with_truth();
    ds.recordings[0].series.samples[3] = -0.0f;
    ds.recordings[0].series.samples[4] = 1e-42f;  // subnormal
    const auto bytes = serialize(ds);
    std::istringstream in(bytes);
    const auto back = read_dataset(in);
    EXPECT_EQ(back, ds);
    EXPECT_TRUE(std::signbit(back.recordings[0].series.samples[3]));
    EXPECT_EQ(serialize(back), bytes);
}

TEST(DatasetIo, TruncatedFileIsAnError) {
    const auto bytes = serialize(synthetic_with_truth());
    for (std::size_t cut : {std::size_t{3}, std::size_t{20}, bytes.size() / 2, bytes.size() - 1}) {
        std::istringstream in(bytes.substr(0, cut));
        EXPECT_THROW(read_dataset(in), format_error) << "cut at " << cut;
    }
}

TEST(DatasetIo, FutureVersionIsAVersionError) {
    auto bytes = serialize(synthetic_with_truth());
    bytes[4] = 2;  // version field follows the 4-byte magic
    std::istringstream in(bytes);
    EXPECT_THROW(read_dataset(in), version_error);
}

TEST(DatasetIo, BadMagic) {
    std::istringstream in(std::string("NOPE\x01\0\0\0", 8));
    EXPECT_THROW(read_dataset(in), format_error);
}

TEST(DatasetIo, FileRoundTripAndAtomicFailure) {
    const auto dir = std::filesystem::temp_directory_path() / "edgar_test_signal";
    std::filesystem::create_directories(dir);
    const auto ds = synthetic_with_truth();
    save_dataset(dir / "d.edds", ds);
    EXPECT_EQ(load_dataset(dir / "d.edds"), ds);

    const auto target = dir / "failed.edds";
    std::filesystem::remove(target);
    EXPECT_THROW(write_atomically(target, [](std::ostream& out) {
                     out << "partial";
                     throw std::runtime_error("boom");
                 }),
                 std::runtime_error);
    EXPECT_FALSE(std::filesystem::exists(target));
    EXPECT_FALSE(std::filesystem::exists(dir / "failed.edds.tmp"));
    std::filesystem::remove_all(dir);
}
