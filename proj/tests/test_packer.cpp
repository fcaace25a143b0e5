#include <map>
#include <random>

#include <gtest/gtest.h>
#include <json.hpp>

#include "oracles.hpp"
#include "vidcurate/errors.hpp"
#include "vidcurate/packer.hpp"

using namespace vidcurate;

namespace {

std::vector<PackItem> items(const std::vector<std::int64_t>& lengths) {
    std::vector<PackItem> out;
    for (std::size_t i = 0; i < lengths.size(); ++i) {
        out.push_back({"s" + std::to_string(i), lengths[i]});
    }
    return out;
}

std::vector<std::int64_t> lengths_of(const Composite& c) {
    std::vector<std::int64_t> out;
    for (const auto& it : c.items) out.push_back(it.length);
    return out;
}

} // namespace

TEST(Pack, Examples) {
    const auto one = pack_sequences(items({100}), 100);
    EXPECT_EQ(one.composites.size(), 1u);
    EXPECT_EQ(utilization(one), 1.0);

    const auto plan = pack_sequences(items({60, 50, 40, 30}), 100);
    ASSERT_EQ(plan.composites.size(), 2u);
    EXPECT_EQ(lengths_of(plan.composites[0]), (std::vector<std::int64_t>{60, 40}));
    EXPECT_EQ(lengths_of(plan.composites[1]), (std::vector<std::int64_t>{50, 30}));
    EXPECT_DOUBLE_EQ(utilization(plan), 0.9);

    EXPECT_EQ(pack_sequences(items({51, 51, 51}), 100).composites.size(), 3u);
    EXPECT_EQ(utilization(PackingPlan{}), 0.0);
}

TEST(Pack, OversizeNamesTheSample) {
    try {
        pack_sequences(items({10, 101}), 100);
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("s1"), std::string::npos);
    }
    EXPECT_THROW(pack_sequences(items({0}), 100), DataError);
}

TEST(Pack, TiesBrokenById) {
    const std::vector<PackItem> in{{"b", 5}, {"a", 5}, {"c", 5}};
    const auto plan = pack_sequences(in, 10);
    ASSERT_EQ(plan.composites.size(), 2u);
    EXPECT_EQ(plan.composites[0].items[0].sample_id, "a");
    EXPECT_EQ(plan.composites[0].items[1].sample_id, "b");
}

// Properties: every sample placed exactly once, no composite over budget,
// never more composites than the brute-force optimum allows.
TEST(Pack, RandomInstances) {
    std::mt19937_64 eng(31);
    for (int trial = 0; trial < 3000; ++trial) {
        const std::int64_t budget = 1 + static_cast<std::int64_t>(eng() % 30);
        std::vector<std::int64_t> lens(eng() % 9);
        for (auto& l : lens) l = 1 + static_cast<std::int64_t>(eng() % budget);
        const auto plan = pack_sequences(items(lens), budget);
        std::map<std::string, int> seen;
        for (const auto& c : plan.composites) {
            EXPECT_LE(c.used(), budget);
            EXPECT_FALSE(c.items.empty());
            for (const auto& it : c.items) ++seen[it.sample_id];
        }
        EXPECT_EQ(seen.size(), lens.size());
        for (const auto& [_, n] : seen) EXPECT_EQ(n, 1);
        std::vector<int> ints(lens.begin(), lens.end());
        const int opt = oracle::optimal_bins(ints, static_cast<int>(budget));
        EXPECT_LE(9 * static_cast<int>(plan.composites.size()), 11 * opt + 9);
    }
}

TEST(Mask, Examples) {
    const auto m3 = build_mask(Composite{items({3})});
    EXPECT_EQ(allowed_pairs(m3), 6);
    const auto m32 = build_mask(Composite{items({3, 2})});
    EXPECT_EQ(allowed_pairs(m32), 9);
    EXPECT_FALSE(attends(m32, 3, 2));
    EXPECT_TRUE(attends(m32, 4, 3));
    EXPECT_FALSE(attends(m32, 3, 4));
    const auto m1 = build_mask(Composite{items({1})});
    EXPECT_EQ(allowed_pairs(m1), 1);
    EXPECT_TRUE(attends(m1, 0, 0));
    EXPECT_THROW(build_mask(Composite{}), std::invalid_argument);
}

TEST(Mask, MatchesBrutePredicate) {
    std::mt19937_64 eng(8);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<std::int64_t> lens(1 + eng() % 5);
        for (auto& l : lens) l = 1 + static_cast<std::int64_t>(eng() % 7);
        const auto mask = build_mask(Composite{items(lens)});
        std::int64_t count = 0;
        for (std::int64_t i = 0; i < mask.total_len; ++i) {
            for (std::int64_t j = 0; j < mask.total_len; ++j) {
                const bool want = oracle::block_causal(lens, i, j);
                EXPECT_EQ(attends(mask, i, j), want);
                count += want;
            }
        }
        EXPECT_EQ(allowed_pairs(mask), count);
    }
}

TEST(Plan, Format) {
    const auto plan = pack_sequences(items({60, 50, 40, 30}), 100);
    const auto text = format_plan(plan);
    const auto first = nlohmann::json::parse(text.substr(0, text.find('\n')));
    EXPECT_EQ(first.at("composite_id"), 0);
    EXPECT_EQ(first.at("sample_ids"), (std::vector<std::string>{"s0", "s2"}));
    EXPECT_EQ(first.at("segment_bounds")[1], (std::vector<int>{60, 100}));
}
