#include <random>

#include <gtest/gtest.h>
#include <json.hpp>

#include "vidcurate/balance.hpp"
#include "vidcurate/corpus.hpp"

using namespace vidcurate;

namespace {

std::vector<VideoRecord> corpus(const std::map<std::string, int>& counts) {
    std::vector<VideoRecord> out;
    for (const auto& [cat, n] : counts) {
        for (int i = 0; i < n; ++i) {
            VideoRecord r;
            r.id = cat + "_" + std::to_string(i);
            r.category = cat;
            r.duration_s = 1 + i;
            out.push_back(r);
        }
    }
    return out;
}

std::map<std::string, int> a500_plus_100x5() {
    std::map<std::string, int> counts{{"A", 500}};
    for (int i = 0; i < 100; ++i) {
        counts["c" + std::to_string(1000 + i)] = 5;
    }
    return counts;
}

// Largest a <= n with a < cap * (rest + a), by scanning.
std::size_t scan_cap(std::size_t n, std::size_t rest, double cap) {
    std::size_t best = 0;
    for (std::size_t a = 0; a <= n; ++a) {
        if (static_cast<double>(a) < cap * static_cast<double>(rest + a)) {
            best = a;
        }
    }
    return best;
}

} // namespace

TEST(Histogram, Examples) {
    EXPECT_EQ(category_histogram({}).total, 0u);
    auto recs = corpus({{"a", 2}, {"b", 1}});
    const auto h = category_histogram(recs);
    EXPECT_EQ(h.counts, (std::map<std::string, std::size_t>{{"a", 2}, {"b", 1}}));
    EXPECT_EQ(h.total, 3u);
    std::reverse(recs.begin(), recs.end());
    EXPECT_EQ(category_histogram(recs), h);
}

TEST(Histogram, MissingCategoryCounted) {
    auto recs = corpus({{"a", 1}});
    recs.push_back(VideoRecord{});
    const auto h = category_histogram(recs);
    EXPECT_EQ(h.missing, 1u);
    EXPECT_EQ(h.counts.at(std::string(unknown_category)), 1u);
}

TEST(Balance, EvenCorpusUnchanged) {
    std::map<std::string, int> counts;
    for (int i = 0; i < 100; ++i) counts["c" + std::to_string(i)] = 5;
    const auto recs = corpus(counts);
    const auto result = balance_categories(recs, 0.01, 1);
    EXPECT_EQ(result.kept, recs);
    EXPECT_TRUE(result.dropped.empty());
}

TEST(Balance, DominantCategoryFixpoint) {
    const auto recs = corpus(a500_plus_100x5());
    const auto result = balance_categories(recs, 0.01, 42);
    EXPECT_EQ(result.target.at("A"), 5u);
    EXPECT_EQ(result.kept.size(), 505u);
    EXPECT_EQ(scan_cap(500, 500, 0.01), 5u);
    const auto h = category_histogram(result.kept);
    EXPECT_EQ(h.counts.at("A"), 5u);
    EXPECT_LT(5.0 / 505.0, 0.01);
    for (const auto& [cat, n] : h.counts) {
        if (cat != "A") EXPECT_EQ(n, 5u);
    }
}

TEST(Balance, SameSeedSameResult) {
    const auto recs = corpus(a500_plus_100x5());
    const auto a = balance_categories(recs, 0.01, 9);
    const auto b = balance_categories(recs, 0.01, 9);
    EXPECT_EQ(a.kept, b.kept);
    const auto c = balance_categories(recs, 0.01, 10);
    EXPECT_NE(a.kept, c.kept);
}

TEST(Balance, CapTooSmallZeroesAndReports) {
    const auto recs = corpus({{"big", 50}, {"x", 1}, {"y", 1}});
    const auto result = balance_categories(recs, 0.2, 1);
    EXPECT_EQ(result.target.at("big"), 0u);
    EXPECT_EQ(result.zeroed, std::vector<std::string>{"big"});
}

TEST(Balance, RejectsCapOutsideUnitInterval) {
    EXPECT_THROW(solve_category_caps({{"a", 1}}, 0.0), std::invalid_argument);
    EXPECT_THROW(solve_category_caps({{"a", 1}}, 1.0), std::invalid_argument);
}

// Properties on random histograms: single exceeding category matches the scan
// oracle; every capped category ends strictly under the cap; others are exact.
TEST(Balance, RandomHistograms) {
    std::mt19937_64 eng(17);
    for (int trial = 0; trial < 2000; ++trial) {
        std::map<std::string, std::size_t> counts;
        const int k = 1 + static_cast<int>(eng() % 30);
        for (int i = 0; i < k; ++i) counts["c" + std::to_string(i)] = 1 + eng() % 40;
        const double cap = 0.02 + (eng() % 40) / 100.0;
        std::size_t total = 0;
        for (auto& [_, n] : counts) total += n;

        const auto target = solve_category_caps(counts, cap);
        std::size_t final_total = 0;
        for (auto& [_, n] : target) final_total += n;
        std::vector<std::string> exceeding;
        std::size_t rest = 0;
        for (const auto& [cat, n] : counts) {
            if (n > cap * total) {
                exceeding.push_back(cat);
                EXPECT_TRUE(target.at(cat) == 0 || target.at(cat) < cap * final_total);
            } else {
                rest += n;
                EXPECT_EQ(target.at(cat), n);
            }
        }
        if (exceeding.size() == 1) {
            EXPECT_EQ(target.at(exceeding[0]), scan_cap(counts.at(exceeding[0]), rest, cap));
        }
    }
}

TEST(Report, TopCategoryAndBins) {
    EXPECT_EQ(dataset_report({}).total, 0u);
    const auto recs = corpus({{"a", 4}, {"b", 3}, {"c", 3}});
    const auto rep = dataset_report(recs, 2);
    ASSERT_EQ(rep.top().size(), 2u);
    EXPECT_EQ(rep.top()[0].category, "a");
    EXPECT_DOUBLE_EQ(rep.top()[0].share, 0.4);
    std::size_t binned = 0;
    for (const auto& b : rep.durations) binned += b.count;
    EXPECT_EQ(binned, 10u);
    const auto j = nlohmann::json::parse(report_to_json(rep));
    EXPECT_EQ(j.at("total"), 10);
    EXPECT_EQ(report_to_table(rep).substr(0, 21), "category,count,share\n");
}
