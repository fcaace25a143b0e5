#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "vidcurate/corpus.hpp"

namespace vidcurate {

// Category used for records with an empty category label.
inline constexpr std::string_view unknown_category = "__unknown__";

inline constexpr double default_balance_cap = 0.01;

struct CategoryHistogram {
    std::map<std::string, std::size_t> counts;
    std::size_t total = 0;
    // Records without a category (counted under unknown_category).
    std::size_t missing = 0;

    bool operator==(const CategoryHistogram&) const = default;
};

CategoryHistogram category_histogram(std::span<const VideoRecord> records);

// Target count per category after balancing. Categories whose share of the
// input is <= cap_fraction keep their count. All others are capped jointly at
// the largest count strictly below cap_fraction of the final total; the cap
// and the final total are iterated to a fixpoint (the cap only shrinks, so
// this terminates).
std::map<std::string, std::size_t> solve_category_caps(const std::map<std::string, std::size_t>& counts,
                                                       double cap_fraction);

struct BalanceResult {
    std::vector<VideoRecord> kept;   // input order
    std::vector<VideoRecord> dropped; // input order
    std::map<std::string, std::size_t> original;
    std::map<std::string, std::size_t> target;
    // Exceeding categories that had to be removed entirely.
    std::vector<std::string> zeroed;
};

// Downsamples over-represented categories (uniformly without replacement,
// seeded) so each ends below cap_fraction of the final corpus. Records are
// copied unchanged. Throws std::invalid_argument unless 0 < cap_fraction < 1.
BalanceResult balance_categories(std::span<const VideoRecord> records, double cap_fraction, std::uint64_t seed);

struct CategoryShare {
    std::string category;
    std::size_t count = 0;
    double share = 0;
};

struct DurationBin {
    double lo_s = 0;
    double hi_s = 0; // infinity for the last bin
    std::size_t count = 0;
};

struct StatsReport {
    std::size_t total = 0;
    std::vector<CategoryShare> categories; // count descending, then name
    std::vector<DurationBin> durations;
    std::map<std::string, std::size_t> languages;
    std::map<std::string, std::size_t> filter_drops;
    std::size_t top_k = 0;

    std::span<const CategoryShare> top() const {
        return std::span<const CategoryShare>(categories).first(std::min(top_k, categories.size()));
    }
};

StatsReport dataset_report(std::span<const VideoRecord> records, std::size_t top_k = 20);

std::string report_to_json(const StatsReport& report);

// "category,count,share" with a header row; one line per category.
std::string report_to_table(const StatsReport& report);

} // namespace vidcurate
