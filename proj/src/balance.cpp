#include "vidcurate/balance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>
#include <json.hpp>

#include "vidcurate/rng.hpp"

namespace vidcurate {

namespace {

std::string category_of(const VideoRecord& r) {
    return r.category.empty() ? std::string(unknown_category) : r.category;
}

// Largest integer strictly below x, floored at 0.
std::size_t largest_below(double x) {
    if (!(x > 0)) {
        return 0;
    }
    const double c = std::ceil(x) - 1.0;
    return c <= 0 ? 0 : static_cast<std::size_t>(c);
}

} // namespace

CategoryHistogram category_histogram(std::span<const VideoRecord> records) {
    CategoryHistogram h;
    for (const auto& r : records) {
        if (r.category.empty()) {
            ++h.missing;
        }
        ++h.counts[category_of(r)];
        ++h.total;
    }
    return h;
}

std::map<std::string, std::size_t> solve_category_caps(const std::map<std::string, std::size_t>& counts,
                                                       double cap_fraction) {
    if (!(cap_fraction > 0 && cap_fraction < 1)) {
        throw std::invalid_argument(fmt::format("cap_fraction {} outside (0, 1)", cap_fraction));
    }
    std::size_t total = 0;
    for (const auto& [_, n] : counts) {
        total += n;
    }
    auto target = counts;
    std::size_t untouched = 0;
    std::vector<std::string> exceeding;
    for (const auto& [cat, n] : counts) {
        if (static_cast<double>(n) > cap_fraction * static_cast<double>(total)) {
            exceeding.push_back(cat);
        } else {
            untouched += n;
        }
    }
    if (exceeding.empty()) {
        return target;
    }
    // Start from the original counts and shrink until the caps agree with the
    // total they imply.
    while (true) {
        std::size_t final_total = untouched;
        for (const auto& cat : exceeding) {
            final_total += target[cat];
        }
        const auto cap = largest_below(cap_fraction * static_cast<double>(final_total));
        bool changed = false;
        for (const auto& cat : exceeding) {
            const auto next = std::min(counts.at(cat), cap);
            if (next != target[cat]) {
                target[cat] = next;
                changed = true;
            }
        }
        if (!changed) {
            break;
        }
    }
    return target;
}

BalanceResult balance_categories(std::span<const VideoRecord> records, double cap_fraction, std::uint64_t seed) {
    BalanceResult result;
    const auto hist = category_histogram(records);
    result.original = hist.counts;
    result.target = solve_category_caps(hist.counts, cap_fraction);

    std::map<std::string, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < records.size(); ++i) {
        members[category_of(records[i])].push_back(i);
    }
    std::vector<bool> keep(records.size(), true);
    Engine eng(seed);
    // std::map iteration is sorted by category, so draws are reproducible.
    for (const auto& [cat, idx] : members) {
        const auto want = result.target.at(cat);
        if (want >= idx.size()) {
            continue;
        }
        if (want == 0) {
            result.zeroed.push_back(cat);
        }
        for (auto i : idx) {
            keep[i] = false;
        }
        for (auto pick : sample_without_replacement(eng, idx.size(), want)) {
            keep[idx[pick]] = true;
        }
    }
    for (std::size_t i = 0; i < records.size(); ++i) {
        (keep[i] ? result.kept : result.dropped).push_back(records[i]);
    }
    return result;
}

StatsReport dataset_report(std::span<const VideoRecord> records, std::size_t top_k) {
    StatsReport report;
    report.top_k = top_k;
    report.total = records.size();
    if (records.empty()) {
        return report;
    }
    const auto hist = category_histogram(records);
    for (const auto& [cat, n] : hist.counts) {
        report.categories.push_back({cat, n, static_cast<double>(n) / static_cast<double>(hist.total)});
    }
    std::stable_sort(report.categories.begin(), report.categories.end(),
                     [](const CategoryShare& a, const CategoryShare& b) { return a.count > b.count; });

    constexpr double inf = std::numeric_limits<double>::infinity();
    report.durations = {{0, 5, 0}, {5, 10, 0}, {10, 30, 0}, {30, 60, 0}, {60, 300, 0}, {300, 1200, 0}, {1200, inf, 0}};
    for (const auto& r : records) {
        for (auto& bin : report.durations) {
            if (r.duration_s >= bin.lo_s && r.duration_s < bin.hi_s) {
                ++bin.count;
                break;
            }
        }
        ++report.languages[std::string(to_string(r.language))];
        for (const auto& [name, decision] : r.filter_status) {
            auto& drops = report.filter_drops[name];
            if (decision.dropped()) {
                ++drops;
            }
        }
    }
    return report;
}

std::string report_to_json(const StatsReport& report) {
    nlohmann::ordered_json j;
    j["total"] = report.total;
    j["categories"] = nlohmann::ordered_json::array();
    for (const auto& c : report.categories) {
        j["categories"].push_back({{"category", c.category}, {"count", c.count}, {"share", c.share}});
    }
    j["top_k"] = nlohmann::ordered_json::array();
    for (const auto& c : report.top()) {
        j["top_k"].push_back(c.category);
    }
    j["durations"] = nlohmann::ordered_json::array();
    for (const auto& b : report.durations) {
        nlohmann::ordered_json bj{{"lo_s", b.lo_s}};
        bj["hi_s"] = std::isinf(b.hi_s) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(b.hi_s);
        bj["count"] = b.count;
        j["durations"].push_back(std::move(bj));
    }
    j["languages"] = report.languages;
    j["filter_drops"] = report.filter_drops;
    return j.dump(2) + "\n";
}

std::string report_to_table(const StatsReport& report) {
    auto csv_field = [](const std::string& s) {
        if (s.find_first_of(",\"\n") == std::string::npos) {
            return s;
        }
        std::string quoted = "\"";
        for (char c : s) {
            quoted += c;
            if (c == '"') {
                quoted += '"';
            }
        }
        return quoted + "\"";
    };
    std::string out = "category,count,share\n";
    for (const auto& c : report.categories) {
        out += fmt::format("{},{},{:.6f}\n", csv_field(c.category), c.count, c.share);
    }
    return out;
}

} // namespace vidcurate
