#include "vidcurate/packer.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>
#include <json.hpp>

#include "vidcurate/errors.hpp"

namespace vidcurate {

std::int64_t Composite::used() const {
    std::int64_t sum = 0;
    for (const auto& item : items) {
        sum += item.length;
    }
    return sum;
}

PackingPlan pack_sequences(std::span<const PackItem> items, std::int64_t budget) {
    if (budget < 1) {
        throw DataError(fmt::format("packing budget {} must be positive", budget));
    }
    for (const auto& item : items) {
        if (item.length < 1 || item.length > budget) {
            throw DataError(fmt::format("sample '{}' has length {} outside [1, {}]", item.sample_id, item.length, budget));
        }
    }
    std::vector<const PackItem*> order;
    order.reserve(items.size());
    for (const auto& item : items) {
        order.push_back(&item);
    }
    std::sort(order.begin(), order.end(), [](const PackItem* a, const PackItem* b) {
        if (a->length != b->length) {
            return a->length > b->length;
        }
        return a->sample_id < b->sample_id;
    });

    PackingPlan plan;
    plan.budget = budget;
    std::vector<std::int64_t> free;
    for (const PackItem* item : order) {
        auto slot = std::find_if(free.begin(), free.end(), [&](std::int64_t room) { return room >= item->length; });
        if (slot == free.end()) {
            plan.composites.emplace_back();
            free.push_back(budget);
            slot = free.end() - 1;
        }
        const auto idx = static_cast<std::size_t>(slot - free.begin());
        plan.composites[idx].items.push_back(*item);
        *slot -= item->length;
    }
    return plan;
}

MaskDescriptor build_mask(const Composite& composite) {
    if (composite.items.empty()) {
        throw std::invalid_argument("build_mask: empty composite");
    }
    MaskDescriptor mask;
    for (const auto& item : composite.items) {
        mask.segment_bounds.emplace_back(mask.total_len, mask.total_len + item.length);
        mask.total_len += item.length;
    }
    return mask;
}

bool attends(const MaskDescriptor& mask, std::int64_t i, std::int64_t j) {
    if (i < 0 || j < 0 || i >= mask.total_len || j >= mask.total_len || j > i) {
        return false;
    }
    // segment of i: last one starting at or before i
    auto it = std::upper_bound(mask.segment_bounds.begin(), mask.segment_bounds.end(), i,
                               [](std::int64_t pos, const auto& seg) { return pos < seg.first; });
    const auto& seg = *(it - 1);
    return j >= seg.first;
}

std::int64_t allowed_pairs(const MaskDescriptor& mask) {
    std::int64_t pairs = 0;
    for (const auto& [start, end] : mask.segment_bounds) {
        const auto n = end - start;
        pairs += n * (n + 1) / 2;
    }
    return pairs;
}

double utilization(const PackingPlan& plan) {
    if (plan.composites.empty() || plan.budget < 1) {
        return 0.0;
    }
    std::int64_t used = 0;
    for (const auto& c : plan.composites) {
        used += c.used();
    }
    return static_cast<double>(used) /
           (static_cast<double>(plan.composites.size()) * static_cast<double>(plan.budget));
}

std::string format_plan(const PackingPlan& plan) {
    std::string out;
    for (std::size_t k = 0; k < plan.composites.size(); ++k) {
        const auto& c = plan.composites[k];
        nlohmann::ordered_json j;
        j["composite_id"] = k;
        j["sample_ids"] = nlohmann::ordered_json::array();
        j["lengths"] = nlohmann::ordered_json::array();
        for (const auto& item : c.items) {
            j["sample_ids"].push_back(item.sample_id);
            j["lengths"].push_back(item.length);
        }
        j["segment_bounds"] = nlohmann::ordered_json::array();
        for (const auto& [start, end] : build_mask(c).segment_bounds) {
            j["segment_bounds"].push_back({start, end});
        }
        out += j.dump();
        out += '\n';
    }
    return out;
}

void write_plan(const std::filesystem::path& path, const PackingPlan& plan) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError(fmt::format("cannot write {}", path.string()));
    }
    out << format_plan(plan);
}

} // namespace vidcurate
