#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace vidcurate {

struct PackItem {
    std::string sample_id;
    std::int64_t length = 0;

    bool operator==(const PackItem&) const = default;
};

// Samples concatenated into one training sequence, in placement order.
struct Composite {
    std::vector<PackItem> items;

    std::int64_t used() const;
};

struct PackingPlan {
    std::vector<Composite> composites;
    std::int64_t budget = 0;
};

// First-fit decreasing: samples sorted by length descending (ties by
// sample_id ascending), each placed into the first composite with room.
// Throws DataError naming the sample if any length is < 1 or > budget.
PackingPlan pack_sequences(std::span<const PackItem> items, std::int64_t budget);

// Half-open [start, end) token ranges, one per packed sample.
struct MaskDescriptor {
    std::int64_t total_len = 0;
    std::vector<std::pair<std::int64_t, std::int64_t>> segment_bounds;
};

// Block-diagonal causal mask for a composite. Throws std::invalid_argument
// on an empty composite.
MaskDescriptor build_mask(const Composite& composite);

// Position i may attend to j iff both fall in the same segment and j <= i.
bool attends(const MaskDescriptor& mask, std::int64_t i, std::int64_t j);

// Number of (i, j) pairs the mask allows.
std::int64_t allowed_pairs(const MaskDescriptor& mask);

// Packed tokens / (composites * budget); 0 for an empty plan.
double utilization(const PackingPlan& plan);

// One line per composite: composite_id, sample_ids, lengths, segment_bounds.
std::string format_plan(const PackingPlan& plan);
void write_plan(const std::filesystem::path& path, const PackingPlan& plan);

} // namespace vidcurate
