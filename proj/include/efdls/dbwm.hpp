#pragma once

#include "efdls/extractor.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace efdls {

struct WeightTableEntry {
    std::uint32_t user_id = 0;
    WeightBundle bundle;
};

// Uploaded hidden weights of the connected users for one epoch, in upload order.
struct WeightTable {
    std::vector<WeightTableEntry> entries;
    std::int64_t epoch = 0;

    void clear(std::int64_t new_epoch) {
        entries.clear();
        epoch = new_epoch;
    }
    void add(std::uint32_t user_id, WeightBundle bundle);
    std::size_t size() const { return entries.size(); }
    bool contains(std::uint32_t user_id) const;
};

// Square matrix with an undefined (NaN) diagonal.
struct DistanceMatrix {
    std::size_t n = 0;
    std::vector<double> values;

    double at(std::size_t i, std::size_t j) const { return values[i * n + j]; }
    double& at(std::size_t i, std::size_t j) { return values[i * n + j]; }
};

struct MatchAssignment {
    std::vector<std::size_t> ids;  // ids[i] = table index of user i's partner
};

// Squared L2 distance over learnable entries; running statistics are skipped.
double bundle_distance(const WeightBundle& a, const WeightBundle& b);

// Throws InsufficientUsersError for fewer than two entries.
DistanceMatrix pairwise_distances(const WeightTable& table);

MatchAssignment match_partners(const DistanceMatrix& d);

// (user_id, copy of the partner's bundle) for each table entry, in table order.
std::vector<std::pair<std::uint32_t, WeightBundle>> dispatch_matched(const WeightTable& table,
                                                                     const MatchAssignment& assignment);

namespace serial {
DistanceMatrix pairwise_distances(const WeightTable& table);
}

}  // namespace efdls
