#include "efdls/dbwm.hpp"

#include "efdls/errors.hpp"
#include "efdls/kernels.hpp"

#include <cmath>
#include <limits>

namespace efdls {

void WeightTable::add(std::uint32_t user_id, WeightBundle bundle) {
    if (contains(user_id)) {
        throw StateError("weight table already holds an upload from user " + std::to_string(user_id));
    }
    if (!entries.empty() && !entries.front().bundle.same_layout(bundle)) {
        throw IncompatibleBundleError("bundle from user " + std::to_string(user_id) +
                                      " does not match the table layout");
    }
    entries.push_back({user_id, std::move(bundle)});
}

bool WeightTable::contains(std::uint32_t user_id) const {
    for (const auto& e : entries) {
        if (e.user_id == user_id) return true;
    }
    return false;
}

double bundle_distance(const WeightBundle& a, const WeightBundle& b) {
    if (!a.same_layout(b)) throw IncompatibleBundleError("bundle_distance: bundles differ in layout");
    double total = 0.0;
    for (std::size_t i = 0; i < a.entries.size(); ++i) {
        if (!a.entries[i].learnable()) continue;
        total += kernels::serial::squared_distance(a.entries[i].value.values(), b.entries[i].value.values());
    }
    return total;
}

namespace {

DistanceMatrix empty_matrix(const WeightTable& table) {
    const std::size_t n = table.size();
    if (n < 2) {
        throw InsufficientUsersError("distance matching needs at least 2 connected users, got " + std::to_string(n));
    }
    for (std::size_t i = 1; i < n; ++i) {
        if (!table.entries[0].bundle.same_layout(table.entries[i].bundle)) {
            throw IncompatibleBundleError("weight table entries differ in layout (user " +
                                          std::to_string(table.entries[i].user_id) + ")");
        }
    }
    DistanceMatrix d;
    d.n = n;
    d.values.assign(n * n, std::numeric_limits<double>::quiet_NaN());
    return d;
}

}  // namespace

DistanceMatrix pairwise_distances(const WeightTable& table) {
    DistanceMatrix d = empty_matrix(table);
    const std::size_t n = d.n;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    pairs.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
    }
    const auto count = static_cast<std::ptrdiff_t>(pairs.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t p = 0; p < count; ++p) {
        const auto [i, j] = pairs[static_cast<std::size_t>(p)];
        const double v = bundle_distance(table.entries[i].bundle, table.entries[j].bundle);
        d.at(i, j) = v;
        d.at(j, i) = v;
    }
    return d;
}

namespace serial {

DistanceMatrix pairwise_distances(const WeightTable& table) {
    DistanceMatrix d = empty_matrix(table);
    for (std::size_t i = 0; i < d.n; ++i) {
        for (std::size_t j = i + 1; j < d.n; ++j) {
            d.at(i, j) = bundle_distance(table.entries[i].bundle, table.entries[j].bundle);
            d.at(j, i) = d.at(i, j);
        }
    }
    return d;
}

}  // namespace serial

MatchAssignment match_partners(const DistanceMatrix& d) {
    if (d.n < 2) throw InsufficientUsersError("match_partners needs at least 2 users");
    MatchAssignment out;
    out.ids.resize(d.n);
    for (std::size_t i = 0; i < d.n; ++i) {
        std::size_t best = i == 0 ? 1 : 0;
        for (std::size_t j = best + 1; j < d.n; ++j) {
            if (j != i && d.at(i, j) < d.at(i, best)) best = j;
        }
        out.ids[i] = best;
    }
    return out;
}

std::vector<std::pair<std::uint32_t, WeightBundle>> dispatch_matched(const WeightTable& table,
                                                                     const MatchAssignment& assignment) {
    if (assignment.ids.size() != table.size()) {
        throw DimensionError("assignment has " + std::to_string(assignment.ids.size()) + " ids for " +
                             std::to_string(table.size()) + " table entries");
    }
    std::vector<std::pair<std::uint32_t, WeightBundle>> out;
    out.reserve(table.size());
    for (std::size_t i = 0; i < table.size(); ++i) {
        const std::size_t partner = assignment.ids[i];
        if (partner >= table.size() || partner == i) {
            throw StateError("invalid partner index " + std::to_string(partner) + " for entry " + std::to_string(i));
        }
        out.emplace_back(table.entries[i].user_id, table.entries[partner].bundle);
    }
    return out;
}

}  // namespace efdls
