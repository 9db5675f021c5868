#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "salicache/attention.hpp"

namespace salicache {

struct BudgetConfig {
    std::size_t budget = 784;  // live patch tokens

    void validate() const;
};

struct EvictionStep {
    std::vector<TokenId> live;  // ascending id (arrival) order
    std::vector<TokenId> evicted;
};

struct EvictionTrace {
    std::vector<TokenId> evicted;
    // Attention-score evaluations spent on tokens that were then evicted.
    std::uint64_t wasted_score_computations = 0;

    void record(const EvictionStep& step, std::uint64_t scorings_per_token);
};

// Appends `arriving` (ids strictly increasing, newer than everything live) and
// drops the oldest tokens until at most `budget` remain.
EvictionStep sliding_window_step(std::vector<TokenId> live, std::span<const TokenId> arriving, std::size_t budget);

// Drops lowest cumulative-importance tokens until at most `budget` remain;
// equal scores evict the older (lower id) token first.
EvictionStep h2o_step(const ImportanceLedger& ledger, std::vector<TokenId> live, std::size_t budget);

}  // namespace salicache
