#include "salicache/baselines.hpp"

#include <algorithm>

#include "salicache/error.hpp"

namespace salicache {

void BudgetConfig::validate() const {
    if (budget < 1) throw ConfigError("budget must be >= 1");
}

void EvictionTrace::record(const EvictionStep& step, std::uint64_t scorings_per_token) {
    evicted.insert(evicted.end(), step.evicted.begin(), step.evicted.end());
    wasted_score_computations += static_cast<std::uint64_t>(step.evicted.size()) * scorings_per_token;
}

EvictionStep sliding_window_step(std::vector<TokenId> live, std::span<const TokenId> arriving, std::size_t budget) {
    if (budget < 1) throw ConfigError("budget must be >= 1");
    for (std::size_t i = 0; i < arriving.size(); ++i) {
        const bool ordered = (i == 0) ? (live.empty() || arriving[0] > live.back()) : arriving[i] > arriving[i - 1];
        if (!ordered) throw ConfigError("token ids must be strictly increasing in arrival order");
    }
    live.insert(live.end(), arriving.begin(), arriving.end());
    EvictionStep step;
    if (live.size() > budget) {
        const auto cut = live.end() - static_cast<std::ptrdiff_t>(budget);
        step.evicted.assign(live.begin(), cut);
        live.erase(live.begin(), cut);
    }
    step.live = std::move(live);
    return step;
}

EvictionStep h2o_step(const ImportanceLedger& ledger, std::vector<TokenId> live, std::size_t budget) {
    if (budget < 1) throw ConfigError("budget must be >= 1");
    for (TokenId id : live)
        if (!ledger.covers(id)) throw InvariantError("ledger/live mismatch: token " + std::to_string(id) + " untracked");
    EvictionStep step;
    if (live.size() <= budget) {
        std::sort(live.begin(), live.end());
        step.live = std::move(live);
        return step;
    }
    const auto evict_first = [&](TokenId a, TokenId b) {
        const double sa = ledger.score(a), sb = ledger.score(b);
        return sa != sb ? sa < sb : a < b;
    };
    const auto n_evict = static_cast<std::ptrdiff_t>(live.size() - budget);
    std::nth_element(live.begin(), live.begin() + n_evict, live.end(), evict_first);
    step.evicted.assign(live.begin(), live.begin() + n_evict);
    std::sort(step.evicted.begin(), step.evicted.end(), evict_first);
    live.erase(live.begin(), live.begin() + n_evict);
    std::sort(live.begin(), live.end());
    step.live = std::move(live);
    return step;
}

}  // namespace salicache
