#include <algorithm>
#include <numeric>
#include <random>

#include "doctest.h"
#include "salicache/baselines.hpp"
#include "salicache/error.hpp"

using namespace salicache;

namespace {

std::vector<TokenId> ids(TokenId first, TokenId last) {
    std::vector<TokenId> v;
    for (TokenId i = first; i <= last; ++i) v.push_back(i);
    return v;
}

// Builds exact scores by splitting each token's mass against a scratch partner token.
ImportanceLedger ledger_with(const std::vector<std::pair<TokenId, double>>& scores) {
    constexpr TokenId scratch = ~TokenId{0};
    ImportanceLedger ledger;
    for (const auto& [id, s] : scores) {
        ledger.track(id);
        const TokenId pair[] = {id, scratch};
        for (double left = s; left > 0; left -= 1.0) {
            const double take = std::min(left, 1.0);
            ledger.accumulate(pair, std::vector<std::vector<double>>{{take, 1.0 - take}});
        }
    }
    ledger.forget(scratch);
    return ledger;
}

std::vector<TokenId> oracle_keep(const ImportanceLedger& ledger, std::vector<TokenId> live, std::size_t budget) {
    std::sort(live.begin(), live.end(), [&](TokenId a, TokenId b) {
        const double sa = ledger.score(a), sb = ledger.score(b);
        return sa != sb ? sa > sb : a > b;
    });
    if (live.size() > budget) live.resize(budget);
    std::sort(live.begin(), live.end());
    return live;
}

}  // namespace

TEST_CASE("sliding window examples") {
    CHECK(sliding_window_step({}, ids(1, 10), 3).live == std::vector<TokenId>{8, 9, 10});
    CHECK(sliding_window_step({}, ids(1, 10), 3).evicted == ids(1, 7));

    const auto under = sliding_window_step({}, ids(1, 3), 5);
    CHECK(under.live == ids(1, 3));
    CHECK(under.evicted.empty());

    auto s1 = sliding_window_step({}, ids(0, 2), 2);
    auto s2 = sliding_window_step(s1.live, ids(3, 5), 2);
    CHECK(s2.live == std::vector<TokenId>{4, 5});
    CHECK(s2.evicted == std::vector<TokenId>{1, 2, 3});
}

TEST_CASE("sliding window keeps the highest ids after any arrival sequence") {
    std::mt19937 rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t budget = 1 + rng() % 50;
        std::vector<TokenId> live, all;
        TokenId next = rng() % 10;
        for (int step = 0; step < 20; ++step) {
            std::vector<TokenId> arriving;
            const std::size_t n = rng() % 30;
            for (std::size_t i = 0; i < n; ++i) {
                next += 1 + rng() % 3;
                arriving.push_back(next);
            }
            all.insert(all.end(), arriving.begin(), arriving.end());
            auto res = sliding_window_step(live, arriving, budget);
            live = res.live;
            const std::size_t keep = std::min(budget, all.size());
            CHECK(live == std::vector<TokenId>(all.end() - static_cast<std::ptrdiff_t>(keep), all.end()));
            for (TokenId e : res.evicted) CHECK(!std::binary_search(live.begin(), live.end(), e));
        }
    }
}

TEST_CASE("sliding window preconditions") {
    CHECK_THROWS_AS(sliding_window_step({5}, std::vector<TokenId>{4}, 3), ConfigError);
    CHECK_THROWS_AS(sliding_window_step({}, std::vector<TokenId>{1, 1}, 3), ConfigError);
    CHECK_THROWS_AS(sliding_window_step({}, std::vector<TokenId>{1}, 0), ConfigError);
    CHECK_THROWS_AS((BudgetConfig{0}.validate()), ConfigError);
}

TEST_CASE("h2o examples") {
    const auto ledger = ledger_with({{0, 1.6}, {1, 0.4}, {2, 0.9}});
    CHECK(ledger.score(0) == doctest::Approx(1.6));
    const auto step = h2o_step(ledger, {0, 1, 2}, 2);
    CHECK(step.evicted == std::vector<TokenId>{1});
    CHECK(step.live == std::vector<TokenId>{0, 2});

    const auto equal = ledger_with({{3, 0.5}, {4, 0.5}, {5, 0.5}, {6, 0.5}});
    CHECK(h2o_step(equal, {6, 4, 5, 3}, 3).evicted == std::vector<TokenId>{3});

    EvictionTrace trace;
    const auto none = h2o_step(ledger, {0, 1, 2}, 3);
    trace.record(none, 16);
    CHECK(none.evicted.empty());
    CHECK(trace.wasted_score_computations == 0);
    trace.record(step, 16);
    CHECK(trace.wasted_score_computations == 16);
    CHECK(trace.evicted == std::vector<TokenId>{1});
}

TEST_CASE("h2o matches a brute-force sort oracle") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 1 + rng() % 2000;
        ImportanceLedger ledger;
        std::vector<TokenId> live(n);
        std::iota(live.begin(), live.end(), TokenId{100});
        std::shuffle(live.begin(), live.end(), rng);
        // Coarse scores to force plenty of ties.
        const int levels = 1 + static_cast<int>(rng() % 6);
        for (std::size_t k = 0; k < 3; ++k) {
            std::vector<double> row(n);
            for (auto& r : row) r = static_cast<double>(rng() % static_cast<std::uint64_t>(levels));
            double z = std::accumulate(row.begin(), row.end(), 0.0);
            if (z == 0) continue;
            for (auto& r : row) r /= z;
            ledger.accumulate(live, std::vector<std::vector<double>>{row});
        }
        for (TokenId id : live) ledger.track(id);
        const std::size_t budget = 1 + rng() % (n + 5);
        const auto step = h2o_step(ledger, live, budget);
        CHECK(step.live == oracle_keep(ledger, live, budget));
        CHECK(step.live.size() == std::min(budget, n));
        CHECK(step.live.size() + step.evicted.size() == n);
    }
}

TEST_CASE("h2o preconditions") {
    ImportanceLedger ledger;
    ledger.track(1);
    CHECK_THROWS_AS(h2o_step(ledger, {1, 2}, 1), InvariantError);
    CHECK_THROWS_AS(h2o_step(ledger, {1}, 0), ConfigError);
}
