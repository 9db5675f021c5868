#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "salicache/frames.hpp"
#include "salicache/kvcache.hpp"

namespace salicache {

struct AttentionConfig {
    int n_layers = 2;
    int n_q_heads = 8;
    int n_kv_heads = 2;
    int head_dim = 16;
    std::uint64_t seed = 0;

    int embed_dim() const { return n_q_heads * head_dim; }
    int q_dim() const { return n_q_heads * head_dim; }
    int kv_dim() const { return n_kv_heads * head_dim; }
    CacheShape cache_shape() const { return {n_layers, n_kv_heads, head_dim}; }
    // KV head read by query head h.
    int kv_head_for(int q_head) const { return q_head * n_kv_heads / n_q_heads; }
    void validate() const;
};

// Dense row-major matrix, rows x cols.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<float> data;

    std::vector<float> apply(std::span<const float> x) const;
};

struct LayerProjections {
    Matrix query, key, value;
};

// Fixed-seed stand-in for a pretrained encoder: a patch featurizer plus per-layer
// Q/K/V maps. Layers are independent projections of the same token embedding.
class ProjectionSet {
public:
    explicit ProjectionSet(const AttentionConfig& config);

    const AttentionConfig& config() const { return config_; }
    const LayerProjections& layer(int l) const { return layers_[static_cast<std::size_t>(l)]; }

    // Unit-norm embedding per patch: mean/std colour and a sinusoidal position code,
    // mixed by a seeded projection.
    std::vector<std::vector<float>> embed_patches(const Frame& frame, const PatchGrid& grid) const;
    PatchKv project_kv(std::span<const float> embedding) const;
    std::vector<float> project_query(std::span<const float> embedding, int layer) const;
    // Unit-norm query vectors (length q_dim) for fidelity probing, fixed by seed and layer.
    std::vector<std::vector<float>> probe_queries(int layer, int count) const;

    static constexpr int kFeatureDim = 23;

private:
    AttentionConfig config_;
    Matrix featurizer_;
    std::vector<LayerProjections> layers_;
};

// One key/value head-concatenated pair per attendable token, length kv_dim each.
struct KvView {
    std::vector<std::span<const float>> keys;
    std::vector<std::span<const float>> values;
};

struct AttentionResult {
    std::vector<std::vector<float>> outputs;                // [query][q_dim]
    std::vector<std::vector<std::vector<double>>> weights;  // [query][q_head][token]
};

// softmax(q k^T / sqrt(d_k)) v per query head, GQA head mapping, max-subtracted softmax.
AttentionResult attend(std::span<const std::vector<float>> queries, const KvView& kv, const AttentionConfig& config);

// Attention over every live (non-pruned) token of the cache at one layer, JIT-dequantized.
struct CacheAttention {
    AttentionResult result;
    std::vector<KvCache::TokenRef> tokens;
};
CacheAttention gqa_attention(std::span<const std::vector<float>> queries, const KvCache& cache, int layer,
                             const AttentionConfig& config);

std::vector<double> softmax(std::span<const double> logits);

using TokenId = std::uint64_t;

// Cumulative attention mass per token, summed over heads and layers.
class ImportanceLedger {
public:
    // Adds one query's softmax rows (one per head/layer pair) over `tokens`.
    void accumulate(std::span<const TokenId> tokens, std::span<const std::vector<double>> rows);
    void track(TokenId id) { scores_.try_emplace(id, 0.0); }
    void forget(TokenId id) { scores_.erase(id); }

    double score(TokenId id) const;
    bool covers(TokenId id) const { return scores_.contains(id); }
    std::uint64_t query_count() const { return queries_; }
    std::size_t size() const { return scores_.size(); }

private:
    std::unordered_map<TokenId, double> scores_;
    std::uint64_t queries_ = 0;
};

}  // namespace salicache
