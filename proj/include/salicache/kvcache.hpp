#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "salicache/quant.hpp"
#include "salicache/saliency.hpp"

namespace salicache {

struct CacheShape {
    int n_layers = 2;
    int n_kv_heads = 2;
    int head_dim = 16;

    int d_kv() const { return n_kv_heads * head_dim; }
    void validate() const;
};

// K and V for one patch token: n_layers blocks of d_kv floats each, layer-major.
struct PatchKv {
    std::vector<float> keys;
    std::vector<float> values;
};

struct KvPair {
    std::vector<float> key;
    std::vector<float> value;
};

struct TierHistogram {
    std::uint64_t reused = 0;
    std::uint64_t pruned = 0;
    std::uint64_t int4 = 0;
    std::uint64_t int8 = 0;
    std::uint64_t fp16 = 0;

    std::uint64_t total() const { return reused + pruned + int4 + int8 + fp16; }
    void add(Tier t, std::uint64_t n = 1);
    TierHistogram& operator+=(const TierHistogram& o);
    bool operator==(const TierHistogram&) const = default;
};

struct MemoryReport {
    std::uint64_t logical_tokens = 0;  // every patch position, reused aliases and pruned tokens included
    std::uint64_t baseline_bytes = 0;  // 2 * n_l * L * d_kv * sizeof(fp16)
    std::uint64_t actual_payload_bytes = 0;
    std::uint64_t metadata_bytes = 0;
    double compression_ratio = 1.0;          // baseline / (payload + metadata)
    double payload_compression_ratio = 1.0;  // baseline / payload, metadata excluded
    TierHistogram tier_histogram;
};

// baseline / actual; 1.0 for an empty cache and +inf when nothing is stored.
double ratio(std::uint64_t baseline, std::uint64_t actual);

// Modeled cost of one token at FP16 across all layers, K and V.
inline std::uint64_t fp16_token_bytes(const CacheShape& s) {
    return 2ull * static_cast<std::uint64_t>(s.n_layers) * static_cast<std::uint64_t>(s.d_kv()) * 2ull;
}

// Write-once store of per-frame, per-patch K/V. Frames are committed in
// strictly increasing index order by a single writer; committed frames are
// never mutated, so readers may fetch concurrently once a frame is in.
class KvCache {
public:
    // Bytes charged for one whole-frame reuse handle.
    static constexpr std::uint64_t kHandleBytes = 8;

    explicit KvCache(CacheShape shape);

    const CacheShape& shape() const { return shape_; }

    // decisions[i] must be Fp16, Int8, Int4 or Prune.
    void store_frame(int frame_idx, std::span<const Tier> decisions, std::span<const PatchKv> kv);
    // Uncompressed float32 storage, charged as FP16 in the memory model. Used for the reference cache.
    void store_frame_reference(int frame_idx, std::span<const PatchKv> kv);
    void store_reused_frame(int frame_idx, int source_frame_idx);

    // Dequantized K/V for one layer; nullopt for a pruned token.
    std::optional<KvPair> fetch(int frame_idx, int patch_idx, int layer) const;

    MemoryReport memory_report() const;

    struct TokenRef {
        int frame_idx;
        int patch_idx;
    };
    // Every non-pruned token position in commit order, reused aliases included.
    std::vector<TokenRef> live_tokens() const;

    bool contains(int frame_idx) const { return find(frame_idx) != nullptr; }
    std::optional<int> reuse_source(int frame_idx) const;
    std::size_t frame_count() const { return frames_.size(); }
    std::optional<Tier> tier(int frame_idx, int patch_idx) const;

private:
    using Block = std::variant<std::vector<float>, HalfBlock, QuantBlockInt8, QuantBlockInt4>;
    struct StoredPatch {
        Tier tier = Tier::Fp16;
        std::vector<Block> keys;  // one per layer
        std::vector<Block> values;
    };
    struct FrameSlot {
        int frame_idx = 0;
        std::optional<int> source;                       // resolved root frame for reuse handles
        std::vector<std::optional<StoredPatch>> patches;  // nullopt = pruned; empty for reuse handles
        int patch_count = 0;
    };

    const FrameSlot* find(int frame_idx) const;
    const FrameSlot& resolve(const FrameSlot& slot) const;
    void check_order(int frame_idx) const;
    void check_kv(std::span<const PatchKv> kv) const;
    Block encode(Tier tier, std::span<const float> block) const;
    static std::vector<float> decode(const Block& block);

    CacheShape shape_;
    std::vector<FrameSlot> frames_;
};

}  // namespace salicache
