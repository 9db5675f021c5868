#include "salicache/kvcache.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "salicache/error.hpp"

namespace salicache {

void CacheShape::validate() const {
    if (n_layers <= 0 || n_kv_heads <= 0 || head_dim <= 0) throw ConfigError("cache shape entries must be positive");
}

void TierHistogram::add(Tier t, std::uint64_t n) {
    switch (t) {
        case Tier::Reused: reused += n; break;
        case Tier::Prune: pruned += n; break;
        case Tier::Int4: int4 += n; break;
        case Tier::Int8: int8 += n; break;
        case Tier::Fp16: fp16 += n; break;
    }
}

TierHistogram& TierHistogram::operator+=(const TierHistogram& o) {
    reused += o.reused;
    pruned += o.pruned;
    int4 += o.int4;
    int8 += o.int8;
    fp16 += o.fp16;
    return *this;
}

double ratio(std::uint64_t baseline, std::uint64_t actual) {
    if (baseline == 0) return 1.0;
    if (actual == 0) return std::numeric_limits<double>::infinity();
    return static_cast<double>(baseline) / static_cast<double>(actual);
}

KvCache::KvCache(CacheShape shape) : shape_(shape) { shape_.validate(); }

const KvCache::FrameSlot* KvCache::find(int frame_idx) const {
    auto it = std::lower_bound(frames_.begin(), frames_.end(), frame_idx,
                               [](const FrameSlot& s, int idx) { return s.frame_idx < idx; });
    return (it != frames_.end() && it->frame_idx == frame_idx) ? &*it : nullptr;
}

const KvCache::FrameSlot& KvCache::resolve(const FrameSlot& slot) const {
    if (!slot.source) return slot;
    const FrameSlot* root = find(*slot.source);
    if (root == nullptr || root->source) throw InvariantError("reuse handle does not point at a stored frame");
    return *root;
}

void KvCache::check_order(int frame_idx) const {
    if (frame_idx < 0) throw ConfigError("frame index must be non-negative");
    if (find(frame_idx) != nullptr) throw ConfigError("duplicate frame " + std::to_string(frame_idx));
    if (!frames_.empty() && frame_idx < frames_.back().frame_idx)
        throw ConfigError("out-of-order frame index " + std::to_string(frame_idx));
}

void KvCache::check_kv(std::span<const PatchKv> kv) const {
    const std::size_t expect = static_cast<std::size_t>(shape_.n_layers) * shape_.d_kv();
    for (const auto& p : kv)
        if (p.keys.size() != expect || p.values.size() != expect)
            throw ConfigError("K/V tensor shape does not match cache shape");
}

KvCache::Block KvCache::encode(Tier tier, std::span<const float> block) const {
    switch (tier) {
        case Tier::Fp16: return to_half(block);
        case Tier::Int8: return quantize_int8(block);
        case Tier::Int4: return quantize_int4(block);
        default: throw InvariantError("tier has no payload codec");
    }
}

std::vector<float> KvCache::decode(const Block& block) {
    struct Visitor {
        std::vector<float> operator()(const std::vector<float>& b) const { return b; }
        std::vector<float> operator()(const HalfBlock& b) const { return from_half(b); }
        std::vector<float> operator()(const QuantBlockInt8& b) const { return dequantize_int8(b); }
        std::vector<float> operator()(const QuantBlockInt4& b) const { return dequantize_int4(b); }
    };
    return std::visit(Visitor{}, block);
}

void KvCache::store_frame(int frame_idx, std::span<const Tier> decisions, std::span<const PatchKv> kv) {
    check_order(frame_idx);
    if (decisions.size() != kv.size()) throw ConfigError("decision count does not match K/V patch count");
    if (decisions.empty()) throw ConfigError("frame has no patches");
    check_kv(kv);

    const std::size_t d = static_cast<std::size_t>(shape_.d_kv());
    FrameSlot slot;
    slot.frame_idx = frame_idx;
    slot.patch_count = static_cast<int>(decisions.size());
    slot.patches.reserve(decisions.size());
    for (std::size_t i = 0; i < decisions.size(); ++i) {
        const Tier t = decisions[i];
        if (t == Tier::Reused) throw ConfigError("Reused is not a per-patch storage tier");
        if (t == Tier::Prune) {
            slot.patches.emplace_back(std::nullopt);
            continue;
        }
        StoredPatch patch;
        patch.tier = t;
        for (int l = 0; l < shape_.n_layers; ++l) {
            const std::size_t off = static_cast<std::size_t>(l) * d;
            patch.keys.push_back(encode(t, std::span(kv[i].keys).subspan(off, d)));
            patch.values.push_back(encode(t, std::span(kv[i].values).subspan(off, d)));
        }
        slot.patches.emplace_back(std::move(patch));
    }
    frames_.push_back(std::move(slot));
}

void KvCache::store_frame_reference(int frame_idx, std::span<const PatchKv> kv) {
    check_order(frame_idx);
    if (kv.empty()) throw ConfigError("frame has no patches");
    check_kv(kv);
    const std::size_t d = static_cast<std::size_t>(shape_.d_kv());
    FrameSlot slot;
    slot.frame_idx = frame_idx;
    slot.patch_count = static_cast<int>(kv.size());
    for (const auto& p : kv) {
        StoredPatch patch;
        patch.tier = Tier::Fp16;
        for (int l = 0; l < shape_.n_layers; ++l) {
            const auto off = static_cast<std::ptrdiff_t>(l * d);
            patch.keys.emplace_back(std::vector<float>(p.keys.begin() + off, p.keys.begin() + off + static_cast<std::ptrdiff_t>(d)));
            patch.values.emplace_back(
                std::vector<float>(p.values.begin() + off, p.values.begin() + off + static_cast<std::ptrdiff_t>(d)));
        }
        slot.patches.emplace_back(std::move(patch));
    }
    frames_.push_back(std::move(slot));
}

void KvCache::store_reused_frame(int frame_idx, int source_frame_idx) {
    if (source_frame_idx >= frame_idx)
        throw ConfigError("reuse must reference an earlier frame (forward reference to " +
                          std::to_string(source_frame_idx) + ")");
    const FrameSlot* source = find(source_frame_idx);
    if (source == nullptr) throw ConfigError("reuse of unknown or uncommitted frame " + std::to_string(source_frame_idx));
    check_order(frame_idx);
    FrameSlot slot;
    slot.frame_idx = frame_idx;
    slot.source = source->source ? *source->source : source->frame_idx;
    slot.patch_count = source->patch_count;
    frames_.push_back(std::move(slot));
}

std::optional<KvPair> KvCache::fetch(int frame_idx, int patch_idx, int layer) const {
    const FrameSlot* slot = find(frame_idx);
    if (slot == nullptr) throw ConfigError("unknown frame " + std::to_string(frame_idx));
    if (patch_idx < 0 || patch_idx >= slot->patch_count) throw ConfigError("unknown patch " + std::to_string(patch_idx));
    if (layer < 0 || layer >= shape_.n_layers) throw ConfigError("layer out of range");
    const auto& entry = resolve(*slot).patches[static_cast<std::size_t>(patch_idx)];
    if (!entry) return std::nullopt;
    const auto l = static_cast<std::size_t>(layer);
    return KvPair{decode(entry->keys[l]), decode(entry->values[l])};
}

std::optional<int> KvCache::reuse_source(int frame_idx) const {
    const FrameSlot* slot = find(frame_idx);
    if (slot == nullptr) throw ConfigError("unknown frame " + std::to_string(frame_idx));
    return slot->source;
}

std::optional<Tier> KvCache::tier(int frame_idx, int patch_idx) const {
    const FrameSlot* slot = find(frame_idx);
    if (slot == nullptr || patch_idx < 0 || patch_idx >= slot->patch_count) return std::nullopt;
    if (slot->source) return Tier::Reused;
    const auto& entry = slot->patches[static_cast<std::size_t>(patch_idx)];
    return entry ? entry->tier : Tier::Prune;
}

std::vector<KvCache::TokenRef> KvCache::live_tokens() const {
    std::vector<TokenRef> out;
    for (const auto& slot : frames_) {
        const FrameSlot& root = resolve(slot);
        for (int p = 0; p < slot.patch_count; ++p)
            if (root.patches[static_cast<std::size_t>(p)]) out.push_back({slot.frame_idx, p});
    }
    return out;
}

MemoryReport KvCache::memory_report() const {
    MemoryReport r;
    const auto d = static_cast<std::size_t>(shape_.d_kv());
    const auto blocks = 2ull * static_cast<std::uint64_t>(shape_.n_layers);  // K and V per layer
    for (const auto& slot : frames_) {
        r.logical_tokens += static_cast<std::uint64_t>(slot.patch_count);
        if (slot.source) {
            r.tier_histogram.add(Tier::Reused, static_cast<std::uint64_t>(slot.patch_count));
            r.metadata_bytes += kHandleBytes;
            continue;
        }
        for (const auto& entry : slot.patches) {
            if (!entry) {
                r.tier_histogram.add(Tier::Prune);
                continue;
            }
            r.tier_histogram.add(entry->tier);
            BlockBytes b;
            switch (entry->tier) {
                case Tier::Fp16: b = fp16_bytes(d); break;
                case Tier::Int8: b = int8_bytes(d); break;
                case Tier::Int4: b = int4_bytes(d); break;
                default: throw InvariantError("stored entry with non-storage tier");
            }
            r.actual_payload_bytes += blocks * b.payload;
            r.metadata_bytes += blocks * b.metadata;
        }
    }
    r.baseline_bytes = r.logical_tokens * fp16_token_bytes(shape_);
    const std::uint64_t actual = r.actual_payload_bytes + r.metadata_bytes;
    r.compression_ratio = ratio(r.baseline_bytes, actual);
    r.payload_compression_ratio = ratio(r.baseline_bytes, r.actual_payload_bytes);
    return r;
}

}  // namespace salicache
