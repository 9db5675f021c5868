#include "salicache/attention.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "salicache/error.hpp"
#include "salicache/rng.hpp"

namespace salicache {

void AttentionConfig::validate() const {
    if (n_layers <= 0 || n_q_heads <= 0 || n_kv_heads <= 0 || head_dim <= 0)
        throw ConfigError("attention dimensions must be positive");
    if (n_q_heads % n_kv_heads != 0) throw ConfigError("n_q_heads must be a multiple of n_kv_heads");
}

std::vector<float> Matrix::apply(std::span<const float> x) const {
    if (static_cast<int>(x.size()) != cols) throw InvariantError("matrix/vector dimension mismatch");
    std::vector<float> y(static_cast<std::size_t>(rows));
    for (int r = 0; r < rows; ++r) {
        double acc = 0.0;
        const float* row = data.data() + static_cast<std::size_t>(r) * cols;
        for (int c = 0; c < cols; ++c) acc += static_cast<double>(row[c]) * x[static_cast<std::size_t>(c)];
        y[static_cast<std::size_t>(r)] = static_cast<float>(acc);
    }
    return y;
}

namespace {

// Entries uniform on [-sqrt(3), sqrt(3)] (unit variance) scaled by 1/sqrt(cols).
Matrix seeded_matrix(int rows, int cols, std::uint64_t seed) {
    Matrix m{rows, cols, std::vector<float>(static_cast<std::size_t>(rows) * cols)};
    SeededStream stream(seed);
    const double scale = std::sqrt(3.0) / std::sqrt(static_cast<double>(cols));
    for (float& v : m.data) v = static_cast<float>(stream.next_signed() * scale);
    return m;
}

std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t layer, std::uint64_t role) {
    return splitmix64(seed ^ splitmix64(layer * 16 + role + 1));
}

void normalize(std::vector<float>& v) {
    double ss = 0.0;
    for (float x : v) ss += static_cast<double>(x) * x;
    const double norm = std::sqrt(ss);
    if (norm == 0.0) throw InvariantError("cannot normalize a zero vector");
    for (float& x : v) x = static_cast<float>(x / norm);
}

}  // namespace

ProjectionSet::ProjectionSet(const AttentionConfig& config) : config_(config) {
    config_.validate();
    const int e = config_.embed_dim();
    featurizer_ = seeded_matrix(e, kFeatureDim, sub_seed(config_.seed, 0, 0));
    for (int l = 0; l < config_.n_layers; ++l) {
        const auto ul = static_cast<std::uint64_t>(l) + 1;
        layers_.push_back(LayerProjections{seeded_matrix(config_.q_dim(), e, sub_seed(config_.seed, ul, 1)),
                                           seeded_matrix(config_.kv_dim(), e, sub_seed(config_.seed, ul, 2)),
                                           seeded_matrix(config_.kv_dim(), e, sub_seed(config_.seed, ul, 3))});
    }
}

std::vector<std::vector<float>> ProjectionSet::embed_patches(const Frame& frame, const PatchGrid& grid) const {
    if (!grid.covers(frame.dims())) throw ConfigError("embed_patches: grid does not match frame");
    const int p = grid.patch_size;
    const double n = static_cast<double>(p) * p;
    std::vector<std::vector<float>> out;
    out.reserve(static_cast<std::size_t>(grid.patch_count()));
    for (int i = 0; i < grid.patch_count(); ++i) {
        const PatchRect r = grid.rect(i);
        std::vector<float> f;
        f.reserve(kFeatureDim);
        double sum[3] = {0, 0, 0}, sq[3] = {0, 0, 0};
        for (int y = r.y0; y < r.y0 + p; ++y)
            for (int x = r.x0; x < r.x0 + p; ++x)
                for (int c = 0; c < 3; ++c) {
                    const double v = frame.unit(x, y, c);
                    sum[c] += v;
                    sq[c] += v * v;
                }
        for (int c = 0; c < 3; ++c) f.push_back(static_cast<float>(2.0 * sum[c] / n - 1.0));
        for (int c = 0; c < 3; ++c) {
            const double mean = sum[c] / n;
            f.push_back(static_cast<float>(2.0 * std::sqrt(std::max(0.0, sq[c] / n - mean * mean))));
        }
        const double row = (i / grid.cols + 0.5) / grid.rows;
        const double col = (i % grid.cols + 0.5) / grid.cols;
        for (int k = 1; k <= 4; ++k) {
            f.push_back(static_cast<float>(std::sin(std::numbers::pi * k * row)));
            f.push_back(static_cast<float>(std::cos(std::numbers::pi * k * row)));
            f.push_back(static_cast<float>(std::sin(std::numbers::pi * k * col)));
            f.push_back(static_cast<float>(std::cos(std::numbers::pi * k * col)));
        }
        f.push_back(1.0f);
        auto e = featurizer_.apply(f);
        normalize(e);
        out.push_back(std::move(e));
    }
    return out;
}

PatchKv ProjectionSet::project_kv(std::span<const float> embedding) const {
    PatchKv kv;
    for (const auto& layer : layers_) {
        const auto k = layer.key.apply(embedding);
        const auto v = layer.value.apply(embedding);
        kv.keys.insert(kv.keys.end(), k.begin(), k.end());
        kv.values.insert(kv.values.end(), v.begin(), v.end());
    }
    return kv;
}

std::vector<float> ProjectionSet::project_query(std::span<const float> embedding, int layer) const {
    if (layer < 0 || layer >= config_.n_layers) throw ConfigError("layer out of range");
    return layers_[static_cast<std::size_t>(layer)].query.apply(embedding);
}

std::vector<std::vector<float>> ProjectionSet::probe_queries(int layer, int count) const {
    SeededStream stream(sub_seed(config_.seed, static_cast<std::uint64_t>(layer) + 1, 7));
    std::vector<std::vector<float>> probes;
    for (int i = 0; i < count; ++i) {
        std::vector<float> q(static_cast<std::size_t>(config_.q_dim()));
        for (float& v : q) v = static_cast<float>(stream.next_signed());
        normalize(q);
        probes.push_back(std::move(q));
    }
    return probes;
}

// ---------------------------------------------------------------------------

std::vector<double> softmax(std::span<const double> logits) {
    if (logits.empty()) throw ConfigError("no attendable tokens");
    const double peak = *std::max_element(logits.begin(), logits.end());
    std::vector<double> w(logits.size());
    double total = 0.0;
    for (std::size_t j = 0; j < logits.size(); ++j) {
        w[j] = std::exp(logits[j] - peak);
        total += w[j];
    }
    for (double& x : w) x /= total;
    return w;
}

AttentionResult attend(std::span<const std::vector<float>> queries, const KvView& kv, const AttentionConfig& config) {
    config.validate();
    if (kv.keys.empty()) throw ConfigError("no attendable tokens");
    if (kv.keys.size() != kv.values.size()) throw InvariantError("key/value count mismatch");
    const int hd = config.head_dim;
    const std::size_t n = kv.keys.size();
    for (std::size_t j = 0; j < n; ++j)
        if (kv.keys[j].size() != static_cast<std::size_t>(config.kv_dim()) ||
            kv.values[j].size() != static_cast<std::size_t>(config.kv_dim()))
            throw ConfigError("key/value width does not match n_kv_heads * head_dim");
    const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(hd));

    AttentionResult result;
    std::vector<double> logits(n);
    for (const auto& q : queries) {
        if (q.size() != static_cast<std::size_t>(config.q_dim())) throw ConfigError("query width must be n_q_heads * head_dim");
        std::vector<float> out(q.size(), 0.0f);
        std::vector<std::vector<double>> head_weights;
        for (int h = 0; h < config.n_q_heads; ++h) {
            const std::size_t qoff = static_cast<std::size_t>(h) * hd;
            const std::size_t koff = static_cast<std::size_t>(config.kv_head_for(h)) * hd;
            for (std::size_t j = 0; j < n; ++j) {
                double dot = 0.0;
                for (int d = 0; d < hd; ++d) dot += static_cast<double>(q[qoff + d]) * kv.keys[j][koff + d];
                logits[j] = dot * inv_sqrt_dk;
            }
            auto w = softmax(logits);
            for (int d = 0; d < hd; ++d) {
                double acc = 0.0;
                for (std::size_t j = 0; j < n; ++j) acc += w[j] * kv.values[j][koff + d];
                out[qoff + d] = static_cast<float>(acc);
            }
            head_weights.push_back(std::move(w));
        }
        result.outputs.push_back(std::move(out));
        result.weights.push_back(std::move(head_weights));
    }
    return result;
}

CacheAttention gqa_attention(std::span<const std::vector<float>> queries, const KvCache& cache, int layer,
                             const AttentionConfig& config) {
    if (cache.shape().n_kv_heads != config.n_kv_heads || cache.shape().head_dim != config.head_dim)
        throw ConfigError("cache shape does not match attention config");
    CacheAttention out;
    out.tokens = cache.live_tokens();
    if (out.tokens.empty()) throw ConfigError("no attendable tokens");
    std::vector<KvPair> pairs;
    pairs.reserve(out.tokens.size());
    for (const auto& t : out.tokens) {
        auto kv = cache.fetch(t.frame_idx, t.patch_idx, layer);
        if (!kv) throw InvariantError("live token fetched as pruned");
        pairs.push_back(std::move(*kv));
    }
    KvView view;
    for (const auto& p : pairs) {
        view.keys.emplace_back(p.key);
        view.values.emplace_back(p.value);
    }
    out.result = attend(queries, view, config);
    return out;
}

// ---------------------------------------------------------------------------

void ImportanceLedger::accumulate(std::span<const TokenId> tokens, std::span<const std::vector<double>> rows) {
    for (const auto& row : rows) {
        if (row.size() != tokens.size()) throw InvariantError("attention row length does not match token count");
        double total = 0.0;
        for (double a : row) total += a;
        if (std::abs(total - 1.0) > 1e-4)
            throw InvariantError("attention row sums to " + std::to_string(total) + ", expected 1");
    }
    for (std::size_t j = 0; j < tokens.size(); ++j) {
        double add = 0.0;
        for (const auto& row : rows) add += row[j];
        scores_[tokens[j]] += add;
    }
    ++queries_;
}

double ImportanceLedger::score(TokenId id) const {
    const auto it = scores_.find(id);
    return it == scores_.end() ? 0.0 : it->second;
}

}  // namespace salicache
