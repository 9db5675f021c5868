#include "salicache/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <unordered_map>

#include "salicache/error.hpp"

namespace salicache {

std::string_view method_name(Method m) {
    switch (m) {
        case Method::Baseline: return "baseline";
        case Method::Sliding: return "sliding";
        case Method::H2o: return "h2o";
        case Method::SaliCache: return "salicache";
    }
    return "?";
}

Method parse_method(std::string_view name) {
    for (Method m : {Method::Baseline, Method::Sliding, Method::H2o, Method::SaliCache})
        if (method_name(m) == name) return m;
    throw ConfigError("unknown method: " + std::string(name));
}

std::vector<Method> parse_methods(std::string_view list) {
    std::vector<Method> out;
    while (!list.empty()) {
        const auto comma = list.find(',');
        const auto item = list.substr(0, comma);
        if (!item.empty()) {
            const Method m = parse_method(item);
            if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
        }
        if (comma == std::string_view::npos) break;
        list.remove_prefix(comma + 1);
    }
    if (out.empty()) throw ConfigError("empty method list");
    std::sort(out.begin(), out.end());
    return out;
}

bool RunConfig::has(Method m) const { return std::find(methods.begin(), methods.end(), m) != methods.end(); }

void RunConfig::validate() const {
    if (methods.empty()) throw ConfigError("at least one method must be selected");
    if (fidelity && !has(Method::Baseline)) throw ConfigError("fidelity requires the baseline method");
    if (patch_size <= 0) throw ConfigError("patch size must be positive");
    if (probe_count < 1) throw ConfigError("probe count must be >= 1");
    if (!input.manifest && input.frame_count < 1) throw ConfigError("frame count must be >= 1");
    temporal.validate();
    saliency.validate();
    attention.validate();
    budget.validate();
}

nlohmann::ordered_json RunConfig::to_json() const {
    nlohmann::ordered_json j;
    if (input.manifest) {
        j["input"] = {{"manifest", input.manifest->generic_string()}};
    } else {
        j["input"] = {{"synthetic", std::string(scenario_name(input.scenario))},
                      {"frames_count", input.frame_count},
                      {"width", input.dims.width},
                      {"height", input.dims.height}};
    }
    j["patch_size"] = patch_size;
    j["temporal"] = {{"tau_t", temporal.tau_t}, {"theta_r", temporal.theta_r}};
    j["saliency"] = {{"sigma", saliency.gaussian_sigma},       {"canny_low", saliency.canny_low},
                     {"canny_high", saliency.canny_high},      {"var_window", saliency.variance_window},
                     {"edge_weight", saliency.edge_weight},    {"variance_weight", saliency.variance_weight},
                     {"tau_high", saliency.tau_high},          {"tau_med", saliency.tau_med},
                     {"tau_low", saliency.tau_low}};
    j["attention"] = {{"layers", attention.n_layers},
                      {"q_heads", attention.n_q_heads},
                      {"kv_heads", attention.n_kv_heads},
                      {"head_dim", attention.head_dim}};
    j["seed"] = attention.seed;
    j["budget"] = budget.budget;
    auto names = nlohmann::ordered_json::array();
    for (Method m : methods) names.push_back(std::string(method_name(m)));
    j["methods"] = names;
    j["fidelity_metric"] = fidelity ? "final-layer attention outputs on " + std::to_string(probe_count) +
                                          " fixed-seed unit-norm probe queries, compared with the uncompressed baseline"
                                    : "disabled";
    j["memory_model"] =
        "baseline_bytes = 2 * layers * L * d_kv * 2 (fp16); compression_ratio includes quantization metadata "
        "and 8-byte reuse handles, payload_compression_ratio excludes them";
    return j;
}

std::vector<Frame> load_frames(RunConfig& config) {
    if (config.input.manifest) {
        const auto manifest = load_manifest(*config.input.manifest);
        config.patch_size = manifest.patch_size;
        return load_sequence(manifest);
    }
    return synth_sequence(config.input.scenario, config.input.frame_count, config.input.dims, config.patch_size,
                          config.attention.seed);
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

TokenId token_id(int frame_idx, int patch, int patches_per_frame) {
    return static_cast<TokenId>(frame_idx) * static_cast<TokenId>(patches_per_frame) + static_cast<TokenId>(patch);
}

std::vector<float> round_through_half(const std::vector<float>& v) { return from_half(to_half(v)); }

// Token-level FP16 store shared by the eviction baselines.
struct TokenStore {
    std::unordered_map<TokenId, PatchKv> entries;
    std::vector<TokenId> live;

    KvView view(int layer, int d_kv) const {
        KvView v;
        const auto off = static_cast<std::size_t>(layer) * static_cast<std::size_t>(d_kv);
        for (TokenId id : live) {
            const auto& kv = entries.at(id);
            v.keys.emplace_back(std::span(kv.keys).subspan(off, static_cast<std::size_t>(d_kv)));
            v.values.emplace_back(std::span(kv.values).subspan(off, static_cast<std::size_t>(d_kv)));
        }
        return v;
    }
};

struct FrameInputs {
    PatchGrid grid;
    std::vector<std::vector<std::vector<float>>> embeddings;  // [frame][patch]
};

FrameInputs embed_all(const std::vector<Frame>& frames, int patch_size, const ProjectionSet& projections) {
    FrameInputs in{make_grid(frames.front(), patch_size), {}};
    for (const auto& f : frames) {
        if (f.dims() != frames.front().dims()) throw IoError("all frames must share the same dimensions");
        in.embeddings.push_back(projections.embed_patches(f, in.grid));
    }
    return in;
}

void finish_summary(MethodSummary& s, std::size_t frame_count) {
    const std::uint64_t actual = s.actual_payload_bytes + s.metadata_bytes;
    s.compression_ratio = ratio(s.baseline_bytes, actual);
    s.payload_compression_ratio = ratio(s.baseline_bytes, s.actual_payload_bytes);
    s.per_frame_ms = frame_count == 0 ? 0.0 : s.total_ms / static_cast<double>(frame_count);
}

struct MethodOutcome {
    MethodSummary summary;
    std::vector<FrameRecord> records;
    std::optional<std::vector<std::vector<float>>> probe_outputs;
};

std::optional<std::vector<std::vector<float>>> probe(const std::vector<std::vector<float>>& probes, const KvView& view,
                                                     const AttentionConfig& config) {
    if (view.keys.empty()) return std::nullopt;
    return attend(probes, view, config).outputs;
}

MethodOutcome run_reference(const std::vector<Frame>& frames, const FrameInputs& in, const RunConfig& config,
                            const ProjectionSet& projections, const std::vector<std::vector<float>>& probes) {
    MethodOutcome out;
    KvCache cache(config.attention.cache_shape());
    const int np = in.grid.patch_count();
    for (std::size_t t = 0; t < frames.size(); ++t) {
        const auto start = Clock::now();
        std::vector<PatchKv> kv;
        for (const auto& e : in.embeddings[t]) kv.push_back(projections.project_kv(e));
        cache.store_frame_reference(frames[t].frame_index, kv);
        FrameRecord r;
        r.frame_idx = frames[t].frame_index;
        r.method = Method::Baseline;
        r.tiers.fp16 = static_cast<std::uint64_t>(np);
        r.live_tokens = (t + 1) * static_cast<std::size_t>(np);
        r.wall_ms = elapsed_ms(start);
        out.summary.total_ms += r.wall_ms;
        out.records.push_back(r);
    }
    auto& s = out.summary;
    s.logical_tokens = frames.size() * static_cast<std::uint64_t>(np);
    s.baseline_bytes = s.logical_tokens * fp16_token_bytes(cache.shape());
    s.actual_payload_bytes = s.baseline_bytes;
    s.tiers.fp16 = s.logical_tokens;
    s.peak_live_tokens = static_cast<std::size_t>(s.logical_tokens);
    finish_summary(s, frames.size());
    out.probe_outputs = gqa_attention(probes, cache, config.attention.n_layers - 1, config.attention).result.outputs;
    return out;
}

MethodOutcome run_eviction(Method method, const std::vector<Frame>& frames, const FrameInputs& in,
                           const RunConfig& config, const ProjectionSet& projections,
                           const std::vector<std::vector<float>>& probes) {
    MethodOutcome out;
    const AttentionConfig& ac = config.attention;
    const int np = in.grid.patch_count();
    const std::uint64_t token_bytes = fp16_token_bytes(ac.cache_shape());
    TokenStore store;
    ImportanceLedger ledger;
    EvictionTrace trace;

    for (std::size_t t = 0; t < frames.size(); ++t) {
        const auto start = Clock::now();
        const int f = frames[t].frame_index;
        std::vector<TokenId> arriving;
        for (int p = 0; p < np; ++p) {
            const TokenId id = token_id(static_cast<int>(t), p, np);
            PatchKv kv = projections.project_kv(in.embeddings[t][static_cast<std::size_t>(p)]);
            kv.keys = round_through_half(kv.keys);
            kv.values = round_through_half(kv.values);
            store.entries.emplace(id, std::move(kv));
            arriving.push_back(id);
        }

        EvictionStep step;
        if (method == Method::Sliding) {
            step = sliding_window_step(std::move(store.live), arriving, config.budget.budget);
            trace.record(step, 0);
        } else {
            // Compute-then-discard: every new token queries all live tokens (new
            // ones included) at every layer before anything is evicted.
            store.live.insert(store.live.end(), arriving.begin(), arriving.end());
            for (TokenId id : arriving) ledger.track(id);
            std::vector<std::vector<std::vector<double>>> rows(static_cast<std::size_t>(np));
            for (int l = 0; l < ac.n_layers; ++l) {
                std::vector<std::vector<float>> queries;
                for (int p = 0; p < np; ++p)
                    queries.push_back(projections.project_query(in.embeddings[t][static_cast<std::size_t>(p)], l));
                auto res = attend(queries, store.view(l, ac.kv_dim()), ac);
                for (int p = 0; p < np; ++p)
                    for (auto& row : res.weights[static_cast<std::size_t>(p)])
                        rows[static_cast<std::size_t>(p)].push_back(std::move(row));
            }
            for (const auto& q_rows : rows) ledger.accumulate(store.live, q_rows);
            step = h2o_step(ledger, std::move(store.live), config.budget.budget);
            const auto scorings = static_cast<std::uint64_t>(np) * static_cast<std::uint64_t>(ac.n_q_heads) *
                                  static_cast<std::uint64_t>(ac.n_layers);
            trace.record(step, scorings);
        }
        for (TokenId id : step.evicted) {
            store.entries.erase(id);
            ledger.forget(id);
        }
        store.live = std::move(step.live);

        FrameRecord r;
        r.frame_idx = f;
        r.method = method;
        r.tiers.fp16 = static_cast<std::uint64_t>(np);
        r.live_tokens = store.live.size();
        r.evicted = step.evicted.size();
        r.wall_ms = elapsed_ms(start);
        out.summary.total_ms += r.wall_ms;
        out.summary.peak_live_tokens = std::max(out.summary.peak_live_tokens, store.live.size());
        out.records.push_back(r);
    }
    auto& s = out.summary;
    s.logical_tokens = frames.size() * static_cast<std::uint64_t>(np);
    s.baseline_bytes = s.logical_tokens * token_bytes;
    s.actual_payload_bytes = s.peak_live_tokens * token_bytes;
    s.tiers.fp16 = s.logical_tokens;
    s.evictions = trace.evicted.size();
    s.wasted_score_computations = trace.wasted_score_computations;
    finish_summary(s, frames.size());
    out.probe_outputs = probe(probes, store.view(ac.n_layers - 1, ac.kv_dim()), ac);
    return out;
}

}  // namespace

SaliCacheRun run_salicache(const std::vector<Frame>& frames, const RunConfig& config, const ProjectionSet& projections) {
    if (frames.empty()) throw ConfigError("no frames to process");
    config.temporal.validate();
    config.saliency.validate();
    const PatchGrid grid = make_grid(frames.front(), config.patch_size);
    const int np = grid.patch_count();
    const std::uint64_t token_bytes = fp16_token_bytes(config.attention.cache_shape());

    SaliCacheRun run{KvCache(config.attention.cache_shape()), {}};
    std::uint64_t skipped = 0, pruned = 0;
    for (std::size_t t = 0; t < frames.size(); ++t) {
        const Frame& frame = frames[t];
        if (frame.dims() != frames.front().dims()) throw IoError("all frames must share the same dimensions");
        const auto start = Clock::now();
        const auto before = run.cache.memory_report();
        FrameRecord r;
        r.frame_idx = frame.frame_index;
        r.method = Method::SaliCache;
        r.verdict = Verdict::Novel;

        if (t > 0) {
            const auto report = frame_redundancy(patch_deltas(frames[t - 1], frame, grid), config.temporal);
            r.r_frame = report.r_frame;
            r.verdict = report.verdict;
        }
        if (r.verdict == Verdict::Redundant) {
            run.cache.store_reused_frame(frame.frame_index, frames[t - 1].frame_index);
            r.tiers.reused = static_cast<std::uint64_t>(np);
            skipped += static_cast<std::uint64_t>(np);
        } else {
            const auto scores = patch_saliency(compute_saliency(frame, config.saliency), grid);
            const auto embeddings = projections.embed_patches(frame, grid);
            std::vector<Tier> tiers;
            std::vector<PatchKv> kv;
            const std::size_t width = static_cast<std::size_t>(config.attention.n_layers) * config.attention.kv_dim();
            for (int p = 0; p < np; ++p) {
                const Tier tier = assign_tier(scores[static_cast<std::size_t>(p)], config.saliency);
                tiers.push_back(tier);
                r.tiers.add(tier);
                // Pruned patches never reach the projections.
                kv.push_back(tier == Tier::Prune
                                 ? PatchKv{std::vector<float>(width, 0.0f), std::vector<float>(width, 0.0f)}
                                 : projections.project_kv(embeddings[static_cast<std::size_t>(p)]));
            }
            run.cache.store_frame(frame.frame_index, tiers, kv);
            pruned += r.tiers.pruned;
        }
        const auto after = run.cache.memory_report();
        const std::uint64_t spent = (after.actual_payload_bytes + after.metadata_bytes) -
                                    (before.actual_payload_bytes + before.metadata_bytes);
        const std::uint64_t full = static_cast<std::uint64_t>(np) * token_bytes;
        const std::uint64_t prev_saved = run.records.empty() ? 0 : run.records.back().cumulative_saved_bytes;
        r.cumulative_saved_bytes = prev_saved + (full > spent ? full - spent : 0);
        r.cumulative_skipped = skipped;
        r.cumulative_pruned = pruned;
        r.live_tokens = static_cast<std::size_t>(after.logical_tokens - after.tier_histogram.pruned);
        r.wall_ms = elapsed_ms(start);
        run.records.push_back(r);
    }
    return run;
}

Fidelity compare_outputs(const std::vector<std::vector<float>>& reference, const std::vector<std::vector<float>>& other) {
    if (reference.size() != other.size()) throw InvariantError("probe output count mismatch");
    double max_err = 0.0, sum_err = 0.0, dot = 0.0, na = 0.0, nb = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        if (reference[i].size() != other[i].size()) throw InvariantError("probe output width mismatch");
        for (std::size_t k = 0; k < reference[i].size(); ++k) {
            const double a = reference[i][k], b = other[i][k];
            const double e = std::abs(a - b);
            max_err = std::max(max_err, e);
            sum_err += e;
            dot += a * b;
            na += a * a;
            nb += b * b;
            ++n;
        }
    }
    Fidelity f;
    f.max_abs_err = max_err;
    f.mean_abs_err = n == 0 ? 0.0 : sum_err / static_cast<double>(n);
    f.cosine = (na == 0.0 || nb == 0.0) ? (na == nb ? 1.0 : 0.0) : dot / std::sqrt(na * nb);
    return f;
}

RunReport run_comparison(const std::vector<Frame>& frames, const RunConfig& config) {
    config.validate();
    if (frames.empty()) throw ConfigError("no frames to process");
    const ProjectionSet projections(config.attention);
    const FrameInputs in = embed_all(frames, config.patch_size, projections);
    const int last_layer = config.attention.n_layers - 1;
    const auto probes = projections.probe_queries(last_layer, config.probe_count);

    RunReport report;
    report.config = config.to_json();
    std::map<Method, MethodOutcome> outcomes;
    for (Method m : config.methods) {
        switch (m) {
            case Method::Baseline:
                outcomes[m] = run_reference(frames, in, config, projections, probes);
                break;
            case Method::Sliding:
            case Method::H2o:
                outcomes[m] = run_eviction(m, frames, in, config, projections, probes);
                break;
            case Method::SaliCache: {
                auto run = run_salicache(frames, config, projections);
                MethodOutcome o;
                const auto mem = run.cache.memory_report();
                auto& s = o.summary;
                s.logical_tokens = mem.logical_tokens;
                s.baseline_bytes = mem.baseline_bytes;
                s.actual_payload_bytes = mem.actual_payload_bytes;
                s.metadata_bytes = mem.metadata_bytes;
                s.tiers = mem.tier_histogram;
                s.peak_live_tokens = static_cast<std::size_t>(mem.logical_tokens - mem.tier_histogram.pruned);
                for (const auto& r : run.records) s.total_ms += r.wall_ms;
                finish_summary(s, frames.size());
                if (s.tiers != [&] {
                        TierHistogram h;
                        for (const auto& r : run.records) h += r.tiers;
                        return h;
                    }())
                    throw InvariantError("per-frame tier records disagree with the cache histogram");
                if (!run.cache.live_tokens().empty())
                    o.probe_outputs = gqa_attention(probes, run.cache, last_layer, config.attention).result.outputs;
                o.records = std::move(run.records);
                outcomes[m] = std::move(o);
                break;
            }
        }
    }

    for (std::size_t t = 0; t < frames.size(); ++t)
        for (const auto& [m, o] : outcomes) report.frames.push_back(o.records[t]);
    for (const auto& [m, o] : outcomes) {
        if (o.summary.tiers.total() != frames.size() * static_cast<std::uint64_t>(in.grid.patch_count()))
            throw InvariantError("tier histogram does not cover every processed patch");
        report.methods[m] = o.summary;
    }
    if (config.fidelity) {
        const auto& reference = *outcomes.at(Method::Baseline).probe_outputs;
        for (const auto& [m, o] : outcomes)
            report.fidelity[m] = o.probe_outputs ? compare_outputs(reference, *o.probe_outputs) : Fidelity{};
    }
    return report;
}

}  // namespace salicache
