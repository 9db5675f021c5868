#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "salicache/attention.hpp"
#include "salicache/baselines.hpp"
#include "salicache/frames.hpp"
#include "salicache/kvcache.hpp"
#include "salicache/saliency.hpp"
#include "salicache/temporal.hpp"

namespace salicache {

enum class Method { Baseline, Sliding, H2o, SaliCache };

std::string_view method_name(Method m);
Method parse_method(std::string_view name);
std::vector<Method> parse_methods(std::string_view comma_list);

struct InputSpec {
    std::optional<std::filesystem::path> manifest;
    Scenario scenario = Scenario::Composite;
    int frame_count = 100;
    Dims dims{64, 64};
};

struct RunConfig {
    InputSpec input;
    int patch_size = 16;
    TemporalConfig temporal;
    SaliencyConfig saliency;
    AttentionConfig attention;
    BudgetConfig budget;
    std::vector<Method> methods{Method::Baseline, Method::Sliding, Method::H2o, Method::SaliCache};
    bool fidelity = true;
    int probe_count = 16;

    bool has(Method m) const;
    void validate() const;
    nlohmann::ordered_json to_json() const;
};

std::vector<Frame> load_frames(RunConfig& config);

struct FrameRecord {
    int frame_idx = 0;
    Method method = Method::SaliCache;
    std::optional<Verdict> verdict;  // salicache only
    std::optional<double> r_frame;   // absent for the first frame
    TierHistogram tiers;
    std::uint64_t cumulative_skipped = 0;
    std::uint64_t cumulative_pruned = 0;
    std::uint64_t cumulative_saved_bytes = 0;
    std::size_t live_tokens = 0;
    std::size_t evicted = 0;
    double wall_ms = 0.0;
};

struct MethodSummary {
    std::uint64_t logical_tokens = 0;
    std::uint64_t baseline_bytes = 0;
    std::uint64_t actual_payload_bytes = 0;
    std::uint64_t metadata_bytes = 0;
    double compression_ratio = 1.0;
    double payload_compression_ratio = 1.0;
    TierHistogram tiers;
    std::size_t peak_live_tokens = 0;
    std::uint64_t evictions = 0;
    std::uint64_t wasted_score_computations = 0;
    double total_ms = 0.0;
    double per_frame_ms = 0.0;
};

struct Fidelity {
    std::optional<double> max_abs_err;
    std::optional<double> mean_abs_err;
    std::optional<double> cosine;
};

struct RunReport {
    nlohmann::ordered_json config;
    std::vector<FrameRecord> frames;  // frame-major, methods in canonical order
    std::map<Method, MethodSummary> methods;
    std::map<Method, Fidelity> fidelity;
};

struct SaliCacheRun {
    KvCache cache;
    std::vector<FrameRecord> records;
};

// The end-to-end loop: temporal check against the previous input frame, then
// either a whole-frame reuse handle or saliency-tiered storage of every patch.
SaliCacheRun run_salicache(const std::vector<Frame>& frames, const RunConfig& config, const ProjectionSet& projections);

RunReport run_comparison(const std::vector<Frame>& frames, const RunConfig& config);

Fidelity compare_outputs(const std::vector<std::vector<float>>& reference, const std::vector<std::vector<float>>& other);

enum class ReportFormat { Json, Csv };
ReportFormat parse_format(std::string_view name);

nlohmann::ordered_json report_to_json(const RunReport& report);
std::string report_to_csv(const RunReport& report);
void emit_report(const RunReport& report, const std::filesystem::path& path, ReportFormat format);

}  // namespace salicache
