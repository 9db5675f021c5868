#include <cmath>
#include <fstream>
#include <sstream>

#include "salicache/error.hpp"
#include "salicache/harness.hpp"

namespace salicache {

namespace {

using ojson = nlohmann::ordered_json;

ojson number_or_null(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

ojson optional_number(const std::optional<double>& v) { return v ? number_or_null(*v) : ojson(nullptr); }

ojson tiers_json(const TierHistogram& h) {
    return ojson{{"reused", h.reused}, {"pruned", h.pruned}, {"int4", h.int4}, {"int8", h.int8}, {"fp16", h.fp16}};
}

ojson percentages_json(const TierHistogram& h) {
    const double total = static_cast<double>(h.total());
    const auto pct = [&](std::uint64_t n) { return total == 0.0 ? 0.0 : 100.0 * static_cast<double>(n) / total; };
    return ojson{{"reused", pct(h.reused)},
                 {"pruned", pct(h.pruned)},
                 {"int4", pct(h.int4)},
                 {"int8", pct(h.int8)},
                 {"fp16", pct(h.fp16)}};
}

std::string verdict_name(const std::optional<Verdict>& v) {
    if (!v) return "n/a";
    return *v == Verdict::Redundant ? "redundant" : "novel";
}

}  // namespace

ReportFormat parse_format(std::string_view name) {
    if (name == "json") return ReportFormat::Json;
    if (name == "csv") return ReportFormat::Csv;
    throw ConfigError("unknown report format: " + std::string(name));
}

ojson report_to_json(const RunReport& report) {
    ojson j;
    j["config"] = report.config;

    auto frames = ojson::array();
    for (const auto& r : report.frames) {
        frames.push_back(ojson{{"frame_idx", r.frame_idx},
                               {"method", std::string(method_name(r.method))},
                               {"verdict", verdict_name(r.verdict)},
                               {"r_frame", optional_number(r.r_frame)},
                               {"tiers", tiers_json(r.tiers)},
                               {"cumulative_skipped", r.cumulative_skipped},
                               {"cumulative_pruned", r.cumulative_pruned},
                               {"live_tokens", r.live_tokens},
                               {"evicted", r.evicted},
                               {"wall_ms", r.wall_ms}});
    }
    j["frames"] = std::move(frames);

    ojson methods = ojson::object();
    for (const auto& [m, s] : report.methods) {
        methods[std::string(method_name(m))] = ojson{
            {"label", m == Method::H2o ? "h2o-style" : std::string(method_name(m))},
            {"logical_tokens", s.logical_tokens},
            {"baseline_bytes", s.baseline_bytes},
            {"actual_payload_bytes", s.actual_payload_bytes},
            {"metadata_bytes", s.metadata_bytes},
            {"actual_bytes", s.actual_payload_bytes + s.metadata_bytes},
            {"compression_ratio", number_or_null(s.compression_ratio)},
            {"payload_compression_ratio", number_or_null(s.payload_compression_ratio)},
            {"tier_counts", tiers_json(s.tiers)},
            {"tier_percentages", percentages_json(s.tiers)},
            {"peak_live_tokens", s.peak_live_tokens},
            {"evictions", s.evictions},
            {"wasted_score_computations", s.wasted_score_computations},
            {"total_ms", s.total_ms},
            {"per_frame_ms", s.per_frame_ms}};
    }
    j["methods"] = std::move(methods);

    ojson fidelity = ojson::object();
    for (const auto& [m, f] : report.fidelity)
        fidelity[std::string(method_name(m))] = ojson{{"max_abs_err", optional_number(f.max_abs_err)},
                                                      {"mean_abs_err", optional_number(f.mean_abs_err)},
                                                      {"cosine", optional_number(f.cosine)}};
    j["fidelity"] = std::move(fidelity);

    ojson series{{"frame_idx", ojson::array()},
                 {"cumulative_skipped", ojson::array()},
                 {"cumulative_pruned", ojson::array()},
                 {"cumulative_saved_bytes", ojson::array()}};
    for (const auto& r : report.frames) {
        if (r.method != Method::SaliCache) continue;
        series["frame_idx"].push_back(r.frame_idx);
        series["cumulative_skipped"].push_back(r.cumulative_skipped);
        series["cumulative_pruned"].push_back(r.cumulative_pruned);
        series["cumulative_saved_bytes"].push_back(r.cumulative_saved_bytes);
    }
    j["series"] = std::move(series);
    return j;
}

std::string report_to_csv(const RunReport& report) {
    std::ostringstream out;
    out.precision(17);
    out << "frame_idx,method,verdict,r_frame,reused,pruned,int4,int8,fp16,cumulative_skipped,cumulative_pruned,"
           "live_tokens,evicted,wall_ms\n";
    for (const auto& r : report.frames) {
        out << r.frame_idx << ',' << method_name(r.method) << ',' << verdict_name(r.verdict) << ',';
        if (r.r_frame) out << *r.r_frame;
        out << ',' << r.tiers.reused << ',' << r.tiers.pruned << ',' << r.tiers.int4 << ',' << r.tiers.int8 << ','
            << r.tiers.fp16 << ',' << r.cumulative_skipped << ',' << r.cumulative_pruned << ',' << r.live_tokens << ','
            << r.evicted << ',' << r.wall_ms << '\n';
    }
    return out.str();
}

void emit_report(const RunReport& report, const std::filesystem::path& path, ReportFormat format) {
    if (report.methods.empty()) throw InvariantError("refusing to emit a report with no methods");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open report for writing: " + path.string());
    if (format == ReportFormat::Json)
        out << report_to_json(report).dump(2) << '\n';
    else
        out << report_to_csv(report);
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace salicache
