#include "salicache/temporal.hpp"

#include <cmath>
#include <cstdint>

#include "salicache/error.hpp"

namespace salicache {

void TemporalConfig::validate() const {
    if (!(tau_t >= 0.0)) throw ConfigError("tau_t must be >= 0");
    if (!(theta_r >= 0.0 && theta_r <= 1.0)) throw ConfigError("theta_r must lie in [0,1]");
}

std::vector<double> patch_deltas(const Frame& prev, const Frame& curr, const PatchGrid& grid) {
    if (prev.dims() != curr.dims()) throw ConfigError("patch_deltas: frame dimension mismatch");
    if (!grid.covers(curr.dims())) throw ConfigError("patch_deltas: grid does not match frame dimensions");

    const int p = grid.patch_size;
    const double count = 3.0 * p * p;
    std::vector<double> deltas(static_cast<std::size_t>(grid.patch_count()));
    for (int i = 0; i < grid.patch_count(); ++i) {
        const PatchRect r = grid.rect(i);
        // Integer accumulation keeps the sum exact and order independent.
        std::int64_t sum_sq = 0;
        for (int y = r.y0; y < r.y0 + p; ++y) {
            for (int x = r.x0; x < r.x0 + p; ++x) {
                for (int c = 0; c < 3; ++c) {
                    const int d = int{curr.at(x, y, c)} - int{prev.at(x, y, c)};
                    sum_sq += d * d;
                }
            }
        }
        deltas[static_cast<std::size_t>(i)] = std::sqrt(static_cast<double>(sum_sq) / count) / 255.0;
    }
    return deltas;
}

RedundancyReport frame_redundancy(std::vector<double> deltas, const TemporalConfig& config) {
    config.validate();
    if (deltas.empty()) throw ConfigError("frame_redundancy: empty delta list");
    RedundancyReport report;
    report.redundant_mask.reserve(deltas.size());
    std::size_t redundant = 0;
    for (double d : deltas) {
        const bool r = d < config.tau_t;
        report.redundant_mask.push_back(r);
        redundant += r ? 1 : 0;
    }
    report.r_frame = static_cast<double>(redundant) / static_cast<double>(deltas.size());
    report.verdict = report.r_frame > config.theta_r ? Verdict::Redundant : Verdict::Novel;
    report.deltas = std::move(deltas);
    return report;
}

}  // namespace salicache
