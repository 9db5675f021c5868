#pragma once

#include <vector>

#include "salicache/frames.hpp"

namespace salicache {

struct TemporalConfig {
    double tau_t = 0.02;    // per-patch RMS difference threshold, [0,1] pixel units
    double theta_r = 0.90;  // frame redundancy threshold

    void validate() const;
};

enum class Verdict { Novel, Redundant };

struct RedundancyReport {
    std::vector<double> deltas;
    std::vector<bool> redundant_mask;  // delta < tau_t
    double r_frame = 0.0;
    Verdict verdict = Verdict::Novel;
};

// RMS of (curr - prev) over the 3*P*P channel values of each patch, pixels in [0,1].
std::vector<double> patch_deltas(const Frame& prev, const Frame& curr, const PatchGrid& grid);

// Strict comparisons on both thresholds: ties are non-redundant.
RedundancyReport frame_redundancy(std::vector<double> deltas, const TemporalConfig& config);

}  // namespace salicache
