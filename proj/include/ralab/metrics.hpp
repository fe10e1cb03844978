#pragma once

#include "ralab/types.hpp"

namespace ralab {

// Root-mean-square difference between two equally long real signals,
// reported in percent: sqrt(mean((clean - denoised)^2)) * 100.
double rms(const RealVector& clean, const RealVector& denoised);

// Percentage root-mean-square difference: the same residual normalized by the
// clean signal's energy, sqrt(sum((clean-denoised)^2) / sum(clean^2)) * 100.
// A zero-power clean signal has no defined PRD.
double prd(const RealVector& clean, const RealVector& denoised);

// Per-slot detection metrics over the K preamble counts.
double mse(const IntVector& truth, const IntVector& estimate);        // mean_k (x_k - xhat_k)^2
double p_ade(const IntVector& truth, const IntVector& estimate);      // fraction of k mismatched
int throughput(const IntVector& truth, const IntVector& estimate);    // #{k: x_k = xhat_k = 1}

// Aggregate of one experiment point.
struct MetricsReport {
    double rms = 0.0;
    double prd = 0.0;
    double mse = 0.0;
    double p_ade = 0.0;
    double throughput = 0.0;
    int trial_count = 0;
};

} // namespace ralab
