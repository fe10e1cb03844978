#pragma once

#include <Eigen/Dense>
#include <complex>

namespace ralab {

using Complex = std::complex<double>;

using RealVector    = Eigen::VectorXd;
using RealMatrix    = Eigen::MatrixXd;
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;
using IntVector     = Eigen::VectorXi;

// Fixed-size block used by the length-8 transform layer.
using Vector8 = Eigen::Matrix<double, 8, 1>;
using Matrix8 = Eigen::Matrix<double, 8, 8>;

// Preamble pool Z: one unit-average-energy sequence per column, L samples each.
// The access regime of interest is overcomplete (K > L); generators enforce
// that unless explicitly told not to (square pools are used by small studies).
struct PreamblePool {
    ComplexMatrix z; // L x K

    int samples() const { return static_cast<int>(z.rows()); }   // L
    int preambles() const { return static_cast<int>(z.cols()); } // K
};

// Outcome of the random preamble choice in one slot: counts[k] is the number
// of devices that picked preamble k, and assignments[m] is the preamble index
// chosen by device m.
struct ActivityVector {
    IntVector counts;             // K
    std::vector<int> assignments; // M

    int devices() const { return static_cast<int>(assignments.size()); }
};

// Per-device, per-antenna effective channel coefficients theta (M x T) under
// full power control, so each coefficient is CN(0, beta^2).
struct ChannelRealization {
    ComplexMatrix theta; // M x T
    double beta = 1.0;
};

// One received slot: y (L x T), the per-preamble superposed gains v (K x T)
// with v(k,t) the sum of theta over devices on preamble k, the noise power
// actually applied, and the ground-truth activity.
struct ReceivedFrame {
    ComplexMatrix y;               // L x T
    ComplexMatrix effective_gains; // K x T
    double noise_power = 0.0;      // per complex sample
    ActivityVector truth;

    int samples() const { return static_cast<int>(y.rows()); }  // L
    int antennas() const { return static_cast<int>(y.cols()); } // T
};

// Paired noisy/clean training corpus for the denoising layer.  Each row of
// both matrices is one antenna observation flattened to 2L reals (real parts
// then imaginary parts); row i of `noisy` and `clean` share one realization
// of pool, activity and channel, differing only by additive noise.
struct DenoiseDataset {
    RealMatrix noisy; // count x 2L
    RealMatrix clean; // count x 2L
    int k = 0;
    int l = 0;
    int m = 0;
    double snr_db = 0.0;
    double beta = 1.0;
    std::uint64_t seed = 0;

    int count() const { return static_cast<int>(noisy.rows()); }
};

} // namespace ralab
