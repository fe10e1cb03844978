#pragma once

#include <cstdint>
#include <string>

#include "ralab/rng.hpp"
#include "ralab/types.hpp"

namespace ralab {

// Random pool of K spreading sequences, L complex samples each, entries
// i.i.d. CN(0, 1/L) so every sequence has unit average energy.  The regime of
// interest is overcomplete (K > L); pass allow_square = true to permit
// K <= L for small studies.
PreamblePool generate_preamble_pool(int k, int l, Rng& rng, bool allow_square = false);

// Each of m devices independently picks one of k preambles uniformly.
ActivityVector draw_activity(int m, int k, Rng& rng);

// Two-group variant: the first m_first devices pick uniformly among preambles
// [0, k_split), the remaining m_second among [k_split, k).
ActivityVector draw_activity_grouped(int m_first, int m_second, int k_split, int k, Rng& rng);

// Effective channel coefficients after power control: theta(m, t) ~
// CN(0, beta^2), i.i.d. across devices and antennas.
ChannelRealization draw_channel(int m, int t, double beta, Rng& rng);

// Per-complex-sample noise power for a given SNR: delta = beta^2 10^(-snr/10).
double snr_to_noise_power(double snr_db, double beta = 1.0);

// Superpose one slot: v(k, t) sums theta over the devices on preamble k,
// y = Z v + n with n ~ CN(0, delta I).  delta = 0 yields the noiseless slot.
ReceivedFrame synthesize_frame(const PreamblePool& pool, const ActivityVector& activity,
                               const ChannelRealization& channel, double noise_power, Rng& rng);

// Model covariance of one antenna observation for activity counts x:
// beta^2 Z diag(x) Z^H + delta I.  Negative entries of x are treated as 0.
ComplexMatrix model_covariance(const PreamblePool& pool, const RealVector& x, double beta,
                               double noise_power);

struct DatasetConfig {
    int k = 20;
    int l = 10;
    int m = 20;
    int t = 1;            // antennas drawn per realization
    double snr_db = 10.0;
    double beta = 1.0;
    int count = 1750;
    std::uint64_t seed = 1;
};

// Paired noisy/clean corpus for denoiser training.  Every sample pair draws a
// fresh pool, activity and channel; the noisy member is the clean member of
// the same realization plus CN(0, delta) noise.  Rows are [Re(y); Im(y)].
DenoiseDataset generate_denoise_dataset(const DatasetConfig& cfg);

// Text persistence: `path` holds one sample pair per row (2L noisy values
// then 2L clean values, comma separated, full precision); `path`.json holds
// the generating metadata {K, L, M, snr_db, beta, seed, count}.
void save_dataset(const DenoiseDataset& dataset, const std::string& path);
DenoiseDataset load_dataset(const std::string& path);

} // namespace ralab
