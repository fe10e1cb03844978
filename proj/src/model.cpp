#include "ralab/model.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ralab/errors.hpp"

namespace ralab {

namespace {

// CN(0, var): real and imaginary parts i.i.d. N(0, var/2).
ComplexMatrix complex_gaussian(Eigen::Index rows, Eigen::Index cols, double var, Rng& rng) {
    std::normal_distribution<double> part(0.0, std::sqrt(0.5 * var));
    ComplexMatrix out(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c)
        for (Eigen::Index r = 0; r < rows; ++r) {
            const double re = part(rng);
            const double im = part(rng);
            out(r, c) = Complex(re, im);
        }
    return out;
}

} // namespace

PreamblePool generate_preamble_pool(int k, int l, Rng& rng, bool allow_square) {
    if (k < 1 || l < 1)
        throw config_error("generate_preamble_pool: need k >= 1 and l >= 1, got k=" +
                           std::to_string(k) + " l=" + std::to_string(l));
    if (k <= l && !allow_square)
        throw config_error("generate_preamble_pool: overcomplete pools require k > l (k=" +
                           std::to_string(k) + ", l=" + std::to_string(l) +
                           "); pass allow_square to lift this");
    return {complex_gaussian(l, k, 1.0 / l, rng)};
}

ActivityVector draw_activity(int m, int k, Rng& rng) {
    if (m < 1 || k < 1) throw config_error("draw_activity: need m >= 1 and k >= 1");
    ActivityVector a;
    a.counts = IntVector::Zero(k);
    a.assignments.resize(m);
    std::uniform_int_distribution<int> pick(0, k - 1);
    for (int dev = 0; dev < m; ++dev) {
        const int choice = pick(rng);
        a.assignments[dev] = choice;
        a.counts[choice] += 1;
    }
    return a;
}

ActivityVector draw_activity_grouped(int m_first, int m_second, int k_split, int k, Rng& rng) {
    if (m_first < 0 || m_second < 0 || m_first + m_second < 1)
        throw config_error("draw_activity_grouped: need nonnegative group sizes, at least one device");
    if (k_split < 1 || k_split >= k)
        throw config_error("draw_activity_grouped: split must satisfy 1 <= k_split < k");
    ActivityVector a;
    a.counts = IntVector::Zero(k);
    a.assignments.resize(m_first + m_second);
    std::uniform_int_distribution<int> first(0, k_split - 1);
    std::uniform_int_distribution<int> second(k_split, k - 1);
    for (int dev = 0; dev < m_first; ++dev) {
        const int choice = first(rng);
        a.assignments[dev] = choice;
        a.counts[choice] += 1;
    }
    for (int dev = 0; dev < m_second; ++dev) {
        const int choice = second(rng);
        a.assignments[m_first + dev] = choice;
        a.counts[choice] += 1;
    }
    return a;
}

ChannelRealization draw_channel(int m, int t, double beta, Rng& rng) {
    if (m < 1 || t < 1) throw config_error("draw_channel: need m >= 1 and t >= 1");
    if (beta <= 0.0) throw config_error("draw_channel: beta must be positive");
    return {complex_gaussian(m, t, beta * beta, rng), beta};
}

double snr_to_noise_power(double snr_db, double beta) {
    if (beta <= 0.0) throw config_error("snr_to_noise_power: beta must be positive");
    return beta * beta * std::pow(10.0, -snr_db / 10.0);
}

ReceivedFrame synthesize_frame(const PreamblePool& pool, const ActivityVector& activity,
                               const ChannelRealization& channel, double noise_power, Rng& rng) {
    const int k = pool.preambles();
    const int m = activity.devices();
    const int t = static_cast<int>(channel.theta.cols());
    if (channel.theta.rows() != m)
        throw shape_error("synthesize_frame: channel has " + std::to_string(channel.theta.rows()) +
                          " devices, activity has " + std::to_string(m));
    if (noise_power < 0.0) throw config_error("synthesize_frame: noise power must be >= 0");
    ComplexMatrix gains = ComplexMatrix::Zero(k, t);
    for (int dev = 0; dev < m; ++dev) {
        const int preamble = activity.assignments[dev];
        if (preamble < 0 || preamble >= k)
            throw shape_error("synthesize_frame: activity references preamble " +
                              std::to_string(preamble) + " outside pool of " + std::to_string(k));
        gains.row(preamble) += channel.theta.row(dev);
    }
    ReceivedFrame frame;
    frame.y = pool.z * gains;
    if (noise_power > 0.0) frame.y += complex_gaussian(pool.samples(), t, noise_power, rng);
    frame.effective_gains = std::move(gains);
    frame.noise_power = noise_power;
    frame.truth = activity;
    return frame;
}

ComplexMatrix model_covariance(const PreamblePool& pool, const RealVector& x, double beta,
                               double noise_power) {
    if (x.size() != pool.preambles())
        throw shape_error("model_covariance: x has " + std::to_string(x.size()) +
                          " entries for a pool of " + std::to_string(pool.preambles()));
    const RealVector clamped = x.cwiseMax(0.0);
    const int l = pool.samples();
    ComplexMatrix cov = beta * beta *
                        (pool.z * clamped.asDiagonal() * pool.z.adjoint());
    cov += noise_power * ComplexMatrix::Identity(l, l);
    return cov;
}

DenoiseDataset generate_denoise_dataset(const DatasetConfig& cfg) {
    if (cfg.count < 1) throw config_error("generate_denoise_dataset: count must be >= 1");
    if (cfg.t < 1) throw config_error("generate_denoise_dataset: t must be >= 1");
    const double delta = snr_to_noise_power(cfg.snr_db, cfg.beta);
    DenoiseDataset ds;
    ds.noisy.resize(cfg.count, 2 * cfg.l);
    ds.clean.resize(cfg.count, 2 * cfg.l);
    ds.k = cfg.k;
    ds.l = cfg.l;
    ds.m = cfg.m;
    ds.snr_db = cfg.snr_db;
    ds.beta = cfg.beta;
    ds.seed = cfg.seed;
    Rng rng = make_rng(derive_seed(cfg.seed, 0x6473)); // "ds"
    int row = 0;
    while (row < cfg.count) {
        const PreamblePool pool = generate_preamble_pool(cfg.k, cfg.l, rng, true);
        const ActivityVector activity = draw_activity(cfg.m, cfg.k, rng);
        const ChannelRealization channel = draw_channel(cfg.m, cfg.t, cfg.beta, rng);
        const ComplexMatrix clean = pool.z * [&] {
            ComplexMatrix g = ComplexMatrix::Zero(cfg.k, cfg.t);
            for (int dev = 0; dev < cfg.m; ++dev)
                g.row(activity.assignments[dev]) += channel.theta.row(dev);
            return g;
        }();
        const ComplexMatrix noise = complex_gaussian(cfg.l, cfg.t, delta, rng);
        for (int col = 0; col < cfg.t && row < cfg.count; ++col, ++row) {
            for (int i = 0; i < cfg.l; ++i) {
                ds.clean(row, i) = clean(i, col).real();
                ds.clean(row, cfg.l + i) = clean(i, col).imag();
                ds.noisy(row, i) = clean(i, col).real() + noise(i, col).real();
                ds.noisy(row, cfg.l + i) = clean(i, col).imag() + noise(i, col).imag();
            }
        }
    }
    return ds;
}

void save_dataset(const DenoiseDataset& dataset, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw persistence_error("save_dataset: cannot open " + path);
    char buf[32];
    const int width = static_cast<int>(dataset.noisy.cols());
    for (int row = 0; row < dataset.count(); ++row) {
        for (int i = 0; i < width; ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", dataset.noisy(row, i));
            out << buf << ',';
        }
        for (int i = 0; i < width; ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", dataset.clean(row, i));
            out << buf << (i + 1 < width ? "," : "\n");
        }
    }
    if (!out) throw persistence_error("save_dataset: write failed for " + path);
    nlohmann::json meta = {{"K", dataset.k},         {"L", dataset.l},
                           {"M", dataset.m},         {"snr_db", dataset.snr_db},
                           {"beta", dataset.beta},   {"seed", dataset.seed},
                           {"count", dataset.count()}};
    std::ofstream side(path + ".json");
    if (!side) throw persistence_error("save_dataset: cannot open " + path + ".json");
    side << meta.dump(2) << '\n';
    if (!side) throw persistence_error("save_dataset: write failed for " + path + ".json");
}

DenoiseDataset load_dataset(const std::string& path) {
    std::ifstream side(path + ".json");
    if (!side) throw persistence_error("load_dataset: cannot open " + path + ".json");
    nlohmann::json meta;
    try {
        side >> meta;
    } catch (const nlohmann::json::exception& e) {
        throw data_error("load_dataset: bad sidecar " + path + ".json: " + e.what());
    }
    DenoiseDataset ds;
    try {
        ds.k = meta.at("K").get<int>();
        ds.l = meta.at("L").get<int>();
        ds.m = meta.at("M").get<int>();
        ds.snr_db = meta.at("snr_db").get<double>();
        ds.beta = meta.at("beta").get<double>();
        ds.seed = meta.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw data_error("load_dataset: sidecar " + path + ".json missing fields: " + e.what());
    }
    const int count = meta.at("count").get<int>();
    if (count < 1 || ds.l < 1) throw data_error("load_dataset: sidecar declares an empty corpus");
    ds.noisy.resize(count, 2 * ds.l);
    ds.clean.resize(count, 2 * ds.l);
    std::ifstream in(path);
    if (!in) throw persistence_error("load_dataset: cannot open " + path);
    std::string line;
    for (int row = 0; row < count; ++row) {
        if (!std::getline(in, line))
            throw data_error("load_dataset: " + path + " ends at row " + std::to_string(row) +
                             " of " + std::to_string(count));
        std::stringstream fields(line);
        std::string cell;
        for (int i = 0; i < 4 * ds.l; ++i) {
            if (!std::getline(fields, cell, ','))
                throw data_error("load_dataset: row " + std::to_string(row) + " of " + path +
                                 " has fewer than " + std::to_string(4 * ds.l) + " fields");
            double value = 0.0;
            try {
                value = std::stod(cell);
            } catch (const std::exception&) {
                throw data_error("load_dataset: non-numeric field '" + cell + "' in " + path);
            }
            if (i < 2 * ds.l)
                ds.noisy(row, i) = value;
            else
                ds.clean(row, i - 2 * ds.l) = value;
        }
    }
    return ds;
}

} // namespace ralab
