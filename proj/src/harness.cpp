#include "ralab/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ralab/errors.hpp"
#include "ralab/metrics.hpp"
#include "ralab/mht.hpp"

namespace ralab {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> items;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) items.push_back(item);
    }
    return items;
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw config_error("config key '" + key + "': expected a number, got '" + value + "'");
    }
}

int parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw config_error("config key '" + key + "': expected an integer, got '" + value + "'");
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw config_error("config key '" + key + "': expected an unsigned integer, got '" +
                           value + "'");
    }
}

std::vector<double> parse_double_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    for (const auto& item : split_list(value)) out.push_back(parse_double(key, item));
    if (out.empty()) throw config_error("config key '" + key + "': empty list");
    return out;
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
    std::vector<int> out;
    for (const auto& item : split_list(value)) out.push_back(parse_int(key, item));
    if (out.empty()) throw config_error("config key '" + key + "': empty list");
    return out;
}

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "seed", "out", "trials",
        "model.k", "model.l", "model.m", "model.t", "model.beta", "model.snr_db",
        "sweep.snr_db", "sweep.m",
        "detector.list", "detector.particles", "detector.iterations", "detector.step_size",
        "detector.stability", "detector.weight_decay", "detector.momentum",
        "detector.accum_decay", "detector.bias_weight", "detector.particle_floor",
        "detector.bandwidth_floor", "detector.init_low", "detector.init_high",
        "detector.mcmc_state_max", "detector.mcmc_burn_fraction",
        "denoiser.params",
        "train.count", "train.snr_db", "train.epochs", "train.batch_size",
        "train.learning_rate", "train.kappa", "train.rho", "train.weight_decay",
        "train.val_fraction", "train.variant",
        "test.count", "test.snr_db",
        "groups.m1_min", "groups.m1_max", "groups.m2_min", "groups.m2_max", "groups.split",
        "bench.runs",
    };
    return keys;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string git_describe() {
    FILE* pipe = ::popen("git describe --always --dirty 2>/dev/null", "r");
    if (!pipe) return "unknown";
    char buf[256];
    std::string out;
    while (std::fgets(buf, sizeof buf, pipe)) out += buf;
    ::pclose(pipe);
    out = trim(out);
    return out.empty() ? "unknown" : out;
}

std::string utc_now() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace

Scenario scenario_from_name(const std::string& name) {
    if (name == "train-denoiser") return Scenario::train_denoiser;
    if (name == "eval-denoiser") return Scenario::eval_denoiser;
    if (name == "detect-once") return Scenario::detect_once;
    if (name == "sweep-snr") return Scenario::sweep_snr;
    if (name == "sweep-m") return Scenario::sweep_m;
    if (name == "throughput") return Scenario::throughput;
    if (name == "dynamic-groups") return Scenario::dynamic_groups;
    if (name == "bench-time") return Scenario::bench_time;
    if (name == "oracle-checks") return Scenario::oracle_checks;
    throw config_error("unknown scenario '" + name + "'");
}

std::string scenario_name(Scenario scenario) {
    switch (scenario) {
        case Scenario::train_denoiser: return "train-denoiser";
        case Scenario::eval_denoiser: return "eval-denoiser";
        case Scenario::detect_once: return "detect-once";
        case Scenario::sweep_snr: return "sweep-snr";
        case Scenario::sweep_m: return "sweep-m";
        case Scenario::throughput: return "throughput";
        case Scenario::dynamic_groups: return "dynamic-groups";
        case Scenario::bench_time: return "bench-time";
        case Scenario::oracle_checks: return "oracle-checks";
    }
    return "unknown";
}

DetectorKind detector_from_name(const std::string& name) {
    if (name == "mcmc") return DetectorKind::mcmc;
    if (name == "svgd") return DetectorKind::svgd;
    if (name == "nsvgd") return DetectorKind::nsvgd;
    if (name == "blind") return DetectorKind::blind;
    throw config_error("unknown detector '" + name + "' (expected mcmc, svgd, nsvgd or blind)");
}

std::string detector_name(DetectorKind kind) {
    switch (kind) {
        case DetectorKind::mcmc: return "mcmc";
        case DetectorKind::svgd: return "svgd";
        case DetectorKind::nsvgd: return "nsvgd";
        case DetectorKind::blind: return "blind";
    }
    return "unknown";
}

LayerVariant variant_from_name(const std::string& name) {
    if (name == "full") return LayerVariant::full;
    if (name == "no-penalty") return LayerVariant::no_penalty;
    if (name == "no-scaling") return LayerVariant::no_scaling;
    if (name == "no-threshold") return LayerVariant::no_threshold;
    if (name == "standard-hadamard") return LayerVariant::standard_hadamard;
    throw config_error("unknown layer variant '" + name + "'");
}

std::string variant_name(LayerVariant variant) {
    switch (variant) {
        case LayerVariant::full: return "full";
        case LayerVariant::no_penalty: return "no-penalty";
        case LayerVariant::no_scaling: return "no-scaling";
        case LayerVariant::no_threshold: return "no-threshold";
        case LayerVariant::standard_hadamard: return "standard-hadamard";
    }
    return "unknown";
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw persistence_error("read_config_file: cannot open " + path);
    std::map<std::string, std::string> entries;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string text = trim(line);
        if (text.empty() || text[0] == '#' || text[0] == ';') continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos)
            throw data_error(path + ":" + std::to_string(line_no) +
                             ": expected 'key = value', got '" + text + "'");
        const std::string key = trim(text.substr(0, eq));
        const std::string value = trim(text.substr(eq + 1));
        if (key.empty())
            throw data_error(path + ":" + std::to_string(line_no) + ": empty key");
        entries[key] = value;
    }
    return entries;
}

void apply_override(std::map<std::string, std::string>& entries, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw config_error("override '" + assignment + "' must have the form key=value");
    const std::string key = trim(assignment.substr(0, eq));
    if (key.empty()) throw config_error("override '" + assignment + "' has an empty key");
    entries[key] = trim(assignment.substr(eq + 1));
}

void ExperimentConfig::validate() const {
    if (k < 1 || l < 1 || m < 1 || t < 1)
        throw config_error("config: model dimensions must all be >= 1");
    if (beta <= 0.0) throw config_error("config: model.beta must be positive");
    if (trials < 1) throw config_error("config: trials must be >= 1");
    if (detectors.empty()) throw config_error("config: detector.list must not be empty");
    if (snr_sweep.empty()) throw config_error("config: sweep.snr_db must not be empty");
    if (m_sweep.empty()) throw config_error("config: sweep.m must not be empty");
    if (train_count < 2 || test_count < 1)
        throw config_error("config: train.count must be >= 2 and test.count >= 1");
    if (scenario == Scenario::dynamic_groups) {
        if (group_m1_min < 0 || group_m1_max < group_m1_min || group_m2_min < 0 ||
            group_m2_max < group_m2_min)
            throw config_error("config: group size ranges must be ordered and nonnegative");
        if (group_split < 1 || group_split >= k)
            throw config_error("config: groups.split must satisfy 1 <= split < model.k");
    }
    if (bench_runs < 1) throw config_error("config: bench.runs must be >= 1");
    detector.validate();
    training.validate();
    if (!denoiser_params.empty() && !std::filesystem::exists(denoiser_params))
        throw config_error("config: denoiser.params file does not exist: " + denoiser_params);
}

ExperimentConfig make_config(Scenario scenario,
                             const std::map<std::string, std::string>& entries) {
    ExperimentConfig cfg;
    cfg.scenario = scenario;
    if (scenario == Scenario::bench_time) {
        cfg.t = 1;
        cfg.detector.particles = 3;
    }
    for (const auto& [key, value] : entries) {
        if (known_keys().count(key) == 0)
            throw config_error("unknown config key '" + key + "'");
        if (key == "seed") cfg.seed = parse_u64(key, value);
        else if (key == "out") cfg.out_dir = value;
        else if (key == "trials") cfg.trials = parse_int(key, value);
        else if (key == "model.k") cfg.k = parse_int(key, value);
        else if (key == "model.l") cfg.l = parse_int(key, value);
        else if (key == "model.m") cfg.m = parse_int(key, value);
        else if (key == "model.t") cfg.t = parse_int(key, value);
        else if (key == "model.beta") cfg.beta = parse_double(key, value);
        else if (key == "model.snr_db") cfg.snr_db = parse_double(key, value);
        else if (key == "sweep.snr_db") cfg.snr_sweep = parse_double_list(key, value);
        else if (key == "sweep.m") cfg.m_sweep = parse_int_list(key, value);
        else if (key == "detector.list") {
            cfg.detectors.clear();
            for (const auto& name : split_list(value))
                cfg.detectors.push_back(detector_from_name(name));
        } else if (key == "detector.particles") cfg.detector.particles = parse_int(key, value);
        else if (key == "detector.iterations") cfg.detector.iterations = parse_int(key, value);
        else if (key == "detector.step_size") cfg.detector.step_size = parse_double(key, value);
        else if (key == "detector.stability") cfg.detector.stability = parse_double(key, value);
        else if (key == "detector.weight_decay")
            cfg.detector.weight_decay = parse_double(key, value);
        else if (key == "detector.momentum") cfg.detector.momentum = parse_double(key, value);
        else if (key == "detector.accum_decay") cfg.detector.accum_decay = parse_double(key, value);
        else if (key == "detector.bias_weight") cfg.detector.bias_weight = parse_double(key, value);
        else if (key == "detector.particle_floor")
            cfg.detector.particle_floor = parse_double(key, value);
        else if (key == "detector.bandwidth_floor")
            cfg.detector.bandwidth_floor = parse_double(key, value);
        else if (key == "detector.init_low") cfg.detector.init_low = parse_double(key, value);
        else if (key == "detector.init_high") cfg.detector.init_high = parse_double(key, value);
        else if (key == "detector.mcmc_state_max")
            cfg.detector.mcmc_state_max = parse_int(key, value);
        else if (key == "detector.mcmc_burn_fraction")
            cfg.detector.mcmc_burn_fraction = parse_double(key, value);
        else if (key == "denoiser.params") cfg.denoiser_params = value;
        else if (key == "train.count") cfg.train_count = parse_int(key, value);
        else if (key == "train.snr_db") cfg.train_snr_db = parse_double(key, value);
        else if (key == "train.epochs") cfg.training.epochs = parse_int(key, value);
        else if (key == "train.batch_size") cfg.training.batch_size = parse_int(key, value);
        else if (key == "train.learning_rate")
            cfg.training.learning_rate = parse_double(key, value);
        else if (key == "train.kappa") cfg.training.kappa = parse_double(key, value);
        else if (key == "train.rho") cfg.training.rho = parse_double(key, value);
        else if (key == "train.weight_decay")
            cfg.training.weight_decay = parse_double(key, value);
        else if (key == "train.val_fraction")
            cfg.training.val_fraction = parse_double(key, value);
        else if (key == "train.variant") cfg.training.variant = variant_from_name(value);
        else if (key == "test.count") cfg.test_count = parse_int(key, value);
        else if (key == "test.snr_db") cfg.test_snr_db = parse_double(key, value);
        else if (key == "groups.m1_min") cfg.group_m1_min = parse_int(key, value);
        else if (key == "groups.m1_max") cfg.group_m1_max = parse_int(key, value);
        else if (key == "groups.m2_min") cfg.group_m2_min = parse_int(key, value);
        else if (key == "groups.m2_max") cfg.group_m2_max = parse_int(key, value);
        else if (key == "groups.split") cfg.group_split = parse_int(key, value);
        else if (key == "bench.runs") cfg.bench_runs = parse_int(key, value);
    }
    cfg.detector.beta = cfg.beta;
    cfg.validate();
    return cfg;
}

double mean_of(const std::vector<double>& values) {
    if (values.empty()) return 0.0;
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
}

double se_of(const std::vector<double>& values) {
    const std::size_t n = values.size();
    if (n < 2) return 0.0;
    const double mean = mean_of(values);
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(n - 1)) / std::sqrt(static_cast<double>(n));
}

std::map<DetectorKind, DetectorStats> run_point(const TrialPoint& point,
                                                const std::vector<DetectorKind>& detectors,
                                                const DetectorConfig& cfg,
                                                const BmhtParams& denoiser_params, int trials,
                                                std::uint64_t seed, std::uint64_t point_ordinal) {
    std::map<DetectorKind, DetectorStats> stats;
    for (const DetectorKind d : detectors) stats[d];
    for (int trial = 0; trial < trials; ++trial) {
        Rng frame_rng = make_rng(derive_seed(seed, point_ordinal, trial, 0));
        const PreamblePool pool = generate_preamble_pool(point.k, point.l, frame_rng, true);
        ActivityVector activity;
        if (point.grouped) {
            std::uniform_int_distribution<int> first(point.m1_min, point.m1_max);
            std::uniform_int_distribution<int> second(point.m2_min, point.m2_max);
            const int m1 = first(frame_rng);
            const int m2 = second(frame_rng);
            activity = draw_activity_grouped(m1, m2, point.split, point.k, frame_rng);
        } else {
            activity = draw_activity(point.m, point.k, frame_rng);
        }
        const ChannelRealization channel =
            draw_channel(activity.devices(), point.t, point.beta, frame_rng);
        const double delta = snr_to_noise_power(point.snr_db, point.beta);
        const ReceivedFrame frame = synthesize_frame(pool, activity, channel, delta, frame_rng);
        std::optional<ReceivedFrame> denoised;
        for (const DetectorKind d : detectors) {
            Rng det_rng =
                make_rng(derive_seed(seed, point_ordinal, trial, 1 + static_cast<int>(d)));
            DetectionResult result;
            switch (d) {
                case DetectorKind::mcmc: result = run_mcmc(frame, pool, cfg, det_rng); break;
                case DetectorKind::svgd: result = run_svgd(frame, pool, cfg, det_rng); break;
                case DetectorKind::nsvgd:
                    result = run_nsvgd(frame, pool, cfg, activity.devices(), det_rng);
                    break;
                case DetectorKind::blind:
                    if (!denoised) denoised = denoise_frame(denoiser_params, frame);
                    result = run_blind_nsvgd(*denoised, pool, cfg, det_rng);
                    break;
            }
            DetectorStats& s = stats[d];
            s.mse.push_back(mse(frame.truth.counts, result.estimate));
            s.pade.push_back(p_ade(frame.truth.counts, result.estimate));
            s.throughput.push_back(throughput(frame.truth.counts, result.estimate));
            s.wall_ms.push_back(result.wall_ms);
        }
    }
    return stats;
}

PointResult summarize_point(const std::string& scenario, DetectorKind detector,
                            const TrialPoint& point, int particles, const DetectorStats& stats,
                            int trials) {
    PointResult row;
    row.scenario = scenario;
    row.detector = detector_name(detector);
    row.n = particles;
    row.k = point.k;
    row.l = point.l;
    row.m = point.m;
    row.t = point.t;
    row.snr_db = point.snr_db;
    row.trials = trials;
    row.mse_mean = mean_of(stats.mse);
    row.mse_se = se_of(stats.mse);
    row.pade_mean = mean_of(stats.pade);
    row.pade_se = se_of(stats.pade);
    row.throughput_mean = mean_of(stats.throughput);
    row.throughput_se = se_of(stats.throughput);
    row.wall_ms_mean = mean_of(stats.wall_ms);
    return row;
}

void write_results_csv(const std::string& path, const std::vector<PointResult>& rows) {
    std::ofstream out(path);
    if (!out) throw persistence_error("write_results_csv: cannot open " + path);
    out << "scenario,detector,n,K,L,M,T,snr_db,trials,mse_mean,mse_se,pade_mean,pade_se,"
           "throughput_mean,throughput_se,wall_ms_mean\n";
    for (const PointResult& r : rows) {
        out << r.scenario << ',' << r.detector << ',' << r.n << ',' << r.k << ',' << r.l << ','
            << r.m << ',' << r.t << ',' << format_double(r.snr_db) << ',' << r.trials << ','
            << format_double(r.mse_mean) << ',' << format_double(r.mse_se) << ','
            << format_double(r.pade_mean) << ',' << format_double(r.pade_se) << ','
            << format_double(r.throughput_mean) << ',' << format_double(r.throughput_se) << ','
            << format_double(r.wall_ms_mean) << '\n';
    }
    if (!out) throw persistence_error("write_results_csv: write failed for " + path);
}

void write_training_curve_csv(const std::string& path, const std::vector<EpochStats>& curve) {
    std::ofstream out(path);
    if (!out) throw persistence_error("write_training_curve_csv: cannot open " + path);
    out << "epoch,train_loss,val_loss,val_rms\n";
    for (const EpochStats& e : curve)
        out << e.epoch << ',' << format_double(e.train_loss) << ',' << format_double(e.val_loss)
            << ',' << format_double(e.val_rms) << '\n';
    if (!out) throw persistence_error("write_training_curve_csv: write failed for " + path);
}

void write_manifest(const std::string& path, const ExperimentConfig& cfg,
                    const std::map<std::string, std::string>& entries, double wall_ms) {
    nlohmann::json doc;
    doc["schema_version"] = 1;
    doc["scenario"] = scenario_name(cfg.scenario);
    doc["seed"] = cfg.seed;
    doc["out"] = cfg.out_dir;
    doc["git"] = git_describe();
    doc["started_utc"] = utc_now();
    doc["wall_ms"] = wall_ms;
    doc["config"] = entries;
    std::ofstream out(path);
    if (!out) throw persistence_error("write_manifest: cannot open " + path);
    out << doc.dump(2) << '\n';
    if (!out) throw persistence_error("write_manifest: write failed for " + path);
}

// ---------------------------------------------------------------------------
// Oracles
// ---------------------------------------------------------------------------

namespace {

struct OracleInstance {
    PreamblePool pool;
    ReceivedFrame frame;
};

OracleInstance random_instance(int k, int l, int m, int t, double snr_db, Rng& rng) {
    OracleInstance inst;
    inst.pool = generate_preamble_pool(k, l, rng, true);
    const ActivityVector activity = draw_activity(m, k, rng);
    const ChannelRealization channel = draw_channel(m, t, 1.0, rng);
    inst.frame = synthesize_frame(inst.pool, activity, channel, snr_to_noise_power(snr_db), rng);
    return inst;
}

double normwise_rel_error(const RealVector& reference, const RealVector& candidate) {
    const double denom = std::max(reference.norm(), 1e-12);
    return (reference - candidate).norm() / denom;
}

} // namespace

double worst_blind_score_fd_error(int instances, std::uint64_t seed) {
    double worst = 0.0;
    const double h = 1e-5;
    for (int i = 0; i < instances; ++i) {
        Rng rng = make_rng(derive_seed(seed, 0xb11d, i));
        const OracleInstance inst = random_instance(6, 4, 5, 3, 10.0, rng);
        std::uniform_real_distribution<double> coord(0.5, 3.0);
        RealVector x(6);
        for (int j = 0; j < 6; ++j) x[j] = coord(rng);
        const RealVector analytic = score_blind(inst.frame, inst.pool, x, 1.0);
        RealVector fd(6);
        for (int j = 0; j < 6; ++j) {
            RealVector hi = x, lo = x;
            hi[j] += h;
            lo[j] -= h;
            fd[j] = (blind_log_likelihood(inst.frame, inst.pool, hi, 1.0) -
                     blind_log_likelihood(inst.frame, inst.pool, lo, 1.0)) /
                    (2.0 * h);
        }
        worst = std::max(worst, normwise_rel_error(fd, analytic));
    }
    return worst;
}

double worst_aware_score_fd_error(int instances, std::uint64_t seed) {
    double worst = 0.0;
    const double h = 1e-5;
    for (int i = 0; i < instances; ++i) {
        Rng rng = make_rng(derive_seed(seed, 0xaa3e, i));
        const OracleInstance inst = random_instance(6, 4, 5, 3, 10.0, rng);
        const double delta = inst.frame.noise_power;
        std::uniform_real_distribution<double> coord(0.5, 3.0);
        RealVector x(6);
        for (int j = 0; j < 6; ++j) x[j] = coord(rng);
        const RealVector analytic = score(inst.frame, inst.pool, x, 1.0, delta);
        RealVector fd(6);
        for (int j = 0; j < 6; ++j) {
            RealVector hi = x, lo = x;
            hi[j] += h;
            lo[j] -= h;
            fd[j] = (log_likelihood(inst.frame, inst.pool, hi, 1.0, delta) -
                     log_likelihood(inst.frame, inst.pool, lo, 1.0, delta)) /
                    (2.0 * h);
        }
        worst = std::max(worst, normwise_rel_error(fd, analytic));
    }
    return worst;
}

double worst_denoiser_gradient_fd_error(int points, std::uint64_t seed) {
    const double kappa = 1e-3;
    const double rho = 0.5;
    const double h = 1e-5;
    double worst = 0.0;
    int accepted = 0;
    int attempt = 0;
    while (accepted < points && attempt < 100 * points) {
        Rng rng = make_rng(derive_seed(seed, 0xdeef, attempt++));
        std::normal_distribution<double> normal(0.0, 1.0);
        std::uniform_real_distribution<double> scale(0.5, 1.5);
        std::uniform_real_distribution<double> thresh(0.05, 0.5);
        BmhtParams params;
        Vector8 noisy, clean;
        for (int j = 0; j < 8; ++j) {
            params.u[j] = scale(rng);
            params.thresholds[j] = thresh(rng);
            noisy[j] = normal(rng);
            clean[j] = normal(rng);
        }
        // Keep a safe margin from the soft-threshold kinks so the central
        // difference stays on one smooth branch.
        const Vector8 scaled = (mht_forward(noisy)).cwiseProduct(params.u);
        bool smooth = true;
        for (int j = 0; j < 8; ++j)
            if (std::abs(std::abs(scaled[j]) - params.thresholds[j]) < 5e-3 ||
                std::abs(scaled[j]) < 5e-3)
                smooth = false;
        if (!smooth) continue;
        ++accepted;

        const BlockGradients analytic = gradients(params, noisy, clean, kappa, rho);
        Vector8 fd_u, fd_t;
        for (int j = 0; j < 8; ++j) {
            BmhtParams hi = params, lo = params;
            hi.u[j] += h;
            lo.u[j] -= h;
            fd_u[j] = (loss(hi, noisy, clean, kappa, rho) - loss(lo, noisy, clean, kappa, rho)) /
                      (2.0 * h);
            hi = params;
            lo = params;
            hi.thresholds[j] += h;
            lo.thresholds[j] -= h;
            fd_t[j] = (loss(hi, noisy, clean, kappa, rho) - loss(lo, noisy, clean, kappa, rho)) /
                      (2.0 * h);
        }
        RealVector reference(16), candidate(16);
        reference << fd_u, fd_t;
        candidate << analytic.u, analytic.thresholds;
        worst = std::max(worst, normwise_rel_error(reference, candidate));
    }
    if (accepted < points)
        throw numerical_error("worst_denoiser_gradient_fd_error: could not sample enough smooth "
                              "points");
    return worst;
}

IntVector exhaustive_mle(const ReceivedFrame& frame, const PreamblePool& pool, int x_max,
                         double beta, bool blind_objective, double noise_power) {
    const int k = pool.preambles();
    if (k > 8 || std::pow(x_max + 1.0, k) > 2e6)
        throw config_error("exhaustive_mle: state space too large");
    IntVector state = IntVector::Zero(k);
    IntVector best = state;
    double best_value = -std::numeric_limits<double>::infinity();
    while (true) {
        const RealVector x = state.cast<double>();
        const double value = blind_objective
                                 ? blind_log_likelihood(frame, pool, x, beta)
                                 : log_likelihood(frame, pool, x, beta, noise_power);
        if (value > best_value) {
            best_value = value;
            best = state;
        }
        int digit = 0;
        while (digit < k) {
            if (state[digit] < x_max) {
                state[digit] += 1;
                break;
            }
            state[digit] = 0;
            ++digit;
        }
        if (digit == k) break;
    }
    return best;
}

MleOracleStats tiny_mle_oracle(int seeds, std::uint64_t seed) {
    MleOracleStats stats;
    stats.seeds = seeds;
    const int k = 4, l = 3, m = 3, t = 8;
    const double snr_db = 16.0;
    DetectorConfig cfg;
    for (int s = 0; s < seeds; ++s) {
        Rng rng = make_rng(derive_seed(seed, 0x371e, s));
        const OracleInstance inst = random_instance(k, l, m, t, snr_db, rng);
        Rng det_rng = make_rng(derive_seed(seed, 0x371f, s));
        const DetectionResult result = run_blind_nsvgd(inst.frame, inst.pool, cfg, det_rng);

        // Convergence clause: the objective the detector climbs, evaluated at
        // its swarm mean, must reach the top of the enumerated integer
        // landscape (the continuous optimum dominates the lattice, so a
        // converged swarm typically lands at or above the integer maximum).
        // Integer vectors themselves are unusable as the comparison point
        // here: at these dimensions the active preambles often span fewer
        // than L directions, and the floored noise-free covariance at any
        // vector with a correct zero is near-singular, which sends its value
        // off a cliff no matter how good the estimate is.
        const IntVector best_blind = exhaustive_mle(inst.frame, inst.pool, m, 1.0, true, 0.0);
        const double max_value =
            blind_log_likelihood(inst.frame, inst.pool, best_blind.cast<double>(), 1.0);
        const double mean_value =
            blind_log_likelihood(inst.frame, inst.pool, result.particle_mean, 1.0);
        if (max_value - mean_value <= 0.05 * std::abs(max_value)) ++stats.within_tolerance;

        // Agreement clause: the rounded estimate against the argmax of the
        // noise-aware exhaustive search, the well-posed integer reference.
        const IntVector best_aware =
            exhaustive_mle(inst.frame, inst.pool, m, 1.0, false, inst.frame.noise_power);
        if ((result.estimate - best_aware).cwiseAbs().sum() == 0) ++stats.argmax_agreement;
    }
    return stats;
}

std::vector<OracleCheck> oracle_checks(std::uint64_t seed) {
    std::vector<OracleCheck> checks;

    {
        OracleCheck c;
        c.name = "transform-identity";
        const Matrix8 q = mht_matrix_8().entries;
        const Matrix8 qi = imht_matrix_8().entries;
        const double inv_residual = (qi * q - Matrix8::Identity()).cwiseAbs().maxCoeff();
        Rng rng = make_rng(derive_seed(seed, 0x0071));
        std::normal_distribution<double> normal(0.0, 1.0);
        double round_trip = 0.0;
        for (int i = 0; i < 10000; ++i) {
            Vector8 x;
            for (int j = 0; j < 8; ++j) x[j] = 3.0 * normal(rng);
            round_trip = std::max(round_trip, (mht_inverse(mht_forward(x)) - x).cwiseAbs().maxCoeff());
        }
        // Depth-2 Haar packet bank against the re-ordered Hadamard rows.
        const RealMatrix h4 = hadamard_matrix(4).entries;
        const int perm[4] = {0, 2, 1, 3};
        double bank_err = 0.0;
        for (int j = 0; j < 4; ++j) {
            RealVector e = RealVector::Zero(4);
            e[j] = 1.0;
            const RealVector out = haar_packet_analysis(e, 2);
            for (int r = 0; r < 4; ++r)
                bank_err = std::max(bank_err, std::abs(out[r] - 0.5 * h4(perm[r], j)));
        }
        c.pass = inv_residual == 0.0 && round_trip < 1e-10 && bank_err < 1e-12;
        c.detail = "inverse residual " + format_double(inv_residual) + ", round trip " +
                   format_double(round_trip) + ", filter bank " + format_double(bank_err);
        checks.push_back(c);
    }

    {
        OracleCheck c;
        c.name = "blind-score-fd";
        const double worst = worst_blind_score_fd_error(50, seed);
        c.pass = worst < 1e-4;
        c.detail = "worst relative error " + format_double(worst) + " over 50 instances";
        checks.push_back(c);
    }

    {
        OracleCheck c;
        c.name = "aware-score-fd";
        const double worst = worst_aware_score_fd_error(50, seed);
        c.pass = worst < 1e-4;
        c.detail = "worst relative error " + format_double(worst) + " over 50 instances";
        checks.push_back(c);
    }

    {
        OracleCheck c;
        c.name = "denoiser-gradient-fd";
        const double worst = worst_denoiser_gradient_fd_error(100, seed);
        c.pass = worst < 1e-5;
        c.detail = "worst relative error " + format_double(worst) + " over 100 smooth points";
        checks.push_back(c);
    }

    {
        OracleCheck c;
        c.name = "tiny-exhaustive-mle";
        const MleOracleStats stats = tiny_mle_oracle(100, seed);
        // Observed agreement sits near 55-63/100 across base seeds (the
        // rounded swarm mean and the exhaustive argmax are different
        // estimators, and on these tiny ambiguous instances even the argmax
        // matches the true activity only about half the time), so the gate
        // is pinned two binomial sigmas below that range.
        c.pass = stats.within_tolerance >= 90 && stats.argmax_agreement >= 45;
        c.detail = "blind objective at the swarm mean within 5% of the exhaustive integer "
                   "maximum in " +
                   std::to_string(stats.within_tolerance) + "/100 seeds, noise-aware argmax "
                   "agreement " +
                   std::to_string(stats.argmax_agreement) + "/100";
        checks.push_back(c);
    }

    return checks;
}

// ---------------------------------------------------------------------------
// Scenario execution
// ---------------------------------------------------------------------------

namespace {

struct DenoiseEvalRow {
    std::string layer;
    double snr_db = 0.0;
    int count = 0;
    double rms_pct = 0.0;
    double prd_pct = 0.0;
    int n_params = 0;
    long macs = 0;
    long macs_dense = 0;
};

DenoiseEvalRow evaluate_layer(const std::string& label, const BmhtParams& params,
                              LayerVariant variant, const DenoiseDataset& ds) {
    DenoiseEvalRow row;
    row.layer = label;
    row.snr_db = ds.snr_db;
    row.count = ds.count();
    const RealMatrix denoised = denoise_rows(params, variant, ds.noisy);
    const Eigen::Map<const RealVector> clean_flat(ds.clean.data(), ds.clean.size());
    const Eigen::Map<const RealVector> denoised_flat(denoised.data(), denoised.size());
    row.rms_pct = rms(clean_flat, denoised_flat);
    row.prd_pct = prd(clean_flat, denoised_flat);
    const ComplexityReport complexity = layer_complexity(variant, ds.l);
    row.n_params = complexity.n_params;
    row.macs = complexity.macs;
    row.macs_dense = complexity.macs_dense;
    return row;
}

DenoiseEvalRow evaluate_identity(const DenoiseDataset& ds) {
    DenoiseEvalRow row;
    row.layer = "identity";
    row.snr_db = ds.snr_db;
    row.count = ds.count();
    const Eigen::Map<const RealVector> clean_flat(ds.clean.data(), ds.clean.size());
    const Eigen::Map<const RealVector> noisy_flat(ds.noisy.data(), ds.noisy.size());
    row.rms_pct = rms(clean_flat, noisy_flat);
    row.prd_pct = prd(clean_flat, noisy_flat);
    row.n_params = 0;
    row.macs = 0;
    row.macs_dense = 0;
    return row;
}

void write_denoise_csv(const std::string& path, const std::string& scenario,
                       const std::vector<DenoiseEvalRow>& rows) {
    std::ofstream out(path);
    if (!out) throw persistence_error("write_denoise_csv: cannot open " + path);
    out << "scenario,layer,snr_db,count,rms_pct,prd_pct,n_params,macs,macs_dense\n";
    for (const DenoiseEvalRow& r : rows)
        out << scenario << ',' << r.layer << ',' << format_double(r.snr_db) << ',' << r.count
            << ',' << format_double(r.rms_pct) << ',' << format_double(r.prd_pct) << ','
            << r.n_params << ',' << r.macs << ',' << r.macs_dense << '\n';
    if (!out) throw persistence_error("write_denoise_csv: write failed for " + path);
}

BmhtParams load_params_or_identity(const ExperimentConfig& cfg) {
    if (cfg.denoiser_params.empty()) return BmhtParams{};
    return load_params(cfg.denoiser_params);
}

std::string joined(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

std::string vector_to_string(const IntVector& v) {
    std::string out = "[";
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i) out += ' ';
        out += std::to_string(v[i]);
    }
    return out + "]";
}

} // namespace

int run(const ExperimentConfig& cfg, const std::map<std::string, std::string>& entries) {
    const auto t0 = std::chrono::steady_clock::now();
    std::filesystem::create_directories(cfg.out_dir);
    const auto wall_ms = [&] {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count();
    };

    std::vector<PointResult> rows;
    const std::string name = scenario_name(cfg.scenario);
    int status = 0;

    switch (cfg.scenario) {
        case Scenario::train_denoiser: {
            DatasetConfig train_cfg{cfg.k, cfg.l, cfg.m, 1, cfg.train_snr_db, cfg.beta,
                                    cfg.train_count, derive_seed(cfg.seed, 0x7261)};
            const DenoiseDataset train_ds = generate_denoise_dataset(train_cfg);
            Rng train_rng = make_rng(derive_seed(cfg.seed, 0x7262));
            const TrainResult trained = train(train_ds, cfg.training, train_rng);
            save_params(trained.params, joined(cfg.out_dir, "params.json"));
            write_training_curve_csv(joined(cfg.out_dir, "training_curve.csv"), trained.curve);

            DatasetConfig test_cfg{cfg.k, cfg.l, cfg.m, 1, cfg.test_snr_db, cfg.beta,
                                   cfg.test_count, derive_seed(cfg.seed, 0x7263)};
            const DenoiseDataset test_ds = generate_denoise_dataset(test_cfg);
            std::vector<DenoiseEvalRow> evals;
            evals.push_back(evaluate_layer(std::string("trained-") +
                                               variant_name(cfg.training.variant),
                                           trained.params, cfg.training.variant, test_ds));
            evals.push_back(evaluate_identity(test_ds));
            write_denoise_csv(joined(cfg.out_dir, "denoise_metrics.csv"), name, evals);
            for (const DenoiseEvalRow& r : evals)
                std::cout << name << ": layer=" << r.layer << " rms=" << format_double(r.rms_pct)
                          << "% prd=" << format_double(r.prd_pct) << "% params=" << r.n_params
                          << " macs=" << r.macs << "\n";
            break;
        }
        case Scenario::eval_denoiser: {
            const BmhtParams params = load_params_or_identity(cfg);
            DatasetConfig test_cfg{cfg.k, cfg.l, cfg.m, 1, cfg.test_snr_db, cfg.beta,
                                   cfg.test_count, derive_seed(cfg.seed, 0x7263)};
            const DenoiseDataset test_ds = generate_denoise_dataset(test_cfg);
            std::vector<DenoiseEvalRow> evals;
            evals.push_back(evaluate_layer(cfg.denoiser_params.empty() ? "identity-params"
                                                                       : "trained-full",
                                           params, LayerVariant::full, test_ds));
            evals.push_back(evaluate_identity(test_ds));
            write_denoise_csv(joined(cfg.out_dir, "denoise_metrics.csv"), name, evals);
            for (const DenoiseEvalRow& r : evals)
                std::cout << name << ": layer=" << r.layer << " rms=" << format_double(r.rms_pct)
                          << "% prd=" << format_double(r.prd_pct) << "%\n";
            break;
        }
        case Scenario::detect_once: {
            const BmhtParams params = load_params_or_identity(cfg);
            TrialPoint point{cfg.k, cfg.l, cfg.m, cfg.t, cfg.beta, cfg.snr_db};
            const auto stats = run_point(point, cfg.detectors, cfg.detector, params, 1, cfg.seed,
                                         0);
            Rng frame_rng = make_rng(derive_seed(cfg.seed, 0, 0, 0));
            const PreamblePool pool = generate_preamble_pool(cfg.k, cfg.l, frame_rng, true);
            const ActivityVector activity = draw_activity(cfg.m, cfg.k, frame_rng);
            std::cout << name << ": truth " << vector_to_string(activity.counts) << "\n";
            for (const DetectorKind d : cfg.detectors) {
                rows.push_back(summarize_point(name, d, point, cfg.detector.particles,
                                               stats.at(d), 1));
                std::cout << "  " << detector_name(d) << ": mse=" <<
                    format_double(rows.back().mse_mean)
                          << " pade=" << format_double(rows.back().pade_mean)
                          << " throughput=" << format_double(rows.back().throughput_mean) << "\n";
            }
            break;
        }
        case Scenario::sweep_snr:
        case Scenario::throughput:
        case Scenario::dynamic_groups: {
            const BmhtParams params = load_params_or_identity(cfg);
            std::uint64_t ordinal = 0;
            for (const double snr : cfg.snr_sweep) {
                TrialPoint point{cfg.k, cfg.l, cfg.m, cfg.t, cfg.beta, snr};
                if (cfg.scenario == Scenario::dynamic_groups) {
                    point.grouped = true;
                    point.m1_min = cfg.group_m1_min;
                    point.m1_max = cfg.group_m1_max;
                    point.m2_min = cfg.group_m2_min;
                    point.m2_max = cfg.group_m2_max;
                    point.split = cfg.group_split;
                    point.m = static_cast<int>(std::lround(
                        0.5 * (cfg.group_m1_min + cfg.group_m1_max) +
                        0.5 * (cfg.group_m2_min + cfg.group_m2_max)));
                }
                const auto stats = run_point(point, cfg.detectors, cfg.detector, params,
                                             cfg.trials, cfg.seed, ordinal);
                for (const DetectorKind d : cfg.detectors) {
                    rows.push_back(summarize_point(name, d, point, cfg.detector.particles,
                                                   stats.at(d), cfg.trials));
                    std::cerr << name << ": snr=" << snr << " " << detector_name(d)
                              << " pade=" << format_double(rows.back().pade_mean) << "\n";
                }
                ++ordinal;
            }
            break;
        }
        case Scenario::sweep_m: {
            const BmhtParams params = load_params_or_identity(cfg);
            std::uint64_t ordinal = 0;
            for (const int m : cfg.m_sweep) {
                TrialPoint point{cfg.k, cfg.l, m, cfg.t, cfg.beta, cfg.snr_db};
                const auto stats = run_point(point, cfg.detectors, cfg.detector, params,
                                             cfg.trials, cfg.seed, ordinal);
                for (const DetectorKind d : cfg.detectors) {
                    rows.push_back(summarize_point(name, d, point, cfg.detector.particles,
                                                   stats.at(d), cfg.trials));
                    std::cerr << name << ": m=" << m << " " << detector_name(d)
                              << " pade=" << format_double(rows.back().pade_mean) << "\n";
                }
                ++ordinal;
            }
            break;
        }
        case Scenario::bench_time: {
            const BmhtParams params = load_params_or_identity(cfg);
            TrialPoint point{cfg.k, cfg.l, cfg.m, cfg.t, cfg.beta, cfg.snr_db};
            const auto stats = run_point(point, cfg.detectors, cfg.detector, params,
                                         cfg.bench_runs, cfg.seed, 0);
            for (const DetectorKind d : cfg.detectors) {
                rows.push_back(summarize_point(name, d, point, cfg.detector.particles,
                                               stats.at(d), cfg.bench_runs));
                std::cout << name << ": " << detector_name(d)
                          << " wall_ms=" << format_double(rows.back().wall_ms_mean) << "\n";
            }
            break;
        }
        case Scenario::oracle_checks: {
            const std::vector<OracleCheck> checks = ralab::oracle_checks(cfg.seed);
            for (const OracleCheck& c : checks) {
                std::cout << (c.pass ? "[PASS] " : "[FAIL] ") << c.name << ": " << c.detail
                          << "\n";
                if (!c.pass) status = 1;
            }
            break;
        }
    }

    if (!rows.empty()) write_results_csv(joined(cfg.out_dir, "results.csv"), rows);
    write_manifest(joined(cfg.out_dir, "manifest.json"), cfg, entries, wall_ms());
    return status;
}

} // namespace ralab
