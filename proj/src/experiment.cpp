#include "wyimvc/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "wyimvc/metrics.hpp"

namespace wyimvc {
namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
}

double to_double(const std::string& s, const std::string& where) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument(where + ": '" + s + "' is not a number");
    }
    if (used != s.size()) throw std::invalid_argument(where + ": '" + s + "' is not a number");
    return v;
}

long to_long(const std::string& s, const std::string& where) {
    double v = to_double(s, where);
    if (v != std::floor(v))
        throw std::invalid_argument(where + ": '" + s + "' is not an integer");
    return static_cast<long>(v);
}

std::uint64_t to_seed(const std::string& s, const std::string& where) {
    long v = to_long(s, where);
    if (v < 0) throw std::invalid_argument(where + ": seeds must be nonnegative");
    return static_cast<std::uint64_t>(v);
}

bool to_bool(const std::string& s, const std::string& where) {
    if (s == "1" || s == "true") return true;
    if (s == "0" || s == "false") return false;
    throw std::invalid_argument(where + ": '" + s + "' is not a boolean");
}

}  // namespace

void SolverSettings::validate() const {
    if (max_iters < 1) throw std::invalid_argument("solver: max_iters must be positive");
    if (!(tol > 0.0)) throw std::invalid_argument("solver: tol must be positive");
    if (!(kappa_total >= 0.0))
        throw std::invalid_argument("solver: kappa_total must be nonnegative");
}

void ExperimentConfig::validate() const {
    if (seeds.empty()) throw std::invalid_argument("experiment: seeds must be nonempty");
    if (rates.empty()) throw std::invalid_argument("experiment: rates must be nonempty");
    for (double r : rates)
        if (!(r >= 0.0 && r < 1.0))
            throw std::invalid_argument("experiment: rate " + fmt17(r) + " outside [0,1)");
    if (output.empty()) throw std::invalid_argument("experiment: empty output path");
    if (dataset_dir.empty()) synthetic.validate();
    if (model.epochs < 0) throw std::invalid_argument("experiment: negative epochs");
    if (clusters_from_config && model.clusters < 2)
        throw std::invalid_argument("experiment: a clusters override must be at least 2");
    solver.validate();
}

ExperimentConfig parse_experiment_config(std::istream& in, const std::string& origin) {
    // collect raw key/values first, then convert field by field
    std::map<std::pair<std::string, std::string>, std::string> kv;
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string where = origin + ":" + std::to_string(lineno);
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw std::invalid_argument(where + ": malformed section header");
            section = trim(t.substr(1, t.size() - 2));
            if (section != "experiment" && section != "synthetic" && section != "model" &&
                section != "solver")
                throw std::invalid_argument(where + ": unknown section [" + section + "]");
            continue;
        }
        std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument(where + ": expected key = value");
        if (section.empty())
            throw std::invalid_argument(where + ": key outside of any section");
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty() || value.empty())
            throw std::invalid_argument(where + ": empty key or value");
        if (!kv.emplace(std::make_pair(section, key), value).second)
            throw std::invalid_argument(where + ": duplicate key " + key);
    }

    ExperimentConfig cfg;
    double tau_start = cfg.model.temperature.tau_start;
    double tau_end = cfg.model.temperature.tau_end;
    auto tau_mode = cfg.model.temperature.mode;

    for (const auto& [sk, value] : kv) {
        const auto& [section, key] = sk;
        std::string where = origin + " [" + section + "] " + key;
        if (section == "experiment") {
            if (key == "dataset")
                cfg.dataset_dir = value;
            else if (key == "data_seed")
                cfg.data_seed = to_seed(value, where);
            else if (key == "output")
                cfg.output = value;
            else if (key == "rates") {
                cfg.rates.clear();
                for (const auto& tok : split_ws(value)) cfg.rates.push_back(to_double(tok, where));
            } else if (key == "seeds") {
                cfg.seeds.clear();
                for (const auto& tok : split_ws(value)) cfg.seeds.push_back(to_seed(tok, where));
            } else
                throw std::invalid_argument(where + ": unknown key");
        } else if (section == "synthetic") {
            if (key == "clusters")
                cfg.synthetic.clusters = static_cast<int>(to_long(value, where));
            else if (key == "views")
                cfg.synthetic.views = static_cast<int>(to_long(value, where));
            else if (key == "dim")
                cfg.synthetic.dim = static_cast<int>(to_long(value, where));
            else if (key == "separation")
                cfg.synthetic.separation = to_double(value, where);
            else if (key == "noise")
                cfg.synthetic.noise = to_double(value, where);
            else if (key == "samples")
                cfg.synthetic.samples = to_long(value, where);
            else
                throw std::invalid_argument(where + ": unknown key");
        } else if (section == "solver") {
            if (key == "max_iters")
                cfg.solver.max_iters = static_cast<int>(to_long(value, where));
            else if (key == "tol")
                cfg.solver.tol = to_double(value, where);
            else if (key == "kappa_total")
                cfg.solver.kappa_total = to_double(value, where);
            else if (key == "seed")
                cfg.solver.seed = to_seed(value, where);
            else
                throw std::invalid_argument(where + ": unknown key");
        } else {  // model
            if (key == "latent_dim")
                cfg.model.latent_dim = static_cast<int>(to_long(value, where));
            else if (key == "hidden")
                cfg.model.hidden = static_cast<int>(to_long(value, where));
            else if (key == "clusters") {
                cfg.model.clusters = static_cast<int>(to_long(value, where));
                cfg.clusters_from_config = true;
            } else if (key == "kappa_a_star")
                cfg.model.kappa_star = to_double(value, where);
            else if (key == "learning_rate")
                cfg.model.learning_rate = to_double(value, where);
            else if (key == "batch_size")
                cfg.model.batch_size = static_cast<int>(to_long(value, where));
            else if (key == "epochs")
                cfg.model.epochs = static_cast<int>(to_long(value, where));
            else if (key == "tau_start")
                tau_start = to_double(value, where);
            else if (key == "tau_end")
                tau_end = to_double(value, where);
            else if (key == "tau_decay") {
                if (value == "constant")
                    tau_mode = TemperatureSchedule::Mode::Constant;
                else if (value == "exponential")
                    tau_mode = TemperatureSchedule::Mode::Exponential;
                else
                    throw std::invalid_argument(where + ": expected constant or exponential");
            } else if (key == "contrastive_temperature")
                cfg.model.contrastive.temperature = to_double(value, where);
            else if (key == "strict_paper_contrastive")
                cfg.model.contrastive.strict_paper = to_bool(value, where);
            else if (key == "weight_recon")
                cfg.model.weights.recon = to_double(value, where);
            else if (key == "weight_kl")
                cfg.model.weights.kl = to_double(value, where);
            else if (key == "weight_imputation")
                cfg.model.weights.imputation = to_double(value, where);
            else if (key == "weight_contrastive")
                cfg.model.weights.contrastive = to_double(value, where);
            else
                throw std::invalid_argument(where + ": unknown key");
        }
    }
    cfg.model.temperature =
        TemperatureSchedule(tau_start, tau_end, tau_mode, std::max(1, cfg.model.epochs));
    cfg.validate();
    return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open config");
    return parse_experiment_config(in, path);
}

void apply_env_overrides(ExperimentConfig& cfg) {
    if (const char* seeds = std::getenv("WYIMVC_SEEDS")) {
        std::vector<std::uint64_t> parsed;
        for (const auto& tok : split_ws(seeds)) parsed.push_back(to_seed(tok, "WYIMVC_SEEDS"));
        if (parsed.empty()) throw std::invalid_argument("WYIMVC_SEEDS: empty list");
        cfg.seeds = std::move(parsed);
    }
    if (const char* output = std::getenv("WYIMVC_OUTPUT")) {
        if (*output == '\0') throw std::invalid_argument("WYIMVC_OUTPUT: empty path");
        cfg.output = output;
    }
}

void write_record(std::ostream& os, const AccuracyRecord& r) {
    os << r.dataset << ',' << fmt17(r.missing_rate) << ',' << r.seed << ','
       << fmt17(r.accuracy) << ',' << r.epochs << ',' << fmt17(r.wall_time_s) << '\n';
}

std::vector<AccuracyRecord> load_records_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open");
    std::string line;
    if (!std::getline(in, line) || trim(line) != kRecordHeader)
        throw std::runtime_error(path + ": missing or wrong header");
    std::vector<AccuracyRecord> out;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 6)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected 6 fields");
        std::string where = path + ":" + std::to_string(lineno);
        AccuracyRecord r;
        r.dataset = cells[0];
        r.seed = cells[2];
        try {
            r.missing_rate = to_double(cells[1], where);
            r.accuracy = to_double(cells[3], where);
            r.epochs = static_cast<int>(to_long(cells[4], where));
            r.wall_time_s = to_double(cells[5], where);
        } catch (const std::invalid_argument& e) {
            throw std::runtime_error(e.what());
        }
        out.push_back(std::move(r));
    }
    return out;
}

AccuracyRecord run_cell(const MultiviewDataset& base, const ExperimentConfig& cfg, double rate,
                        std::uint64_t seed) {
    auto t0 = std::chrono::steady_clock::now();

    MultiviewDataset masked = apply_missing(base, rate, seed);
    ModelConfig mc = cfg.model;
    mc.view_dims.clear();
    for (const auto& v : base.views) mc.view_dims.push_back(static_cast<int>(v.cols()));
    if (!cfg.clusters_from_config) mc.clusters = base.cluster_count();
    // the temperature decay spans the actual training run
    mc.temperature = TemperatureSchedule(mc.temperature.tau_start, mc.temperature.tau_end,
                                         mc.temperature.mode, std::max(1, mc.epochs));

    WyimvcModel model(mc, seed);
    Adam opt(model.params(), {mc.learning_rate, 0.9, 0.999, 1e-8});
    Rng rng(seed + 0x9e3779b9ull);  // training stream distinct from the init stream
    for (int epoch = 0; epoch < mc.epochs; ++epoch) model.train_epoch(masked, opt, epoch, rng);

    std::vector<ClusterPrediction> preds = model.predict(masked);
    std::vector<int> labels(preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i) labels[i] = preds[i].label;

    AccuracyRecord r;
    r.dataset = base.meta.name;
    r.missing_rate = rate;
    r.seed = std::to_string(seed);
    // an overridden cluster count may under- or overshoot the label range
    int k = std::max(mc.clusters, base.cluster_count());
    r.accuracy = clustering_accuracy(labels, masked.labels, k);
    r.epochs = mc.epochs;
    r.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

std::vector<AccuracyRecord> run_experiment(const ExperimentConfig& cfg, std::ostream& csv) {
    cfg.validate();
    MultiviewDataset base = cfg.dataset_dir.empty() ? synthesize(cfg.synthetic, cfg.data_seed)
                                                    : load_dataset(cfg.dataset_dir);
    if (!base.complete())
        throw std::invalid_argument("experiment: the missing-rate sweep needs a complete "
                                    "dataset as its starting point");
    base.normalize();

    csv << kRecordHeader << '\n';
    csv.flush();

    std::vector<AccuracyRecord> records;
    for (double rate : cfg.rates) {
        std::vector<AccuracyRecord> cell_rows;
        for (std::uint64_t seed : cfg.seeds) {
            AccuracyRecord r = run_cell(base, cfg, rate, seed);
            write_record(csv, r);
            csv.flush();  // aborted runs keep every finished cell
            records.push_back(r);
            cell_rows.push_back(std::move(r));
        }
        double mean = 0.0;
        for (const auto& r : cell_rows) mean += r.accuracy;
        mean /= static_cast<double>(cell_rows.size());
        double var = 0.0;
        for (const auto& r : cell_rows) var += (r.accuracy - mean) * (r.accuracy - mean);
        double stddev = cell_rows.size() > 1
                            ? std::sqrt(var / static_cast<double>(cell_rows.size() - 1))
                            : 0.0;
        double wall_mean = 0.0;
        for (const auto& r : cell_rows) wall_mean += r.wall_time_s;
        wall_mean /= static_cast<double>(cell_rows.size());

        AccuracyRecord summary = cell_rows.front();
        summary.seed = "mean";
        summary.accuracy = mean;
        summary.wall_time_s = wall_mean;
        write_record(csv, summary);
        records.push_back(summary);
        summary.seed = "std";
        summary.accuracy = stddev;
        summary.wall_time_s = 0.0;
        write_record(csv, summary);
        records.push_back(summary);
        csv.flush();
    }
    return records;
}

}  // namespace wyimvc
