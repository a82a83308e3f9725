#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "wyimvc/experiment.hpp"

using namespace wyimvc;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("wyimvc_exp_" + std::to_string(std::rand()) + std::to_string(std::rand()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

ExperimentConfig tiny_config() {
    ExperimentConfig cfg;
    cfg.synthetic.clusters = 3;
    cfg.synthetic.views = 2;
    cfg.synthetic.dim = 4;
    cfg.synthetic.samples = 60;
    cfg.synthetic.noise = 0.05;
    cfg.rates = {0.2, 0.5};
    cfg.seeds = {0, 1, 2};
    cfg.model.latent_dim = 4;
    cfg.model.hidden = 6;
    cfg.model.batch_size = 16;
    cfg.model.epochs = 0;
    return cfg;
}

// drop the trailing wall_time_s column from every csv line
std::string strip_wall(const std::string& csv) {
    std::stringstream in(csv), out;
    std::string line;
    while (std::getline(in, line)) {
        auto cut = line.rfind(',');
        out << line.substr(0, cut) << '\n';
    }
    return out.str();
}

// counts flushes and remembers the content visible at each one
struct FlushProbe : std::stringbuf {
    int syncs = 0;
    std::vector<std::string> snapshots;
    int sync() override {
        ++syncs;
        snapshots.push_back(str());
        return 0;
    }
};

const char* kFullConfig = R"(# sweep settings
[experiment]
data_seed = 7
rates = 0.1 0.3
seeds = 11 12
output = out.csv

[synthetic]
clusters = 4
views = 3
dim = 5
separation = 1.5
noise = 0.2
samples = 80

[model]
latent_dim = 8
hidden = 12
clusters = 6
kappa_a_star = 0.8
learning_rate = 0.002
batch_size = 32
epochs = 9
tau_start = 2.0
tau_end = 0.5
tau_decay = exponential
contrastive_temperature = 0.25
strict_paper_contrastive = true
weight_recon = 1.5
weight_kl = 0.5
weight_imputation = 2
weight_contrastive = 0.75

[solver]
max_iters = 250
tol = 1e-9
kappa_total = 0.4
seed = 3
)";

}  // namespace

TEST_CASE("config file round trips every key") {
    std::stringstream in(kFullConfig);
    ExperimentConfig cfg = parse_experiment_config(in, "inline");
    CHECK(cfg.dataset_dir.empty());
    CHECK(cfg.data_seed == 7);
    CHECK(cfg.rates == std::vector<double>{0.1, 0.3});
    CHECK(cfg.seeds == std::vector<std::uint64_t>{11, 12});
    CHECK(cfg.output == "out.csv");
    CHECK(cfg.synthetic.clusters == 4);
    CHECK(cfg.synthetic.views == 3);
    CHECK(cfg.synthetic.dim == 5);
    CHECK(cfg.synthetic.separation == 1.5);
    CHECK(cfg.synthetic.noise == 0.2);
    CHECK(cfg.synthetic.samples == 80);
    CHECK(cfg.model.latent_dim == 8);
    CHECK(cfg.model.hidden == 12);
    CHECK(cfg.model.clusters == 6);
    CHECK(cfg.clusters_from_config);
    CHECK(cfg.model.kappa_star == 0.8);
    CHECK(cfg.model.learning_rate == 0.002);
    CHECK(cfg.model.batch_size == 32);
    CHECK(cfg.model.epochs == 9);
    CHECK(cfg.model.temperature.tau_start == 2.0);
    CHECK(cfg.model.temperature.tau_end == 0.5);
    CHECK(cfg.model.temperature.mode == TemperatureSchedule::Mode::Exponential);
    CHECK(cfg.model.temperature.horizon == 9);
    CHECK(cfg.model.contrastive.temperature == 0.25);
    CHECK(cfg.model.contrastive.strict_paper);
    CHECK(cfg.model.weights.recon == 1.5);
    CHECK(cfg.model.weights.kl == 0.5);
    CHECK(cfg.model.weights.imputation == 2.0);
    CHECK(cfg.model.weights.contrastive == 0.75);
    CHECK(cfg.solver.max_iters == 250);
    CHECK(cfg.solver.tol == 1e-9);
    CHECK(cfg.solver.kappa_total == 0.4);
    CHECK(cfg.solver.seed == 3);
}

TEST_CASE("defaults survive a minimal config") {
    std::stringstream in("[experiment]\nseeds = 3\n");
    ExperimentConfig cfg = parse_experiment_config(in, "inline");
    CHECK(cfg.seeds == std::vector<std::uint64_t>{3});
    CHECK(cfg.rates == std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7});
    CHECK(cfg.model.epochs == 400);
    CHECK(cfg.model.kappa_star == 0.9);
    CHECK(!cfg.clusters_from_config);
    CHECK(cfg.solver.max_iters == 500);
    CHECK(cfg.solver.tol == 1e-8);
    CHECK(cfg.output == "results.csv");
}

TEST_CASE("malformed configs are rejected") {
    auto reject = [](const std::string& text) {
        std::stringstream in(text);
        CHECK_THROWS_AS(parse_experiment_config(in, "inline"), std::invalid_argument);
    };
    reject("[experiment]\nbanana = 1\n");                 // unknown key
    reject("[model]\nbanana = 1\n");                      // unknown key
    reject("[fruit]\n");                                  // unknown section
    reject("[experiment\nseeds = 1\n");                   // malformed header
    reject("seeds = 1\n");                                // key before any section
    reject("[experiment]\nseeds\n");                      // not key = value
    reject("[experiment]\nseeds = \n");                   // empty value
    reject("[experiment]\nseeds = 1\nseeds = 2\n");       // duplicate key
    reject("[experiment]\nseeds = -1\n");                 // negative seed
    reject("[experiment]\nrates = 0.5x\n");               // trailing junk
    reject("[experiment]\nrates = 1.0\n");                // rate outside [0,1)
    reject("[model]\nepochs = 2.５\n");                   // not a number at all
    reject("[model]\nepochs = 2.5\n");                    // not an integer
    reject("[model]\ntau_decay = linear\n");              // unknown mode
    reject("[model]\nclusters = 1\n");                    // degenerate override
    reject("[solver]\nbanana = 1\n");                     // unknown key
    reject("[solver]\ntol = 0\n");                        // tolerance must be positive
    reject("[model]\nstrict_paper_contrastive = maybe\n");
}

TEST_CASE("validate catches bad programmatic configs") {
    ExperimentConfig cfg = tiny_config();
    cfg.seeds.clear();
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

    cfg = tiny_config();
    cfg.rates = {0.2, 1.0};
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

    cfg = tiny_config();
    cfg.output.clear();
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

    cfg = tiny_config();
    cfg.synthetic.clusters = 1;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

    cfg = tiny_config();
    cfg.solver.max_iters = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

    cfg = tiny_config();
    cfg.solver.kappa_total = -0.1;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

    CHECK_THROWS_AS(load_experiment_config("/nonexistent/config.ini"), std::runtime_error);
}

TEST_CASE("environment overrides replace seeds and output") {
    ExperimentConfig cfg = tiny_config();
    ::setenv("WYIMVC_SEEDS", "5 6 7", 1);
    ::setenv("WYIMVC_OUTPUT", "elsewhere.csv", 1);
    apply_env_overrides(cfg);
    CHECK(cfg.seeds == std::vector<std::uint64_t>{5, 6, 7});
    CHECK(cfg.output == "elsewhere.csv");

    ::setenv("WYIMVC_SEEDS", "5 banana", 1);
    CHECK_THROWS_AS(apply_env_overrides(cfg), std::invalid_argument);

    ::unsetenv("WYIMVC_SEEDS");
    ::unsetenv("WYIMVC_OUTPUT");
    ExperimentConfig untouched = tiny_config();
    apply_env_overrides(untouched);
    CHECK(untouched.seeds == tiny_config().seeds);
    CHECK(untouched.output == tiny_config().output);
}

TEST_CASE("untrained sweep emits seed rows plus summaries") {
    ExperimentConfig cfg = tiny_config();
    std::stringstream csv;
    std::vector<AccuracyRecord> recs = run_experiment(cfg, csv);

    // 3 seed rows + mean + std, per rate
    REQUIRE(recs.size() == cfg.rates.size() * (cfg.seeds.size() + 2));
    std::string line;
    std::getline(csv, line);
    CHECK(line == kRecordHeader);

    std::size_t i = 0;
    for (double rate : cfg.rates) {
        double sum = 0.0, sq = 0.0;
        for (std::uint64_t seed : cfg.seeds) {
            const AccuracyRecord& r = recs.at(i++);
            CHECK(r.dataset == "synthetic");
            CHECK(r.missing_rate == rate);
            CHECK(r.seed == std::to_string(seed));
            CHECK(r.epochs == 0);
            CHECK(r.accuracy >= 0.0);
            CHECK(r.accuracy <= 1.0);
            sum += r.accuracy;
            sq += r.accuracy * r.accuracy;
        }
        double n = static_cast<double>(cfg.seeds.size());
        double mean = sum / n;
        const AccuracyRecord& m = recs.at(i++);
        CHECK(m.seed == "mean");
        CHECK(m.accuracy == doctest::Approx(mean).epsilon(1e-15));
        const AccuracyRecord& s = recs.at(i++);
        CHECK(s.seed == "std");
        CHECK(s.accuracy ==
              doctest::Approx(std::sqrt((sq - n * mean * mean) / (n - 1))).epsilon(1e-9));
    }
}

TEST_CASE("csv written by the sweep loads back verbatim") {
    TempDir tmp;
    ExperimentConfig cfg = tiny_config();
    cfg.rates = {0.3};
    cfg.seeds = {0, 1};
    cfg.model.epochs = 2;

    fs::path out = tmp.path / "results.csv";
    std::ofstream csv(out);
    std::vector<AccuracyRecord> recs = run_experiment(cfg, csv);
    csv.close();

    std::vector<AccuracyRecord> loaded = load_records_csv(out.string());
    REQUIRE(loaded.size() == recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
        CHECK(loaded[i].dataset == recs[i].dataset);
        CHECK(loaded[i].missing_rate == recs[i].missing_rate);
        CHECK(loaded[i].seed == recs[i].seed);
        CHECK(loaded[i].accuracy == recs[i].accuracy);  // %.17g round trips exactly
        CHECK(loaded[i].epochs == recs[i].epochs);
    }
    // summaries are recomputable from the stored seed rows alone
    double replay = 0.5 * (loaded[0].accuracy + loaded[1].accuracy);
    CHECK(loaded[2].seed == "mean");
    CHECK(loaded[2].accuracy == replay);
}

TEST_CASE("reruns are byte identical apart from wall time") {
    ExperimentConfig cfg = tiny_config();
    cfg.rates = {0.4};
    cfg.seeds = {0, 1};
    cfg.model.epochs = 2;

    std::stringstream a, b;
    run_experiment(cfg, a);
    run_experiment(cfg, b);
    CHECK(strip_wall(a.str()) == strip_wall(b.str()));
    CHECK(a.str().find("nan") == std::string::npos);
}

TEST_CASE("a sweep cell matches the same cell run alone") {
    ExperimentConfig cfg = tiny_config();
    cfg.rates = {0.2, 0.5};
    cfg.seeds = {3};
    cfg.model.epochs = 1;

    std::stringstream csv;
    std::vector<AccuracyRecord> recs = run_experiment(cfg, csv);

    MultiviewDataset base = synthesize(cfg.synthetic, cfg.data_seed);
    base.normalize();
    AccuracyRecord solo = run_cell(base, cfg, 0.5, 3);
    CHECK(solo.accuracy == recs.at(3).accuracy);  // rows: seed,mean,std,seed,...
    CHECK(solo.missing_rate == 0.5);
    CHECK(solo.seed == "3");
}

TEST_CASE("every finished row is flushed as it completes") {
    ExperimentConfig cfg = tiny_config();
    cfg.rates = {0.1, 0.2};

    FlushProbe probe;
    std::ostream csv(&probe);
    run_experiment(cfg, csv);

    // header + 6 seed rows + 2 summary flushes at minimum
    CHECK(probe.syncs >= 9);
    CHECK(probe.snapshots.front().find(kRecordHeader) == 0);
    for (std::size_t i = 1; i < probe.snapshots.size(); ++i)
        CHECK(probe.snapshots[i].size() >= probe.snapshots[i - 1].size());
    // the row for the first cell is on disk well before the run ends
    std::string after_first = probe.snapshots.at(1);
    CHECK(after_first.find("synthetic,") != std::string::npos);
}

TEST_CASE("sweeps refuse datasets that are already incomplete") {
    ExperimentConfig cfg = tiny_config();
    TempDir tmp;
    MultiviewDataset data = synthesize(cfg.synthetic, 0);
    data = apply_missing(data, 0.5, 0);
    save_dataset(data, tmp.path.string());
    cfg.dataset_dir = tmp.path.string();
    std::stringstream csv;
    CHECK_THROWS_WITH_AS(run_experiment(cfg, csv),
                         doctest::Contains("complete dataset"), std::invalid_argument);
}

TEST_CASE("record csv loader rejects malformed files") {
    TempDir tmp;
    auto write = [&](const std::string& name, const std::string& text) {
        std::ofstream out(tmp.path / name);
        out << text;
        return (tmp.path / name).string();
    };
    CHECK_THROWS_AS(load_records_csv((tmp.path / "missing.csv").string()), std::runtime_error);
    CHECK_THROWS_AS(load_records_csv(write("bad_header.csv", "a,b,c\n")), std::runtime_error);
    CHECK_THROWS_AS(load_records_csv(write(
                        "short_row.csv", std::string(kRecordHeader) + "\nsynthetic,0.1,0\n")),
                    std::runtime_error);
    CHECK_THROWS_AS(load_records_csv(write("bad_number.csv", std::string(kRecordHeader) +
                                                                 "\nsynthetic,x,0,0.5,1,0.1\n")),
                    std::runtime_error);

    std::string good = std::string(kRecordHeader) + "\nsynthetic,0.1,mean,0.5,10,0.25\n\n";
    std::vector<AccuracyRecord> recs = load_records_csv(write("good.csv", good));
    REQUIRE(recs.size() == 1);
    CHECK(recs[0].seed == "mean");
    CHECK(recs[0].epochs == 10);
    CHECK(recs[0].wall_time_s == 0.25);
}
