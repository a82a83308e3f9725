// command line front end: discrete solver, dataset tooling, training,
// evaluation, and the missing-rate sweep
#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <string>
#include <vector>

#include "wyimvc/dca.hpp"
#include "wyimvc/experiment.hpp"
#include "wyimvc/metrics.hpp"
#include "wyimvc/model.hpp"

using namespace wyimvc;

namespace {

std::string block_str(const std::vector<int>& block) {
    std::string s = "{";
    for (std::size_t i = 0; i < block.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(block[i]);
    }
    return s + "}";
}

MultiviewDataset load_normalized(const std::string& dir) {
    MultiviewDataset data = load_dataset(dir);
    data.normalize();
    return data;
}

ModelConfig model_config_for(const MultiviewDataset& data, const ExperimentConfig& cfg) {
    ModelConfig mc = cfg.model;
    mc.view_dims.clear();
    for (const auto& v : data.views) mc.view_dims.push_back(static_cast<int>(v.cols()));
    if (!cfg.clusters_from_config) mc.clusters = data.cluster_count();
    mc.temperature = TemperatureSchedule(mc.temperature.tau_start, mc.temperature.tau_end,
                                         mc.temperature.mode, std::max(1, mc.epochs));
    return mc;
}

void cmd_solve_discrete(const std::string& pmf_path, int z_card, double kappa,
                        std::vector<double> kappa_splits, int max_iters, double tol,
                        std::uint64_t seed, bool uniform_prior, bool trace) {
    JointPMF joint = load_pmf_file(pmf_path);
    KappaWeights weights = kappa_splits.empty()
                               ? KappaWeights::uniform(joint.views(), kappa)
                               : KappaWeights(joint.views(), std::move(kappa_splits));

    SolverConfig cfg;
    cfg.max_iters = max_iters;
    cfg.tol = tol;
    cfg.seed = seed;
    cfg.prior_mode = uniform_prior ? PriorMode::Uniform : PriorMode::SelfConsistent;

    SolveResult result = solve(joint, z_card, weights, cfg);

    if (trace) {
        std::printf("%6s  %14s  %14s  %14s  %12s\n", "iter", "I(Z;X)", "sum CMI",
                    "lagrangian", "step");
        for (const IterationStats& it : result.trace) {
            double cmi = std::accumulate(it.split_cmi.begin(), it.split_cmi.end(), 0.0);
            std::printf("%6d  %14.10f  %14.10f  %14.10f  %12.3e\n", it.iter, it.latent_info,
                        cmi, it.lagrangian, it.step_sup);
        }
    }

    const IterationStats& last = result.trace.back();
    std::printf("%s after %zu iterations (tol %.1e)\n",
                result.converged ? "converged" : "NOT converged", result.trace.size(), tol);
    std::printf("I(Z;X^V)   = %.12f nats\n", last.latent_info);
    std::printf("lagrangian = %.12f nats\n", last.lagrangian);
    const auto& splits = weights.splits();
    for (std::size_t s = 0; s < splits.size(); ++s)
        std::printf("I(X_%s; X_%s | Z) = %.12f  (kappa %.6f)\n",
                    block_str(splits[s].side).c_str(),
                    block_str(splits[s].complement).c_str(), last.split_cmi[s],
                    weights.values()[s]);
}

void cmd_synth(const std::string& out_dir, const SyntheticSpec& spec, std::uint64_t seed,
               const std::string& name) {
    MultiviewDataset data = synthesize(spec, seed);
    data.meta.name = name;
    save_dataset(data, out_dir);
    std::printf("wrote %s: %ld samples, %d views, %d clusters\n", out_dir.c_str(),
                data.size(), data.view_count(), data.cluster_count());
}

void cmd_mask(const std::string& in_dir, const std::string& out_dir, double rate,
              std::uint64_t seed) {
    MultiviewDataset data = load_dataset(in_dir);
    MultiviewDataset masked = apply_missing(data, rate, seed);
    save_dataset(masked, out_dir);
    long hidden = 0;
    for (long i = 0; i < masked.mask.rows(); ++i)
        hidden += static_cast<long>(masked.mask.cols() - masked.mask.row(i).sum());
    std::printf("wrote %s: %ld samples, %ld view entries masked (rate %g)\n", out_dir.c_str(),
                masked.size(), hidden, rate);
}

void cmd_train(const std::string& data_dir, const std::string& model_out,
               const ExperimentConfig& cfg, std::uint64_t seed, bool quiet) {
    auto t0 = std::chrono::steady_clock::now();
    MultiviewDataset data = load_normalized(data_dir);
    ModelConfig mc = model_config_for(data, cfg);

    WyimvcModel model(mc, seed);
    Adam opt(model.params(), {mc.learning_rate, 0.9, 0.999, 1e-8});
    Rng rng(seed + 0x9e3779b9ull);
    int stride = std::max(1, mc.epochs / 10);
    for (int epoch = 0; epoch < mc.epochs; ++epoch) {
        LossReport report = model.train_epoch(data, opt, epoch, rng);
        if (!quiet && (epoch % stride == 0 || epoch + 1 == mc.epochs))
            std::printf("epoch %4d  loss %.6f\n", epoch, report.total);
    }
    model.save(model_out);
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("saved %s after %d epochs (%.1f s)\n", model_out.c_str(), mc.epochs, wall);
}

void cmd_evaluate(const std::string& data_dir, const std::string& model_path,
                  const std::string& impute_csv) {
    MultiviewDataset data = load_normalized(data_dir);
    WyimvcModel model = load_model(model_path);

    std::vector<ClusterPrediction> preds = model.predict(data);
    std::vector<int> labels(preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i) labels[i] = preds[i].label;
    double acc = clustering_accuracy(labels, data.labels, model.config().clusters);

    CaseCounts cases = route_cases(data.mask);
    std::printf("samples: %ld (complete %ld, single-view %ld, partial %ld)\n", data.size(),
                cases.complete, cases.single, cases.partial);
    std::printf("clustering accuracy: %.6f\n", acc);

    if (!impute_csv.empty()) {
        std::ofstream out(impute_csv);
        if (!out) throw std::runtime_error(impute_csv + ": cannot open for writing");
        out << "index,view,feature,value\n";
        for (const ImputedSample& s : model.impute(data))
            for (long f = 0; f < s.features.size(); ++f) {
                char buf[64];
                std::snprintf(buf, sizeof buf, "%d,%d,%ld,%.17g\n", s.index, s.view, f,
                              s.features[f]);
                out << buf;
            }
        std::printf("imputations written to %s\n", impute_csv.c_str());
    }
}

void cmd_run(const std::string& config_path, std::string output) {
    ExperimentConfig cfg = load_experiment_config(config_path);
    apply_env_overrides(cfg);
    if (!output.empty()) cfg.output = output;

    std::ofstream csv(cfg.output);
    if (!csv) throw std::runtime_error(cfg.output + ": cannot open for writing");
    std::vector<AccuracyRecord> records = run_experiment(cfg, csv);

    for (const AccuracyRecord& r : records)
        if (r.seed == "mean")
            std::printf("rate %.2f  mean accuracy %.4f\n", r.missing_rate, r.accuracy);
    std::printf("results written to %s\n", cfg.output.c_str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"incomplete multiview clustering via a relaxed common-information objective"};
    app.require_subcommand(1);

    // solve-discrete
    std::string pmf_path, solve_config;
    int z_card = 4;
    double kappa = 0.5;
    std::vector<double> kappa_splits;
    int max_iters = 500;
    double tol = 1e-8;
    std::uint64_t solve_seed = 0;
    bool uniform_prior = false, trace = false;
    auto* solve_cmd =
        app.add_subcommand("solve-discrete", "fixed-point solver on a discrete joint pmf");
    solve_cmd->add_option("--pmf", pmf_path, "pmf file: header 'V k1 ... kV', then probabilities")
        ->required();
    solve_cmd->add_option("--config", solve_config,
                          "experiment config; its [solver] section applies");
    solve_cmd->add_option("--z", z_card, "latent alphabet size");
    solve_cmd->add_option("--kappa", kappa, "total relaxation weight, split uniformly");
    solve_cmd->add_option("--kappa-splits", kappa_splits,
                          "per-split weights (overrides --kappa)");
    solve_cmd->add_option("--max-iters", max_iters, "iteration cap");
    solve_cmd->add_option("--tol", tol, "sup-norm stopping tolerance");
    solve_cmd->add_option("--seed", solve_seed, "encoder init seed");
    solve_cmd->add_flag("--uniform-prior", uniform_prior, "uniform prior over z in the update");
    solve_cmd->add_flag("--trace", trace, "print one line per iteration");

    // synth
    std::string synth_out, synth_name = "synthetic";
    SyntheticSpec spec;
    std::uint64_t synth_seed = 0;
    auto* synth_cmd = app.add_subcommand("synth", "draw a synthetic multiview dataset");
    synth_cmd->add_option("--out", synth_out, "output directory")->required();
    synth_cmd->add_option("--clusters", spec.clusters, "cluster count");
    synth_cmd->add_option("--views", spec.views, "view count");
    synth_cmd->add_option("--dim", spec.dim, "features per view");
    synth_cmd->add_option("--separation", spec.separation, "cluster mean spread");
    synth_cmd->add_option("--noise", spec.noise, "within-cluster noise scale");
    synth_cmd->add_option("--samples", spec.samples, "sample count");
    synth_cmd->add_option("--seed", synth_seed, "generator seed");
    synth_cmd->add_option("--name", synth_name, "dataset name recorded in the metadata");

    // mask
    std::string mask_in, mask_out;
    double mask_rate = 0.3;
    std::uint64_t mask_seed = 0;
    auto* mask_cmd = app.add_subcommand("mask", "hide views of a complete dataset");
    mask_cmd->add_option("--in", mask_in, "input dataset directory")->required();
    mask_cmd->add_option("--out", mask_out, "output dataset directory")->required();
    mask_cmd->add_option("--rate", mask_rate, "fraction of samples losing views")->required();
    mask_cmd->add_option("--seed", mask_seed, "masking seed");

    // train
    std::string train_data, train_model_out, train_config;
    std::uint64_t train_seed = 0;
    int train_epochs = -1;
    bool quiet = false;
    auto* train_cmd = app.add_subcommand("train", "fit the clustering model on a dataset");
    train_cmd->add_option("--data", train_data, "dataset directory")->required();
    train_cmd->add_option("--model-out", train_model_out, "checkpoint path")->required();
    train_cmd->add_option("--config", train_config, "experiment config; its [model] section applies");
    train_cmd->add_option("--epochs", train_epochs, "override the config epoch count");
    train_cmd->add_option("--seed", train_seed, "init + shuffling seed");
    train_cmd->add_flag("--quiet", quiet, "suppress per-epoch progress");

    // evaluate
    std::string eval_data, eval_model, impute_csv;
    auto* eval_cmd = app.add_subcommand("evaluate", "score a checkpoint on a dataset");
    eval_cmd->add_option("--data", eval_data, "dataset directory")->required();
    eval_cmd->add_option("--model", eval_model, "checkpoint path")->required();
    eval_cmd->add_option("--impute-csv", impute_csv, "also write imputed features here");

    // run
    std::string run_config, run_output;
    auto* run_cmd = app.add_subcommand("run", "missing-rate sweep driven by a config file");
    run_cmd->add_option("--config", run_config, "experiment config file")->required();
    run_cmd->add_option("--output", run_output, "override the config output path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (solve_cmd->parsed()) {
            if (!solve_config.empty()) {  // config supplies defaults, flags win
                SolverSettings s = load_experiment_config(solve_config).solver;
                if (!solve_cmd->count("--max-iters")) max_iters = s.max_iters;
                if (!solve_cmd->count("--tol")) tol = s.tol;
                if (!solve_cmd->count("--kappa")) kappa = s.kappa_total;
                if (!solve_cmd->count("--seed")) solve_seed = s.seed;
            }
            cmd_solve_discrete(pmf_path, z_card, kappa, kappa_splits, max_iters, tol,
                               solve_seed, uniform_prior, trace);
        }
        else if (synth_cmd->parsed())
            cmd_synth(synth_out, spec, synth_seed, synth_name);
        else if (mask_cmd->parsed())
            cmd_mask(mask_in, mask_out, mask_rate, mask_seed);
        else if (train_cmd->parsed()) {
            ExperimentConfig cfg;
            if (!train_config.empty()) cfg = load_experiment_config(train_config);
            if (train_epochs >= 0) cfg.model.epochs = train_epochs;
            cmd_train(train_data, train_model_out, cfg, train_seed, quiet);
        } else if (eval_cmd->parsed())
            cmd_evaluate(eval_data, eval_model, impute_csv);
        else if (run_cmd->parsed())
            cmd_run(run_config, run_output);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
