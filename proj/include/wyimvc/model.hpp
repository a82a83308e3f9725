#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "wyimvc/dataset.hpp"
#include "wyimvc/losses.hpp"
#include "wyimvc/nn.hpp"
#include "wyimvc/stochastic.hpp"

namespace wyimvc {

struct ModelConfig {
    std::vector<int> view_dims;  // input dimension per view
    int clusters = 10;           // cluster count, = categorical latent size
    int latent_dim = 32;         // per-view continuous latent w_v
    int hidden = 64;             // hidden width of every MLP
    double kappa_star = 0.9;     // fusion exponent, must stay below 1
    TemperatureSchedule temperature{1.0, 0.3, TemperatureSchedule::Mode::Exponential, 400};
    ContrastiveConfig contrastive;
    LossWeights weights;
    double learning_rate = 1e-3;
    int batch_size = 256;
    int epochs = 400;

    void validate() const;
};

struct ClusterPrediction {
    int index = 0;
    std::vector<double> probs;  // fused class probabilities, on the simplex
    int label = 0;              // argmax, ties to the lowest index
};

struct ImputedSample {
    int index = 0;
    int view = 0;                // a view that was masked for this sample
    Eigen::VectorXd latent;      // h_v(z) at the one-hot cluster assignment
    Eigen::VectorXd features;    // g_v(latent)
};

struct CaseCounts {
    long complete = 0;  // all views present
    long single = 0;    // exactly one view
    long partial = 0;   // at least two, but not all
};
CaseCounts route_cases(const Eigen::MatrixXd& mask);

// Per-view encoder/decoder/imputer/cluster-head stack with masked routing:
// only available views are encoded, heads are fused multiplicatively with the
// kappa_star exponent, and the categorical draw relaxes through Gumbel-softmax
// during training. Raw values of missing views are never read.
class WyimvcModel {
public:
    WyimvcModel(ModelConfig cfg, std::uint64_t seed);

    struct BatchResult {
        Tensor total;       // weighted objective, 1x1
        LossReport report;  // weighted component values
        // the stop-gradient targets the imputation loss chased, per view
        std::vector<Eigen::MatrixXd> imputation_targets;
    };
    // Builds the full loss graph for one batch; rng supplies both the
    // Gaussian latent noise and the Gumbel noise, in a fixed draw order.
    // frozen_targets, when given, replaces the detached imputation targets —
    // finite-difference checks need the stop-gradient branch held constant.
    BatchResult training_loss(const MaskedBatch& batch, double tau, Rng& rng,
                              const std::vector<Eigen::MatrixXd>* frozen_targets = nullptr);

    // one pass over the data in shuffled mini-batches, one optimizer step per
    // batch; returns the batch-averaged report. Throws on non-finite losses,
    // naming the offending component.
    LossReport train_epoch(const MultiviewDataset& data, Adam& opt, int epoch, Rng& rng);

    // deterministic evaluation path (latent means, no sampling)
    Eigen::MatrixXd fused_probs(const MaskedBatch& batch) const;
    std::vector<ClusterPrediction> predict(const MultiviewDataset& data) const;
    // imputations for every masked view of every sample, z fixed to the
    // one-hot argmax of the fused probabilities
    std::vector<ImputedSample> impute(const MultiviewDataset& data) const;

    std::vector<Tensor> params() const;
    const ModelConfig& config() const { return cfg_; }

    void save(const std::string& path) const;
    void load(const std::string& path);

private:
    struct Forward;
    Forward run_forward(const MaskedBatch& batch, bool sample, double tau, Rng* rng) const;
    void restore(const std::map<std::string, Eigen::MatrixXd>& arrays);
    friend WyimvcModel load_model(const std::string& path);

    ModelConfig cfg_;
    std::vector<Mlp> encoders_, decoders_, imputers_, heads_;
};

// Rebuild a model from a checkpoint alone; the architecture and the fusion
// exponent travel with the weights. Training-only settings (temperature
// schedule, loss weights, optimizer) come back as defaults.
WyimvcModel load_model(const std::string& path);

}  // namespace wyimvc
