#pragma once

#include <vector>

#include "wyimvc/tensor.hpp"

namespace wyimvc {

// Batch of multiview features with per-sample availability. Rows of mask are
// samples, columns are views; a 0 marks the view as missing for that sample.
struct MaskedBatch {
    std::vector<Eigen::MatrixXd> x;  // per view: batch x dim_v
    Eigen::MatrixXd mask;            // batch x V, entries 0/1

    long size() const { return mask.rows(); }
    int view_count() const { return static_cast<int>(mask.cols()); }
    // N_v: number of samples carrying view v
    long available(int v) const;
    std::vector<int> available_rows(int v) const;
    // U_{i,j}: samples carrying both views
    std::vector<int> pair_rows(int i, int j) const;
    // shapes consistent, mask binary, every sample has at least one view
    void validate() const;
};

struct ContrastiveConfig {
    double temperature = 0.5;  // phi(l) = exp(l / temperature)
    bool strict_paper = false;  // phi = identity clamped at 1e-12
};

// A loss term as a 1x1 graph node. absent means the batch carried nothing for
// this term (no available samples / empty pair set) and value is a detached 0.
struct MaskedLoss {
    Tensor value;
    bool absent = false;
};

// (1/N_v) sum_n m_n ||x_n - decoded_n||^2; mask aligned to rows
MaskedLoss loss_recon(const Tensor& x, const Tensor& decoded, const Eigen::VectorXd& mask);

// masked mean of squared latent-mean norms (KL to a unit prior, constants dropped)
MaskedLoss loss_kl(const Tensor& latent_means, const Eigen::VectorXd& mask);

// masked mean of ||stop_grad(w) - predicted||^2; the target never receives gradient
MaskedLoss loss_latent_imputation(const Tensor& target_w, const Tensor& predicted_w,
                                  const Eigen::VectorXd& mask);

// InfoNCE-style alignment over a pairwise-complete set. probs_i/probs_j hold one
// class-probability row per paired sample. Positives are the diagonal cosine
// similarities across views; negatives are the off-diagonals of the cross-view
// and both within-view similarity matrices, pooled into one denominator sum.
MaskedLoss loss_contrastive(const Tensor& probs_i, const Tensor& probs_j,
                            const ContrastiveConfig& cfg = {});

// plain sum of 1x1 terms; empty -> detached 0
Tensor sum_losses(const std::vector<Tensor>& parts);

struct LossWeights {
    double recon = 1.0;
    double kl = 1.0;
    double imputation = 1.0;
    double contrastive = 1.0;
};

// Scalar record of one batch/epoch. contrastive is ordered by unordered view
// pairs (0,1), (0,2), ..., (1,2), ... — i < j, lexicographic.
struct LossReport {
    std::vector<double> recon;
    std::vector<double> kl;
    std::vector<double> imputation;
    std::vector<double> contrastive;
    double total = 0.0;

    double component_sum() const;  // unweighted sum of every entry above
    LossReport& operator+=(const LossReport& other);
    void scale(double c);
};

}  // namespace wyimvc
