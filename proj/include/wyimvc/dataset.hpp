#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "wyimvc/losses.hpp"

namespace wyimvc {

struct DatasetMeta {
    std::string name = "unnamed";
    std::uint64_t seed = 0;
    double missing_rate = 0.0;
    bool normalized = false;
};

// Multiview features with per-sample availability. Masking flips mask bits
// only; feature values stay in place so imputation can be scored against the
// ground truth later.
struct MultiviewDataset {
    std::vector<Eigen::MatrixXd> views;  // each N x dim_v
    std::vector<int> labels;             // N, in [0, clusters)
    Eigen::MatrixXd mask;                // N x V, entries 0/1
    DatasetMeta meta;

    long size() const { return mask.rows(); }
    int view_count() const { return static_cast<int>(mask.cols()); }
    int cluster_count() const;  // max label + 1
    bool complete() const;      // mask all ones

    // per-view, per-column min-max to [0,1]; statistics taken over available
    // rows only; exactly idempotent (a normalized column has min 0, max 1)
    void normalize();

    // gather the given rows into a training batch
    MaskedBatch batch(std::span<const int> rows) const;

    void validate() const;
};

struct SyntheticSpec {
    int clusters = 10;
    int views = 3;
    int dim = 20;            // per-view feature dimension
    double separation = 1.0;  // scale of cluster-mean entries
    double noise = 0.1;       // per-coordinate standard deviation
    long samples = 3000;

    void validate() const;
};

// Gaussian mixture with views independent given the cluster: y ~ Uniform(k),
// x_v = mu[v][y] + noise * N(0, I). Complete mask, labels retained.
MultiviewDataset synthesize(const SyntheticSpec& spec, std::uint64_t seed);

// Masks floor(rate * N) samples chosen uniformly without replacement; each
// masked sample hides a view subset drawn uniformly from the nonempty proper
// subsets of the V views, so at least one view always survives.
MultiviewDataset apply_missing(const MultiviewDataset& dataset, double rate,
                               std::uint64_t seed);

// Directory layout: view_<v>.csv, labels.csv, optional mask.csv, optional
// meta. Loading applies normalize().
MultiviewDataset load_dataset(const std::string& dir);
void save_dataset(const MultiviewDataset& dataset, const std::string& dir);

}  // namespace wyimvc
