#include "wyimvc/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace wyimvc {
namespace {

Eigen::VectorXd ones(long n) { return Eigen::VectorXd::Ones(n); }

Eigen::MatrixXd gather_matrix(const Eigen::MatrixXd& m, const std::vector<int>& rows) {
    Eigen::MatrixXd out(static_cast<long>(rows.size()), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i)
        out.row(static_cast<long>(i)) = m.row(rows[i]);
    return out;
}

void check_finite(const MaskedLoss& l, const std::string& what) {
    if (!std::isfinite(l.value->val(0, 0)))
        throw std::runtime_error("non-finite " + what + " loss");
}

int argmax_row(const Eigen::MatrixXd& m, long r) {
    int best = 0;
    for (long c = 1; c < m.cols(); ++c)
        if (m(r, c) > m(r, best)) best = static_cast<int>(c);
    return best;
}

}  // namespace

void ModelConfig::validate() const {
    if (view_dims.size() < 2)
        throw std::invalid_argument("model config: need at least two views");
    for (int d : view_dims)
        if (d < 1) throw std::invalid_argument("model config: view dimension must be >= 1");
    if (clusters < 2) throw std::invalid_argument("model config: need clusters >= 2");
    if (latent_dim < 1) throw std::invalid_argument("model config: latent_dim must be >= 1");
    if (hidden < 1) throw std::invalid_argument("model config: hidden must be >= 1");
    if (!(kappa_star > 0.0 && kappa_star < 1.0))
        throw std::invalid_argument("model config: kappa_star must lie in (0,1)");
    if (learning_rate < 0.0)
        throw std::invalid_argument("model config: negative learning_rate");
    if (batch_size < 1) throw std::invalid_argument("model config: batch_size must be >= 1");
    if (epochs < 0) throw std::invalid_argument("model config: negative epochs");
    if (!(contrastive.temperature > 0.0))
        throw std::invalid_argument("model config: contrastive temperature must be positive");
}

CaseCounts route_cases(const Eigen::MatrixXd& mask) {
    CaseCounts c;
    for (long r = 0; r < mask.rows(); ++r) {
        double avail = mask.row(r).sum();
        if (avail == static_cast<double>(mask.cols()))
            ++c.complete;
        else if (avail == 1.0)
            ++c.single;
        else
            ++c.partial;
    }
    return c;
}

WyimvcModel::WyimvcModel(ModelConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
    cfg_.validate();
    Rng rng(seed);
    const int v_count = static_cast<int>(cfg_.view_dims.size());
    for (int v = 0; v < v_count; ++v)
        encoders_.push_back(Mlp::create({cfg_.view_dims[v], cfg_.hidden, cfg_.latent_dim},
                                        {Activation::Relu, Activation::Linear}, rng));
    for (int v = 0; v < v_count; ++v)
        decoders_.push_back(Mlp::create({cfg_.latent_dim, cfg_.hidden, cfg_.view_dims[v]},
                                        {Activation::Relu, Activation::Linear}, rng));
    for (int v = 0; v < v_count; ++v)
        imputers_.push_back(Mlp::create({cfg_.clusters, cfg_.hidden, cfg_.latent_dim},
                                        {Activation::Relu, Activation::Linear}, rng));
    for (int v = 0; v < v_count; ++v)
        heads_.push_back(Mlp::create({cfg_.latent_dim, cfg_.hidden, cfg_.clusters},
                                     {Activation::Relu, Activation::Softmax}, rng));
}

struct WyimvcModel::Forward {
    std::vector<std::vector<int>> avail;  // batch rows carrying each view
    std::vector<std::vector<int>> pos;    // batch row -> slot in avail[v], -1 if missing
    std::vector<Tensor> x;                // gathered inputs
    std::vector<Tensor> mean;             // encoder outputs
    std::vector<Tensor> w;                // latents fed to the decoders
    std::vector<Tensor> head;             // class probabilities per view
    Tensor fused;                         // n x k, on the simplex
    Tensor z;                             // relaxed draw (training only)
};

WyimvcModel::Forward WyimvcModel::run_forward(const MaskedBatch& batch, bool sample,
                                              double tau, Rng* rng) const {
    batch.validate();
    if (batch.view_count() != static_cast<int>(cfg_.view_dims.size()))
        throw std::invalid_argument("model: batch has " + std::to_string(batch.view_count()) +
                                    " views, config expects " +
                                    std::to_string(cfg_.view_dims.size()));
    const long n = batch.size();
    const int v_count = batch.view_count();

    Forward f;
    std::vector<Tensor> scattered_logs;
    for (int v = 0; v < v_count; ++v) {
        std::vector<int> avail = batch.available_rows(v);
        std::vector<int> pos(n, -1);
        for (std::size_t i = 0; i < avail.size(); ++i)
            pos[avail[i]] = static_cast<int>(i);

        Tensor x = constant(gather_matrix(batch.x[v], avail));
        Tensor mean = encoders_[v].forward(x);
        Tensor w = sample ? gaussian_latent(mean, *rng, true) : mean;
        Tensor head = heads_[v].forward(mean);

        scattered_logs.push_back(
            scatter_rows(log_t(clamp_min(head, 1e-12)), avail, n));
        f.avail.push_back(std::move(avail));
        f.pos.push_back(std::move(pos));
        f.x.push_back(std::move(x));
        f.mean.push_back(std::move(mean));
        f.w.push_back(std::move(w));
        f.head.push_back(std::move(head));
    }

    Tensor log_sum = scattered_logs[0];
    for (int v = 1; v < v_count; ++v) log_sum = add(log_sum, scattered_logs[v]);
    f.fused = softmax_rows(mul_scalar(log_sum, cfg_.kappa_star));
    if (sample) f.z = gumbel_softmax_rows(f.fused, tau, gumbel_noise(*rng, n, cfg_.clusters));
    return f;
}

WyimvcModel::BatchResult WyimvcModel::training_loss(
    const MaskedBatch& batch, double tau, Rng& rng,
    const std::vector<Eigen::MatrixXd>* frozen_targets) {
    Forward f = run_forward(batch, true, tau, &rng);
    const int v_count = batch.view_count();
    if (frozen_targets && static_cast<int>(frozen_targets->size()) != v_count)
        throw std::invalid_argument("training_loss: one frozen target per view expected");

    BatchResult out;
    std::vector<Tensor> parts;
    auto push = [&](const MaskedLoss& l, double weight, std::vector<double>& slot,
                    const std::string& what) {
        check_finite(l, what);
        Tensor weighted = mul_scalar(l.value, weight);
        parts.push_back(weighted);
        slot.push_back(weighted->val(0, 0));
    };

    for (int v = 0; v < v_count; ++v) {
        long n_v = static_cast<long>(f.avail[v].size());
        std::string tag = " (view " + std::to_string(v) + ")";
        push(loss_recon(f.x[v], decoders_[v].forward(f.w[v]), ones(n_v)),
             cfg_.weights.recon, out.report.recon, "reconstruction" + tag);
        push(loss_kl(f.mean[v], ones(n_v)), cfg_.weights.kl, out.report.kl, "kl" + tag);
        Tensor w_hat = imputers_[v].forward(gather_rows(f.z, f.avail[v]));
        Tensor target = frozen_targets ? constant((*frozen_targets)[v]) : f.w[v];
        push(loss_latent_imputation(target, w_hat, ones(n_v)), cfg_.weights.imputation,
             out.report.imputation, "latent imputation" + tag);
        out.imputation_targets.push_back(f.w[v]->val);
    }
    for (int i = 0; i < v_count; ++i)
        for (int j = i + 1; j < v_count; ++j) {
            std::vector<int> u = batch.pair_rows(i, j);
            std::vector<int> rows_i(u.size()), rows_j(u.size());
            for (std::size_t t = 0; t < u.size(); ++t) {
                rows_i[t] = f.pos[i][u[t]];
                rows_j[t] = f.pos[j][u[t]];
            }
            MaskedLoss con = loss_contrastive(gather_rows(f.head[i], rows_i),
                                              gather_rows(f.head[j], rows_j),
                                              cfg_.contrastive);
            push(con, cfg_.weights.contrastive, out.report.contrastive,
                 "contrastive (views " + std::to_string(i) + "," + std::to_string(j) + ")");
        }

    out.total = sum_losses(parts);
    if (!std::isfinite(out.total->val(0, 0)))
        throw std::runtime_error("non-finite total loss");
    out.report.total = out.total->val(0, 0);
    return out;
}

LossReport WyimvcModel::train_epoch(const MultiviewDataset& data, Adam& opt, int epoch,
                                    Rng& rng) {
    const long n = data.size();
    if (n == 0) throw std::invalid_argument("train_epoch: empty dataset");
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    const double tau = cfg_.temperature.at(epoch);

    LossReport agg;
    long batches = 0;
    for (long start = 0; start < n; start += cfg_.batch_size) {
        long count = std::min<long>(cfg_.batch_size, n - start);
        std::vector<int> chunk(order.begin() + start, order.begin() + start + count);
        BatchResult r;
        try {
            r = training_loss(data.batch(chunk), tau, rng);
        } catch (const std::runtime_error& e) {
            throw std::runtime_error("training aborted at epoch " + std::to_string(epoch) +
                                     ", batch " + std::to_string(batches) + ": " + e.what());
        }
        backward(r.total);
        opt.step();
        opt.zero_grad();
        agg += r.report;
        ++batches;
    }
    agg.scale(1.0 / static_cast<double>(batches));
    return agg;
}

Eigen::MatrixXd WyimvcModel::fused_probs(const MaskedBatch& batch) const {
    return run_forward(batch, false, 0.0, nullptr).fused->val;
}

std::vector<ClusterPrediction> WyimvcModel::predict(const MultiviewDataset& data) const {
    std::vector<int> rows(data.size());
    std::iota(rows.begin(), rows.end(), 0);
    Eigen::MatrixXd probs = fused_probs(data.batch(rows));
    std::vector<ClusterPrediction> out(data.size());
    for (long r = 0; r < probs.rows(); ++r) {
        out[r].index = static_cast<int>(r);
        out[r].probs.assign(probs.row(r).begin(), probs.row(r).end());
        out[r].label = argmax_row(probs, r);
    }
    return out;
}

std::vector<ImputedSample> WyimvcModel::impute(const MultiviewDataset& data) const {
    std::vector<int> rows(data.size());
    std::iota(rows.begin(), rows.end(), 0);
    Eigen::MatrixXd probs = fused_probs(data.batch(rows));
    Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(probs.rows(), probs.cols());
    for (long r = 0; r < probs.rows(); ++r) onehot(r, argmax_row(probs, r)) = 1.0;

    std::vector<ImputedSample> out;
    for (int v = 0; v < data.view_count(); ++v) {
        std::vector<int> missing;
        for (long r = 0; r < data.size(); ++r)
            if (data.mask(r, v) == 0.0) missing.push_back(static_cast<int>(r));
        if (missing.empty()) continue;
        Tensor z = constant(gather_matrix(onehot, missing));
        Tensor w_hat = imputers_[v].forward(z);
        Tensor x_hat = decoders_[v].forward(w_hat);
        for (std::size_t i = 0; i < missing.size(); ++i) {
            ImputedSample s;
            s.index = missing[i];
            s.view = v;
            s.latent = w_hat->val.row(static_cast<long>(i));
            s.features = x_hat->val.row(static_cast<long>(i));
            out.push_back(std::move(s));
        }
    }
    std::sort(out.begin(), out.end(), [](const ImputedSample& a, const ImputedSample& b) {
        return a.index != b.index ? a.index < b.index : a.view < b.view;
    });
    return out;
}

std::vector<Tensor> WyimvcModel::params() const {
    std::vector<Tensor> all;
    for (const auto* stack : {&encoders_, &decoders_, &imputers_, &heads_})
        for (const Mlp& net : *stack)
            for (const Tensor& p : net.params()) all.push_back(p);
    return all;
}

namespace {

const char* kStackNames[] = {"encoder", "decoder", "imputer", "head"};

std::string array_name(int stack, int view, std::size_t layer, const char* which) {
    return std::string(kStackNames[stack]) + std::to_string(view) + ".layer" +
           std::to_string(layer) + "." + which;
}

}  // namespace

void WyimvcModel::save(const std::string& path) const {
    std::map<std::string, Eigen::MatrixXd> arrays;
    const std::vector<Mlp>* stacks[] = {&encoders_, &decoders_, &imputers_, &heads_};
    for (int s = 0; s < 4; ++s)
        for (std::size_t v = 0; v < stacks[s]->size(); ++v)
            for (std::size_t l = 0; l < (*stacks[s])[v].layers.size(); ++l) {
                arrays[array_name(s, static_cast<int>(v), l, "W")] =
                    (*stacks[s])[v].layers[l].W->val;
                arrays[array_name(s, static_cast<int>(v), l, "b")] =
                    (*stacks[s])[v].layers[l].b->val;
            }
    // enough of the config to rebuild the stacks without outside help
    long views = static_cast<long>(cfg_.view_dims.size());
    Eigen::MatrixXd meta(1, 5 + views);
    meta(0, 0) = static_cast<double>(views);
    meta(0, 1) = cfg_.clusters;
    meta(0, 2) = cfg_.latent_dim;
    meta(0, 3) = cfg_.hidden;
    meta(0, 4) = cfg_.kappa_star;
    for (long v = 0; v < views; ++v) meta(0, 5 + v) = cfg_.view_dims[v];
    arrays["config"] = meta;
    save_arrays_file(path, arrays);
}

void WyimvcModel::restore(const std::map<std::string, Eigen::MatrixXd>& arrays) {
    std::vector<Mlp>* stacks[] = {&encoders_, &decoders_, &imputers_, &heads_};
    for (int s = 0; s < 4; ++s)
        for (std::size_t v = 0; v < stacks[s]->size(); ++v)
            for (std::size_t l = 0; l < (*stacks[s])[v].layers.size(); ++l)
                for (const char* which : {"W", "b"}) {
                    std::string name = array_name(s, static_cast<int>(v), l, which);
                    auto it = arrays.find(name);
                    if (it == arrays.end())
                        throw std::invalid_argument("checkpoint: missing array " + name);
                    Tensor t = which[0] == 'W' ? (*stacks[s])[v].layers[l].W
                                               : (*stacks[s])[v].layers[l].b;
                    if (it->second.rows() != t->rows() || it->second.cols() != t->cols())
                        throw std::invalid_argument("checkpoint: array " + name +
                                                    " has the wrong shape");
                    t->val = it->second;
                }
}

void WyimvcModel::load(const std::string& path) { restore(load_arrays_file(path)); }

WyimvcModel load_model(const std::string& path) {
    std::map<std::string, Eigen::MatrixXd> arrays = load_arrays_file(path);
    auto it = arrays.find("config");
    if (it == arrays.end())
        throw std::invalid_argument("checkpoint: missing array config");
    const Eigen::MatrixXd& meta = it->second;
    if (meta.rows() != 1 || meta.cols() < 5)
        throw std::invalid_argument("checkpoint: malformed config array");
    long views = static_cast<long>(meta(0, 0));
    if (views < 2 || meta.cols() != 5 + views)
        throw std::invalid_argument("checkpoint: malformed config array");

    ModelConfig cfg;
    cfg.clusters = static_cast<int>(meta(0, 1));
    cfg.latent_dim = static_cast<int>(meta(0, 2));
    cfg.hidden = static_cast<int>(meta(0, 3));
    cfg.kappa_star = meta(0, 4);
    for (long v = 0; v < views; ++v) cfg.view_dims.push_back(static_cast<int>(meta(0, 5 + v)));

    WyimvcModel model(cfg, 0);  // init weights are immediately overwritten
    model.restore(arrays);
    return model;
}

}  // namespace wyimvc
