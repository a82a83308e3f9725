#include "wyimvc/losses.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace wyimvc {
namespace {

Tensor zero_loss() { return scalar(0.0); }

void check_mask_rows(const Tensor& t, const Eigen::VectorXd& mask, const char* who) {
    if (t->rows() != mask.size())
        throw std::invalid_argument(std::string(who) + ": mask length " +
                                    std::to_string(mask.size()) + " does not match batch rows " +
                                    std::to_string(t->rows()));
    for (long i = 0; i < mask.size(); ++i)
        if (mask(i) != 0.0 && mask(i) != 1.0)
            throw std::invalid_argument(std::string(who) + ": mask entries must be 0 or 1");
}

// (1/N) sum_n m_n * rowsq_n for an n x d residual
MaskedLoss masked_mean_sq(const Tensor& residual, const Eigen::VectorXd& mask) {
    double n_avail = mask.sum();
    if (n_avail == 0.0) return {zero_loss(), true};
    Tensor row_norms = sum_rows(square(residual));
    Tensor masked = mul(row_norms, constant(mask));
    return {mul_scalar(sum_all(masked), 1.0 / n_avail), false};
}

Tensor cosine_rows(const Tensor& probs) {
    Tensor norms = sqrt_t(sum_rows(square(probs)));
    return div_rows(probs, clamp_min(norms, 1e-12));
}

Tensor phi(const Tensor& sims, const ContrastiveConfig& cfg) {
    if (cfg.strict_paper) return clamp_min(sims, 1e-12);
    return exp_t(mul_scalar(sims, 1.0 / cfg.temperature));
}

Tensor offdiag_sum(const Tensor& m) { return sub(sum_all(m), sum_all(diag_part(m))); }

}  // namespace

long MaskedBatch::available(int v) const {
    return static_cast<long>(mask.col(v).sum());
}

std::vector<int> MaskedBatch::available_rows(int v) const {
    std::vector<int> rows;
    for (long n = 0; n < mask.rows(); ++n)
        if (mask(n, v) == 1.0) rows.push_back(static_cast<int>(n));
    return rows;
}

std::vector<int> MaskedBatch::pair_rows(int i, int j) const {
    std::vector<int> rows;
    for (long n = 0; n < mask.rows(); ++n)
        if (mask(n, i) == 1.0 && mask(n, j) == 1.0) rows.push_back(static_cast<int>(n));
    return rows;
}

void MaskedBatch::validate() const {
    if (x.empty()) throw std::invalid_argument("batch: no views");
    if (mask.cols() != static_cast<long>(x.size()))
        throw std::invalid_argument("batch: mask has " + std::to_string(mask.cols()) +
                                    " columns for " + std::to_string(x.size()) + " views");
    for (std::size_t v = 0; v < x.size(); ++v)
        if (x[v].rows() != mask.rows())
            throw std::invalid_argument("batch: view " + std::to_string(v) + " has " +
                                        std::to_string(x[v].rows()) + " rows, mask has " +
                                        std::to_string(mask.rows()));
    for (long n = 0; n < mask.rows(); ++n) {
        double row_sum = 0.0;
        for (long v = 0; v < mask.cols(); ++v) {
            if (mask(n, v) != 0.0 && mask(n, v) != 1.0)
                throw std::invalid_argument("batch: mask entries must be 0 or 1");
            row_sum += mask(n, v);
        }
        if (row_sum < 1.0)
            throw std::invalid_argument("batch: sample " + std::to_string(n) +
                                        " has no available view");
    }
}

MaskedLoss loss_recon(const Tensor& x, const Tensor& decoded, const Eigen::VectorXd& mask) {
    check_mask_rows(x, mask, "loss_recon");
    return masked_mean_sq(sub(x, decoded), mask);
}

MaskedLoss loss_kl(const Tensor& latent_means, const Eigen::VectorXd& mask) {
    check_mask_rows(latent_means, mask, "loss_kl");
    return masked_mean_sq(latent_means, mask);
}

MaskedLoss loss_latent_imputation(const Tensor& target_w, const Tensor& predicted_w,
                                  const Eigen::VectorXd& mask) {
    check_mask_rows(target_w, mask, "loss_latent_imputation");
    return masked_mean_sq(sub(detach(target_w), predicted_w), mask);
}

MaskedLoss loss_contrastive(const Tensor& probs_i, const Tensor& probs_j,
                            const ContrastiveConfig& cfg) {
    if (cfg.temperature <= 0.0)
        throw std::invalid_argument("loss_contrastive: temperature must be positive");
    if (probs_i->rows() != probs_j->rows() || probs_i->cols() != probs_j->cols())
        throw std::invalid_argument("loss_contrastive: paired matrices must share shape");
    long n = probs_i->rows();
    // fewer than two paired samples leaves the negative pool empty
    if (n < 2) return {zero_loss(), true};

    Tensor ni = cosine_rows(probs_i);
    Tensor nj = cosine_rows(probs_j);
    Tensor cross = matmul_nt(ni, nj);
    Tensor within_i = matmul_nt(ni, ni);
    Tensor within_j = matmul_nt(nj, nj);

    Tensor positives = phi(diag_part(cross), cfg);  // n x 1
    Tensor negative_sum = sum_losses({offdiag_sum(phi(cross, cfg)),
                                      offdiag_sum(phi(within_i, cfg)),
                                      offdiag_sum(phi(within_j, cfg))});  // 1x1

    Tensor denom = add_rowvec(positives, negative_sum);  // broadcast the pooled sum
    Tensor per_anchor = sub(log_t(positives), log_t(denom));
    return {neg(sum_all(per_anchor)), false};
}

Tensor sum_losses(const std::vector<Tensor>& parts) {
    if (parts.empty()) return zero_loss();
    Tensor acc = parts[0];
    for (std::size_t i = 1; i < parts.size(); ++i) acc = add(acc, parts[i]);
    return acc;
}

double LossReport::component_sum() const {
    double s = 0.0;
    for (double v : recon) s += v;
    for (double v : kl) s += v;
    for (double v : imputation) s += v;
    for (double v : contrastive) s += v;
    return s;
}

LossReport& LossReport::operator+=(const LossReport& other) {
    auto merge = [](std::vector<double>& a, const std::vector<double>& b) {
        if (a.empty()) a.assign(b.size(), 0.0);
        if (a.size() != b.size())
            throw std::invalid_argument("loss report: component count mismatch");
        for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    };
    merge(recon, other.recon);
    merge(kl, other.kl);
    merge(imputation, other.imputation);
    merge(contrastive, other.contrastive);
    total += other.total;
    return *this;
}

void LossReport::scale(double c) {
    for (double& v : recon) v *= c;
    for (double& v : kl) v *= c;
    for (double& v : imputation) v *= c;
    for (double& v : contrastive) v *= c;
    total *= c;
}

}  // namespace wyimvc
