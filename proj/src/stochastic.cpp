#include "wyimvc/stochastic.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace wyimvc {
namespace {

constexpr double kProbFloor = 1e-10;

void require(bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

TemperatureSchedule::TemperatureSchedule(double start, double end, Mode m, int horizon_epochs)
    : tau_start(start), tau_end(end), mode(m), horizon(horizon_epochs) {
    require(tau_end > 0.0, "temperature: tau_end must be positive");
    require(tau_end <= tau_start, "temperature: tau_end must not exceed tau_start");
    require(horizon >= 1, "temperature: horizon must be >= 1");
}

double TemperatureSchedule::at(int epoch) const {
    if (mode == Mode::Constant) return tau_start;
    double t = std::min(std::max(epoch, 0), horizon) / static_cast<double>(horizon);
    return tau_start * std::pow(tau_end / tau_start, t);
}

Tensor gaussian_latent(const Tensor& mean, Rng& rng, bool sample) {
    if (!sample) return mean;
    Eigen::MatrixXd noise(mean->rows(), mean->cols());
    for (long r = 0; r < noise.rows(); ++r)
        for (long c = 0; c < noise.cols(); ++c) noise(r, c) = rng.normal();
    return add(mean, constant(std::move(noise)));
}

std::vector<double> gumbel_sample(Rng& rng, int d) {
    require(d >= 1, "gumbel_sample: d must be >= 1");
    std::vector<double> s(d);
    for (double& x : s) x = rng.gumbel();
    return s;
}

GumbelSoftmaxSample gumbel_softmax_draw(std::span<const double> class_probs, double tau,
                                        Rng& rng) {
    require(tau > 0.0, "gumbel_softmax: tau must be positive");
    require(class_probs.size() >= 1, "gumbel_softmax: empty class distribution");
    const std::size_t d = class_probs.size();

    double total = 0.0;
    std::vector<double> p(d);
    for (std::size_t i = 0; i < d; ++i) {
        require(class_probs[i] >= 0.0 && std::isfinite(class_probs[i]),
                "gumbel_softmax: class probabilities must be finite and nonnegative");
        p[i] = std::max(class_probs[i], kProbFloor);
        total += p[i];
    }

    GumbelSoftmaxSample out;
    out.tau = tau;
    out.uniforms.resize(d);
    out.z_tau.resize(d);
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < d; ++i) {
        out.uniforms[i] = rng.uniform01();
        double s = -std::log(-std::log(out.uniforms[i]));
        out.z_tau[i] = (std::log(p[i] / total) + s) / tau;
        m = std::max(m, out.z_tau[i]);
    }
    double sum = 0.0;
    for (double& z : out.z_tau) {
        z = std::exp(z - m);
        sum += z;
    }
    for (double& z : out.z_tau) z /= sum;
    return out;
}

Eigen::MatrixXd gumbel_noise(Rng& rng, long rows, long cols) {
    Eigen::MatrixXd g(rows, cols);
    for (long r = 0; r < rows; ++r)
        for (long c = 0; c < cols; ++c) g(r, c) = rng.gumbel();
    return g;
}

Tensor gumbel_softmax_rows(const Tensor& pi_rows, double tau, const Eigen::MatrixXd& noise) {
    require(tau > 0.0, "gumbel_softmax: tau must be positive");
    if (noise.rows() != pi_rows->rows() || noise.cols() != pi_rows->cols())
        throw std::invalid_argument("gumbel_softmax: noise shape mismatch");
    Tensor floored = clamp_min(pi_rows, kProbFloor);
    Tensor renorm = div_rows(floored, sum_rows(floored));
    Tensor logits = mul_scalar(add(log_t(renorm), constant(noise)), 1.0 / tau);
    return softmax_rows(logits);
}

Tensor gumbel_softmax_rows(const Tensor& pi_rows, double tau, Rng& rng) {
    return gumbel_softmax_rows(pi_rows, tau, gumbel_noise(rng, pi_rows->rows(), pi_rows->cols()));
}

double gumbel_softmax_log_density(std::span<const double> z, std::span<const double> class_probs,
                                  double tau) {
    require(tau > 0.0, "gumbel density: tau must be positive");
    require(z.size() == class_probs.size(), "gumbel density: dimension mismatch");
    const std::size_t d = z.size();
    require(d >= 2, "gumbel density: need at least two classes");

    double zsum = 0.0;
    for (double zi : z) {
        require(zi > 0.0, "gumbel density: z must be strictly interior to the simplex");
        zsum += zi;
    }
    require(std::abs(zsum - 1.0) <= 1e-9, "gumbel density: z must lie on the simplex");

    double denom = 0.0, tail = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        require(class_probs[i] > 0.0, "gumbel density: class probabilities must be positive");
        denom += class_probs[i] * std::pow(z[i], -tau);
        tail += std::log(class_probs[i]) - (tau + 1.0) * std::log(z[i]);
    }
    return std::lgamma(static_cast<double>(d)) +
           (static_cast<double>(d) - 1.0) * std::log(tau) -
           static_cast<double>(d) * std::log(denom) + tail;
}

}  // namespace wyimvc
