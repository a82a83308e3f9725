#pragma once

#include <span>
#include <vector>

#include "wyimvc/rng.hpp"
#include "wyimvc/tensor.hpp"

namespace wyimvc {

struct TemperatureSchedule {
    enum class Mode { Constant, Exponential };
    double tau_start = 1.0;
    double tau_end = 0.3;
    Mode mode = Mode::Exponential;
    int horizon = 1;  // epochs over which the decay completes

    TemperatureSchedule() = default;
    TemperatureSchedule(double start, double end, Mode m, int horizon_epochs);
    double at(int epoch) const;
};

// mean + standard-normal noise; noise is detached so the gradient passes
// straight to the mean. sample=false (eval) returns the mean untouched.
Tensor gaussian_latent(const Tensor& mean, Rng& rng, bool sample = true);

// d Gumbel(0,1) variates by inverse transform; the uniform source never
// emits 0 or 1, so no resampling guard is needed beyond it
std::vector<double> gumbel_sample(Rng& rng, int d);

struct GumbelSoftmaxSample {
    std::vector<double> z_tau;     // on the simplex
    double tau = 1.0;
    std::vector<double> uniforms;  // source u_i, retained for replay
};

// single draw from the relaxed categorical; class_probs floored at 1e-10 and
// renormalized before the log
GumbelSoftmaxSample gumbel_softmax_draw(std::span<const double> class_probs, double tau,
                                        Rng& rng);

// batched differentiable form: each row of pi_rows is a class distribution,
// noise holds one Gumbel variate per entry
Tensor gumbel_softmax_rows(const Tensor& pi_rows, double tau, const Eigen::MatrixXd& noise);
Tensor gumbel_softmax_rows(const Tensor& pi_rows, double tau, Rng& rng);

// fresh noise matrix for the batched form
Eigen::MatrixXd gumbel_noise(Rng& rng, long rows, long cols);

// log g(z) for the relaxed categorical; z strictly interior to the simplex
double gumbel_softmax_log_density(std::span<const double> z, std::span<const double> class_probs,
                                  double tau);

}  // namespace wyimvc
