#include "wyimvc/nn.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace wyimvc {

Mlp Mlp::create(const std::vector<int>& dims, const std::vector<Activation>& acts, Rng& rng) {
    if (dims.size() < 2) throw std::invalid_argument("mlp: need at least one layer");
    if (acts.size() != dims.size() - 1)
        throw std::invalid_argument("mlp: one activation per layer required");
    for (int d : dims)
        if (d < 1) throw std::invalid_argument("mlp: layer widths must be positive");

    Mlp net;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        long in = dims[l], out = dims[l + 1];
        double limit = std::sqrt(6.0 / static_cast<double>(in + out));
        Eigen::MatrixXd W(in, out);
        for (long i = 0; i < in; ++i)
            for (long j = 0; j < out; ++j) W(i, j) = (2.0 * rng.uniform01() - 1.0) * limit;
        net.layers.push_back({parameter(std::move(W)),
                              parameter(Eigen::MatrixXd::Zero(1, out)), acts[l]});
    }
    return net;
}

Tensor Mlp::forward(const Tensor& input) const {
    Tensor h = input;
    for (const Layer& l : layers) {
        h = add_rowvec(matmul(h, l.W), l.b);
        switch (l.act) {
            case Activation::Linear: break;
            case Activation::Relu: h = relu(h); break;
            case Activation::Softmax: h = softmax_rows(h); break;
        }
    }
    return h;
}

std::vector<Tensor> Mlp::params() const {
    std::vector<Tensor> ps;
    for (const Layer& l : layers) {
        ps.push_back(l.W);
        ps.push_back(l.b);
    }
    return ps;
}

Adam::Adam(std::vector<Tensor> params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
    for (const Tensor& p : params_) {
        m_.push_back(Eigen::MatrixXd::Zero(p->rows(), p->cols()));
        v_.push_back(Eigen::MatrixXd::Zero(p->rows(), p->cols()));
    }
}

void Adam::step() {
    ++t_;
    double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Tensor& p = params_[i];
        if (p->grad.size() == 0) p->grad = Eigen::MatrixXd::Zero(p->rows(), p->cols());
        m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * p->grad;
        v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * p->grad.cwiseProduct(p->grad);
        p->val.array() -=
            cfg_.lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + cfg_.eps);
    }
}

void Adam::zero_grad() {
    for (Tensor& p : params_) p->grad = Eigen::MatrixXd::Zero(p->rows(), p->cols());
}

Sgd::Sgd(std::vector<Tensor> params, double lr) : params_(std::move(params)), lr_(lr) {}

void Sgd::step() {
    for (Tensor& p : params_) {
        if (p->grad.size() == 0) continue;
        p->val -= lr_ * p->grad;
    }
}

void Sgd::zero_grad() {
    for (Tensor& p : params_) p->grad = Eigen::MatrixXd::Zero(p->rows(), p->cols());
}

void save_arrays(std::ostream& os, const std::map<std::string, Eigen::MatrixXd>& arrays) {
    os << "wyimvc-arrays 1\n" << arrays.size() << '\n';
    char buf[64];
    for (const auto& [name, m] : arrays) {
        if (name.empty() || name.find_first_of(" \t\n") != std::string::npos)
            throw std::invalid_argument("array name must be nonempty without whitespace: '" +
                                        name + "'");
        os << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
        for (long r = 0; r < m.rows(); ++r) {
            for (long c = 0; c < m.cols(); ++c) {
                std::snprintf(buf, sizeof buf, "%.17g", m(r, c));
                os << (c ? " " : "") << buf;
            }
            os << '\n';
        }
    }
}

std::map<std::string, Eigen::MatrixXd> load_arrays(std::istream& is) {
    std::string magic;
    int version = 0;
    if (!(is >> magic >> version) || magic != "wyimvc-arrays" || version != 1)
        throw std::invalid_argument("checkpoint: bad header");
    std::size_t count = 0;
    if (!(is >> count)) throw std::invalid_argument("checkpoint: missing array count");
    std::map<std::string, Eigen::MatrixXd> out;
    for (std::size_t i = 0; i < count; ++i) {
        std::string name;
        long rows = 0, cols = 0;
        if (!(is >> name >> rows >> cols) || rows < 0 || cols < 0)
            throw std::invalid_argument("checkpoint: bad array header");
        Eigen::MatrixXd m(rows, cols);
        for (long r = 0; r < rows; ++r)
            for (long c = 0; c < cols; ++c)
                if (!(is >> m(r, c))) throw std::invalid_argument("checkpoint: truncated array");
        out.emplace(std::move(name), std::move(m));
    }
    return out;
}

void save_arrays_file(const std::string& path, const std::map<std::string, Eigen::MatrixXd>& a) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for write: " + path);
    save_arrays(os, a);
}

std::map<std::string, Eigen::MatrixXd> load_arrays_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open for read: " + path);
    return load_arrays(is);
}

}  // namespace wyimvc
