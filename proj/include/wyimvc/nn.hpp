#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "wyimvc/rng.hpp"
#include "wyimvc/tensor.hpp"

namespace wyimvc {

enum class Activation { Linear, Relu, Softmax };

// Plain feed-forward stack; weights Glorot-uniform, biases zero.
struct Mlp {
    struct Layer {
        Tensor W;  // in x out
        Tensor b;  // 1 x out
        Activation act;
    };
    std::vector<Layer> layers;

    // dims = {in, hidden..., out}; one activation per layer
    static Mlp create(const std::vector<int>& dims, const std::vector<Activation>& acts,
                      Rng& rng);
    Tensor forward(const Tensor& input) const;  // input rows are samples
    std::vector<Tensor> params() const;
};

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

class Adam {
public:
    explicit Adam(std::vector<Tensor> params, AdamConfig cfg = {});
    void step();
    void zero_grad();

private:
    std::vector<Tensor> params_;
    std::vector<Eigen::MatrixXd> m_, v_;
    long t_ = 0;
    AdamConfig cfg_;
};

class Sgd {
public:
    Sgd(std::vector<Tensor> params, double lr);
    void step();
    void zero_grad();

private:
    std::vector<Tensor> params_;
    double lr_;
};

// Versioned plain-text checkpoint of named arrays; %.17g so values restore
// to the exact double.
void save_arrays(std::ostream& os, const std::map<std::string, Eigen::MatrixXd>& arrays);
std::map<std::string, Eigen::MatrixXd> load_arrays(std::istream& is);
void save_arrays_file(const std::string& path, const std::map<std::string, Eigen::MatrixXd>& a);
std::map<std::string, Eigen::MatrixXd> load_arrays_file(const std::string& path);

}  // namespace wyimvc
