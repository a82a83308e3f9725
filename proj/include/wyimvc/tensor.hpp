#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <vector>

namespace wyimvc {

// One node of the backward graph. Ops link children to parents; the closure
// scatters this node's grad into the parents' accumulators. Parents never
// point at children, so the shared_ptr graph is acyclic and frees itself.
struct TensorNode {
    Eigen::MatrixXd val;
    Eigen::MatrixXd grad;
    bool requires_grad = false;
    std::vector<std::shared_ptr<TensorNode>> parents;
    std::function<void(TensorNode&)> backprop;

    long rows() const { return val.rows(); }
    long cols() const { return val.cols(); }
};

using Tensor = std::shared_ptr<TensorNode>;

Tensor constant(Eigen::MatrixXd v);
Tensor parameter(Eigen::MatrixXd v);  // leaf that accumulates gradient
Tensor scalar(double v);

// reverse accumulation from a 1x1 root; zeroes reachable grads first
void backward(const Tensor& root);

bool all_finite(const Tensor& t);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // a * b^T
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor add_rowvec(const Tensor& a, const Tensor& b);  // b is 1 x cols, broadcast over rows
Tensor div_rows(const Tensor& a, const Tensor& b);    // b is rows x 1, broadcast over cols
Tensor mul_scalar(const Tensor& a, double c);
Tensor add_scalar(const Tensor& a, double c);
Tensor neg(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor log_t(const Tensor& a);
Tensor exp_t(const Tensor& a);
Tensor sqrt_t(const Tensor& a);
Tensor square(const Tensor& a);
Tensor clamp_min(const Tensor& a, double floor);
Tensor softmax_rows(const Tensor& a);  // max-subtracted
Tensor sum_all(const Tensor& a);       // 1x1
Tensor mean_all(const Tensor& a);      // 1x1
Tensor l2_norm_sq(const Tensor& a);    // 1x1 sum of squares
Tensor sum_rows(const Tensor& a);      // rows x 1
Tensor diag_part(const Tensor& a);     // square input -> rows x 1
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor slice_rows(const Tensor& a, long start, long count);
Tensor gather_rows(const Tensor& a, const std::vector<int>& index);
// rows of a accumulated into a zero matrix of out_rows rows at the given positions
Tensor scatter_rows(const Tensor& a, const std::vector<int>& index, long out_rows);
Tensor detach(const Tensor& a);  // value copy, no graph link

}  // namespace wyimvc
