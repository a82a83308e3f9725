#include "wyimvc/tensor.hpp"

#include <set>
#include <sstream>
#include <stdexcept>

namespace wyimvc {
namespace {

std::string shape_str(const Tensor& t) {
    std::ostringstream os;
    os << t->rows() << 'x' << t->cols();
    return os.str();
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a->rows() != b->rows() || a->cols() != b->cols())
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a) +
                                    " vs " + shape_str(b));
}

Tensor make(Eigen::MatrixXd v, std::vector<Tensor> parents,
            std::function<void(TensorNode&)> backprop) {
    auto t = std::make_shared<TensorNode>();
    t->val = std::move(v);
    t->requires_grad = false;
    for (const auto& p : parents) t->requires_grad = t->requires_grad || p->requires_grad;
    if (t->requires_grad) {
        t->parents.assign(parents.begin(), parents.end());
        t->backprop = std::move(backprop);
    }
    return t;
}

}  // namespace

Tensor constant(Eigen::MatrixXd v) {
    auto t = std::make_shared<TensorNode>();
    t->val = std::move(v);
    return t;
}

Tensor parameter(Eigen::MatrixXd v) {
    auto t = std::make_shared<TensorNode>();
    t->val = std::move(v);
    t->requires_grad = true;
    return t;
}

Tensor scalar(double v) {
    Eigen::MatrixXd m(1, 1);
    m(0, 0) = v;
    return constant(std::move(m));
}

void backward(const Tensor& root) {
    if (root->rows() != 1 || root->cols() != 1)
        throw std::invalid_argument("backward: root must be scalar, got " + shape_str(root));

    // iterative post-order: creation order is not tracked, so sort explicitly
    std::vector<TensorNode*> topo;
    std::set<TensorNode*> seen;
    std::vector<std::pair<TensorNode*, std::size_t>> stack{{root.get(), 0}};
    seen.insert(root.get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            TensorNode* p = node->parents[next++].get();
            if (p->requires_grad && seen.insert(p).second) stack.push_back({p, 0});
        } else {
            topo.push_back(node);
            stack.pop_back();
        }
    }
    for (TensorNode* n : topo) n->grad = Eigen::MatrixXd::Zero(n->rows(), n->cols());
    root->grad(0, 0) = 1.0;
    for (auto it = topo.rbegin(); it != topo.rend(); ++it)
        if ((*it)->backprop) (*it)->backprop(**it);
}

bool all_finite(const Tensor& t) { return t->val.allFinite(); }

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a->cols() != b->rows())
        throw std::invalid_argument("matmul: inner dims differ, " + shape_str(a) + " vs " +
                                    shape_str(b));
    return make(a->val * b->val, {a, b}, [a, b](TensorNode& n) {
        if (a->requires_grad) a->grad.noalias() += n.grad * b->val.transpose();
        if (b->requires_grad) b->grad.noalias() += a->val.transpose() * n.grad;
    });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
    if (a->cols() != b->cols())
        throw std::invalid_argument("matmul_nt: trailing dims differ, " + shape_str(a) +
                                    " vs " + shape_str(b));
    return make(a->val * b->val.transpose(), {a, b}, [a, b](TensorNode& n) {
        if (a->requires_grad) a->grad.noalias() += n.grad * b->val;
        if (b->requires_grad) b->grad.noalias() += n.grad.transpose() * a->val;
    });
}

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    return make(a->val + b->val, {a, b}, [a, b](TensorNode& n) {
        if (a->requires_grad) a->grad += n.grad;
        if (b->requires_grad) b->grad += n.grad;
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    return make(a->val - b->val, {a, b}, [a, b](TensorNode& n) {
        if (a->requires_grad) a->grad += n.grad;
        if (b->requires_grad) b->grad -= n.grad;
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    return make(a->val.cwiseProduct(b->val), {a, b}, [a, b](TensorNode& n) {
        if (a->requires_grad) a->grad += n.grad.cwiseProduct(b->val);
        if (b->requires_grad) b->grad += n.grad.cwiseProduct(a->val);
    });
}

Tensor div(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "div");
    return make(a->val.cwiseQuotient(b->val), {a, b}, [a, b](TensorNode& n) {
        if (a->requires_grad) a->grad += n.grad.cwiseQuotient(b->val);
        if (b->requires_grad)
            b->grad -= n.grad.cwiseProduct(a->val).cwiseQuotient(b->val.cwiseProduct(b->val));
    });
}

Tensor add_rowvec(const Tensor& a, const Tensor& b) {
    if (b->rows() != 1 || b->cols() != a->cols())
        throw std::invalid_argument("add_rowvec: want 1x" + std::to_string(a->cols()) +
                                    ", got " + shape_str(b) + " against " + shape_str(a));
    Eigen::MatrixXd out = a->val;
    out.rowwise() += b->val.row(0);
    return make(std::move(out), {a, b}, [a, b](TensorNode& n) {
        if (a->requires_grad) a->grad += n.grad;
        if (b->requires_grad) b->grad += n.grad.colwise().sum();
    });
}

Tensor div_rows(const Tensor& a, const Tensor& b) {
    if (b->cols() != 1 || b->rows() != a->rows())
        throw std::invalid_argument("div_rows: want " + std::to_string(a->rows()) +
                                    "x1, got " + shape_str(b) + " against " + shape_str(a));
    Eigen::MatrixXd out = a->val.array().colwise() / b->val.col(0).array();
    return make(std::move(out), {a, b}, [a, b](TensorNode& n) {
        if (a->requires_grad)
            a->grad.array() += n.grad.array().colwise() / b->val.col(0).array();
        if (b->requires_grad)
            b->grad.col(0).array() -= (n.grad.cwiseProduct(a->val)).rowwise().sum().array() /
                                      (b->val.col(0).array() * b->val.col(0).array());
    });
}

Tensor mul_scalar(const Tensor& a, double c) {
    return make(a->val * c, {a}, [a, c](TensorNode& n) {
        if (a->requires_grad) a->grad += c * n.grad;
    });
}

Tensor add_scalar(const Tensor& a, double c) {
    return make(a->val.array() + c, {a}, [a](TensorNode& n) {
        if (a->requires_grad) a->grad += n.grad;
    });
}

Tensor neg(const Tensor& a) { return mul_scalar(a, -1.0); }

Tensor relu(const Tensor& a) {
    return make(a->val.cwiseMax(0.0), {a}, [a](TensorNode& n) {
        if (a->requires_grad)
            a->grad.array() += n.grad.array() * (a->val.array() > 0.0).cast<double>();
    });
}

Tensor log_t(const Tensor& a) {
    return make(a->val.array().log(), {a}, [a](TensorNode& n) {
        if (a->requires_grad) a->grad.array() += n.grad.array() / a->val.array();
    });
}

Tensor exp_t(const Tensor& a) {
    Eigen::MatrixXd out = a->val.array().exp();
    return make(out, {a}, [a, out](TensorNode& n) {
        if (a->requires_grad) a->grad.array() += n.grad.array() * out.array();
    });
}

Tensor sqrt_t(const Tensor& a) {
    Eigen::MatrixXd out = a->val.array().sqrt();
    return make(out, {a}, [a, out](TensorNode& n) {
        if (a->requires_grad) a->grad.array() += 0.5 * n.grad.array() / out.array();
    });
}

Tensor square(const Tensor& a) {
    return make(a->val.array().square(), {a}, [a](TensorNode& n) {
        if (a->requires_grad) a->grad.array() += 2.0 * n.grad.array() * a->val.array();
    });
}

Tensor clamp_min(const Tensor& a, double floor) {
    return make(a->val.cwiseMax(floor), {a}, [a, floor](TensorNode& n) {
        if (a->requires_grad)
            a->grad.array() += n.grad.array() * (a->val.array() > floor).cast<double>();
    });
}

Tensor softmax_rows(const Tensor& a) {
    Eigen::MatrixXd out = a->val;
    for (long r = 0; r < out.rows(); ++r) {
        Eigen::ArrayXd row = out.row(r).array();
        row -= row.maxCoeff();
        row = row.exp();
        out.row(r) = row / row.sum();
    }
    return make(out, {a}, [a, out](TensorNode& n) {
        if (!a->requires_grad) return;
        // dx_row = (g - <g,y>) .* y per row
        Eigen::VectorXd dots = (n.grad.cwiseProduct(out)).rowwise().sum();
        a->grad += (n.grad.array().colwise() - dots.array()).matrix().cwiseProduct(out);
    });
}

Tensor sum_all(const Tensor& a) {
    Eigen::MatrixXd out(1, 1);
    out(0, 0) = a->val.sum();
    return make(std::move(out), {a}, [a](TensorNode& n) {
        if (a->requires_grad) a->grad.array() += n.grad(0, 0);
    });
}

Tensor mean_all(const Tensor& a) {
    Eigen::MatrixXd out(1, 1);
    out(0, 0) = a->val.mean();
    double inv = 1.0 / static_cast<double>(a->val.size());
    return make(std::move(out), {a}, [a, inv](TensorNode& n) {
        if (a->requires_grad) a->grad.array() += n.grad(0, 0) * inv;
    });
}

Tensor l2_norm_sq(const Tensor& a) {
    Eigen::MatrixXd out(1, 1);
    out(0, 0) = a->val.squaredNorm();
    return make(std::move(out), {a}, [a](TensorNode& n) {
        if (a->requires_grad) a->grad += 2.0 * n.grad(0, 0) * a->val;
    });
}

Tensor sum_rows(const Tensor& a) {
    return make(a->val.rowwise().sum(), {a}, [a](TensorNode& n) {
        if (a->requires_grad) a->grad.colwise() += n.grad.col(0);
    });
}

Tensor diag_part(const Tensor& a) {
    if (a->rows() != a->cols())
        throw std::invalid_argument("diag_part: square input required, got " + shape_str(a));
    return make(a->val.diagonal(), {a}, [a](TensorNode& n) {
        if (a->requires_grad) a->grad.diagonal() += n.grad.col(0);
    });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_rows: no parts");
    long rows = 0, cols = parts.front()->cols();
    for (const auto& p : parts) {
        if (p->cols() != cols)
            throw std::invalid_argument("concat_rows: column mismatch, " + shape_str(p) +
                                        " vs " + shape_str(parts.front()));
        rows += p->rows();
    }
    Eigen::MatrixXd out(rows, cols);
    long r = 0;
    for (const auto& p : parts) {
        out.middleRows(r, p->rows()) = p->val;
        r += p->rows();
    }
    return make(std::move(out), parts, [parts](TensorNode& n) {
        long r = 0;
        for (const auto& p : parts) {
            if (p->requires_grad) p->grad += n.grad.middleRows(r, p->rows());
            r += p->rows();
        }
    });
}

Tensor slice_rows(const Tensor& a, long start, long count) {
    if (start < 0 || count < 0 || start + count > a->rows())
        throw std::invalid_argument("slice_rows: [" + std::to_string(start) + "," +
                                    std::to_string(start + count) + ") out of " + shape_str(a));
    return make(a->val.middleRows(start, count), {a}, [a, start, count](TensorNode& n) {
        if (a->requires_grad) a->grad.middleRows(start, count) += n.grad;
    });
}

Tensor gather_rows(const Tensor& a, const std::vector<int>& index) {
    Eigen::MatrixXd out(static_cast<long>(index.size()), a->cols());
    for (std::size_t i = 0; i < index.size(); ++i) {
        if (index[i] < 0 || index[i] >= a->rows())
            throw std::invalid_argument("gather_rows: index " + std::to_string(index[i]) +
                                        " out of " + shape_str(a));
        out.row(static_cast<long>(i)) = a->val.row(index[i]);
    }
    return make(std::move(out), {a}, [a, index](TensorNode& n) {
        if (!a->requires_grad) return;
        for (std::size_t i = 0; i < index.size(); ++i)
            a->grad.row(index[i]) += n.grad.row(static_cast<long>(i));
    });
}

Tensor scatter_rows(const Tensor& a, const std::vector<int>& index, long out_rows) {
    if (static_cast<long>(index.size()) != a->rows())
        throw std::invalid_argument("scatter_rows: " + std::to_string(index.size()) +
                                    " indices for " + shape_str(a));
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(out_rows, a->cols());
    for (std::size_t i = 0; i < index.size(); ++i) {
        if (index[i] < 0 || index[i] >= out_rows)
            throw std::invalid_argument("scatter_rows: index " + std::to_string(index[i]) +
                                        " outside " + std::to_string(out_rows) + " rows");
        out.row(index[i]) += a->val.row(static_cast<long>(i));
    }
    return make(std::move(out), {a}, [a, index](TensorNode& n) {
        if (!a->requires_grad) return;
        for (std::size_t i = 0; i < index.size(); ++i)
            a->grad.row(static_cast<long>(i)) += n.grad.row(index[i]);
    });
}

Tensor detach(const Tensor& a) { return constant(a->val); }

}  // namespace wyimvc
