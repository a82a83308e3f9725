#include "wyimvc/metrics.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace wyimvc {
namespace {

void check_labels(std::span<const int> predicted, std::span<const int> truth, int k) {
    if (k < 1) throw std::invalid_argument("labels: cluster count must be >= 1");
    if (predicted.size() != truth.size())
        throw std::invalid_argument("labels: " + std::to_string(predicted.size()) +
                                    " predictions for " + std::to_string(truth.size()) +
                                    " ground-truth labels");
    for (int l : predicted)
        if (l < 0 || l >= k)
            throw std::invalid_argument("labels: predicted label " + std::to_string(l) +
                                        " outside [0," + std::to_string(k) + ")");
    for (int l : truth)
        if (l < 0 || l >= k)
            throw std::invalid_argument("labels: true label " + std::to_string(l) +
                                        " outside [0," + std::to_string(k) + ")");
}

// classic potentials formulation; returns the column assigned to each row
std::vector<int> min_cost_assignment(const Eigen::MatrixXd& cost) {
    const int n = static_cast<int>(cost.rows());
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> match(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        match[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            int i0 = match[j0], j1 = 0;
            double delta = inf;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            int j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> row_to_col(n, -1);
    for (int j = 1; j <= n; ++j)
        if (match[j] >= 1) row_to_col[match[j] - 1] = j - 1;
    return row_to_col;
}

}  // namespace

Eigen::MatrixXd confusion_matrix(std::span<const int> predicted, std::span<const int> truth,
                                 int k) {
    check_labels(predicted, truth, k);
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(k, k);
    for (std::size_t n = 0; n < truth.size(); ++n) c(predicted[n], truth[n]) += 1.0;
    return c;
}

std::vector<int> hungarian_match(std::span<const int> predicted, std::span<const int> truth,
                                 int k) {
    Eigen::MatrixXd confusion = confusion_matrix(predicted, truth, k);
    // rows are true classes, columns predicted clusters; maximize matches
    Eigen::MatrixXd cost = -confusion.transpose();
    return min_cost_assignment(cost);
}

double clustering_accuracy(std::span<const int> predicted, std::span<const int> truth, int k) {
    if (truth.empty()) throw std::invalid_argument("labels: empty input");
    std::vector<int> pi = hungarian_match(predicted, truth, k);
    long hits = 0;
    for (std::size_t n = 0; n < truth.size(); ++n)
        if (predicted[n] == pi[truth[n]]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double chi_square_pvalue(double stat, int df) {
    if (df < 1) throw std::invalid_argument("chi_square_pvalue: df must be >= 1");
    if (!(stat >= 0.0)) throw std::invalid_argument("chi_square_pvalue: negative statistic");
    boost::math::chi_squared dist(static_cast<double>(df));
    return boost::math::cdf(boost::math::complement(dist, stat));
}

double spearman_rho(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2)
        throw std::invalid_argument("spearman_rho: need two sequences of equal length >= 2");
    auto ranks = [](std::span<const double> x) {
        const std::size_t n = x.size();
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(),
                  [&](std::size_t i, std::size_t j) { return x[i] < x[j]; });
        std::vector<double> r(n);
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i;
            while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
            double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
            for (std::size_t t = i; t <= j; ++t) r[order[t]] = avg;
            i = j + 1;
        }
        return r;
    };
    std::vector<double> ra = ranks(a), rb = ranks(b);
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= static_cast<double>(ra.size());
    mb /= static_cast<double>(rb.size());
    double num = 0.0, da = 0.0, db = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        num += (ra[i] - ma) * (rb[i] - mb);
        da += (ra[i] - ma) * (ra[i] - ma);
        db += (rb[i] - mb) * (rb[i] - mb);
    }
    if (da == 0.0 || db == 0.0)
        throw std::invalid_argument("spearman_rho: constant sequence has no rank correlation");
    return num / std::sqrt(da * db);
}

}  // namespace wyimvc
