#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace wyimvc {

// confusion(c_pred, c_true) = number of samples with that label pair
Eigen::MatrixXd confusion_matrix(std::span<const int> predicted, std::span<const int> truth,
                                 int k);

// Permutation pi over clusters maximizing the matched count: pi[c] is the
// predicted cluster assigned to true class c. O(k^3) assignment solve.
std::vector<int> hungarian_match(std::span<const int> predicted, std::span<const int> truth,
                                 int k);

// matched fraction under the optimal label permutation
double clustering_accuracy(std::span<const int> predicted, std::span<const int> truth, int k);

// upper-tail probability of a chi-square(df) at the given statistic
double chi_square_pvalue(double stat, int df);

// rank correlation with average ranks on ties; inputs of equal length >= 2
double spearman_rho(std::span<const double> a, std::span<const double> b);

}  // namespace wyimvc
