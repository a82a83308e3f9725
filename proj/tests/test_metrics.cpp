#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "wyimvc/metrics.hpp"
#include "wyimvc/rng.hpp"

using namespace wyimvc;

namespace {

// exhaustive search over all k! label permutations
long brute_force_matches(std::span<const int> predicted, std::span<const int> truth, int k) {
    std::vector<int> pi(k);
    std::iota(pi.begin(), pi.end(), 0);
    long best = -1;
    do {
        long hits = 0;
        for (std::size_t n = 0; n < truth.size(); ++n)
            if (predicted[n] == pi[truth[n]]) ++hits;
        best = std::max(best, hits);
    } while (std::next_permutation(pi.begin(), pi.end()));
    return best;
}

}  // namespace

TEST_CASE("confusion matrix counts label pairs") {
    std::vector<int> pred{0, 0, 1, 1, 2};
    std::vector<int> truth{0, 1, 1, 1, 2};
    Eigen::MatrixXd c = confusion_matrix(pred, truth, 3);
    CHECK(c(0, 0) == 1.0);
    CHECK(c(0, 1) == 1.0);
    CHECK(c(1, 1) == 2.0);
    CHECK(c(2, 2) == 1.0);
    CHECK(c.sum() == 5.0);
}

TEST_CASE("perfect predictions give the identity matching") {
    std::vector<int> labels{0, 1, 2, 3, 0, 1, 2, 3};
    std::vector<int> pi = hungarian_match(labels, labels, 4);
    for (int c = 0; c < 4; ++c) CHECK(pi[c] == c);
    CHECK(clustering_accuracy(labels, labels, 4) == 1.0);
}

TEST_CASE("cyclic relabeling is undone by the matcher") {
    std::vector<int> truth(30), pred(30);
    for (int n = 0; n < 30; ++n) {
        truth[n] = n % 5;
        pred[n] = (n + 1) % 5;  // predicted = truth + 1 (mod 5)
    }
    std::vector<int> pi = hungarian_match(pred, truth, 5);
    for (int c = 0; c < 5; ++c) CHECK(pi[c] == (c + 1) % 5);
    CHECK(clustering_accuracy(pred, truth, 5) == 1.0);
}

TEST_CASE("assignment equals factorial brute force on random instances") {
    Rng rng(101);
    for (int trial = 0; trial < 200; ++trial) {
        int k = 2 + static_cast<int>(rng.below(5));  // 2..6
        int n = 20 + static_cast<int>(rng.below(40));
        std::vector<int> pred(n), truth(n);
        for (int i = 0; i < n; ++i) {
            pred[i] = static_cast<int>(rng.below(k));
            truth[i] = static_cast<int>(rng.below(k));
        }
        long brute = brute_force_matches(pred, truth, k);
        std::vector<int> pi = hungarian_match(pred, truth, k);
        long hung = 0;
        for (int i = 0; i < n; ++i)
            if (pred[i] == pi[truth[i]]) ++hung;
        CHECK(hung == brute);
        CHECK(clustering_accuracy(pred, truth, k) ==
              doctest::Approx(static_cast<double>(brute) / n).epsilon(1e-14));
    }
}

TEST_CASE("degenerate predictions score the largest class") {
    std::vector<int> truth(40), pred(40, 2);
    for (int n = 0; n < 40; ++n) truth[n] = n % 4;  // balanced
    CHECK(clustering_accuracy(pred, truth, 4) == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("random labels score a little above chance after matching") {
    Rng rng(55);
    const int n = 10000, k = 10;
    std::vector<int> pred(n), truth(n);
    for (int i = 0; i < n; ++i) {
        pred[i] = static_cast<int>(rng.below(k));
        truth[i] = static_cast<int>(rng.below(k));
    }
    double acc = clustering_accuracy(pred, truth, k);
    CHECK(acc > 0.1);
    CHECK(acc < 0.2);
}

TEST_CASE("accuracy is invariant under relabeling the predictions") {
    Rng rng(77);
    const int n = 500, k = 6;
    std::vector<int> pred(n), truth(n);
    for (int i = 0; i < n; ++i) {
        pred[i] = static_cast<int>(rng.below(k));
        truth[i] = static_cast<int>(rng.below(k));
    }
    double base = clustering_accuracy(pred, truth, k);
    std::vector<int> sigma{3, 5, 0, 2, 4, 1};
    std::vector<int> relabeled(n);
    for (int i = 0; i < n; ++i) relabeled[i] = sigma[pred[i]];
    CHECK(clustering_accuracy(relabeled, truth, k) == doctest::Approx(base).epsilon(1e-14));
}

TEST_CASE("label validation") {
    std::vector<int> a{0, 1}, b{0, 2}, c{0};
    CHECK_THROWS_AS(hungarian_match(a, b, 2), std::invalid_argument);  // label 2 out of range
    CHECK_THROWS_AS(hungarian_match(a, c, 2), std::invalid_argument);  // length mismatch
    CHECK_THROWS_AS(hungarian_match(a, a, 0), std::invalid_argument);
    std::vector<int> empty;
    CHECK_THROWS_AS(clustering_accuracy(empty, empty, 2), std::invalid_argument);
}

TEST_CASE("chi-square tail probabilities") {
    // df=2 has the closed form exp(-x/2)
    for (double x : {0.1, 1.0, 5.0, 13.0})
        CHECK(chi_square_pvalue(x, 2) == doctest::Approx(std::exp(-x / 2)).epsilon(1e-12));
    CHECK(chi_square_pvalue(0.0, 5) == doctest::Approx(1.0).epsilon(1e-12));
    // familiar quantile: P(chi2_1 > 3.841) ~ 0.05
    CHECK(chi_square_pvalue(3.841, 1) == doctest::Approx(0.05).epsilon(1e-2));
    CHECK(chi_square_pvalue(4.0, 5) > chi_square_pvalue(8.0, 5));
    CHECK_THROWS_AS(chi_square_pvalue(-1.0, 2), std::invalid_argument);
    CHECK_THROWS_AS(chi_square_pvalue(1.0, 0), std::invalid_argument);
}

TEST_CASE("spearman rank correlation") {
    std::vector<double> up{1, 2, 3, 4, 5};
    std::vector<double> down{10, 8, 6, 4, 2};
    CHECK(spearman_rho(up, down) == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(spearman_rho(up, up) == doctest::Approx(1.0).epsilon(1e-14));

    // monotone in ranks even when values are nonlinear
    std::vector<double> curved{0.1, 0.2, 10.0, 11.0, 200.0};
    CHECK(spearman_rho(up, curved) == doctest::Approx(1.0).epsilon(1e-14));

    // hand case with a tie: x = (1,2,2,4), y = (1,3,2,4)
    // ranks x = (1, 2.5, 2.5, 4); ranks y = (1, 3, 2, 4)
    std::vector<double> x{1, 2, 2, 4}, y{1, 3, 2, 4};
    double got = spearman_rho(x, y);
    // direct computation on the rank vectors
    std::vector<double> rx{1, 2.5, 2.5, 4}, ry{1, 3, 2, 4};
    double mx = 2.5, my = 2.5, num = 0, dx = 0, dy = 0;
    for (int i = 0; i < 4; ++i) {
        num += (rx[i] - mx) * (ry[i] - my);
        dx += (rx[i] - mx) * (rx[i] - mx);
        dy += (ry[i] - my) * (ry[i] - my);
    }
    CHECK(got == doctest::Approx(num / std::sqrt(dx * dy)).epsilon(1e-14));

    std::vector<double> flat{3, 3, 3};
    CHECK_THROWS_AS(spearman_rho(up, flat), std::invalid_argument);
    std::vector<double> one{1};
    CHECK_THROWS_AS(spearman_rho(one, one), std::invalid_argument);
}
