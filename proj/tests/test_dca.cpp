#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "wyimvc/dca.hpp"
#include "wyimvc/rng.hpp"

using namespace wyimvc;

namespace {

JointPMF random_pmf(std::vector<int> card, std::uint64_t seed) {
    AlphabetShape shape(card);
    std::vector<double> p(shape.size);
    Rng rng(seed);
    rng.dirichlet1(p);
    return JointPMF(std::move(card), std::move(p));
}

ConditionalPMF random_encoder(std::size_t rows, int zc, std::uint64_t seed) {
    std::vector<double> p(rows * zc);
    Rng rng(seed);
    for (std::size_t r = 0; r < rows; ++r)
        rng.dirichlet1(std::span<double>(p.data() + r * zc, static_cast<std::size_t>(zc)));
    return ConditionalPMF(rows, zc, std::move(p));
}

// two identical uniform views on k symbols
JointPMF identical_views(int k) {
    std::vector<double> p(static_cast<std::size_t>(k) * k, 0.0);
    for (int y = 0; y < k; ++y) p[y * k + y] = 1.0 / k;
    return JointPMF({k, k}, p);
}

// copy encoder z = x1 on the diagonal, uniform elsewhere (off support)
ConditionalPMF copy_encoder(int k) {
    std::vector<double> e(static_cast<std::size_t>(k) * k * k, 0.0);
    for (int x0 = 0; x0 < k; ++x0)
        for (int x1 = 0; x1 < k; ++x1) {
            std::size_t r = static_cast<std::size_t>(x0) * k + x1;
            if (x0 == x1)
                e[r * k + x0] = 1.0;
            else
                for (int z = 0; z < k; ++z) e[r * k + z] = 1.0 / k;
        }
    return ConditionalPMF(static_cast<std::size_t>(k) * k, k, e);
}

double sup_diff(const ConditionalPMF& a, const ConditionalPMF& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.probs().size(); ++i)
        m = std::max(m, std::abs(a.probs()[i] - b.probs()[i]));
    return m;
}

}  // namespace

TEST_CASE("kappa weights validate their range") {
    CHECK_THROWS_AS(KappaWeights(2, {1.0}), std::invalid_argument);
    CHECK_THROWS_AS(KappaWeights(2, {-0.1}), std::invalid_argument);
    CHECK_THROWS_AS(KappaWeights(3, {0.5, 0.4, 0.3}), std::invalid_argument);
    CHECK_THROWS_AS(KappaWeights(3, {0.5}), std::invalid_argument);
    KappaWeights k = KappaWeights::uniform(3, 0.6);
    REQUIRE(k.values().size() == 3);
    for (double v : k.values()) CHECK(v == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(k.total() == doctest::Approx(0.6).epsilon(1e-15));
}

TEST_CASE("kappa lookup by either block of a split") {
    KappaWeights k(3, {0.1, 0.2, 0.3});  // sides {0},{1},{2}
    std::vector<int> b0{0}, b12{1, 2}, b02{0, 2};
    CHECK(k.for_block(b0) == 0.1);
    CHECK(k.for_block(b12) == 0.1);
    CHECK(k.for_block(b02) == 0.2);
}

TEST_CASE("kappa reduction: two views, one available") {
    KappaWeights k(2, {0.4});
    std::vector<int> a{0};
    ReducedKappa rk = kappa_reduce(k, a);
    CHECK(rk.kappa_avail == 0.4);
    REQUIRE(rk.kappa_view.size() == 1);
    CHECK(rk.kappa_view[0] == 0.4);
    CHECK(rk.kappa_star == doctest::Approx(0.8).epsilon(1e-15));
}

TEST_CASE("kappa reduction: three views, hand enumeration") {
    KappaWeights k(3, {0.15, 0.15, 0.15});
    std::vector<int> a{0};
    ReducedKappa rk = kappa_reduce(k, a);
    // split ({0},{1,2}) carries both the availability weight and the
    // singleton weight of the only available view
    CHECK(rk.kappa_avail == 0.15);
    CHECK(rk.kappa_view[0] == 0.15);

    std::vector<int> a01{0, 1};
    ReducedKappa rk2 = kappa_reduce(k, a01);
    CHECK(rk2.kappa_avail == 0.15);  // ({0,1},{2}) canonical side {2}
    CHECK(rk2.kappa_view[0] == 0.15);
    CHECK(rk2.kappa_view[1] == 0.15);
    CHECK(rk2.kappa_star == doctest::Approx(0.45).epsilon(1e-15));
}

TEST_CASE("kappa reduction: complete availability collapses to zero") {
    KappaWeights k(3, {0.1, 0.2, 0.3});
    std::vector<int> all{0, 1, 2};
    ReducedKappa rk = kappa_reduce(k, all);
    CHECK(rk.kappa_avail == 0.0);
    for (double v : rk.kappa_view) CHECK(v == 0.0);
    CHECK(rk.kappa_star == 0.0);
    std::vector<int> none;
    CHECK_THROWS_AS(kappa_reduce(k, none), std::invalid_argument);
}

TEST_CASE("update with zero weights returns the prior everywhere") {
    JointPMF p = random_pmf({4, 4}, 3);
    ConditionalPMF enc = random_encoder(p.config_count(), 4, 4);
    KappaWeights k(2, {0.0});
    auto prior = latent_marginal(p, enc);
    ConditionalPMF next = dca_step(p, enc, k, prior);
    for (std::size_t x = 0; x < p.config_count(); ++x)
        for (int z = 0; z < 4; ++z)
            CHECK(next.row(x)[z] == doctest::Approx(prior[z]).epsilon(1e-14));
}

TEST_CASE("copy encoder on identical views is a fixed point") {
    JointPMF p = identical_views(4);
    ConditionalPMF enc = copy_encoder(4);
    KappaWeights k(2, {0.5});
    auto prior = latent_marginal(p, enc);  // uniform over 4
    for (double pz : prior) CHECK(pz == doctest::Approx(0.25).epsilon(1e-15));
    ConditionalPMF next = dca_step(p, enc, k, prior);
    CHECK(sup_diff(next, enc) <= 1e-12);
    // stationarity: applying again stays put
    ConditionalPMF again = dca_step(p, next, k, latent_marginal(p, next));
    CHECK(sup_diff(again, next) <= 1e-12);
}

TEST_CASE("one update step matches a straightforward re-implementation") {
    JointPMF p = random_pmf({3, 3}, 9);
    ConditionalPMF enc = random_encoder(p.config_count(), 3, 10);
    KappaWeights k(2, {0.4});
    auto prior = latent_marginal(p, enc);
    ConditionalPMF next = dca_step(p, enc, k, prior);

    // oracle: direct pow arithmetic, no log-space tricks
    double pz[3] = {0, 0, 0};
    for (std::size_t x = 0; x < 9; ++x)
        for (int z = 0; z < 3; ++z) pz[z] += p[x] * enc.row(x)[z];
    auto lik = [&](int view, int sym, int z) {
        double num = 0.0;
        for (int x0 = 0; x0 < 3; ++x0)
            for (int x1 = 0; x1 < 3; ++x1) {
                int s = view == 0 ? x0 : x1;
                if (s == sym) num += p[x0 * 3 + x1] * enc.row(x0 * 3 + x1)[z];
            }
        return num / pz[z];
    };
    for (int x0 = 0; x0 < 3; ++x0)
        for (int x1 = 0; x1 < 3; ++x1) {
            double w[3], tot = 0.0;
            for (int z = 0; z < 3; ++z) {
                w[z] = pz[z] * std::pow(lik(0, x0, z) * lik(1, x1, z), 0.4);
                tot += w[z];
            }
            for (int z = 0; z < 3; ++z)
                CHECK(next.row(x0 * 3 + x1)[z] == doctest::Approx(w[z] / tot).epsilon(1e-12));
        }
}

TEST_CASE("zero-weight solve kills the latent information in one step") {
    JointPMF p = random_pmf({4, 4}, 13);
    KappaWeights k(2, {0.0});
    SolverConfig cfg;
    cfg.seed = 99;
    SolveResult res = solve(p, 4, k, cfg);
    CHECK(res.converged);
    CHECK(res.trace.size() <= 4);
    CHECK(res.trace.back().latent_info <= 1e-12);
}

TEST_CASE("identical views initialized at the copy solution converge immediately") {
    JointPMF p = identical_views(4);
    KappaWeights k(2, {0.5});
    SolverConfig cfg;
    SolveResult res = solve(p, 4, k, cfg, copy_encoder(4));
    CHECK(res.converged);
    CHECK(res.trace.back().split_cmi[0] <= 1e-12);
    CHECK(res.trace.back().latent_info == doctest::Approx(std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("lagrangian descends across random instances") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        JointPMF p = random_pmf({4, 4}, 1000 + seed);
        KappaWeights k = KappaWeights::uniform(2, 0.5);
        SolverConfig cfg;
        cfg.seed = 2000 + seed;
        SolveResult res = solve(p, 4, k, cfg);
        for (std::size_t i = 1; i < res.trace.size(); ++i)
            CHECK(res.trace[i].lagrangian <= res.trace[i - 1].lagrangian + 1e-9);
        CHECK(res.trace.back().step_sup >= 0.0);
    }
}

TEST_CASE("non-convergence is reported, not thrown") {
    JointPMF p = random_pmf({4, 4}, 77);
    KappaWeights k = KappaWeights::uniform(2, 0.5);
    SolverConfig cfg;
    cfg.max_iters = 1;
    cfg.seed = 78;
    SolveResult res = solve(p, 4, k, cfg);
    CHECK(!res.converged);
    CHECK(res.trace.size() == 2);
}

TEST_CASE("lagrangian closed forms") {
    // |Z|=1: I(Z;X)=0 and CMI reduces to plain MI
    JointPMF p = random_pmf({3, 4}, 21);
    KappaWeights k(2, {0.37});
    ConditionalPMF one(p.config_count(), 1, std::vector<double>(p.config_count(), 1.0));
    std::vector<int> a{0}, b{1};
    CHECK(lagrangian(p, one, k) ==
          doctest::Approx(0.37 * mutual_information(p, a, b)).epsilon(1e-12));

    JointPMF idp = identical_views(4);
    CHECK(lagrangian(idp, copy_encoder(4), KappaWeights(2, {0.5})) ==
          doctest::Approx(std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("incomplete posterior with every view available equals the full update") {
    JointPMF p = random_pmf({3, 2, 2}, 31);
    ConditionalPMF enc = random_encoder(p.config_count(), 3, 32);
    KappaWeights k = KappaWeights::uniform(3, 0.6);
    ConditionalPMF stepped = dca_step(p, enc, k, latent_marginal(p, enc));
    std::vector<int> all{0, 1, 2};
    std::vector<int> sym(3);
    for (std::size_t x = 0; x < p.config_count(); ++x) {
        p.shape().unflat(x, sym);
        auto q = incomplete_posterior(p, enc, k, all, sym);
        for (int z = 0; z < 3; ++z)
            CHECK(q[z] == doctest::Approx(stepped.row(x)[z]).epsilon(1e-12));
    }
}

TEST_CASE("incomplete posterior ignores missing symbols bit for bit") {
    JointPMF p = random_pmf({3, 3, 3}, 41);
    ConditionalPMF enc = random_encoder(p.config_count(), 4, 42);
    KappaWeights k = KappaWeights::uniform(3, 0.6);
    std::vector<int> avail{0, 2};
    std::vector<int> s1{1, 0, 2}, s2{1, 2, 2}, s3{1, 1, 2};
    auto q1 = incomplete_posterior(p, enc, k, avail, s1);
    auto q2 = incomplete_posterior(p, enc, k, avail, s2);
    auto q3 = incomplete_posterior(p, enc, k, avail, s3);
    for (int z = 0; z < 4; ++z) {
        CHECK(q1[z] == q2[z]);
        CHECK(q1[z] == q3[z]);
    }
}

TEST_CASE("single available view matches the hand-coded formula") {
    JointPMF p = random_pmf({3, 4}, 51);
    ConditionalPMF enc = random_encoder(p.config_count(), 3, 52);
    KappaWeights k(2, {0.4});
    std::vector<int> avail{0};

    double pz[3] = {0, 0, 0};
    for (std::size_t x = 0; x < p.config_count(); ++x)
        for (int z = 0; z < 3; ++z) pz[z] += p[x] * enc.row(x)[z];

    for (int x0 = 0; x0 < 3; ++x0) {
        double p0 = 0.0, qz[3] = {0, 0, 0}, lik[3];
        for (int x1 = 0; x1 < 4; ++x1) {
            double pr = p[x0 * 4 + x1];
            p0 += pr;
            for (int z = 0; z < 3; ++z) qz[z] += pr * enc.row(x0 * 4 + x1)[z];
        }
        double w[3], tot = 0.0;
        for (int z = 0; z < 3; ++z) {
            lik[z] = qz[z] / pz[z];          // P(x0|z)
            double post = qz[z] / p0;        // P(z|x0)
            w[z] = pz[z] * std::pow(post / pz[z], 0.4) * std::pow(lik[z], 0.4);
            tot += w[z];
        }
        std::vector<int> sym{x0, 0};
        auto q = incomplete_posterior(p, enc, k, avail, sym);
        for (int z = 0; z < 3; ++z)
            CHECK(q[z] == doctest::Approx(w[z] / tot).epsilon(1e-12));
    }
}

TEST_CASE("complete class probability: geometric-mean hand example") {
    KappaWeights k(2, {0.5});
    HeadMap heads;
    heads[{0}] = {0.8, 0.2};
    heads[{1}] = {0.5, 0.5};
    auto q = equiv_class_prob_complete(heads, k);
    CHECK(q[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(q[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("complete class probability: symmetry and one-hot propagation") {
    KappaWeights k = KappaWeights::uniform(3, 0.6);
    HeadMap heads;
    for (const auto& bp : k.splits()) {
        heads[bp.side] = {0.25, 0.25, 0.25, 0.25};
        heads[bp.complement] = {0.25, 0.25, 0.25, 0.25};
    }
    auto q = equiv_class_prob_complete(heads, k);
    for (double v : q) CHECK(v == doctest::Approx(0.25).epsilon(1e-14));

    heads[{0}] = {1.0, 0.0, 0.0, 0.0};
    auto q2 = equiv_class_prob_complete(heads, k);
    CHECK(q2[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(q2[1] == 0.0);

    HeadMap missing;
    missing[{0}] = {0.5, 0.5};
    CHECK_THROWS_AS(equiv_class_prob_complete(missing, k), std::invalid_argument);
}

TEST_CASE("incomplete class probability: singleton availability tempers the head") {
    KappaWeights k(2, {0.5});
    HeadMap heads;
    heads[{0}] = {0.7, 0.3};
    std::vector<int> avail{0};
    // exponent kappa_A + kappa_a = 1.0: identity on the head
    auto q = equiv_class_prob_incomplete(heads, k, avail);
    CHECK(q[0] == doctest::Approx(0.7).epsilon(1e-14));
    CHECK(q[1] == doctest::Approx(0.3).epsilon(1e-14));
}

TEST_CASE("incomplete class probability: pair availability hand oracle") {
    KappaWeights k = KappaWeights::uniform(3, 0.6);  // each split 0.2
    HeadMap heads;
    heads[{0, 1}] = {0.5, 0.3, 0.2};
    heads[{0}] = {0.6, 0.3, 0.1};
    heads[{1}] = {0.2, 0.5, 0.3};
    std::vector<int> avail{0, 1};
    auto q = equiv_class_prob_incomplete(heads, k, avail);
    double w[3], tot = 0.0;
    for (int z = 0; z < 3; ++z) {
        w[z] = std::pow(heads[{0, 1}][z], 0.2) *
               std::pow(heads[{0}][z] * heads[{1}][z], 0.2) *
               std::pow(heads[{1}][z] * heads[{0}][z], 0.2);
        tot += w[z];
    }
    for (int z = 0; z < 3; ++z) CHECK(q[z] == doctest::Approx(w[z] / tot).epsilon(1e-12));

    HeadMap uni;
    uni[{0, 1}] = {1.0 / 3, 1.0 / 3, 1.0 / 3};
    uni[{0}] = uni[{1}] = uni[{0, 1}];
    auto qu = equiv_class_prob_incomplete(uni, k, avail);
    for (double v : qu) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-14));
}

TEST_CASE("conditional-independence class probability") {
    // two identical heads at kappa_star 0.5 reproduce the head
    std::vector<std::vector<double>> two{{0.7, 0.3}, {0.7, 0.3}};
    auto q = equiv_class_prob_condindep(two, 0.5);
    CHECK(q[0] == doctest::Approx(0.7).epsilon(1e-14));

    // three heads against a direct pow evaluation
    std::vector<std::vector<double>> three{{0.7, 0.3}, {0.6, 0.4}, {0.5, 0.5}};
    auto q3 = equiv_class_prob_condindep(three, 0.3);
    double w0 = std::pow(0.7 * 0.6 * 0.5, 0.3), w1 = std::pow(0.3 * 0.4 * 0.5, 0.3);
    CHECK(q3[0] == doctest::Approx(w0 / (w0 + w1)).epsilon(1e-12));
    CHECK(q3[0] > 0.59);
    CHECK(q3[0] < 0.60);

    // common positive scaling of every head is invisible
    std::vector<std::vector<double>> scaled = three;
    for (auto& h : scaled)
        for (double& v : h) v *= 3.7;
    auto qs = equiv_class_prob_condindep(scaled, 0.3);
    for (int z = 0; z < 2; ++z) CHECK(qs[z] == doctest::Approx(q3[z]).epsilon(1e-12));

    CHECK_THROWS_AS(equiv_class_prob_condindep(three, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(equiv_class_prob_condindep(three, 1.0), std::invalid_argument);
    std::vector<std::vector<double>> dead{{1.0, 0.0}, {0.0, 1.0}};
    CHECK_THROWS_AS(equiv_class_prob_condindep(dead, 0.5), DegeneracyError);
}
