#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "wyimvc/discrete.hpp"

namespace wyimvc {

// Normalizer collapsed to zero (or every candidate weight vanished).
struct DegeneracyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Per-split relaxation weights, aligned with enumerate_bipartitions order.
class KappaWeights {
public:
    KappaWeights(int view_count, std::vector<double> per_split);
    static KappaWeights uniform(int view_count, double total = 0.5);

    int view_count() const { return view_count_; }
    const std::vector<Bipartition>& splits() const { return splits_; }
    const std::vector<double>& values() const { return values_; }
    double total() const;

    // weight of the unordered split one of whose blocks is `block` (sorted)
    double for_block(std::span<const int> block) const;

private:
    int view_count_;
    std::vector<Bipartition> splits_;
    std::vector<double> values_;
    std::map<std::vector<int>, std::size_t> block_index_;
};

// Split weights collapsed onto an availability pattern. kappa_view[i] is the
// weight of the singleton split of available[i] when any view is missing
// (zero otherwise); kappa_avail is the weight of the (A, missing) split.
struct ReducedKappa {
    double kappa_avail = 0.0;
    std::vector<double> kappa_view;
    double kappa_star = 0.0;  // kappa_avail + sum(kappa_view); may reach 1, callers
                              // that temper with it must check their own bound
};

ReducedKappa kappa_reduce(const KappaWeights& kappa, std::span<const int> available);

enum class PriorMode { SelfConsistent, Uniform };

struct SolverConfig {
    int max_iters = 500;
    double tol = 1e-8;
    std::uint64_t seed = 0;
    PriorMode prior_mode = PriorMode::SelfConsistent;
};

struct IterationStats {
    int iter = 0;
    double latent_info = 0.0;        // I(Z; all views)
    std::vector<double> split_cmi;   // I(X_S; X_Sc | Z) per split
    double lagrangian = 0.0;
    double step_sup = 0.0;           // sup-norm change over supported configs
};

struct SolveResult {
    ConditionalPMF encoder;
    std::vector<IterationStats> trace;
    bool converged = false;
};

// Marginal over z induced by the encoder and the data distribution.
std::vector<double> latent_marginal(const JointPMF& joint, const ConditionalPMF& encoder);

// One fixed-point update of the full-view encoder. Rows with zero data mass
// are set to the prior.
ConditionalPMF dca_step(const JointPMF& joint, const ConditionalPMF& encoder,
                        const KappaWeights& kappa, std::span<const double> prior);

// I(Z;X^V) + sum_S kappa_S I(X_S;X_Sc|Z), nats
double lagrangian(const JointPMF& joint, const ConditionalPMF& encoder,
                  const KappaWeights& kappa);

// Fixed-point iteration from a Dirichlet(1)-seeded encoder (or `init`); stops
// when the sup-norm step over supported configs drops below tol. On
// non-convergence the flag is cleared and the best iterate is returned.
SolveResult solve(const JointPMF& joint, int z_card, const KappaWeights& kappa,
                  const SolverConfig& config,
                  const std::optional<ConditionalPMF>& init = std::nullopt);

// Posterior over z for a partially observed configuration. `symbols` is a
// full-length configuration; entries at missing positions are never read,
// so the output is invariant to them bit for bit. With every view available
// this evaluates exactly the dca_step row.
std::vector<double> incomplete_posterior(const JointPMF& joint, const ConditionalPMF& encoder,
                                         const KappaWeights& kappa,
                                         std::span<const int> available,
                                         std::span<const int> symbols);

using HeadMap = std::map<std::vector<int>, std::vector<double>>;

// Class probability from per-block head outputs, uniform prior:
// q(z) proportional to prod_S [q_S(z) q_Sc(z)]^kappa_S.
std::vector<double> equiv_class_prob_complete(const HeadMap& heads, const KappaWeights& kappa);

// Incomplete generalization over the available set A:
// q(z) proportional to q_A(z)^kappa_A prod_{a in A} [q_a(z) q_abar(z)]^kappa_a,
// abar = A minus {a} (factor skipped when empty).
std::vector<double> equiv_class_prob_incomplete(const HeadMap& heads, const KappaWeights& kappa,
                                                std::span<const int> available);

// Conditional-independence form: q(z) proportional to prod_i q_i(z)^kappa_star.
std::vector<double> equiv_class_prob_condindep(const std::vector<std::vector<double>>& view_heads,
                                               double kappa_star);

}  // namespace wyimvc
