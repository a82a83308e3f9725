#include "wyimvc/dca.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "wyimvc/rng.hpp"

namespace wyimvc {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

void check_available(std::span<const int> available, int views) {
    require(!available.empty(), "available set must be nonempty");
    for (std::size_t i = 0; i < available.size(); ++i) {
        require(available[i] >= 0 && available[i] < views, "available view out of range");
        if (i > 0) require(available[i] > available[i - 1], "available set must be sorted unique");
    }
}

std::string config_string(std::span<const int> digits) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < digits.size(); ++i) os << (i ? "," : "") << digits[i];
    os << ')';
    return os.str();
}

// normalize exp(logits) in place with max-subtraction; context names the
// configuration in the degeneracy message
void normalize_logits(std::span<double> logits, const std::string& context) {
    double m = kNegInf;
    for (double l : logits) m = std::max(m, l);
    if (m == kNegInf) throw DegeneracyError("zero normalizer at " + context);
    double sum = 0.0;
    for (double& l : logits) {
        l = std::exp(l - m);
        sum += l;
    }
    if (sum <= 0.0) throw DegeneracyError("zero normalizer at " + context);
    for (double& l : logits) l /= sum;
}

// inversion plus strides mapping full-config digits into its subset space
struct BlockLik {
    Inversion inv;
    std::vector<std::size_t> scatter;
};

BlockLik make_block(const JointPMF& joint, const ConditionalPMF& encoder,
                    std::span<const int> block) {
    BlockLik b{bayes_invert(joint, encoder, block), std::vector<std::size_t>(joint.views(), 0)};
    for (std::size_t j = 0; j < block.size(); ++j)
        b.scatter[block[j]] = b.inv.subset_shape.stride[j];
    return b;
}

struct SplitLik {
    double kappa;
    const BlockLik* side;
    const BlockLik* comp;
};

// shared likelihood tables for every block touched by splits with weight
struct UpdateContext {
    std::map<std::vector<int>, BlockLik> blocks;
    std::vector<SplitLik> splits;
    std::vector<double> prior;

    UpdateContext(const JointPMF& joint, const ConditionalPMF& encoder,
                  const KappaWeights& kappa, std::span<const double> prior_in) {
        prior.assign(prior_in.begin(), prior_in.end());
        for (std::size_t s = 0; s < kappa.splits().size(); ++s) {
            double k = kappa.values()[s];
            if (k == 0.0) continue;  // zero weight must not pull in log(0) terms
            const Bipartition& bp = kappa.splits()[s];
            for (const auto& blk : {bp.side, bp.complement})
                if (!blocks.count(blk)) blocks.emplace(blk, make_block(joint, encoder, blk));
            splits.push_back({k, &blocks.at(bp.side), &blocks.at(bp.complement)});
        }
    }

    // exact update row for one full configuration
    void row(std::span<const int> digits, std::span<double> out) const {
        const int zc = static_cast<int>(out.size());
        for (int z = 0; z < zc; ++z) out[z] = std::log(prior[z]);
        for (const SplitLik& sl : splits) {
            std::size_t si = 0, ci = 0;
            for (std::size_t v = 0; v < digits.size(); ++v) {
                si += static_cast<std::size_t>(digits[v]) * sl.side->scatter[v];
                ci += static_cast<std::size_t>(digits[v]) * sl.comp->scatter[v];
            }
            for (int z = 0; z < zc; ++z)
                out[z] += sl.kappa * (std::log(sl.side->inv.likelihood[si * zc + z]) +
                                      std::log(sl.comp->inv.likelihood[ci * zc + z]));
        }
        normalize_logits(out, config_string(digits));
    }
};

struct Odometer {
    const AlphabetShape& shape;
    std::vector<int> digit;
    explicit Odometer(const AlphabetShape& s) : shape(s), digit(s.card.size(), 0) {}
    void advance() {
        for (int v = static_cast<int>(digit.size()) - 1; v >= 0; --v) {
            if (++digit[v] < shape.card[v]) return;
            digit[v] = 0;
        }
    }
};

}  // namespace

KappaWeights::KappaWeights(int view_count, std::vector<double> per_split)
    : view_count_(view_count),
      splits_(enumerate_bipartitions(view_count)),
      values_(std::move(per_split)) {
    require(values_.size() == splits_.size(), "kappa: one weight per split required");
    double sum = 0.0;
    for (double k : values_) {
        require(k >= 0.0 && k < 1.0, "kappa: each weight must lie in [0,1)");
        sum += k;
    }
    require(sum < 1.0, "kappa: weights must sum below 1");
    for (std::size_t s = 0; s < splits_.size(); ++s) {
        block_index_[splits_[s].side] = s;
        block_index_[splits_[s].complement] = s;
    }
}

KappaWeights KappaWeights::uniform(int view_count, double total) {
    auto splits = enumerate_bipartitions(view_count);
    require(total >= 0.0 && total < 1.0, "kappa: total must lie in [0,1)");
    return KappaWeights(view_count,
                        std::vector<double>(splits.size(), total / static_cast<double>(splits.size())));
}

double KappaWeights::total() const {
    double s = 0.0;
    for (double k : values_) s += k;
    return s;
}

double KappaWeights::for_block(std::span<const int> block) const {
    auto it = block_index_.find(std::vector<int>(block.begin(), block.end()));
    require(it != block_index_.end(), "kappa: no split with the requested block");
    return values_[it->second];
}

ReducedKappa kappa_reduce(const KappaWeights& kappa, std::span<const int> available) {
    check_available(available, kappa.view_count());
    ReducedKappa rk;
    rk.kappa_view.assign(available.size(), 0.0);
    const bool complete = available.size() == static_cast<std::size_t>(kappa.view_count());
    if (!complete) {
        // (A, missing) split; every proper nonempty A names exactly one split
        rk.kappa_avail = kappa.for_block(available);
        // singleton split of each available view; its far block holds the
        // missing views, so the reduction keeps the full singleton weight
        for (std::size_t i = 0; i < available.size(); ++i) {
            int a = available[i];
            rk.kappa_view[i] = kappa.for_block(std::span<const int>(&a, 1));
        }
    }
    rk.kappa_star = rk.kappa_avail;
    for (double k : rk.kappa_view) rk.kappa_star += k;
    return rk;
}

std::vector<double> latent_marginal(const JointPMF& joint, const ConditionalPMF& encoder) {
    require(encoder.rows() == joint.config_count(), "latent_marginal: encoder/joint mismatch");
    std::vector<double> pz(encoder.z_card(), 0.0);
    for (std::size_t x = 0; x < joint.config_count(); ++x) {
        auto row = encoder.row(x);
        for (int z = 0; z < encoder.z_card(); ++z) pz[z] += joint[x] * row[z];
    }
    return pz;
}

ConditionalPMF dca_step(const JointPMF& joint, const ConditionalPMF& encoder,
                        const KappaWeights& kappa, std::span<const double> prior) {
    require(encoder.rows() == joint.config_count(), "dca_step: encoder/joint mismatch");
    require(kappa.view_count() == joint.views(), "dca_step: kappa/joint view mismatch");
    require(prior.size() == static_cast<std::size_t>(encoder.z_card()),
            "dca_step: prior size mismatch");
    const int zc = encoder.z_card();

    UpdateContext ctx(joint, encoder, kappa, prior);
    std::vector<double> out(joint.config_count() * static_cast<std::size_t>(zc));
    Odometer odo(joint.shape());
    for (std::size_t x = 0; x < joint.config_count(); ++x, odo.advance()) {
        std::span<double> row(out.data() + x * zc, static_cast<std::size_t>(zc));
        if (joint[x] == 0.0) {
            // unsupported configuration: park the row at the prior
            std::copy(prior.begin(), prior.end(), row.begin());
        } else {
            ctx.row(odo.digit, row);
        }
    }
    return ConditionalPMF(joint.config_count(), zc, std::move(out));
}

double lagrangian(const JointPMF& joint, const ConditionalPMF& encoder,
                  const KappaWeights& kappa) {
    std::vector<int> all(joint.views());
    for (int v = 0; v < joint.views(); ++v) all[v] = v;
    double val = latent_information(joint, encoder, all);
    for (std::size_t s = 0; s < kappa.splits().size(); ++s) {
        if (kappa.values()[s] == 0.0) continue;
        val += kappa.values()[s] *
               conditional_mutual_information(joint, encoder, kappa.splits()[s].side,
                                              kappa.splits()[s].complement);
    }
    return val;
}

namespace {

IterationStats iteration_stats(const JointPMF& joint, const ConditionalPMF& encoder,
                               const KappaWeights& kappa, int iter, double step_sup) {
    IterationStats st;
    st.iter = iter;
    st.step_sup = step_sup;
    std::vector<int> all(joint.views());
    for (int v = 0; v < joint.views(); ++v) all[v] = v;
    st.latent_info = latent_information(joint, encoder, all);
    st.lagrangian = st.latent_info;
    for (std::size_t s = 0; s < kappa.splits().size(); ++s) {
        double cmi = conditional_mutual_information(joint, encoder, kappa.splits()[s].side,
                                                    kappa.splits()[s].complement);
        st.split_cmi.push_back(cmi);
        if (kappa.values()[s] != 0.0) st.lagrangian += kappa.values()[s] * cmi;
    }
    return st;
}

}  // namespace

SolveResult solve(const JointPMF& joint, int z_card, const KappaWeights& kappa,
                  const SolverConfig& config, const std::optional<ConditionalPMF>& init) {
    require(joint.views() >= 2, "solve: need at least two views");
    require(z_card >= 1, "solve: z cardinality must be >= 1");
    require(config.tol > 0.0, "solve: tol must be positive");
    require(config.max_iters >= 1, "solve: max_iters must be >= 1");
    require(kappa.view_count() == joint.views(), "solve: kappa/joint view mismatch");

    ConditionalPMF enc = [&] {
        if (init) {
            require(init->rows() == joint.config_count() && init->z_card() == z_card,
                    "solve: init encoder shape mismatch");
            return *init;
        }
        Rng rng(config.seed);
        std::vector<double> probs(joint.config_count() * static_cast<std::size_t>(z_card));
        for (std::size_t x = 0; x < joint.config_count(); ++x)
            rng.dirichlet1(std::span<double>(probs.data() + x * z_card,
                                             static_cast<std::size_t>(z_card)));
        return ConditionalPMF(joint.config_count(), z_card, std::move(probs));
    }();

    const std::vector<double> uniform_prior(z_card, 1.0 / static_cast<double>(z_card));
    auto prior_of = [&](const ConditionalPMF& e) {
        return config.prior_mode == PriorMode::Uniform ? uniform_prior : latent_marginal(joint, e);
    };

    SolveResult res{enc, {}, false};
    res.trace.push_back(iteration_stats(joint, enc, kappa, 0, 0.0));
    double best = res.trace.back().lagrangian;
    res.encoder = enc;

    for (int k = 1; k <= config.max_iters; ++k) {
        ConditionalPMF next = dca_step(joint, enc, kappa, prior_of(enc));
        double step = 0.0;
        for (std::size_t x = 0; x < joint.config_count(); ++x) {
            if (joint[x] == 0.0) continue;
            auto a = enc.row(x), b = next.row(x);
            for (int z = 0; z < z_card; ++z) step = std::max(step, std::abs(a[z] - b[z]));
        }
        enc = std::move(next);
        res.trace.push_back(iteration_stats(joint, enc, kappa, k, step));
        if (res.trace.back().lagrangian <= best) {
            best = res.trace.back().lagrangian;
            res.encoder = enc;
        }
        if (step < config.tol) {
            res.converged = true;
            break;
        }
    }
    return res;
}

std::vector<double> incomplete_posterior(const JointPMF& joint, const ConditionalPMF& encoder,
                                         const KappaWeights& kappa,
                                         std::span<const int> available,
                                         std::span<const int> symbols) {
    require(encoder.rows() == joint.config_count(), "incomplete_posterior: encoder/joint mismatch");
    require(kappa.view_count() == joint.views(), "incomplete_posterior: kappa/joint view mismatch");
    require(symbols.size() == static_cast<std::size_t>(joint.views()),
            "incomplete_posterior: need a full-length configuration");
    check_available(available, joint.views());
    const int zc = encoder.z_card();
    const int V = joint.views();

    std::vector<double> pz = latent_marginal(joint, encoder);

    if (available.size() == static_cast<std::size_t>(V)) {
        // complete sample: evaluate exactly the full update row
        for (int v = 0; v < V; ++v)
            require(symbols[v] >= 0 && symbols[v] < joint.shape().card[v],
                    "incomplete_posterior: symbol out of range");
        if (joint[joint.shape().flat(symbols)] == 0.0) return pz;
        UpdateContext ctx(joint, encoder, kappa, pz);
        std::vector<double> row(zc);
        ctx.row(symbols, row);
        return row;
    }

    for (int v : available)
        require(symbols[v] >= 0 && symbols[v] < joint.shape().card[v],
                "incomplete_posterior: symbol out of range");

    ReducedKappa rk = kappa_reduce(kappa, available);

    // p(x_A) and p(z|x_A) by summing the missing views out of the lifted joint
    std::vector<int> missing;
    for (int v = 0; v < V; ++v)
        if (!std::binary_search(available.begin(), available.end(), v)) missing.push_back(v);
    std::vector<int> missing_card;
    for (int v : missing) missing_card.push_back(joint.shape().card[v]);
    AlphabetShape missing_shape(missing_card);

    std::size_t base = 0;
    for (int v : available) base += static_cast<std::size_t>(symbols[v]) * joint.shape().stride[v];

    double pa = 0.0;
    std::vector<double> qz(zc, 0.0);
    Odometer odo(missing_shape);
    for (std::size_t m = 0; m < missing_shape.size; ++m, odo.advance()) {
        std::size_t x = base;
        for (std::size_t j = 0; j < missing.size(); ++j)
            x += static_cast<std::size_t>(odo.digit[j]) * joint.shape().stride[missing[j]];
        double p = joint[x];
        if (p == 0.0) continue;
        pa += p;
        auto row = encoder.row(x);
        for (int z = 0; z < zc; ++z) qz[z] += p * row[z];
    }
    if (pa == 0.0) return pz;  // off-support pattern: prior, matching the complete rule
    for (double& q : qz) q /= pa;

    // likelihood tables for the singleton and co-singleton blocks that carry weight
    std::map<std::vector<int>, BlockLik> blocks;
    auto block_for = [&](std::vector<int> blk) -> const BlockLik& {
        auto it = blocks.find(blk);
        if (it == blocks.end()) it = blocks.emplace(blk, make_block(joint, encoder, blk)).first;
        return it->second;
    };

    std::vector<double> logit(zc);
    for (int z = 0; z < zc; ++z) {
        if (pz[z] == 0.0) {
            logit[z] = kNegInf;  // massless class; avoids log(0)-log(0) in the ratio
            continue;
        }
        double l = std::log(pz[z]);
        if (rk.kappa_avail != 0.0) l += rk.kappa_avail * (std::log(qz[z]) - std::log(pz[z]));
        for (std::size_t i = 0; i < available.size(); ++i) {
            double ka = rk.kappa_view[i];
            if (ka == 0.0) continue;
            int a = available[i];
            const BlockLik& ba = block_for({a});
            double term = std::log(ba.inv.likelihood[static_cast<std::size_t>(symbols[a]) * zc + z]);
            std::vector<int> abar;
            for (int v : available)
                if (v != a) abar.push_back(v);
            if (!abar.empty()) {
                const BlockLik& bb = block_for(abar);
                std::size_t si = 0;
                for (std::size_t j = 0; j < abar.size(); ++j)
                    si += static_cast<std::size_t>(symbols[abar[j]]) * bb.inv.subset_shape.stride[j];
                term += std::log(bb.inv.likelihood[si * zc + z]);
            }
            l += ka * term;
        }
        logit[z] = l;
    }
    std::vector<int> shown(available.begin(), available.end());
    normalize_logits(logit, "available views " + config_string(shown));
    return logit;
}

namespace {

const std::vector<double>& head_at(const HeadMap& heads, const std::vector<int>& key,
                                   std::size_t zc, const char* what) {
    auto it = heads.find(key);
    if (it == heads.end())
        throw std::invalid_argument(std::string(what) + ": missing head for block " +
                                    config_string(key));
    require(it->second.size() == zc, std::string(what) + ": head size mismatch");
    return it->second;
}

std::vector<double> finish_product(std::vector<double> logit, const char* what) {
    normalize_logits(logit, what);
    return logit;
}

}  // namespace

std::vector<double> equiv_class_prob_complete(const HeadMap& heads, const KappaWeights& kappa) {
    require(!heads.empty(), "equiv_class_prob_complete: no heads");
    const std::size_t zc = heads.begin()->second.size();
    std::vector<double> logit(zc, 0.0);
    for (std::size_t s = 0; s < kappa.splits().size(); ++s) {
        double k = kappa.values()[s];
        if (k == 0.0) continue;
        const auto& qs = head_at(heads, kappa.splits()[s].side, zc, "equiv_class_prob_complete");
        const auto& qc =
            head_at(heads, kappa.splits()[s].complement, zc, "equiv_class_prob_complete");
        for (std::size_t z = 0; z < zc; ++z)
            logit[z] += k * (std::log(qs[z]) + std::log(qc[z]));
    }
    return finish_product(std::move(logit), "equiv_class_prob_complete");
}

std::vector<double> equiv_class_prob_incomplete(const HeadMap& heads, const KappaWeights& kappa,
                                                std::span<const int> available) {
    check_available(available, kappa.view_count());
    require(!heads.empty(), "equiv_class_prob_incomplete: no heads");
    const std::size_t zc = heads.begin()->second.size();
    ReducedKappa rk = kappa_reduce(kappa, available);

    std::vector<int> avail(available.begin(), available.end());
    std::vector<double> logit(zc, 0.0);
    if (rk.kappa_avail != 0.0) {
        const auto& qa = head_at(heads, avail, zc, "equiv_class_prob_incomplete");
        for (std::size_t z = 0; z < zc; ++z) logit[z] += rk.kappa_avail * std::log(qa[z]);
    }
    for (std::size_t i = 0; i < avail.size(); ++i) {
        double ka = rk.kappa_view[i];
        if (ka == 0.0) continue;
        const auto& qa =
            head_at(heads, {avail[i]}, zc, "equiv_class_prob_incomplete");
        for (std::size_t z = 0; z < zc; ++z) logit[z] += ka * std::log(qa[z]);
        std::vector<int> abar;
        for (int v : avail)
            if (v != avail[i]) abar.push_back(v);
        if (abar.empty()) continue;  // singleton availability: far factor is vacuous
        const auto& qb = head_at(heads, abar, zc, "equiv_class_prob_incomplete");
        for (std::size_t z = 0; z < zc; ++z) logit[z] += ka * std::log(qb[z]);
    }
    return finish_product(std::move(logit), "equiv_class_prob_incomplete");
}

std::vector<double> equiv_class_prob_condindep(const std::vector<std::vector<double>>& view_heads,
                                               double kappa_star) {
    require(!view_heads.empty(), "equiv_class_prob_condindep: no heads");
    require(kappa_star > 0.0 && kappa_star < 1.0,
            "equiv_class_prob_condindep: kappa_star must lie in (0,1)");
    const std::size_t zc = view_heads.front().size();
    std::vector<double> logit(zc, 0.0);
    for (const auto& q : view_heads) {
        require(q.size() == zc, "equiv_class_prob_condindep: head size mismatch");
        for (std::size_t z = 0; z < zc; ++z) logit[z] += kappa_star * std::log(q[z]);
    }
    return finish_product(std::move(logit), "equiv_class_prob_condindep");
}

}  // namespace wyimvc
