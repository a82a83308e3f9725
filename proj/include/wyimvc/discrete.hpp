#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace wyimvc {

// Mixed-radix index space over per-view alphabet sizes, row-major
// (last view varies fastest).
struct AlphabetShape {
    std::vector<int> card;
    std::vector<std::size_t> stride;
    std::size_t size = 0;

    AlphabetShape() = default;
    explicit AlphabetShape(std::vector<int> cardinalities);

    std::size_t flat(std::span<const int> symbols) const;
    void unflat(std::size_t index, std::span<int> out) const;
};

// One unordered two-block split of the view index set {0..V-1}.
// `side` is the canonical block: |side| <= V/2, and at even ties the
// block containing view 0. Both blocks sorted ascending.
struct Bipartition {
    std::vector<int> side;
    std::vector<int> complement;
    bool operator==(const Bipartition&) const = default;
};

// All such splits, ordered by |side| then lexicographically on side.
std::vector<Bipartition> enumerate_bipartitions(int view_count);

// Dense joint pmf over V >= 1 finite view alphabets.
class JointPMF {
public:
    JointPMF(std::vector<int> cardinalities, std::vector<double> probs);

    int views() const { return static_cast<int>(shape_.card.size()); }
    const AlphabetShape& shape() const { return shape_; }
    std::size_t config_count() const { return shape_.size; }
    const std::vector<double>& probs() const { return probs_; }
    double operator[](std::size_t flat_index) const { return probs_[flat_index]; }

private:
    AlphabetShape shape_;
    std::vector<double> probs_;
};

// Row-stochastic table: one categorical over z per input configuration.
class ConditionalPMF {
public:
    ConditionalPMF(std::size_t rows, int z_card, std::vector<double> probs);

    std::size_t rows() const { return rows_; }
    int z_card() const { return z_card_; }
    std::span<const double> row(std::size_t r) const {
        return {probs_.data() + r * z_card_, static_cast<std::size_t>(z_card_)};
    }
    std::span<double> row(std::size_t r) {
        return {probs_.data() + r * z_card_, static_cast<std::size_t>(z_card_)};
    }
    const std::vector<double>& probs() const { return probs_; }

private:
    std::size_t rows_;
    int z_card_;
    std::vector<double> probs_;
};

// Marginal table over a sorted subset of views, indexed by the subset's
// own row-major shape.
std::vector<double> marginal(const JointPMF& joint, std::span<const int> subset);

// -sum p ln p in nats, 0 ln 0 := 0
double entropy(std::span<const double> probs);

// I(X_A; X_B) in nats by direct summation; A, B disjoint sorted view groups.
double mutual_information(const JointPMF& joint, std::span<const int> group_a,
                          std::span<const int> group_b);

// Joint over (X_1..X_V, Z) induced by an encoder table aligned with the
// joint's configuration order; Z is the last axis.
JointPMF lift(const JointPMF& joint, const ConditionalPMF& encoder);

// I(X_A; X_B | Z) in nats under the lifted distribution.
double conditional_mutual_information(const JointPMF& joint, const ConditionalPMF& encoder,
                                      std::span<const int> group_a, std::span<const int> group_b);

// I(Z; X_A) in nats under the lifted distribution; A sorted, may be all views.
double latent_information(const JointPMF& joint, const ConditionalPMF& encoder,
                          std::span<const int> group);

// Bayes inversion of an encoder against a view subset.
struct Inversion {
    std::vector<double> pz;          // marginal over z
    std::vector<double> likelihood;  // [subset config][z] = P(x_subset | z)
    std::vector<char> degenerate;    // per z: pz below support floor
    AlphabetShape subset_shape;
};

// For z with pz < 1e-300 the likelihood column is replaced by the data
// marginal of the subset and the z is flagged.
Inversion bayes_invert(const JointPMF& joint, const ConditionalPMF& encoder,
                       std::span<const int> subset);

// Text round-trip: header "V k1 ... kV", then one probability per line
// with enough digits to restore the exact double.
void save_pmf(std::ostream& os, const JointPMF& pmf);
JointPMF load_pmf(std::istream& is);
void save_pmf_file(const std::string& path, const JointPMF& pmf);
JointPMF load_pmf_file(const std::string& path);

}  // namespace wyimvc
