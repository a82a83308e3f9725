#include "wyimvc/discrete.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

namespace wyimvc {
namespace {

constexpr std::size_t kMaxConfigs = 10'000'000;
constexpr double kSupportFloor = 1e-300;

// Neumaier compensated sum; the tables here can be large enough that naive
// accumulation drifts past the validation tolerances.
double stable_sum(std::span<const double> xs) {
    double s = 0.0, c = 0.0;
    for (double x : xs) {
        double t = s + x;
        if (std::abs(s) >= std::abs(x))
            c += (s - t) + x;
        else
            c += (x - t) + s;
        s = t;
    }
    return s + c;
}

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

void check_subset(std::span<const int> subset, int views, const char* what) {
    require(!subset.empty(), std::string(what) + ": empty view subset");
    for (std::size_t i = 0; i < subset.size(); ++i) {
        require(subset[i] >= 0 && subset[i] < views,
                std::string(what) + ": view index out of range");
        if (i > 0)
            require(subset[i] > subset[i - 1],
                    std::string(what) + ": subset must be sorted and unique");
    }
}

// Odometer over a shape; keeps per-view digits in sync with a flat index.
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

AlphabetShape::AlphabetShape(std::vector<int> cardinalities) : card(std::move(cardinalities)) {
    require(!card.empty(), "shape: no views");
    stride.assign(card.size(), 1);
    size = 1;
    for (int k : card) require(k >= 1, "shape: cardinality must be >= 1");
    for (int v = static_cast<int>(card.size()) - 1; v >= 0; --v) {
        stride[v] = size;
        if (size > kMaxConfigs / static_cast<std::size_t>(card[v]))
            throw std::length_error("shape: configuration count exceeds 1e7 cap");
        size *= static_cast<std::size_t>(card[v]);
    }
}

std::size_t AlphabetShape::flat(std::span<const int> symbols) const {
    require(symbols.size() == card.size(), "flat: wrong symbol count");
    std::size_t idx = 0;
    for (std::size_t v = 0; v < card.size(); ++v) {
        require(symbols[v] >= 0 && symbols[v] < card[v], "flat: symbol out of range");
        idx += static_cast<std::size_t>(symbols[v]) * stride[v];
    }
    return idx;
}

void AlphabetShape::unflat(std::size_t index, std::span<int> out) const {
    require(out.size() == card.size(), "unflat: wrong output size");
    for (std::size_t v = 0; v < card.size(); ++v) {
        out[v] = static_cast<int>(index / stride[v]);
        index %= stride[v];
    }
}

std::vector<Bipartition> enumerate_bipartitions(int view_count) {
    require(view_count >= 2, "bipartitions: need at least two views");
    std::vector<Bipartition> out;
    const int half = view_count / 2;
    std::vector<int> comb;
    for (int m = 1; m <= half; ++m) {
        // lexicographic m-combinations of {0..V-1}
        comb.resize(m);
        for (int i = 0; i < m; ++i) comb[i] = i;
        for (;;) {
            // complement-dedup at the even-split tie: keep the block with view 0
            if (!(2 * m == view_count && comb[0] != 0)) {
                Bipartition b;
                b.side = comb;
                for (int v = 0; v < view_count; ++v)
                    if (!std::binary_search(comb.begin(), comb.end(), v))
                        b.complement.push_back(v);
                out.push_back(std::move(b));
            }
            int i = m - 1;
            while (i >= 0 && comb[i] == view_count - m + i) --i;
            if (i < 0) break;
            ++comb[i];
            for (int j = i + 1; j < m; ++j) comb[j] = comb[j - 1] + 1;
        }
    }
    return out;
}

JointPMF::JointPMF(std::vector<int> cardinalities, std::vector<double> probs)
    : shape_(std::move(cardinalities)), probs_(std::move(probs)) {
    require(probs_.size() == shape_.size, "pmf: entry count does not match shape");
    for (double p : probs_) require(p >= 0.0, "pmf: negative entry");
    double s = stable_sum(probs_);
    require(std::abs(s - 1.0) <= 1e-12, "pmf: entries must sum to 1");
}

ConditionalPMF::ConditionalPMF(std::size_t rows, int z_card, std::vector<double> probs)
    : rows_(rows), z_card_(z_card), probs_(std::move(probs)) {
    require(z_card_ >= 1, "conditional: z cardinality must be >= 1");
    require(probs_.size() == rows_ * static_cast<std::size_t>(z_card_),
            "conditional: entry count does not match rows x z");
    for (std::size_t r = 0; r < rows_; ++r) {
        double s = 0.0;
        for (int z = 0; z < z_card_; ++z) {
            double p = probs_[r * z_card_ + z];
            require(p >= 0.0, "conditional: negative entry");
            s += p;
        }
        require(std::abs(s - 1.0) <= 1e-12, "conditional: row must sum to 1");
    }
}

std::vector<double> marginal(const JointPMF& joint, std::span<const int> subset) {
    check_subset(subset, joint.views(), "marginal");
    std::vector<int> sub_card;
    for (int v : subset) sub_card.push_back(joint.shape().card[v]);
    AlphabetShape sub_shape(sub_card);

    std::vector<double> out(sub_shape.size, 0.0);
    Odometer odo(joint.shape());
    for (std::size_t x = 0; x < joint.config_count(); ++x, odo.advance()) {
        std::size_t s = 0;
        for (std::size_t j = 0; j < subset.size(); ++j)
            s += static_cast<std::size_t>(odo.digit[subset[j]]) * sub_shape.stride[j];
        out[s] += joint[x];
    }
    return out;
}

double entropy(std::span<const double> probs) {
    std::vector<double> terms;
    terms.reserve(probs.size());
    for (double p : probs)
        if (p > 0.0) terms.push_back(-p * std::log(p));
    return stable_sum(terms);
}

namespace {

// stride of view v inside the row-major space of `subset`, or 0 if absent
std::vector<std::size_t> scatter_strides(const JointPMF& joint, std::span<const int> subset,
                                         const AlphabetShape& sub_shape) {
    std::vector<std::size_t> s(joint.views(), 0);
    for (std::size_t j = 0; j < subset.size(); ++j) s[subset[j]] = sub_shape.stride[j];
    return s;
}

AlphabetShape subset_shape(const JointPMF& joint, std::span<const int> subset) {
    std::vector<int> c;
    for (int v : subset) c.push_back(joint.shape().card[v]);
    return AlphabetShape(c);
}

}  // namespace

double mutual_information(const JointPMF& joint, std::span<const int> group_a,
                          std::span<const int> group_b) {
    check_subset(group_a, joint.views(), "mi");
    check_subset(group_b, joint.views(), "mi");
    for (int v : group_a)
        require(!std::binary_search(group_b.begin(), group_b.end(), v),
                "mi: groups must be disjoint");

    AlphabetShape a_shape = subset_shape(joint, group_a);
    AlphabetShape b_shape = subset_shape(joint, group_b);
    auto a_str = scatter_strides(joint, group_a, a_shape);
    auto b_str = scatter_strides(joint, group_b, b_shape);

    std::vector<double> pa(a_shape.size, 0.0), pb(b_shape.size, 0.0);
    std::vector<double> pab(a_shape.size * b_shape.size, 0.0);
    Odometer odo(joint.shape());
    for (std::size_t x = 0; x < joint.config_count(); ++x, odo.advance()) {
        std::size_t ai = 0, bi = 0;
        for (int v = 0; v < joint.views(); ++v) {
            ai += static_cast<std::size_t>(odo.digit[v]) * a_str[v];
            bi += static_cast<std::size_t>(odo.digit[v]) * b_str[v];
        }
        double p = joint[x];
        pa[ai] += p;
        pb[bi] += p;
        pab[ai * b_shape.size + bi] += p;
    }

    std::vector<double> terms;
    for (std::size_t ai = 0; ai < a_shape.size; ++ai)
        for (std::size_t bi = 0; bi < b_shape.size; ++bi) {
            double p = pab[ai * b_shape.size + bi];
            if (p > 0.0) terms.push_back(p * std::log(p / (pa[ai] * pb[bi])));
        }
    return stable_sum(terms);
}

JointPMF lift(const JointPMF& joint, const ConditionalPMF& encoder) {
    require(encoder.rows() == joint.config_count(), "lift: encoder rows must match configs");
    std::vector<int> card = joint.shape().card;
    card.push_back(encoder.z_card());
    std::vector<double> probs(joint.config_count() * static_cast<std::size_t>(encoder.z_card()));
    for (std::size_t x = 0; x < joint.config_count(); ++x) {
        auto row = encoder.row(x);
        for (int z = 0; z < encoder.z_card(); ++z)
            probs[x * encoder.z_card() + z] = joint[x] * row[z];
    }
    return JointPMF(std::move(card), std::move(probs));
}

double latent_information(const JointPMF& joint, const ConditionalPMF& encoder,
                          std::span<const int> group) {
    check_subset(group, joint.views(), "latent_information");
    require(encoder.rows() == joint.config_count(),
            "latent_information: encoder rows must match configs");
    const int zc = encoder.z_card();

    AlphabetShape g_shape = subset_shape(joint, group);
    auto g_str = scatter_strides(joint, group, g_shape);

    std::vector<double> pg(g_shape.size, 0.0), pz(zc, 0.0);
    std::vector<double> pgz(g_shape.size * static_cast<std::size_t>(zc), 0.0);
    Odometer odo(joint.shape());
    for (std::size_t x = 0; x < joint.config_count(); ++x, odo.advance()) {
        std::size_t gi = 0;
        for (int v = 0; v < joint.views(); ++v)
            gi += static_cast<std::size_t>(odo.digit[v]) * g_str[v];
        double p = joint[x];
        pg[gi] += p;
        auto row = encoder.row(x);
        for (int z = 0; z < zc; ++z) {
            double q = p * row[z];
            pz[z] += q;
            pgz[gi * zc + z] += q;
        }
    }

    std::vector<double> terms;
    for (std::size_t gi = 0; gi < g_shape.size; ++gi)
        for (int z = 0; z < zc; ++z) {
            double p = pgz[gi * zc + z];
            if (p > 0.0) terms.push_back(p * std::log(p / (pg[gi] * pz[z])));
        }
    return stable_sum(terms);
}

double conditional_mutual_information(const JointPMF& joint, const ConditionalPMF& encoder,
                                      std::span<const int> group_a,
                                      std::span<const int> group_b) {
    check_subset(group_a, joint.views(), "cmi");
    check_subset(group_b, joint.views(), "cmi");
    for (int v : group_a)
        require(!std::binary_search(group_b.begin(), group_b.end(), v),
                "cmi: groups must be disjoint");
    require(encoder.rows() == joint.config_count(), "cmi: encoder rows must match configs");
    const int zc = encoder.z_card();

    AlphabetShape a_shape = subset_shape(joint, group_a);
    AlphabetShape b_shape = subset_shape(joint, group_b);
    auto a_str = scatter_strides(joint, group_a, a_shape);
    auto b_str = scatter_strides(joint, group_b, b_shape);

    std::vector<double> pz(zc, 0.0);
    std::vector<double> paz(a_shape.size * zc, 0.0), pbz(b_shape.size * zc, 0.0);
    std::vector<double> pabz(a_shape.size * b_shape.size * zc, 0.0);
    Odometer odo(joint.shape());
    for (std::size_t x = 0; x < joint.config_count(); ++x, odo.advance()) {
        std::size_t ai = 0, bi = 0;
        for (int v = 0; v < joint.views(); ++v) {
            ai += static_cast<std::size_t>(odo.digit[v]) * a_str[v];
            bi += static_cast<std::size_t>(odo.digit[v]) * b_str[v];
        }
        double p = joint[x];
        auto row = encoder.row(x);
        for (int z = 0; z < zc; ++z) {
            double q = p * row[z];
            pz[z] += q;
            paz[ai * zc + z] += q;
            pbz[bi * zc + z] += q;
            pabz[(ai * b_shape.size + bi) * zc + z] += q;
        }
    }

    std::vector<double> terms;
    for (std::size_t ai = 0; ai < a_shape.size; ++ai)
        for (std::size_t bi = 0; bi < b_shape.size; ++bi)
            for (int z = 0; z < zc; ++z) {
                double p = pabz[(ai * b_shape.size + bi) * zc + z];
                if (p > 0.0)
                    terms.push_back(p * std::log(p * pz[z] / (paz[ai * zc + z] * pbz[bi * zc + z])));
            }
    return stable_sum(terms);
}

Inversion bayes_invert(const JointPMF& joint, const ConditionalPMF& encoder,
                       std::span<const int> subset) {
    check_subset(subset, joint.views(), "bayes_invert");
    require(encoder.rows() == joint.config_count(),
            "bayes_invert: encoder rows must match configs");
    const int zc = encoder.z_card();

    Inversion inv;
    inv.subset_shape = subset_shape(joint, subset);
    auto s_str = scatter_strides(joint, subset, inv.subset_shape);

    inv.pz.assign(zc, 0.0);
    inv.likelihood.assign(inv.subset_shape.size * zc, 0.0);
    inv.degenerate.assign(zc, 0);
    std::vector<double> ps(inv.subset_shape.size, 0.0);

    Odometer odo(joint.shape());
    for (std::size_t x = 0; x < joint.config_count(); ++x, odo.advance()) {
        std::size_t si = 0;
        for (int v = 0; v < joint.views(); ++v)
            si += static_cast<std::size_t>(odo.digit[v]) * s_str[v];
        double p = joint[x];
        ps[si] += p;
        auto row = encoder.row(x);
        for (int z = 0; z < zc; ++z) {
            double q = p * row[z];
            inv.pz[z] += q;
            inv.likelihood[si * zc + z] += q;
        }
    }

    int empty = 0;
    for (int z = 0; z < zc; ++z) {
        if (inv.pz[z] < kSupportFloor) {
            inv.degenerate[z] = 1;
            ++empty;
            for (std::size_t si = 0; si < inv.subset_shape.size; ++si)
                inv.likelihood[si * zc + z] = ps[si];
        } else {
            for (std::size_t si = 0; si < inv.subset_shape.size; ++si)
                inv.likelihood[si * zc + z] /= inv.pz[z];
        }
    }
    if (empty > 0)
        std::cerr << "warning: " << empty
                  << " latent class(es) carry no mass; using the data marginal for them\n";
    return inv;
}

void save_pmf(std::ostream& os, const JointPMF& pmf) {
    os << pmf.views();
    for (int k : pmf.shape().card) os << ' ' << k;
    os << '\n';
    char buf[64];
    for (double p : pmf.probs()) {
        std::snprintf(buf, sizeof buf, "%.17g", p);
        os << buf << '\n';
    }
}

JointPMF load_pmf(std::istream& is) {
    int views = 0;
    if (!(is >> views) || views < 1) throw std::invalid_argument("pmf load: bad view count");
    std::vector<int> card(views);
    for (int& k : card)
        if (!(is >> k)) throw std::invalid_argument("pmf load: bad cardinality list");
    AlphabetShape shape(card);
    std::vector<double> probs(shape.size);
    for (double& p : probs)
        if (!(is >> p)) throw std::invalid_argument("pmf load: truncated probability list");
    return JointPMF(std::move(card), std::move(probs));
}

void save_pmf_file(const std::string& path, const JointPMF& pmf) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for write: " + path);
    save_pmf(os, pmf);
}

JointPMF load_pmf_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open for read: " + path);
    return load_pmf(is);
}

}  // namespace wyimvc
