#include "wyimvc/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "wyimvc/rng.hpp"

namespace wyimvc {
namespace {

namespace fs = std::filesystem;

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

[[noreturn]] void fail(const std::string& file, const std::string& what) {
    throw std::runtime_error(file + ": " + what);
}

// numeric CSV, one sample per row; rows must be rectangular
Eigen::MatrixXd read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(path, "cannot open");
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(cell, &used);
            } catch (const std::exception&) {
                fail(path, "non-numeric cell '" + cell + "' in row " +
                               std::to_string(rows.size()));
            }
            while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used])))
                ++used;
            if (used != cell.size())
                fail(path, "trailing junk in cell '" + cell + "'");
            row.push_back(v);
        }
        if (!rows.empty() && row.size() != rows.front().size())
            fail(path, "row " + std::to_string(rows.size()) + " has " +
                           std::to_string(row.size()) + " cells, expected " +
                           std::to_string(rows.front().size()));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) fail(path, "no rows");
    Eigen::MatrixXd m(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
    return m;
}

void write_csv(const std::string& path, const Eigen::MatrixXd& m) {
    std::ofstream out(path);
    if (!out) fail(path, "cannot open for writing");
    for (long r = 0; r < m.rows(); ++r) {
        for (long c = 0; c < m.cols(); ++c) {
            if (c) out << ',';
            out << fmt17(m(r, c));
        }
        out << '\n';
    }
}

}  // namespace

int MultiviewDataset::cluster_count() const {
    int k = 0;
    for (int l : labels) k = std::max(k, l + 1);
    return k;
}

bool MultiviewDataset::complete() const {
    return mask.size() == 0 || mask.minCoeff() == 1.0;
}

void MultiviewDataset::normalize() {
    for (int v = 0; v < view_count(); ++v) {
        Eigen::MatrixXd& x = views[v];
        for (long c = 0; c < x.cols(); ++c) {
            double lo = std::numeric_limits<double>::infinity();
            double hi = -lo;
            for (long n = 0; n < x.rows(); ++n) {
                if (mask(n, v) != 1.0) continue;
                lo = std::min(lo, x(n, c));
                hi = std::max(hi, x(n, c));
            }
            if (!(hi > lo)) {  // constant column (or no available rows)
                for (long n = 0; n < x.rows(); ++n)
                    if (mask(n, v) == 1.0) x(n, c) = 0.0;
                continue;
            }
            for (long n = 0; n < x.rows(); ++n) x(n, c) = (x(n, c) - lo) / (hi - lo);
        }
    }
    meta.normalized = true;
}

MaskedBatch MultiviewDataset::batch(std::span<const int> rows) const {
    MaskedBatch b;
    b.mask.resize(static_cast<long>(rows.size()), view_count());
    for (int v = 0; v < view_count(); ++v) {
        Eigen::MatrixXd x(static_cast<long>(rows.size()), views[v].cols());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            x.row(static_cast<long>(i)) = views[v].row(rows[i]);
            b.mask(static_cast<long>(i), v) = mask(rows[i], v);
        }
        b.x.push_back(std::move(x));
    }
    return b;
}

void MultiviewDataset::validate() const {
    if (views.empty()) throw std::invalid_argument("dataset: no views");
    if (mask.cols() != static_cast<long>(views.size()))
        throw std::invalid_argument("dataset: mask has " + std::to_string(mask.cols()) +
                                    " columns for " + std::to_string(views.size()) + " views");
    const long n = mask.rows();
    if (static_cast<long>(labels.size()) != n)
        throw std::invalid_argument("dataset: " + std::to_string(labels.size()) +
                                    " labels for " + std::to_string(n) + " samples");
    for (std::size_t v = 0; v < views.size(); ++v)
        if (views[v].rows() != n)
            throw std::invalid_argument("dataset: view " + std::to_string(v) + " has " +
                                        std::to_string(views[v].rows()) + " rows, expected " +
                                        std::to_string(n));
    for (int l : labels)
        if (l < 0) throw std::invalid_argument("dataset: negative label");
    for (long r = 0; r < n; ++r) {
        double avail = 0.0;
        for (long v = 0; v < mask.cols(); ++v) {
            double m = mask(r, v);
            if (m != 0.0 && m != 1.0)
                throw std::invalid_argument("dataset: mask entries must be 0 or 1");
            avail += m;
        }
        if (avail < 1.0)
            throw std::invalid_argument("dataset: sample " + std::to_string(r) +
                                        " has no available view");
    }
    for (std::size_t v = 0; v < views.size(); ++v)
        for (long r = 0; r < n; ++r) {
            if (mask(r, static_cast<long>(v)) != 1.0) continue;
            for (long c = 0; c < views[v].cols(); ++c)
                if (!std::isfinite(views[v](r, c)))
                    throw std::invalid_argument("dataset: non-finite feature in view " +
                                                std::to_string(v) + " row " +
                                                std::to_string(r));
        }
    if (meta.missing_rate == 0.0 && !complete())
        throw std::invalid_argument("dataset: masked entries but missing_rate is 0");
}

void SyntheticSpec::validate() const {
    if (clusters < 2) throw std::invalid_argument("synthetic: need clusters >= 2");
    if (views < 2) throw std::invalid_argument("synthetic: need views >= 2");
    if (dim < 1) throw std::invalid_argument("synthetic: need dim >= 1");
    if (!(separation > 0.0)) throw std::invalid_argument("synthetic: separation must be > 0");
    if (noise < 0.0) throw std::invalid_argument("synthetic: negative noise");
    if (samples < 1) throw std::invalid_argument("synthetic: need samples >= 1");
}

MultiviewDataset synthesize(const SyntheticSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng(seed);

    // cluster means, then labels, then per-sample noise: one fixed draw order
    std::vector<std::vector<Eigen::VectorXd>> mu(spec.views);
    for (int v = 0; v < spec.views; ++v) {
        mu[v].resize(spec.clusters);
        for (int y = 0; y < spec.clusters; ++y) {
            Eigen::VectorXd m(spec.dim);
            for (int d = 0; d < spec.dim; ++d) m(d) = spec.separation * rng.normal();
            mu[v][y] = m;
        }
    }

    MultiviewDataset out;
    out.labels.resize(spec.samples);
    for (long n = 0; n < spec.samples; ++n)
        out.labels[n] = static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.clusters)));

    for (int v = 0; v < spec.views; ++v) {
        Eigen::MatrixXd x(spec.samples, spec.dim);
        for (long n = 0; n < spec.samples; ++n)
            for (int d = 0; d < spec.dim; ++d)
                x(n, d) = mu[v][out.labels[n]](d) + spec.noise * rng.normal();
        out.views.push_back(std::move(x));
    }
    out.mask = Eigen::MatrixXd::Ones(spec.samples, spec.views);
    out.meta.name = "synthetic";
    out.meta.seed = seed;
    out.meta.missing_rate = 0.0;
    out.validate();
    return out;
}

MultiviewDataset apply_missing(const MultiviewDataset& dataset, double rate,
                               std::uint64_t seed) {
    if (!(rate >= 0.0 && rate < 1.0))
        throw std::invalid_argument("apply_missing: rate must lie in [0,1)");
    if (!dataset.complete())
        throw std::invalid_argument("apply_missing: input dataset already has masked views");
    const long n = dataset.size();
    const int v_count = dataset.view_count();
    if (v_count < 2)
        throw std::invalid_argument("apply_missing: need at least two views to mask");

    MultiviewDataset out = dataset;
    out.meta.seed = seed;
    out.meta.missing_rate = rate;

    // small epsilon so rates like 0.7 * 10 don't round below the true floor
    const long masked = static_cast<long>(std::floor(rate * static_cast<double>(n) + 1e-9));
    if (masked == 0) {
        out.meta.missing_rate = 0.0;  // nothing masked: dataset stays complete
        return out;
    }

    Rng rng(seed);
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);

    const std::uint64_t subsets = (1ull << v_count) - 2;  // nonempty proper subsets
    for (long i = 0; i < masked; ++i) {
        std::uint64_t code = 1 + rng.below(subsets);  // bitmask in [1, 2^V - 2]
        for (int v = 0; v < v_count; ++v)
            if (code & (1ull << v)) out.mask(order[i], v) = 0.0;
    }
    out.validate();
    return out;
}

MultiviewDataset load_dataset(const std::string& dir) {
    MultiviewDataset out;
    for (int v = 0;; ++v) {
        fs::path p = fs::path(dir) / ("view_" + std::to_string(v) + ".csv");
        if (!fs::exists(p)) break;
        out.views.push_back(read_csv(p.string()));
    }
    if (out.views.empty()) fail(dir, "no view_<v>.csv files");

    Eigen::MatrixXd label_col = read_csv((fs::path(dir) / "labels.csv").string());
    if (label_col.cols() != 1) fail(dir + "/labels.csv", "expected one column");
    out.labels.resize(label_col.rows());
    for (long r = 0; r < label_col.rows(); ++r) {
        double l = label_col(r, 0);
        if (l != std::floor(l) || l < 0)
            fail(dir + "/labels.csv", "label " + fmt17(l) + " is not a nonnegative integer");
        out.labels[r] = static_cast<int>(l);
    }

    fs::path mask_path = fs::path(dir) / "mask.csv";
    if (fs::exists(mask_path))
        out.mask = read_csv(mask_path.string());
    else
        out.mask = Eigen::MatrixXd::Ones(out.views[0].rows(),
                                         static_cast<long>(out.views.size()));

    fs::path meta_path = fs::path(dir) / "meta";
    if (fs::exists(meta_path)) {
        std::ifstream in(meta_path.string());
        std::string key;
        while (in >> key) {
            if (key == "name")
                in >> out.meta.name;
            else if (key == "seed")
                in >> out.meta.seed;
            else if (key == "missing_rate")
                in >> out.meta.missing_rate;
            else if (key == "normalized") {
                int f = 0;
                in >> f;
                out.meta.normalized = f != 0;
            } else {
                std::string rest;
                std::getline(in, rest);  // unknown keys ignored
            }
        }
    } else {
        out.meta.name = fs::path(dir).filename().string();
        if (!out.complete()) out.meta.missing_rate = -1.0;  // unknown; fixed below
    }
    if (out.meta.missing_rate < 0.0) {
        long with_missing = 0;
        for (long r = 0; r < out.mask.rows(); ++r)
            if (out.mask.row(r).minCoeff() == 0.0) ++with_missing;
        out.meta.missing_rate =
            static_cast<double>(with_missing) / static_cast<double>(out.mask.rows());
    }

    out.validate();
    if (!out.meta.normalized) out.normalize();
    return out;
}

void save_dataset(const MultiviewDataset& dataset, const std::string& dir) {
    dataset.validate();
    fs::create_directories(dir);
    for (std::size_t v = 0; v < dataset.views.size(); ++v)
        write_csv((fs::path(dir) / ("view_" + std::to_string(v) + ".csv")).string(),
                  dataset.views[v]);
    {
        std::ofstream out((fs::path(dir) / "labels.csv").string());
        for (int l : dataset.labels) out << l << '\n';
    }
    write_csv((fs::path(dir) / "mask.csv").string(), dataset.mask);
    std::ofstream meta((fs::path(dir) / "meta").string());
    meta << "name " << dataset.meta.name << '\n'
         << "seed " << dataset.meta.seed << '\n'
         << "missing_rate " << fmt17(dataset.meta.missing_rate) << '\n'
         << "normalized " << (dataset.meta.normalized ? 1 : 0) << '\n';
}

}  // namespace wyimvc
