#include "dacl/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace dacl {

int Dataset::num_classes() const {
    int mx = -1;
    for (int l : labels) mx = std::max(mx, l);
    return mx + 1;
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

double parse_cell(const std::string& cell, std::size_t row, std::size_t col) {
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
    while (end > begin && (end[-1] == ' ' || end[-1] == '\t' || end[-1] == '\r')) --end;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end)
        throw IoError("load_csv: cell at row " + std::to_string(row) + ", column " +
                      std::to_string(col) + " does not parse as a number: '" + cell + "'");
    return v;
}

} // namespace

Dataset load_csv(const std::string& path, const std::optional<std::string>& label_column) {
    std::ifstream f(path);
    if (!f) throw IoError("load_csv: cannot open " + path);

    std::string line;
    if (!std::getline(f, line)) throw IoError("load_csv: empty file " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> header = split_fields(line);

    std::ptrdiff_t label_idx = -1;
    if (label_column) {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == *label_column) label_idx = static_cast<std::ptrdiff_t>(i);
        if (label_idx < 0)
            throw IoError("load_csv: label column '" + *label_column + "' absent from " + path);
    }

    std::vector<std::vector<double>> rows;
    std::vector<std::string> raw_labels;
    std::size_t row_no = 1;
    while (std::getline(f, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells = split_fields(line);
        if (cells.size() != header.size())
            throw IoError("load_csv: row " + std::to_string(row_no) + " has " +
                          std::to_string(cells.size()) + " cells, header has " +
                          std::to_string(header.size()));
        std::vector<double> vals;
        vals.reserve(header.size());
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (static_cast<std::ptrdiff_t>(c) == label_idx) {
                std::string lab = cells[c];
                while (!lab.empty() && (lab.back() == ' ' || lab.back() == '\r')) lab.pop_back();
                raw_labels.push_back(lab);
            } else {
                vals.push_back(parse_cell(cells[c], row_no, c));
            }
        }
        rows.push_back(std::move(vals));
        ++row_no;
    }

    Dataset ds;
    std::size_t d = header.size() - (label_idx >= 0 ? 1 : 0);
    ds.features = Matrix(rows.size(), d);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < d; ++j) ds.features(i, j) = rows[i][j];
    for (std::size_t c = 0; c < header.size(); ++c)
        if (static_cast<std::ptrdiff_t>(c) != label_idx) ds.feature_names.push_back(header[c]);

    if (label_idx >= 0) {
        // First-appearance order, so a reordered file maps differently.
        std::vector<std::string> seen;
        ds.labels.reserve(raw_labels.size());
        for (const std::string& lab : raw_labels) {
            auto it = std::find(seen.begin(), seen.end(), lab);
            if (it == seen.end()) {
                seen.push_back(lab);
                ds.labels.push_back(static_cast<int>(seen.size()) - 1);
            } else {
                ds.labels.push_back(static_cast<int>(it - seen.begin()));
            }
        }
    }
    return ds;
}

void save_csv(const Dataset& ds, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("save_csv: cannot open " + path);
    std::ostringstream out;
    out.precision(17);
    for (std::size_t j = 0; j < ds.dim(); ++j) {
        if (j) out << ',';
        out << (j < ds.feature_names.size() ? ds.feature_names[j] : "f" + std::to_string(j));
    }
    if (ds.has_labels()) out << ",label";
    out << '\n';
    for (std::size_t i = 0; i < ds.n(); ++i) {
        for (std::size_t j = 0; j < ds.dim(); ++j) {
            if (j) out << ',';
            out << ds.features(i, j);
        }
        if (ds.has_labels()) out << ',' << ds.labels[i];
        out << '\n';
    }
    f << out.str();
    if (!f) throw IoError("save_csv: write failed for " + path);
}

Dataset normalize_minmax(const Dataset& ds) {
    require(ds.n() >= 1, "normalize_minmax: empty dataset");
    Dataset out = ds;
    out.norm_meta.resize(ds.dim());
    for (std::size_t j = 0; j < ds.dim(); ++j) {
        double lo = ds.features(0, j), hi = ds.features(0, j);
        for (std::size_t i = 1; i < ds.n(); ++i) {
            lo = std::min(lo, ds.features(i, j));
            hi = std::max(hi, ds.features(i, j));
        }
        out.norm_meta[j] = {lo, hi};
        double range = hi - lo;
        for (std::size_t i = 0; i < ds.n(); ++i)
            out.features(i, j) = range > 0.0 ? (ds.features(i, j) - lo) / range : 0.0;
    }
    return out;
}

Dataset denormalize(const Dataset& ds) {
    require(ds.norm_meta.size() == ds.dim(), "denormalize: dataset has no norm_meta");
    Dataset out = ds;
    for (std::size_t j = 0; j < ds.dim(); ++j) {
        double lo = ds.norm_meta[j].lo, hi = ds.norm_meta[j].hi;
        for (std::size_t i = 0; i < ds.n(); ++i)
            out.features(i, j) = lo + ds.features(i, j) * (hi - lo);
    }
    out.norm_meta.clear();
    return out;
}

namespace {

Dataset take_rows(const Dataset& ds, const std::vector<std::size_t>& idx) {
    Dataset out;
    out.features = Matrix(idx.size(), ds.dim());
    for (std::size_t i = 0; i < idx.size(); ++i)
        for (std::size_t j = 0; j < ds.dim(); ++j)
            out.features(i, j) = ds.features(idx[i], j);
    if (ds.has_labels()) {
        out.labels.reserve(idx.size());
        for (std::size_t i : idx) out.labels.push_back(ds.labels[i]);
    }
    out.feature_names = ds.feature_names;
    out.norm_meta = ds.norm_meta;
    return out;
}

void center_columns(Matrix& x) {
    for (std::size_t j = 0; j < x.cols(); ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < x.rows(); ++i) mean += x(i, j);
        mean /= static_cast<double>(x.rows());
        for (std::size_t i = 0; i < x.rows(); ++i) x(i, j) -= mean;
    }
}

} // namespace

std::pair<Dataset, Dataset> split(const Dataset& ds, double test_fraction, Rng& rng) {
    require(test_fraction > 0.0 && test_fraction < 1.0, "split: fraction outside (0,1)");
    std::vector<std::size_t> perm(ds.n());
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = ds.n(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng.below(i));
        std::swap(perm[i - 1], perm[j]);
    }
    std::size_t n_test = static_cast<std::size_t>(std::floor(test_fraction * static_cast<double>(ds.n())));
    std::vector<std::size_t> test_idx(perm.begin(), perm.begin() + n_test);
    std::vector<std::size_t> train_idx(perm.begin() + n_test, perm.end());
    return {take_rows(ds, train_idx), take_rows(ds, test_idx)};
}

Dataset gen_lowrank_gaussian(std::size_t n, std::size_t d, std::size_t r, double scale, Rng& rng) {
    require(r >= 1 && r <= d, "gen_lowrank_gaussian: rank outside [1, d]");
    Matrix a(d, r);
    for (std::size_t i = 0; i < a.size(); ++i) a.data()[i] = rng.standard_normal();
    Dataset ds;
    ds.features = Matrix(n, d);
    std::vector<double> u(r);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < r; ++k) u[k] = rng.standard_normal();
        for (std::size_t j = 0; j < d; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < r; ++k) s += a(j, k) * u[k];
            ds.features(i, j) = scale * s;
        }
    }
    center_columns(ds.features);
    return ds;
}

Dataset gen_two_class_blobs(std::size_t n, std::size_t d, double separation, Rng& rng) {
    require(n % 2 == 0, "gen_two_class_blobs: n must be even");
    std::vector<double> dir(d);
    double nrm = 0.0;
    while (nrm == 0.0) {
        for (std::size_t j = 0; j < d; ++j) dir[j] = rng.standard_normal();
        nrm = norm2(dir);
    }
    for (std::size_t j = 0; j < d; ++j) dir[j] /= nrm;

    Dataset ds;
    ds.features = Matrix(n, d);
    ds.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        int label = i < n / 2 ? 0 : 1;
        double sign = label == 0 ? -0.5 : 0.5;
        for (std::size_t j = 0; j < d; ++j)
            ds.features(i, j) = rng.standard_normal() + sign * separation * dir[j];
        ds.labels[i] = label;
    }
    center_columns(ds.features);
    return ds;
}

Dataset append_noise_dims(const Dataset& ds, std::size_t extra, double noise_std, Rng& rng) {
    Dataset out;
    out.labels = ds.labels;
    out.features = Matrix(ds.n(), ds.dim() + extra);
    for (std::size_t i = 0; i < ds.n(); ++i) {
        for (std::size_t j = 0; j < ds.dim(); ++j) out.features(i, j) = ds.features(i, j);
        for (std::size_t j = 0; j < extra; ++j)
            out.features(i, ds.dim() + j) = noise_std * rng.standard_normal();
    }
    return out;
}

} // namespace dacl
