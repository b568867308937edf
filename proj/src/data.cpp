#include "tod/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "tod/rng.hpp"
#include "tod/textio.hpp"

namespace tod {

Dataset gen_two_moons(int n, double noise, std::uint64_t seed) {
    if (n <= 0 || n % 2 != 0) throw ArgumentError("gen_two_moons: n must be positive and even");
    if (noise < 0.0) throw ArgumentError("gen_two_moons: noise must be non-negative");
    const int half = n / 2;
    Dataset ds;
    ds.name = "two_moons";
    ds.n = n;
    ds.d = 2;
    ds.num_classes = 2;
    ds.features.resize(static_cast<std::size_t>(n) * 2);
    ds.labels.resize(static_cast<std::size_t>(n));
    Rng rng(seed);
    for (int i = 0; i < half; ++i) {
        // Outer moon: unit half circle centered at the origin.
        const double t = M_PI * static_cast<double>(i) / static_cast<double>(half - 1 > 0 ? half - 1 : 1);
        ds.features[static_cast<std::size_t>(i) * 2] = std::cos(t) + noise * rng.gauss();
        ds.features[static_cast<std::size_t>(i) * 2 + 1] = std::sin(t) + noise * rng.gauss();
        ds.labels[static_cast<std::size_t>(i)] = 0.0;
    }
    for (int i = 0; i < half; ++i) {
        // Inner moon: unit half circle centered at (1, 0.5), flipped.
        const double t = M_PI * static_cast<double>(i) / static_cast<double>(half - 1 > 0 ? half - 1 : 1);
        const int row = half + i;
        ds.features[static_cast<std::size_t>(row) * 2] = 1.0 - std::cos(t) + noise * rng.gauss();
        ds.features[static_cast<std::size_t>(row) * 2 + 1] = 0.5 - std::sin(t) + noise * rng.gauss();
        ds.labels[static_cast<std::size_t>(row)] = 1.0;
    }
    return ds;
}

Dataset gen_blobs(int n, int k, double spread, std::uint64_t seed) {
    if (n <= 0) throw ArgumentError("gen_blobs: n must be positive");
    if (k <= 0 || k > n) throw ArgumentError("gen_blobs: need 1 <= k <= n");
    if (spread < 0.0) throw ArgumentError("gen_blobs: spread must be non-negative");
    const double radius = 5.0;
    Dataset ds;
    ds.name = "blobs";
    ds.n = n;
    ds.d = 2;
    ds.num_classes = k;
    ds.features.resize(static_cast<std::size_t>(n) * 2);
    ds.labels.resize(static_cast<std::size_t>(n));
    Rng rng(seed);
    for (int i = 0; i < n; ++i) {
        const int c = i % k;  // class counts differ by at most one
        const double angle = 2.0 * M_PI * static_cast<double>(c) / static_cast<double>(k);
        const double cx = k == 1 ? 0.0 : radius * std::cos(angle);
        const double cy = k == 1 ? 0.0 : radius * std::sin(angle);
        ds.features[static_cast<std::size_t>(i) * 2] = cx + spread * rng.gauss();
        ds.features[static_cast<std::size_t>(i) * 2 + 1] = cy + spread * rng.gauss();
        ds.labels[static_cast<std::size_t>(i)] = static_cast<double>(c);
    }
    return ds;
}

namespace {

bool looks_like_class_labels(const std::vector<double>& labels, int& num_classes) {
    double max_label = 0.0;
    for (double y : labels) {
        if (y != std::floor(y) || y < 0.0) return false;
        max_label = std::max(max_label, y);
    }
    if (max_label > 1e6) return false;
    num_classes = static_cast<int>(max_label) + 1;
    return num_classes >= 2;
}

}  // namespace

Dataset load_csv(const std::string& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);

    Dataset ds;
    ds.name = path;
    std::string line;
    int line_no = 0;
    int width = -1;
    std::vector<double> raw_labels;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line_no == 1 && schema.header) continue;
        if (line.empty()) continue;
        const std::vector<std::string> cells = split_line(line, schema.delimiter);
        if (width < 0) {
            width = static_cast<int>(cells.size());
            if (width < 2)
                throw ParseError(path + ":" + std::to_string(line_no) + ": need at least 2 columns");
        } else if (static_cast<int>(cells.size()) != width) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": ragged row (" +
                             std::to_string(cells.size()) + " fields, expected " +
                             std::to_string(width) + ")");
        }
        int label_col = schema.label_column;
        if (label_col < 0) label_col += width;
        if (label_col < 0 || label_col >= width)
            throw ParseError(path + ":" + std::to_string(line_no) + ": label column out of range");
        for (int c = 0; c < width; ++c) {
            const double v = parse_double(cells[static_cast<std::size_t>(c)],
                                          path + ":" + std::to_string(line_no));
            if (!std::isfinite(v))
                throw ParseError(path + ":" + std::to_string(line_no) + ": non-finite value");
            if (c == label_col)
                raw_labels.push_back(v);
            else
                ds.features.push_back(v);
        }
        ++ds.n;
    }
    if (ds.n == 0) throw ParseError(path + ": no data rows");
    ds.d = width - 1;
    ds.labels = std::move(raw_labels);
    int k = 0;
    ds.num_classes = looks_like_class_labels(ds.labels, k) ? k : 0;
    return ds;
}

void save_csv(const Dataset& data, const std::string& path) {
    std::ostringstream header;
    for (int c = 0; c < data.d; ++c) header << 'x' << c + 1 << ',';
    header << 'y';
    CsvWriter out(path, header.str());
    for (int i = 0; i < data.n; ++i) {
        std::vector<std::string> cells;
        cells.reserve(static_cast<std::size_t>(data.d) + 1);
        for (int c = 0; c < data.d; ++c)
            cells.push_back(fmt_double(data.features[static_cast<std::size_t>(i) * data.d + c]));
        cells.push_back(fmt_double(data.labels[static_cast<std::size_t>(i)]));
        out.row(cells);
    }
    out.close();
}

Standardizer Standardizer::fit(const Dataset& data, const std::vector<int>& indices) {
    if (indices.empty()) throw ArgumentError("Standardizer::fit: empty index set");
    Standardizer s;
    s.mean.assign(static_cast<std::size_t>(data.d), 0.0);
    s.std_dev.assign(static_cast<std::size_t>(data.d), 1.0);
    for (int i : indices) {
        if (i < 0 || i >= data.n) throw RangeError("Standardizer::fit: index out of range");
        for (int c = 0; c < data.d; ++c)
            s.mean[static_cast<std::size_t>(c)] += data.features[static_cast<std::size_t>(i) * data.d + c];
    }
    for (double& m : s.mean) m /= static_cast<double>(indices.size());
    for (int c = 0; c < data.d; ++c) {
        double acc = 0.0;
        for (int i : indices) {
            const double v = data.features[static_cast<std::size_t>(i) * data.d + c] - s.mean[static_cast<std::size_t>(c)];
            acc += v * v;
        }
        const double var = acc / static_cast<double>(indices.size());
        if (var > 0.0) s.std_dev[static_cast<std::size_t>(c)] = std::sqrt(var);
    }
    return s;
}

Dataset Standardizer::apply(const Dataset& data) const {
    if (static_cast<int>(mean.size()) != data.d) throw ShapeError("Standardizer: dim mismatch");
    Dataset out = data;
    for (int i = 0; i < data.n; ++i)
        for (int c = 0; c < data.d; ++c) {
            double& v = out.features[static_cast<std::size_t>(i) * data.d + c];
            v = (v - mean[static_cast<std::size_t>(c)]) / std_dev[static_cast<std::size_t>(c)];
        }
    return out;
}

Dataset Standardizer::invert(const Dataset& data) const {
    if (static_cast<int>(mean.size()) != data.d) throw ShapeError("Standardizer: dim mismatch");
    Dataset out = data;
    for (int i = 0; i < data.n; ++i)
        for (int c = 0; c < data.d; ++c) {
            double& v = out.features[static_cast<std::size_t>(i) * data.d + c];
            v = v * std_dev[static_cast<std::size_t>(c)] + mean[static_cast<std::size_t>(c)];
        }
    return out;
}

SplitIndices train_test_split(int n, double test_fraction, std::uint64_t seed) {
    if (n <= 0) throw ArgumentError("train_test_split: n must be positive");
    if (!(test_fraction >= 0.0 && test_fraction < 1.0))
        throw ArgumentError("train_test_split: test_fraction must be in [0,1)");
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    Rng rng(seed);
    rng.shuffle(order);
    const int n_test = static_cast<int>(std::llround(test_fraction * n));
    SplitIndices split;
    split.test.assign(order.begin(), order.begin() + n_test);
    split.train.assign(order.begin() + n_test, order.end());
    std::sort(split.test.begin(), split.test.end());
    std::sort(split.train.begin(), split.train.end());
    return split;
}

Dataset subset(const Dataset& data, const std::vector<int>& indices) {
    Dataset out;
    out.name = data.name;
    out.d = data.d;
    out.num_classes = data.num_classes;
    out.n = static_cast<int>(indices.size());
    out.features.reserve(indices.size() * static_cast<std::size_t>(data.d));
    out.labels.reserve(indices.size());
    for (int i : indices) {
        if (i < 0 || i >= data.n) throw RangeError("subset: index out of range");
        const double* row = data.features.data() + static_cast<std::size_t>(i) * data.d;
        out.features.insert(out.features.end(), row, row + data.d);
        out.labels.push_back(data.labels[static_cast<std::size_t>(i)]);
    }
    return out;
}

}  // namespace tod
