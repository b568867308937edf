#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tod/errors.hpp"

namespace tod {

// Label-free view of a feature matrix. Score and consistency computations
// take this instead of the full Dataset, so those code paths cannot read
// labels by construction.
struct FeatureView {
    const double* data = nullptr;  // row-major n x d
    int n = 0;
    int d = 0;

    std::vector<double> row(int i) const {
        if (i < 0 || i >= n) throw RangeError("FeatureView::row: index out of range");
        const double* p = data + static_cast<std::size_t>(i) * static_cast<std::size_t>(d);
        return std::vector<double>(p, p + d);
    }
};

struct Dataset {
    std::vector<double> features;  // row-major n x d
    std::vector<double> labels;    // class index (as double) or real target
    std::string name;
    int n = 0;
    int d = 0;
    int num_classes = 0;  // 0 for regression targets

    bool is_classification() const { return num_classes > 0; }

    FeatureView view() const { return FeatureView{features.data(), n, d}; }

    std::vector<double> feature_row(int i) const { return view().row(i); }

    double label(int i) const {
        if (i < 0 || i >= n) throw RangeError("Dataset::label: index out of range");
        return labels[static_cast<std::size_t>(i)];
    }
};

// Two interleaved half circles (unit radius), n/2 points per class, angles
// evenly spaced, Gaussian noise of the given scale added per coordinate.
Dataset gen_two_moons(int n, double noise, std::uint64_t seed);

// k isotropic Gaussian clusters centered on a circle of radius 5.0,
// class counts differing by at most one.
Dataset gen_blobs(int n, int k, double spread, std::uint64_t seed);

struct CsvSchema {
    int label_column = -1;  // negative counts from the end; -1 = last column
    char delimiter = ',';
    bool header = true;

    bool operator==(const CsvSchema&) const = default;
};

Dataset load_csv(const std::string& path, const CsvSchema& schema);

// Writes the dataset as feature columns plus a final label column, shortest
// round-trip number formatting, so load_csv reads back identical values.
void save_csv(const Dataset& data, const std::string& path);

// Per-column affine transform fitted on a chosen index subset; exactly
// invertible given the stored (mean, std).
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> std_dev;  // columns with zero variance keep std 1

    static Standardizer fit(const Dataset& data, const std::vector<int>& indices);
    Dataset apply(const Dataset& data) const;
    Dataset invert(const Dataset& data) const;
};

struct SplitIndices {
    std::vector<int> train;
    std::vector<int> test;
};

// Seeded shuffle split; test_fraction of rows held out. Deterministic per
// seed; indices returned in ascending order within each part.
SplitIndices train_test_split(int n, double test_fraction, std::uint64_t seed);

// New dataset containing the given rows of `data`, in the given order.
Dataset subset(const Dataset& data, const std::vector<int>& indices);

}  // namespace tod
