#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "tod/nnet.hpp"

namespace todtest {

// Central finite differences of a scalar function over the snapshot's flat
// parameter vector. Kept independent of the analytic backprop path: it only
// calls the provided forward-style functional.
inline std::vector<double> fd_param_grad(
    const tod::NetworkSnapshot& s,
    const std::function<double(const tod::NetworkSnapshot&)>& fn, double h = 1e-5) {
    std::vector<double> grad(s.params.size());
    for (std::size_t i = 0; i < s.params.size(); ++i) {
        tod::NetworkSnapshot plus = s;
        tod::NetworkSnapshot minus = s;
        plus.params[i] += h;
        minus.params[i] -= h;
        grad[i] = (fn(plus) - fn(minus)) / (2.0 * h);
    }
    return grad;
}

// Per-parameter relative error with a small floor so finite-difference noise
// on near-zero entries does not dominate.
inline double max_rel_error(const std::vector<double>& analytic, const std::vector<double>& fd) {
    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double denom = std::max(std::abs(fd[i]), 1e-4);
        worst = std::max(worst, std::abs(analytic[i] - fd[i]) / denom);
    }
    return worst;
}

// Scratch directory under the system temp root, wiped on construction.
struct TempDir {
    std::filesystem::path path;

    explicit TempDir(const std::string& name) {
        path = std::filesystem::temp_directory_path() / ("todlab_test_" + name);
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string str() const { return path.string(); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace todtest
