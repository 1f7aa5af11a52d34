#ifndef WMAGIN_TESTS_HELPERS_HPP
#define WMAGIN_TESTS_HELPERS_HPP

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "wmagin/tensor.hpp"

namespace testing {

inline wmagin::Tensor random_tensor(wmagin::Shape shape, std::mt19937_64& rng, double lo = -1.0,
                                    double hi = 1.0, bool requires_grad = true) {
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> v(wmagin::shape_size(shape));
    for (double& x : v) x = dist(rng);
    return wmagin::Tensor::from(std::move(shape), std::move(v), requires_grad);
}

/// Checks d(loss)/d(input) for every input against central differences.
/// `loss` rebuilds the graph from the current input values.
inline double max_grad_error(const std::function<wmagin::Tensor()>& loss,
                             std::vector<wmagin::Tensor> inputs, double step = 1e-5,
                             double floor = 1e-6) {
    for (auto& t : inputs) t.zero_grad();
    wmagin::backward(loss());
    double worst = 0.0;
    for (auto& t : inputs) {
        const std::vector<double> analytic = t.grad();
        auto data = t.mutable_data();
        for (std::size_t i = 0; i < data.size(); ++i) {
            const double saved = data[i];
            data[i] = saved + step;
            const double plus = loss().item();
            data[i] = saved - step;
            const double minus = loss().item();
            data[i] = saved;
            const double numeric = (plus - minus) / (2.0 * step);
            const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), floor});
            worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
        }
    }
    return worst;
}

/// Weighted sum of all entries with fixed pseudo-random weights, so that
/// every output element influences the scalar loss differently.
inline wmagin::Tensor probe_loss(const wmagin::Tensor& y, std::uint64_t seed = 99) {
    std::mt19937_64 rng(seed);
    const auto w = random_tensor(y.shape(), rng, -1.0, 1.0, false);
    return wmagin::sum_all(wmagin::mul(y, w));
}

inline void check_close(std::span<const double> a, std::span<const double> b, double tol) {
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= tol);
}

/// Fresh directory under the system temp dir, removed on destruction.
struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& name) {
        path = std::filesystem::temp_directory_path() /
               (name + "_" + std::to_string(std::random_device{}()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
};

}  // namespace testing

#endif
