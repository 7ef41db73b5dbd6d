#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace lfdf {

// Dense row-major tensor of doubles. Rank is dynamic (1..5 in practice);
// the last dimension is always the channel dimension for image-like data.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
        data_.assign(numel_of(shape_), 0.0);
    }
    Tensor(std::vector<int> shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (static_cast<std::int64_t>(data_.size()) != numel_of(shape_))
            throw std::invalid_argument("Tensor: data size does not match shape");
    }

    static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }
    static Tensor full(std::vector<int> shape, double v) {
        Tensor t(std::move(shape));
        std::fill(t.data_.begin(), t.data_.end(), v);
        return t;
    }

    const std::vector<int>& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
    std::int64_t numel() const { return static_cast<std::int64_t>(data_.size()); }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& vec() { return data_; }
    const std::vector<double>& vec() const { return data_; }

    double& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
    double operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

    // Rank-specific accessors; caller is responsible for using the right one.
    double& at(int a, int b) { return data_[static_cast<std::size_t>(a) * shape_[1] + b]; }
    double at(int a, int b) const { return data_[static_cast<std::size_t>(a) * shape_[1] + b]; }
    double& at(int a, int b, int c) {
        return data_[(static_cast<std::size_t>(a) * shape_[1] + b) * shape_[2] + c];
    }
    double at(int a, int b, int c) const {
        return data_[(static_cast<std::size_t>(a) * shape_[1] + b) * shape_[2] + c];
    }
    double& at(int a, int b, int c, int d) {
        return data_[((static_cast<std::size_t>(a) * shape_[1] + b) * shape_[2] + c) * shape_[3] + d];
    }
    double at(int a, int b, int c, int d) const {
        return data_[((static_cast<std::size_t>(a) * shape_[1] + b) * shape_[2] + c) * shape_[3] + d];
    }
    double& at(int a, int b, int c, int d, int e) {
        return data_[(((static_cast<std::size_t>(a) * shape_[1] + b) * shape_[2] + c) * shape_[3] + d) *
                         shape_[4] + e];
    }
    double at(int a, int b, int c, int d, int e) const {
        return data_[(((static_cast<std::size_t>(a) * shape_[1] + b) * shape_[2] + c) * shape_[3] + d) *
                         shape_[4] + e];
    }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    static std::int64_t numel_of(const std::vector<int>& shape) {
        std::int64_t n = 1;
        for (int d : shape) {
            if (d < 0) throw std::invalid_argument("Tensor: negative dimension");
            n *= d;
        }
        return n;
    }

    static std::string shape_str(const std::vector<int>& shape) {
        std::string s = "[";
        for (std::size_t i = 0; i < shape.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(shape[i]);
        }
        return s + "]";
    }

private:
    std::vector<int> shape_;
    std::vector<double> data_;
};

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
    assert(a.numel() == b.numel());
    double m = 0.0;
    for (std::int64_t i = 0; i < a.numel(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

// Deterministic RNG. mt19937_64 for the raw stream, with our own
// uniform/normal mappings so sequences do not depend on the standard
// library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // Uniform integer in [0, n).
    std::int64_t below(std::int64_t n) {
        return static_cast<std::int64_t>(uniform() * static_cast<double>(n)) % n;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(static_cast<std::int64_t>(i)));
            std::swap(v[i - 1], v[j]);
        }
    }

    void fill_normal(Tensor& t, double stddev) {
        for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = normal() * stddev;
    }
    void fill_uniform(Tensor& t, double lo, double hi) {
        for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = uniform(lo, hi);
    }

    // Derive an independent stream, e.g. one per epoch.
    static std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
        std::uint64_t x = seed ^ (0x9e3779b97f4a7c15ULL + salt);
        x ^= x >> 30;
        x *= 0xbf58476d1ce4e5b9ULL;
        x ^= x >> 27;
        x *= 0x94d049bb133111ebULL;
        x ^= x >> 31;
        return x;
    }

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace lfdf
