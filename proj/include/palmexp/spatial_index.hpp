#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

namespace palmexp {

// Points in R^n stored contiguously.
class PointSet {
public:
    explicit PointSet(int n = 1) : n_(n) {
        if (n < 1) throw std::domain_error("PointSet: dimension must be >= 1");
    }

    int dim() const { return n_; }
    std::size_t size() const { return coords_.size() / static_cast<std::size_t>(n_); }
    bool empty() const { return coords_.empty(); }

    std::span<const double> operator[](std::size_t i) const {
        return {coords_.data() + i * static_cast<std::size_t>(n_), static_cast<std::size_t>(n_)};
    }

    void push_back(std::span<const double> p) {
        if (p.size() != static_cast<std::size_t>(n_)) throw std::domain_error("PointSet: wrong point dimension");
        coords_.insert(coords_.end(), p.begin(), p.end());
    }

    void reserve(std::size_t count) { coords_.reserve(count * static_cast<std::size_t>(n_)); }
    void clear() { coords_.clear(); }
    const std::vector<double>& data() const { return coords_; }

    friend bool operator==(const PointSet&, const PointSet&) = default;

private:
    int n_;
    std::vector<double> coords_;
};

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

inline double squared_norm(std::span<const double> a) {
    double s = 0.0;
    for (double v : a) s += v * v;
    return s;
}

// Uniform grid hash over the first min(n, 3) coordinates. Projections never
// increase distances, so a query returns every point within the radius
// (plus some farther ones; callers test exact distances).
class GridIndex {
public:
    GridIndex(const PointSet& points, double cell) : points_(&points), cell_(cell) {
        if (!(cell > 0.0)) throw std::domain_error("GridIndex: cell side must be positive");
        dims_ = std::min(points.dim(), 3);
        for (std::size_t i = 0; i < points.size(); ++i) cells_[key(cell_of(points[i]))].push_back(static_cast<std::uint32_t>(i));
    }

    double cell() const { return cell_; }

    template <class F>
    void for_each_candidate(std::span<const double> center, double radius, F&& f) const {
        std::int64_t lo[3] = {0, 0, 0}, hi[3] = {0, 0, 0};
        double span_cells = 1.0;
        for (int d = 0; d < dims_; ++d) {
            lo[d] = static_cast<std::int64_t>(std::floor((center[static_cast<std::size_t>(d)] - radius) / cell_));
            hi[d] = static_cast<std::int64_t>(std::floor((center[static_cast<std::size_t>(d)] + radius) / cell_));
            span_cells *= static_cast<double>(hi[d] - lo[d] + 1);
        }
        if (span_cells > static_cast<double>(cells_.size()) || span_cells > 4096.0) {
            for (std::size_t i = 0; i < points_->size(); ++i) f(i);
            return;
        }
        std::int64_t c[3] = {0, 0, 0};
        for (c[0] = lo[0]; c[0] <= hi[0]; ++c[0])
            for (c[1] = lo[1]; c[1] <= hi[1]; ++c[1])
                for (c[2] = lo[2]; c[2] <= hi[2]; ++c[2]) {
                    const auto it = cells_.find(key({c[0], c[1], c[2]}));
                    if (it == cells_.end()) continue;
                    for (std::uint32_t i : it->second) f(static_cast<std::size_t>(i));
                }
    }

private:
    struct Cell {
        std::int64_t c[3];
    };

    Cell cell_of(std::span<const double> p) const {
        Cell out{{0, 0, 0}};
        for (int d = 0; d < dims_; ++d) out.c[d] = static_cast<std::int64_t>(std::floor(p[static_cast<std::size_t>(d)] / cell_));
        return out;
    }

    static std::uint64_t key(Cell c) {
        std::uint64_t h = 0x9e3779b97f4a7c15ULL;
        for (std::int64_t v : c.c) {
            h ^= static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        }
        return h;
    }

    const PointSet* points_;
    double cell_;
    int dims_ = 1;
    // Distinct cells may share a key; buckets then merge, which only adds candidates.
    std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> cells_;
};

} // namespace palmexp
