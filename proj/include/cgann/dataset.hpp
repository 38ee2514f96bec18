#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cgann {

using VectorId = std::uint32_t;

enum class Metric : std::uint8_t {
    euclidean = 0,
    inner_product = 1,
    angular = 2,
};

inline const char*
to_string(Metric m) {
    switch (m) {
        case Metric::euclidean:
            return "euclidean";
        case Metric::inner_product:
            return "inner_product";
        case Metric::angular:
            return "angular";
    }
    return "unknown";
}

inline Metric
metric_from_string(const std::string& name) {
    if (name == "euclidean" || name == "l2") {
        return Metric::euclidean;
    }
    if (name == "inner_product" || name == "ip") {
        return Metric::inner_product;
    }
    if (name == "angular" || name == "cosine") {
        return Metric::angular;
    }
    throw std::invalid_argument("unknown metric: " + name);
}

/// A scored point: id plus its distance to some reference. Ordering is
/// (distance, id) so that ties are always broken toward the smaller id.
struct Neighbor {
    VectorId id{0};
    double dist{0.0};

    friend bool
    operator<(const Neighbor& a, const Neighbor& b) {
        if (a.dist != b.dist) {
            return a.dist < b.dist;
        }
        return a.id < b.id;
    }
    friend bool
    operator==(const Neighbor& a, const Neighbor& b) {
        return a.id == b.id && a.dist == b.dist;
    }
};

/// Flat row-major float32 storage for n fixed-dimension vectors plus the
/// metric they are compared under. Immutable once loaded; readers need no
/// coordination.
struct Dataset {
    std::size_t dim{0};
    Metric metric{Metric::euclidean};
    std::vector<float> values;  // size() * dim, row-major

    std::size_t
    size() const {
        return dim == 0 ? 0 : values.size() / dim;
    }

    std::span<const float>
    operator[](std::size_t i) const {
        return {values.data() + i * dim, dim};
    }

    void
    append(std::span<const float> v) {
        if (dim == 0) {
            dim = v.size();
        }
        if (v.size() != dim) {
            throw std::invalid_argument("vector dimension mismatch");
        }
        values.insert(values.end(), v.begin(), v.end());
    }
};

namespace detail {

inline double
squared_norm(std::span<const float> a) {
    double s = 0.0;
    for (float x : a) {
        s += static_cast<double>(x) * static_cast<double>(x);
    }
    return s;
}

inline double
dot(std::span<const float> a, std::span<const float> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    }
    return s;
}

}  // namespace detail

/// Distance under metric `m`, smaller-is-nearer for all three variants:
/// euclidean is the L2 norm, inner product is negated, angular is one minus
/// the cosine similarity. Accumulation is double precision.
inline double
distance(Metric m, std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("distance: dimension mismatch (" + std::to_string(a.size()) +
                                    " vs " + std::to_string(b.size()) + ")");
    }
    switch (m) {
        case Metric::euclidean: {
            double s = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) {
                double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
                s += d * d;
            }
            return std::sqrt(s);
        }
        case Metric::inner_product:
            return -detail::dot(a, b);
        case Metric::angular: {
            double na = detail::squared_norm(a);
            double nb = detail::squared_norm(b);
            if (na == 0.0 || nb == 0.0) {
                throw std::invalid_argument("angular distance: zero-norm vector");
            }
            return 1.0 - detail::dot(a, b) / std::sqrt(na * nb);
        }
    }
    throw std::invalid_argument("distance: unknown metric");
}

inline double
distance(const Dataset& ds, VectorId id, std::span<const float> q) {
    return distance(ds.metric, ds[id], q);
}

inline double
distance(const Dataset& ds, VectorId a, VectorId b) {
    return distance(ds.metric, ds[a], ds[b]);
}

/// Mean absolute component value over all points and dimensions.
inline double
dataset_abs_mean(const Dataset& ds) {
    if (ds.size() == 0) {
        throw std::invalid_argument("dataset_abs_mean: empty dataset");
    }
    double s = 0.0;
    for (float x : ds.values) {
        s += std::fabs(static_cast<double>(x));
    }
    return s / static_cast<double>(ds.values.size());
}

/// Index of the point closest to the coordinate-wise mean, under the
/// dataset metric (euclidean fallback when the mean is unusable under
/// angular). Used as the fixed search entry point.
inline VectorId
medoid(const Dataset& ds) {
    if (ds.size() == 0) {
        throw std::invalid_argument("medoid: empty dataset");
    }
    std::vector<float> mean(ds.dim, 0.0f);
    {
        std::vector<double> acc(ds.dim, 0.0);
        for (std::size_t i = 0; i < ds.size(); ++i) {
            auto v = ds[i];
            for (std::size_t j = 0; j < ds.dim; ++j) {
                acc[j] += v[j];
            }
        }
        for (std::size_t j = 0; j < ds.dim; ++j) {
            mean[j] = static_cast<float>(acc[j] / static_cast<double>(ds.size()));
        }
    }
    Metric m = ds.metric;
    if (m == Metric::angular && detail::squared_norm(mean) == 0.0) {
        m = Metric::euclidean;
    }
    Neighbor best{0, distance(m, ds[0], mean)};
    for (std::size_t i = 1; i < ds.size(); ++i) {
        Neighbor cand{static_cast<VectorId>(i), distance(m, ds[i], mean)};
        if (cand < best) {
            best = cand;
        }
    }
    return best.id;
}

namespace detail {

inline std::uint64_t
splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

}  // namespace detail

/// Emits `count_per_base` jittered copies of every base point with i.i.d.
/// per-dimension noise drawn uniformly from [-noise_scale*eta, +noise_scale*eta],
/// where eta is the dataset's mean absolute component value. Each (base,
/// replica) pair gets its own seeded stream, so output is reproducible and
/// independent of generation order.
inline std::vector<std::vector<float>>
generate_noisy_queries(const Dataset& ds, double noise_scale, std::uint32_t count_per_base,
                       std::uint64_t seed) {
    if (noise_scale < 0.0) {
        throw std::invalid_argument("generate_noisy_queries: negative noise_scale");
    }
    const double eta = dataset_abs_mean(ds);
    const double bound = noise_scale * eta;
    std::vector<std::vector<float>> out;
    out.reserve(ds.size() * count_per_base);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        auto base = ds[i];
        for (std::uint32_t rep = 0; rep < count_per_base; ++rep) {
            std::uint64_t stream =
                detail::splitmix64(seed ^ detail::splitmix64(i * static_cast<std::uint64_t>(count_per_base) + rep + 1));
            std::mt19937_64 rng(stream);
            std::uniform_real_distribution<double> noise(-bound, bound);
            std::vector<float> q(ds.dim);
            for (std::size_t j = 0; j < ds.dim; ++j) {
                double delta = bound == 0.0 ? 0.0 : noise(rng);
                q[j] = static_cast<float>(static_cast<double>(base[j]) + delta);
            }
            out.push_back(std::move(q));
        }
    }
    return out;
}

}  // namespace cgann
