#pragma once

// Periodic uniform grids in one to three dimensions, cell-centred scalar and
// vector fields, and the second-order stencils used by every other module.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace dgmc {

/// Raised for invalid configuration (bad grid sizes, CFL violations, ...).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Cubic periodic box [0, L)^dim split into n cells per axis.
class GridSpec {
public:
    GridSpec() = default;

    GridSpec(int dim, double extent, int n) : dim_(dim), extent_(extent), n_(n) {
        if (dim < 1 || dim > 3) {
            throw ConfigError("grid dimension must be 1, 2 or 3 (got " + std::to_string(dim) + ")");
        }
        if (n < 8) {
            throw ConfigError("grid needs at least 8 cells per axis (got " + std::to_string(n) + ")");
        }
        if (!(extent > 0.0) || !std::isfinite(extent)) {
            throw ConfigError("grid extent must be positive and finite");
        }
    }

    int dim() const { return dim_; }
    int n() const { return n_; }
    double extent() const { return extent_; }
    double h() const { return extent_ / n_; }
    double cell_volume() const { return std::pow(h(), dim_); }

    std::size_t size() const {
        std::size_t s = 1;
        for (int k = 0; k < dim_; ++k) s *= static_cast<std::size_t>(n_);
        return s;
    }

    /// Linear stride of axis k (axis 0 is fastest).
    std::size_t stride(int k) const {
        std::size_t s = 1;
        for (int j = 0; j < k; ++j) s *= static_cast<std::size_t>(n_);
        return s;
    }

    std::array<int, 3> coords(std::size_t idx) const {
        std::array<int, 3> c{0, 0, 0};
        for (int k = 0; k < dim_; ++k) {
            c[k] = static_cast<int>(idx % static_cast<std::size_t>(n_));
            idx /= static_cast<std::size_t>(n_);
        }
        return c;
    }

    std::size_t index(const std::array<int, 3>& c) const {
        std::size_t idx = 0;
        for (int k = dim_ - 1; k >= 0; --k) {
            int ck = ((c[k] % n_) + n_) % n_;
            idx = idx * static_cast<std::size_t>(n_) + static_cast<std::size_t>(ck);
        }
        return idx;
    }

    /// Cell-centre position (components beyond dim are zero).
    std::array<double, 3> position(std::size_t idx) const {
        auto c = coords(idx);
        std::array<double, 3> x{0.0, 0.0, 0.0};
        for (int k = 0; k < dim_; ++k) x[k] = (c[k] + 0.5) * h();
        return x;
    }

    bool operator==(const GridSpec& o) const {
        return dim_ == o.dim_ && n_ == o.n_ && extent_ == o.extent_;
    }
    bool operator!=(const GridSpec& o) const { return !(*this == o); }

private:
    int dim_ = 1;
    double extent_ = 1.0;
    int n_ = 8;
};

struct ScalarField {
    GridSpec spec;
    std::vector<double> data;

    ScalarField() = default;
    explicit ScalarField(const GridSpec& s, double value = 0.0) : spec(s), data(s.size(), value) {}

    std::size_t size() const { return data.size(); }
    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }
};

struct VectorField {
    GridSpec spec;
    std::array<std::vector<double>, 3> comp;  // components >= dim stay empty

    VectorField() = default;
    explicit VectorField(const GridSpec& s, double value = 0.0) : spec(s) {
        for (int k = 0; k < s.dim(); ++k) comp[k].assign(s.size(), value);
    }

    std::size_t size() const { return spec.size(); }

    std::array<double, 3> at(std::size_t i) const {
        std::array<double, 3> v{0.0, 0.0, 0.0};
        for (int k = 0; k < spec.dim(); ++k) v[k] = comp[k][i];
        return v;
    }
    void set(std::size_t i, const std::array<double, 3>& v) {
        for (int k = 0; k < spec.dim(); ++k) comp[k][i] = v[k];
    }
};

inline double dot(const std::array<double, 3>& a, const std::array<double, 3>& b) {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

inline double norm(const std::array<double, 3>& a) { return std::sqrt(dot(a, a)); }

inline void require_same_grid(const GridSpec& a, const GridSpec& b, const char* what) {
    if (a != b) throw ConfigError(std::string("grid mismatch in ") + what);
}

namespace detail {

/// Calls fn(i0, ip, im) for every cell i0 with its periodic +1 / -1 neighbours
/// along `axis`. The innermost loop runs over contiguous memory.
template <class Fn>
void for_each_neighbour(const GridSpec& spec, int axis, Fn&& fn) {
    const std::size_t n = static_cast<std::size_t>(spec.n());
    const std::size_t inner = spec.stride(axis);
    const std::size_t outer = spec.size() / (inner * n);
    for (std::size_t o = 0; o < outer; ++o) {
        const std::size_t base = o * n * inner;
        for (std::size_t c = 0; c < n; ++c) {
            const std::size_t row = base + c * inner;
            const std::size_t rowp = base + ((c + 1) % n) * inner;
            const std::size_t rowm = base + ((c + n - 1) % n) * inner;
            for (std::size_t i = 0; i < inner; ++i) fn(row + i, rowp + i, rowm + i);
        }
    }
}

}  // namespace detail

/// Deterministic sum: fixed-size linear blocks reduced by a pairwise tree.
inline double pairwise_sum(const double* x, std::size_t count) {
    constexpr std::size_t block = 128;
    if (count == 0) return 0.0;
    std::vector<double> partial;
    partial.reserve(count / block + 1);
    for (std::size_t b = 0; b < count; b += block) {
        const std::size_t e = std::min(count, b + block);
        double s = 0.0;
        for (std::size_t i = b; i < e; ++i) s += x[i];
        partial.push_back(s);
    }
    while (partial.size() > 1) {
        std::size_t m = 0;
        for (std::size_t i = 0; i + 1 < partial.size(); i += 2) partial[m++] = partial[i] + partial[i + 1];
        if (partial.size() % 2 == 1) partial[m++] = partial.back();
        partial.resize(m);
    }
    return partial[0];
}

inline double pairwise_sum(const std::vector<double>& x) { return pairwise_sum(x.data(), x.size()); }

/// h^dim times the sum of all cells.
inline double integrate(const ScalarField& f) {
    return f.spec.cell_volume() * pairwise_sum(f.data);
}

/// Central differences, (f[i+1] - f[i-1]) / 2h per axis, periodic.
inline VectorField gradient(const ScalarField& f) {
    const GridSpec& spec = f.spec;
    VectorField g(spec);
    const double inv2h = 1.0 / (2.0 * spec.h());
    for (int k = 0; k < spec.dim(); ++k) {
        auto& out = g.comp[k];
        detail::for_each_neighbour(spec, k, [&](std::size_t i0, std::size_t ip, std::size_t im) {
            out[i0] = (f.data[ip] - f.data[im]) * inv2h;
        });
    }
    return g;
}

/// One-sided differences: forward (f[i+1]-f[i])/h or backward (f[i]-f[i-1])/h.
inline VectorField gradient_forward(const ScalarField& f) {
    const GridSpec& spec = f.spec;
    VectorField g(spec);
    const double invh = 1.0 / spec.h();
    for (int k = 0; k < spec.dim(); ++k) {
        auto& out = g.comp[k];
        detail::for_each_neighbour(spec, k, [&](std::size_t i0, std::size_t ip, std::size_t) {
            out[i0] = (f.data[ip] - f.data[i0]) * invh;
        });
    }
    return g;
}

inline VectorField gradient_backward(const ScalarField& f) {
    const GridSpec& spec = f.spec;
    VectorField g(spec);
    const double invh = 1.0 / spec.h();
    for (int k = 0; k < spec.dim(); ++k) {
        auto& out = g.comp[k];
        detail::for_each_neighbour(spec, k, [&](std::size_t i0, std::size_t, std::size_t im) {
            out[i0] = (f.data[i0] - f.data[im]) * invh;
        });
    }
    return g;
}

/// Cellwise |grad f|^2 as the average of forward and backward squared
/// differences. Summed over the grid it equals the forward-difference
/// Dirichlet form, so it pairs exactly with `laplacian`.
inline ScalarField grad_sq_symmetric(const ScalarField& f) {
    const GridSpec& spec = f.spec;
    ScalarField out(spec, 0.0);
    const double invh2 = 1.0 / (spec.h() * spec.h());
    for (int k = 0; k < spec.dim(); ++k) {
        detail::for_each_neighbour(spec, k, [&](std::size_t i0, std::size_t ip, std::size_t im) {
            const double dp = f.data[ip] - f.data[i0];
            const double dm = f.data[i0] - f.data[im];
            out.data[i0] += 0.5 * (dp * dp + dm * dm) * invh2;
        });
    }
    return out;
}

/// Standard (2d+1)-point Laplacian, periodic.
inline ScalarField laplacian(const ScalarField& f) {
    const GridSpec& spec = f.spec;
    ScalarField out(spec, 0.0);
    const double invh2 = 1.0 / (spec.h() * spec.h());
    for (int k = 0; k < spec.dim(); ++k) {
        detail::for_each_neighbour(spec, k, [&](std::size_t i0, std::size_t ip, std::size_t im) {
            out.data[i0] += (f.data[ip] - 2.0 * f.data[i0] + f.data[im]) * invh2;
        });
    }
    return out;
}

/// Central-difference divergence.
inline ScalarField divergence(const VectorField& v) {
    const GridSpec& spec = v.spec;
    ScalarField out(spec, 0.0);
    const double inv2h = 1.0 / (2.0 * spec.h());
    for (int k = 0; k < spec.dim(); ++k) {
        const auto& f = v.comp[k];
        detail::for_each_neighbour(spec, k, [&](std::size_t i0, std::size_t ip, std::size_t im) {
            out.data[i0] += (f[ip] - f[im]) * inv2h;
        });
    }
    return out;
}

/// Central-difference Jacobian: jac[i][j] = d v_i / d x_j.
inline std::array<std::array<ScalarField, 3>, 3> jacobian(const VectorField& v) {
    std::array<std::array<ScalarField, 3>, 3> jac;
    for (int i = 0; i < v.spec.dim(); ++i) {
        ScalarField vi;
        vi.spec = v.spec;
        vi.data = v.comp[i];
        VectorField gi = gradient(vi);
        for (int j = 0; j < v.spec.dim(); ++j) {
            jac[i][j].spec = v.spec;
            jac[i][j].data = std::move(gi.comp[j]);
        }
    }
    return jac;
}

/// Cellwise Euclidean norm of a vector field.
inline ScalarField magnitude(const VectorField& v) {
    ScalarField out(v.spec, 0.0);
    for (std::size_t i = 0; i < out.size(); ++i) {
        double s = 0.0;
        for (int k = 0; k < v.spec.dim(); ++k) s += v.comp[k][i] * v.comp[k][i];
        out.data[i] = std::sqrt(s);
    }
    return out;
}

template <class Fn>
ScalarField map(const ScalarField& f, Fn&& fn) {
    ScalarField out(f.spec);
    for (std::size_t i = 0; i < f.size(); ++i) out.data[i] = fn(f.data[i]);
    return out;
}

/// Samples fn(position) at every cell centre.
template <class Fn>
ScalarField sample(const GridSpec& spec, Fn&& fn) {
    ScalarField out(spec);
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = fn(spec.position(i));
    return out;
}

/// Minimum-image displacement x - c in the periodic box.
inline std::array<double, 3> periodic_delta(const GridSpec& spec, const std::array<double, 3>& x,
                                            const std::array<double, 3>& c) {
    std::array<double, 3> d{0.0, 0.0, 0.0};
    const double L = spec.extent();
    for (int k = 0; k < spec.dim(); ++k) {
        double v = x[k] - c[k];
        v -= L * std::round(v / L);
        d[k] = v;
    }
    return d;
}

inline double max_abs(const ScalarField& f) {
    double m = 0.0;
    for (double v : f.data) m = std::max(m, std::abs(v));
    return m;
}

inline bool all_finite(const ScalarField& f) {
    for (double v : f.data)
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace dgmc
