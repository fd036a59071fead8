#include "exitfem/linalg.hpp"

#include "exitfem/error.hpp"

#include <algorithm>
#include <cmath>

namespace exitfem {

SparseMatrix SparseMatrix::from_triplets(std::size_t n, std::vector<Triplet> triplets) {
    SparseMatrix m;
    m.n_ = n;
    // Stable counting sort by row, then a stable sort by column inside each row.
    std::vector<std::size_t> count(n + 1, 0);
    for (const auto& t : triplets) {
        if (t.row >= n || t.col >= n) throw ConfigError("triplet index out of range");
        ++count[t.row + 1];
    }
    for (std::size_t i = 0; i < n; ++i) count[i + 1] += count[i];
    std::vector<Triplet> sorted(triplets.size());
    {
        std::vector<std::size_t> next(count.begin(), count.end() - 1);
        for (const auto& t : triplets) sorted[next[t.row]++] = t;
    }
    triplets.clear();
    triplets.shrink_to_fit();

    m.offsets_.assign(n + 1, 0);
    m.columns_.reserve(sorted.size() / 2);
    m.values_.reserve(sorted.size() / 2);
    for (std::size_t r = 0; r < n; ++r) {
        auto first = sorted.begin() + static_cast<std::ptrdiff_t>(count[r]);
        auto last = sorted.begin() + static_cast<std::ptrdiff_t>(count[r + 1]);
        std::stable_sort(first, last, [](const Triplet& a, const Triplet& b) { return a.col < b.col; });
        for (auto it = first; it != last; ++it) {
            if (m.columns_.size() > m.offsets_[r] && m.columns_.back() == it->col) {
                m.values_.back() += it->value;
            } else {
                m.columns_.push_back(it->col);
                m.values_.push_back(it->value);
            }
        }
        m.offsets_[r + 1] = m.columns_.size();
    }
    return m;
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
    std::vector<Triplet> t;
    t.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        t.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i), 1.0});
    }
    return from_triplets(n, std::move(t));
}

double SparseMatrix::at(std::size_t row, std::size_t col) const {
    auto first = columns_.begin() + static_cast<std::ptrdiff_t>(offsets_[row]);
    auto last = columns_.begin() + static_cast<std::ptrdiff_t>(offsets_[row + 1]);
    auto it = std::lower_bound(first, last, static_cast<std::uint32_t>(col));
    if (it == last || *it != col) return 0.0;
    return values_[static_cast<std::size_t>(it - columns_.begin())];
}

std::vector<double> SparseMatrix::diagonal() const {
    std::vector<double> d(n_);
    for (std::size_t i = 0; i < n_; ++i) d[i] = at(i, i);
    return d;
}

void SparseMatrix::set_identity_rows(std::span<const std::uint8_t> mask) {
    std::vector<std::size_t> offsets(n_ + 1, 0);
    std::vector<std::uint32_t> columns;
    std::vector<double> values;
    columns.reserve(columns_.size());
    values.reserve(values_.size());
    for (std::size_t r = 0; r < n_; ++r) {
        if (mask[r]) {
            columns.push_back(static_cast<std::uint32_t>(r));
            values.push_back(1.0);
        } else {
            for (std::size_t k = offsets_[r]; k < offsets_[r + 1]; ++k) {
                columns.push_back(columns_[k]);
                values.push_back(values_[k]);
            }
        }
        offsets[r + 1] = columns.size();
    }
    offsets_ = std::move(offsets);
    columns_ = std::move(columns);
    values_ = std::move(values);
}

SparseMatrix SparseMatrix::add_scaled(double alpha, const SparseMatrix& other) const {
    if (other.n_ != n_) throw ConfigError("matrix dimensions differ");
    SparseMatrix m;
    m.n_ = n_;
    m.offsets_.assign(n_ + 1, 0);
    for (std::size_t r = 0; r < n_; ++r) {
        std::size_t i = offsets_[r], j = other.offsets_[r];
        const std::size_t ie = offsets_[r + 1], je = other.offsets_[r + 1];
        while (i < ie || j < je) {
            if (j == je || (i < ie && columns_[i] < other.columns_[j])) {
                m.columns_.push_back(columns_[i]);
                m.values_.push_back(values_[i++]);
            } else if (i == ie || other.columns_[j] < columns_[i]) {
                m.columns_.push_back(other.columns_[j]);
                m.values_.push_back(alpha * other.values_[j++]);
            } else {
                m.columns_.push_back(columns_[i]);
                m.values_.push_back(values_[i++] + alpha * other.values_[j++]);
            }
        }
        m.offsets_[r + 1] = m.columns_.size();
    }
    return m;
}

SparseMatrix SparseMatrix::scaled(double alpha) const {
    SparseMatrix m = *this;
    for (double& v : m.values_) v *= alpha;
    return m;
}

void spmv(const SparseMatrix& a, std::span<const double> x, std::span<double> y) {
    const auto off = a.row_offsets();
    const auto col = a.column_indices();
    const auto val = a.values();
    for (std::size_t r = 0; r < a.size(); ++r) {
        double s = 0.0;
        for (std::size_t k = off[r]; k < off[r + 1]; ++k) s += val[k] * x[col[k]];
        y[r] = s;
    }
}

std::vector<double> spmv(const SparseMatrix& a, std::span<const double> x) {
    if (x.size() != a.size()) throw ConfigError("spmv dimension mismatch");
    std::vector<double> y(a.size());
    spmv(a, x, y);
    return y;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

SolveReport solve(const SparseMatrix& a, std::span<const double> b, std::span<double> x,
                  const SolveOptions& options) {
    const std::size_t n = a.size();
    if (b.size() != n || x.size() != n) throw ConfigError("solve dimension mismatch");
    const std::size_t max_iter = options.max_iter ? options.max_iter : 10 * n;
    const double tol = options.tolerance;

    SolveReport report;
    const double bnorm = norm2(b);
    if (bnorm == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        report.converged = true;
        return report;
    }

    std::vector<double> inv_diag = a.diagonal();
    for (double& d : inv_diag) d = d != 0.0 ? 1.0 / d : 1.0;

    std::vector<double> r(n), rhat(n), p(n), v(n), y(n), s(n), z(n), t(n);
    auto true_residual = [&] {
        spmv(a, x, r);
        for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
        return norm2(r) / bnorm;
    };

    report.relative_residual = true_residual();
    int restarts = 0;
    while (report.relative_residual > tol && report.iterations < max_iter) {
        // (Re)start the recurrence from the current iterate.
        rhat = r;
        std::fill(p.begin(), p.end(), 0.0);
        std::fill(v.begin(), v.end(), 0.0);
        double rho = 1.0, alpha = 1.0, omega = 1.0;
        bool breakdown = false;
        while (report.iterations < max_iter) {
            ++report.iterations;
            const double rho_new = dot(rhat, r);
            if (rho_new == 0.0 || !std::isfinite(rho_new)) {
                breakdown = true;
                break;
            }
            const double beta = (rho_new / rho) * (alpha / omega);
            rho = rho_new;
            for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
            for (std::size_t i = 0; i < n; ++i) y[i] = inv_diag[i] * p[i];
            spmv(a, y, v);
            const double rv = dot(rhat, v);
            if (rv == 0.0 || !std::isfinite(rv)) {
                breakdown = true;
                break;
            }
            alpha = rho / rv;
            for (std::size_t i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
            if (norm2(s) / bnorm <= tol) {
                for (std::size_t i = 0; i < n; ++i) x[i] += alpha * y[i];
                break;
            }
            for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * s[i];
            spmv(a, z, t);
            const double tt = dot(t, t);
            omega = tt > 0.0 ? dot(t, s) / tt : 0.0;
            for (std::size_t i = 0; i < n; ++i) x[i] += alpha * y[i] + omega * z[i];
            for (std::size_t i = 0; i < n; ++i) r[i] = s[i] - omega * t[i];
            if (omega == 0.0 || !std::isfinite(omega)) {
                breakdown = true;
                break;
            }
            if (norm2(r) / bnorm <= tol) break;
        }
        const double previous = report.relative_residual;
        report.relative_residual = true_residual();
        if (!std::isfinite(report.relative_residual)) break;
        if (breakdown || report.relative_residual >= previous) {
            if (++restarts > 5) break;
        }
    }
    report.converged = report.relative_residual <= tol;
    return report;
}

}  // namespace exitfem
