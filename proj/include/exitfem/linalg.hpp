#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace exitfem {

struct Triplet {
    std::uint32_t row;
    std::uint32_t col;
    double value;
};

/// Square compressed-sparse-row matrix. Column indices are sorted and unique
/// within each row.
class SparseMatrix {
public:
    SparseMatrix() = default;

    /// Sums duplicate (row, col) contributions. Entries are combined in the
    /// order they appear in `triplets`, so the result is deterministic.
    static SparseMatrix from_triplets(std::size_t n, std::vector<Triplet> triplets);
    static SparseMatrix identity(std::size_t n);

    std::size_t size() const noexcept { return n_; }
    std::size_t nonzeros() const noexcept { return values_.size(); }

    std::span<const std::size_t> row_offsets() const noexcept { return offsets_; }
    std::span<const std::uint32_t> column_indices() const noexcept { return columns_; }
    std::span<const double> values() const noexcept { return values_; }

    /// Stored value at (row, col), 0 if the entry is not stored.
    double at(std::size_t row, std::size_t col) const;
    std::vector<double> diagonal() const;

    /// Replaces the listed rows by identity rows (the structure keeps only the diagonal).
    void set_identity_rows(std::span<const std::uint8_t> mask);

    /// this + alpha * other (same dimension).
    SparseMatrix add_scaled(double alpha, const SparseMatrix& other) const;
    SparseMatrix scaled(double alpha) const;

private:
    std::size_t n_ = 0;
    std::vector<std::size_t> offsets_{0};
    std::vector<std::uint32_t> columns_;
    std::vector<double> values_;
};

/// y = A x, summing each row left to right.
std::vector<double> spmv(const SparseMatrix& a, std::span<const double> x);
void spmv(const SparseMatrix& a, std::span<const double> x, std::span<double> y);

struct SolveOptions {
    double tolerance = 1e-10;   ///< on ||b - A x|| / ||b||
    std::size_t max_iter = 0;   ///< 0 means 10 * n
};

struct SolveReport {
    std::size_t iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
};

/// Jacobi-preconditioned BiCGStab. `x` holds the initial guess on entry and
/// the solution on exit. Breakdown or exhaustion is reported through
/// `converged == false`; convergence is confirmed with the true residual.
SolveReport solve(const SparseMatrix& a, std::span<const double> b, std::span<double> x,
                  const SolveOptions& options = {});

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

}  // namespace exitfem
