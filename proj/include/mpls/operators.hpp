#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <string>
#include <string_view>
#include <vector>

#include "mpls/error.hpp"

namespace mpls {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

enum class OperatorKind { identity, first_difference, second_difference, custom };

inline std::string_view to_string(OperatorKind kind)
{
    switch (kind) {
        case OperatorKind::identity: return "identity";
        case OperatorKind::first_difference: return "first_difference";
        case OperatorKind::second_difference: return "second_difference";
        case OperatorKind::custom: return "custom";
    }
    return "unknown";
}

inline OperatorKind operator_kind_from_string(std::string_view name)
{
    if (name == "identity") return OperatorKind::identity;
    if (name == "first_difference") return OperatorKind::first_difference;
    if (name == "second_difference") return OperatorKind::second_difference;
    if (name == "custom") return OperatorKind::custom;
    throw ValidationError("unknown operator kind '" + std::string(name) + "'");
}

/// Structured linear map L (N x p) applied to the coefficient vector inside a
/// penalty term. Stored explicitly as a sparse matrix so that it can be used
/// as a block of an augmented design.
class LinearOperator {
public:
    LinearOperator() = default;

    OperatorKind kind() const { return kind_; }
    Eigen::Index rows() const { return matrix_.rows(); }
    Eigen::Index cols() const { return matrix_.cols(); }
    const SparseMatrix& matrix() const { return matrix_; }
    const Eigen::SparseMatrix<double, Eigen::RowMajor>& rowwise() const { return rowwise_; }

    static LinearOperator identity(Eigen::Index p)
    {
        detail::require(p >= 1, "identity operator needs p >= 1");
        SparseMatrix m(p, p);
        m.setIdentity();
        return LinearOperator(OperatorKind::identity, std::move(m));
    }

    /// Rows (..., -1 at i, +1 at i+1, ...), no wraparound: (p-1) x p.
    static LinearOperator first_difference(Eigen::Index p)
    {
        detail::require(p >= 2, "first_difference operator needs p >= 2");
        std::vector<Eigen::Triplet<double>> t;
        t.reserve(static_cast<std::size_t>(2 * (p - 1)));
        for (Eigen::Index i = 0; i + 1 < p; ++i) {
            t.emplace_back(i, i, -1.0);
            t.emplace_back(i, i + 1, 1.0);
        }
        SparseMatrix m(p - 1, p);
        m.setFromTriplets(t.begin(), t.end());
        return LinearOperator(OperatorKind::first_difference, std::move(m));
    }

    /// Rows (..., +1, -2, +1, ...), no wraparound: (p-2) x p.
    static LinearOperator second_difference(Eigen::Index p)
    {
        detail::require(p >= 3, "second_difference operator needs p >= 3");
        std::vector<Eigen::Triplet<double>> t;
        t.reserve(static_cast<std::size_t>(3 * (p - 2)));
        for (Eigen::Index i = 0; i + 2 < p; ++i) {
            t.emplace_back(i, i, 1.0);
            t.emplace_back(i, i + 1, -2.0);
            t.emplace_back(i, i + 2, 1.0);
        }
        SparseMatrix m(p - 2, p);
        m.setFromTriplets(t.begin(), t.end());
        return LinearOperator(OperatorKind::second_difference, std::move(m));
    }

    static LinearOperator custom(const Matrix& dense)
    {
        detail::require(dense.rows() >= 1 && dense.cols() >= 1, "custom operator must be non-empty");
        detail::require(dense.allFinite(), "custom operator has non-finite entries");
        SparseMatrix m = dense.sparseView(0.0, 0.0);
        return LinearOperator(OperatorKind::custom, std::move(m));
    }

    static LinearOperator custom(SparseMatrix sparse)
    {
        detail::require(sparse.rows() >= 1 && sparse.cols() >= 1, "custom operator must be non-empty");
        sparse.makeCompressed();
        return LinearOperator(OperatorKind::custom, std::move(sparse));
    }

private:
    LinearOperator(OperatorKind kind, SparseMatrix m) : kind_(kind), matrix_(std::move(m))
    {
        matrix_.makeCompressed();
        rowwise_ = matrix_;
    }

    OperatorKind kind_ = OperatorKind::identity;
    SparseMatrix matrix_;
    Eigen::SparseMatrix<double, Eigen::RowMajor> rowwise_;
};

/// Builds one of the stencil operators for a coefficient vector of length p.
inline LinearOperator make_operator(OperatorKind kind, Eigen::Index p)
{
    switch (kind) {
        case OperatorKind::identity: return LinearOperator::identity(p);
        case OperatorKind::first_difference: return LinearOperator::first_difference(p);
        case OperatorKind::second_difference: return LinearOperator::second_difference(p);
        case OperatorKind::custom: break;
    }
    throw ValidationError("custom operators must be built from an explicit matrix");
}

inline Vector apply(const LinearOperator& op, const Vector& beta)
{
    detail::require(beta.size() == op.cols(), "operator/vector dimension mismatch: operator has " +
                                                  std::to_string(op.cols()) + " columns, vector has " +
                                                  std::to_string(beta.size()) + " entries");
    return op.matrix() * beta;
}

/// L^T diag(d) L as a dense p x p matrix.
inline Matrix weighted_gram(const LinearOperator& op, const Vector& d)
{
    detail::require(d.size() == op.rows(), "weighted_gram: weight length " + std::to_string(d.size()) +
                                               " does not match operator rows " + std::to_string(op.rows()));
    detail::require(d.allFinite(), "weighted_gram: non-finite weights");
    const SparseMatrix& L = op.matrix();
    SparseMatrix scaled = d.asDiagonal() * L;
    SparseMatrix gram = SparseMatrix(L.transpose()) * scaled;
    return Matrix(gram);
}

/// Accumulates scale * L^T diag(d) L into a dense matrix without forming the
/// intermediate dense product.
inline void add_weighted_gram(const LinearOperator& op, const Vector& d, double scale, Matrix& out)
{
    // Row-wise outer products; each operator row touches only a few columns.
    const auto& rows = op.rowwise();
    for (Eigen::Index i = 0; i < rows.outerSize(); ++i) {
        const double w = scale * d[i];
        if (w == 0.0) continue;
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator a(rows, i); a; ++a) {
            for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator b(rows, i); b; ++b) {
                out(a.col(), b.col()) += w * a.value() * b.value();
            }
        }
    }
}

}  // namespace mpls
