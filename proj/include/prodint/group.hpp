#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "prodint/errors.hpp"
#include "prodint/matexp.hpp"

// Concrete matrix Lie groups and their algebras: descriptors carrying an
// explicit algebra basis, typed group/algebra elements, and the primitive
// maps exp, log, Ad, bracket, plus a per-kind membership defect.

namespace prodint {

enum class GroupKind {
    GeneralLinear,     // GL(d): invertible d x d
    SpecialLinear,     // SL(d): det = 1
    SpecialOrthogonal, // SO(d): g^T g = I
    SpecialEuclidean2, // SE(2) as 3x3 homogeneous matrices
    Heisenberg3,       // unipotent upper triangular 3x3
    ScalarAdditive,    // (R,+) realized as positive 1x1 matrices under *
};

class GroupDescriptor;
using DescriptorPtr = std::shared_ptr<const GroupDescriptor>;

/// Which concrete matrix group: dimension, algebra basis, membership rule.
/// Immutable after construction; shared by elements via DescriptorPtr.
class GroupDescriptor {
public:
    GroupDescriptor(GroupKind kind, int matrix_dim,
                    std::vector<Matrix> basis, std::string name)
        : kind_(kind), dim_(matrix_dim), basis_(std::move(basis)),
          name_(std::move(name)) {
        const int d = dim_;
        const int m = static_cast<int>(basis_.size());
        if (m == 0) {
            throw InvalidInputError("descriptor: empty basis");
        }
        basis_cols_.resize(d * d, m);
        for (int j = 0; j < m; ++j) {
            if (basis_[j].rows() != d || basis_[j].cols() != d) {
                throw InvalidInputError("descriptor: basis matrix shape mismatch");
            }
            basis_cols_.col(j) = Eigen::Map<const Vector>(basis_[j].data(), d * d);
        }
        qr_.compute(basis_cols_);
        if (qr_.rank() < m) {
            throw InvalidInputError("descriptor: basis not linearly independent");
        }
        // Bracket closure: [b_i, b_j] must stay in span(basis).
        for (int i = 0; i < m; ++i) {
            for (int j = i + 1; j < m; ++j) {
                const Matrix br = basis_[i] * basis_[j] - basis_[j] * basis_[i];
                if (projection_defect(br) > 1e-10) {
                    throw InvalidInputError("descriptor: bracket leaves basis span");
                }
            }
        }
    }

    GroupKind kind() const { return kind_; }
    int matrix_dim() const { return dim_; }
    int algebra_dim() const { return static_cast<int>(basis_.size()); }
    const std::vector<Matrix>& basis() const { return basis_; }
    const std::string& name() const { return name_; }

    /// Least-squares coordinates of a matrix in the algebra basis.
    Vector coordinates(const Matrix& x) const {
        return qr_.solve(Eigen::Map<const Vector>(x.data(), dim_ * dim_));
    }

    Matrix from_coordinates(const Vector& c) const {
        Matrix x = Matrix::Zero(dim_, dim_);
        for (int j = 0; j < algebra_dim(); ++j) {
            x += c[j] * basis_[j];
        }
        return x;
    }

    /// Max-norm distance of x to span(basis).
    double projection_defect(const Matrix& x) const {
        const Matrix p = from_coordinates(coordinates(x));
        return max_norm(x - p);
    }

    /// Kind-specific deviation from group membership.
    double membership_defect(const Matrix& g) const {
        const Matrix id = Matrix::Identity(dim_, dim_);
        switch (kind_) {
        case GroupKind::SpecialOrthogonal:
            return max_norm(g.transpose() * g - id);
        case GroupKind::SpecialLinear:
            return std::abs(g.determinant() - 1.0);
        case GroupKind::SpecialEuclidean2: {
            const Matrix r = g.block(0, 0, 2, 2);
            const double rot = max_norm(r.transpose() * r - Matrix::Identity(2, 2));
            const double row = std::max({std::abs(g(2, 0)), std::abs(g(2, 1)),
                                         std::abs(g(2, 2) - 1.0)});
            return rot + row;
        }
        case GroupKind::Heisenberg3: {
            double dmax = 0.0;
            for (int i = 0; i < 3; ++i) {
                dmax = std::max(dmax, std::abs(g(i, i) - 1.0));
                for (int j = 0; j < i; ++j) {
                    dmax = std::max(dmax, std::abs(g(i, j)));
                }
            }
            return dmax;
        }
        case GroupKind::GeneralLinear: {
            Eigen::FullPivLU<Matrix> lu(g);
            return lu.isInvertible() ? 0.0
                                     : std::numeric_limits<double>::infinity();
        }
        case GroupKind::ScalarAdditive:
            return 0.0;
        }
        return 0.0;
    }

    // --- standard instances -------------------------------------------------

    static DescriptorPtr general_linear(int d) {
        std::vector<Matrix> basis;
        for (int i = 0; i < d; ++i) {
            for (int j = 0; j < d; ++j) {
                Matrix e = Matrix::Zero(d, d);
                e(i, j) = 1.0;
                basis.push_back(e);
            }
        }
        return std::make_shared<GroupDescriptor>(
            GroupKind::GeneralLinear, d, std::move(basis), "GL" + std::to_string(d));
    }

    static DescriptorPtr special_linear(int d) {
        std::vector<Matrix> basis;
        for (int i = 0; i < d; ++i) {
            for (int j = 0; j < d; ++j) {
                if (i == j) continue;
                Matrix e = Matrix::Zero(d, d);
                e(i, j) = 1.0;
                basis.push_back(e);
            }
        }
        for (int k = 0; k + 1 < d; ++k) {
            Matrix h = Matrix::Zero(d, d);
            h(k, k) = 1.0;
            h(k + 1, k + 1) = -1.0;
            basis.push_back(h);
        }
        return std::make_shared<GroupDescriptor>(
            GroupKind::SpecialLinear, d, std::move(basis), "SL" + std::to_string(d));
    }

    static DescriptorPtr special_orthogonal(int d) {
        std::vector<Matrix> basis;
        for (int i = 0; i < d; ++i) {
            for (int j = i + 1; j < d; ++j) {
                Matrix a = Matrix::Zero(d, d);
                a(i, j) = -1.0;
                a(j, i) = 1.0;
                basis.push_back(a);
            }
        }
        return std::make_shared<GroupDescriptor>(
            GroupKind::SpecialOrthogonal, d, std::move(basis),
            "SO" + std::to_string(d));
    }

    /// SE(2) generators: rotation J, translations P1, P2 (in this order).
    static DescriptorPtr special_euclidean2() {
        Matrix j = Matrix::Zero(3, 3);
        j(0, 1) = -1.0;
        j(1, 0) = 1.0;
        Matrix p1 = Matrix::Zero(3, 3);
        p1(0, 2) = 1.0;
        Matrix p2 = Matrix::Zero(3, 3);
        p2(1, 2) = 1.0;
        return std::make_shared<GroupDescriptor>(
            GroupKind::SpecialEuclidean2, 3, std::vector<Matrix>{j, p1, p2}, "SE2");
    }

    /// Heisenberg generators P = E12, Q = E23, Z = E13; [P,Q] = Z.
    static DescriptorPtr heisenberg() {
        Matrix p = Matrix::Zero(3, 3);
        p(0, 1) = 1.0;
        Matrix q = Matrix::Zero(3, 3);
        q(1, 2) = 1.0;
        Matrix z = Matrix::Zero(3, 3);
        z(0, 2) = 1.0;
        return std::make_shared<GroupDescriptor>(
            GroupKind::Heisenberg3, 3, std::vector<Matrix>{p, q, z}, "HEIS3");
    }

    static DescriptorPtr scalar_additive() {
        Matrix one = Matrix::Ones(1, 1);
        return std::make_shared<GroupDescriptor>(
            GroupKind::ScalarAdditive, 1, std::vector<Matrix>{one}, "SCALAR");
    }

    /// Parse names like "GL2", "SL3", "SO3", "SE2", "HEIS3", "SCALAR".
    static DescriptorPtr from_name(const std::string& name) {
        auto dim_suffix = [&](size_t prefix_len) {
            const int d = std::stoi(name.substr(prefix_len));
            if (d < 1 || d > 6) {
                throw ConfigError("group dimension out of range: " + name);
            }
            return d;
        };
        if (name == "SCALAR") return scalar_additive();
        if (name == "SE2") return special_euclidean2();
        if (name == "HEIS3") return heisenberg();
        if (name.rfind("GL", 0) == 0) return general_linear(dim_suffix(2));
        if (name.rfind("SL", 0) == 0) return special_linear(dim_suffix(2));
        if (name.rfind("SO", 0) == 0) return special_orthogonal(dim_suffix(2));
        throw ConfigError("unknown group name: " + name);
    }

private:
    GroupKind kind_;
    int dim_;
    std::vector<Matrix> basis_;
    std::string name_;
    Eigen::MatrixXd basis_cols_;
    Eigen::ColPivHouseholderQR<Matrix> qr_;
};

inline bool same_group(const DescriptorPtr& a, const DescriptorPtr& b) {
    return a == b || (a && b && a->kind() == b->kind() &&
                      a->matrix_dim() == b->matrix_dim());
}

/// A Lie algebra element: matrix in (or projected onto) span(basis).
struct AlgebraElement {
    DescriptorPtr desc;
    Matrix mat;

    AlgebraElement(DescriptorPtr d, Matrix m) : desc(std::move(d)), mat(std::move(m)) {
        if (!all_finite(mat)) {
            throw InvalidInputError("algebra element: non-finite entries");
        }
    }

    Vector coordinates() const { return desc->coordinates(mat); }
};

inline AlgebraElement algebra_from_coordinates(const DescriptorPtr& desc,
                                               const Vector& c) {
    return AlgebraElement(desc, desc->from_coordinates(c));
}

inline AlgebraElement algebra_zero(const DescriptorPtr& desc) {
    const int d = desc->matrix_dim();
    return AlgebraElement(desc, Matrix::Zero(d, d));
}

/// A group element; membership is monitored, not enforced.
struct GroupElement {
    DescriptorPtr desc;
    Matrix mat;

    GroupElement(DescriptorPtr d, Matrix m) : desc(std::move(d)), mat(std::move(m)) {
        if (!all_finite(mat)) {
            throw InvalidInputError("group element: non-finite entries");
        }
    }

    GroupElement inverse() const {
        Eigen::FullPivLU<Matrix> lu(mat);
        if (!lu.isInvertible()) {
            throw InvalidElementError("group element not invertible");
        }
        return GroupElement(desc, lu.inverse());
    }
};

inline GroupElement group_identity(const DescriptorPtr& desc) {
    return GroupElement(desc, Matrix::Identity(desc->matrix_dim(), desc->matrix_dim()));
}

// --- primitive operations ---------------------------------------------------

inline GroupElement mat_exp(const AlgebraElement& x) {
    return GroupElement(x.desc, dense_exp(x.mat));
}

/// Principal log, projected onto the algebra basis.
/// Requires ||g - I||_op < 1; callers with larger arguments must subdivide.
inline AlgebraElement mat_log(const GroupElement& g, double* defect = nullptr) {
    const Matrix raw = dense_log(g.mat);
    const Vector c = g.desc->coordinates(raw);
    if (defect) {
        *defect = g.desc->projection_defect(raw);
    }
    return algebra_from_coordinates(g.desc, c);
}

/// Ad(g)(x) = g x g^{-1}, projected onto the algebra basis.
inline AlgebraElement adjoint(const GroupElement& g, const AlgebraElement& x,
                              double* defect = nullptr) {
    if (!same_group(g.desc, x.desc)) {
        throw IncompatibleElementsError("adjoint: descriptor mismatch");
    }
    Eigen::FullPivLU<Matrix> lu(g.mat);
    if (!lu.isInvertible()) {
        throw InvalidElementError("adjoint: singular group element");
    }
    const Matrix raw = g.mat * x.mat * lu.inverse();
    if (defect) {
        *defect = x.desc->projection_defect(raw);
    }
    return algebra_from_coordinates(x.desc, x.desc->coordinates(raw));
}

/// [x, y] = xy - yx, projected onto the algebra basis.
inline AlgebraElement bracket(const AlgebraElement& x, const AlgebraElement& y,
                              double* defect = nullptr) {
    if (!same_group(x.desc, y.desc)) {
        throw IncompatibleElementsError("bracket: descriptor mismatch");
    }
    const Matrix raw = x.mat * y.mat - y.mat * x.mat;
    if (defect) {
        *defect = x.desc->projection_defect(raw);
    }
    return algebra_from_coordinates(x.desc, x.desc->coordinates(raw));
}

inline double group_check(const GroupElement& g) {
    return g.desc->membership_defect(g.mat);
}

} // namespace prodint
