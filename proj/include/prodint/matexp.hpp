#pragma once

#include <cmath>
#include <cstdint>

#include <Eigen/Dense>

#include "prodint/errors.hpp"

// Dense matrix exponential and principal logarithm for small real matrices.
//
// exp: scaling and squaring with the degree-13 Pade approximant
//   (Moler & Van Loan, "Nineteen Dubious Ways...", SIAM Review 45 (2003);
//   coefficients as in Higham 2005).
// log: inverse scaling and squaring -- Denman-Beavers square roots until the
//   argument is close to the identity, then the Gregory series
//   log(A) = 2 * atanh((A-I)(A+I)^{-1}).
// The log is restricted to ||A - I||_op < 1, which keeps the spectrum inside
// the principal branch.

namespace prodint {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Operator norm induced by the max vector norm (maximum absolute row sum).
inline double op_norm(const Matrix& a) {
    return a.cwiseAbs().rowwise().sum().maxCoeff();
}

/// Entrywise maximum absolute value.
inline double max_norm(const Matrix& a) {
    return a.cwiseAbs().maxCoeff();
}

/// Frobenius norm (used for reporting).
inline double fro_norm(const Matrix& a) {
    return a.norm();
}

inline bool all_finite(const Matrix& a) {
    return a.allFinite();
}

/// exp(A) for a square real matrix.
inline Matrix dense_exp(const Matrix& a) {
    if (!all_finite(a)) {
        throw InvalidInputError("dense_exp: non-finite entries");
    }
    const auto n = a.rows();
    const Matrix id = Matrix::Identity(n, n);

    // Degree-13 Pade coefficients.
    static const double b[14] = {
        64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
        1187353796428800.0,  129060195264000.0,   10559470521600.0,
        670442572800.0,      33522128640.0,       1323241920.0,
        40840800.0,          960960.0,            16380.0,
        182.0,               1.0};

    // theta_13 for double precision; scale so ||A/2^s|| <= theta.
    const double theta13 = 5.371920351148152;
    const double norm = op_norm(a);
    int squarings = 0;
    Matrix as = a;
    if (norm > theta13) {
        squarings = static_cast<int>(std::ceil(std::log2(norm / theta13)));
        as /= std::ldexp(1.0, squarings);
    }

    const Matrix a2 = as * as;
    const Matrix a4 = a2 * a2;
    const Matrix a6 = a2 * a4;
    const Matrix u = as * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) +
                           b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id);
    const Matrix v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) +
                     b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;

    Matrix r = (v - u).partialPivLu().solve(v + u);
    for (int i = 0; i < squarings; ++i) {
        r = r * r;
    }
    return r;
}

/// Principal square root of a matrix near the identity (Denman-Beavers).
inline Matrix dense_sqrt_near_identity(const Matrix& a) {
    const auto n = a.rows();
    Matrix y = a;
    Matrix z = Matrix::Identity(n, n);
    for (int it = 0; it < 60; ++it) {
        const Matrix yn = 0.5 * (y + z.partialPivLu().inverse());
        const Matrix zn = 0.5 * (z + y.partialPivLu().inverse());
        const double change = max_norm(yn - y);
        y = yn;
        z = zn;
        if (change < 1e-15 * (1.0 + max_norm(y))) {
            break;
        }
    }
    return y;
}

/// Principal log of A with ||A - I||_op < 1.
inline Matrix dense_log(const Matrix& a) {
    if (!all_finite(a)) {
        throw InvalidInputError("dense_log: non-finite entries");
    }
    const auto n = a.rows();
    const Matrix id = Matrix::Identity(n, n);
    if (op_norm(a - id) >= 1.0) {
        throw OutOfDomainError("dense_log: ||g - I|| >= 1, subdivide first");
    }

    // Square-root until close enough to I for the Gregory series.
    Matrix x = a;
    int roots = 0;
    while (op_norm(x - id) > 0.25 && roots < 40) {
        x = dense_sqrt_near_identity(x);
        ++roots;
    }

    // log(X) = 2 * atanh(Z), Z = (X-I)(X+I)^{-1}; ||Z|| <= 1/7 here, so the
    // odd series converges with ratio ~ 1/49.
    const Matrix z = (x + id).partialPivLu().solve(x - id);
    const Matrix z2 = z * z;
    Matrix term = z;
    Matrix sum = z;
    for (int k = 1; k < 24; ++k) {
        term = term * z2;
        const Matrix add = term / static_cast<double>(2 * k + 1);
        sum += add;
        if (max_norm(add) < 1e-18) {
            break;
        }
    }
    return std::ldexp(2.0, roots) * sum;
}

} // namespace prodint
