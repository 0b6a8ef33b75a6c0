#pragma once

#include <array>
#include <cmath>

#include "borisfb/error.hpp"
#include "borisfb/vec3.hpp"

namespace borisfb {

/// Dense 3x3 matrix, row-major. Only used where a genuine linear solve is
/// unavoidable; everywhere else skew actions go through cross products.
struct Mat3 {
    std::array<double, 9> a{};  // row-major

    double& operator()(int i, int j) { return a[3 * i + j]; }
    double operator()(int i, int j) const { return a[3 * i + j]; }

    static Mat3 identity() {
        Mat3 m;
        m(0, 0) = m(1, 1) = m(2, 2) = 1.0;
        return m;
    }

    /// Skew matrix of B: hat(B) v == B x v.
    static Mat3 hat(const Vec3& B) {
        Mat3 m;
        m(0, 1) = -B.z; m(0, 2) =  B.y;
        m(1, 0) =  B.z; m(1, 2) = -B.x;
        m(2, 0) = -B.y; m(2, 1) =  B.x;
        return m;
    }

    Mat3 operator+(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 9; ++i) r.a[i] = a[i] + o.a[i];
        return r;
    }
    Mat3 operator-(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 9; ++i) r.a[i] = a[i] - o.a[i];
        return r;
    }
    Mat3 operator*(double s) const {
        Mat3 r;
        for (int i = 0; i < 9; ++i) r.a[i] = a[i] * s;
        return r;
    }
    Mat3 operator*(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                for (int k = 0; k < 3; ++k) r(i, j) += (*this)(i, k) * o(k, j);
        return r;
    }
    Vec3 operator*(const Vec3& v) const {
        return {a[0] * v.x + a[1] * v.y + a[2] * v.z,
                a[3] * v.x + a[4] * v.y + a[5] * v.z,
                a[6] * v.x + a[7] * v.y + a[8] * v.z};
    }

    double max_row_norm() const {
        double m = 0.0;
        for (int i = 0; i < 3; ++i) {
            double r = std::fabs(a[3 * i]) + std::fabs(a[3 * i + 1]) + std::fabs(a[3 * i + 2]);
            m = std::max(m, r);
        }
        return m;
    }
};

/// Solves A s = rhs by Gaussian elimination with partial pivoting.
/// Throws SingularMatrix when |det A| <= 1e-13 * (max row norm)^3.
inline Vec3 solve3(const Mat3& A, const Vec3& rhs) {
    double m[3][4] = {{A(0, 0), A(0, 1), A(0, 2), rhs.x},
                      {A(1, 0), A(1, 1), A(1, 2), rhs.y},
                      {A(2, 0), A(2, 1), A(2, 2), rhs.z}};
    const double scale = A.max_row_norm();
    const double deg_tol = 1e-13 * scale * scale * scale;

    double det = 1.0;
    for (int col = 0; col < 3; ++col) {
        int piv = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::fabs(m[r][col]) > std::fabs(m[piv][col])) piv = r;
        if (piv != col) {
            for (int c = col; c < 4; ++c) std::swap(m[piv][c], m[col][c]);
            det = -det;
        }
        det *= m[col][col];
        if (m[col][col] == 0.0) break;
        for (int r = col + 1; r < 3; ++r) {
            const double f = m[r][col] / m[col][col];
            for (int c = col; c < 4; ++c) m[r][c] -= f * m[col][c];
        }
    }
    if (!(std::fabs(det) > deg_tol))
        raise(errc::singular_matrix, "3x3 solve: |det| <= deg_tol");

    Vec3 s;
    for (int i = 2; i >= 0; --i) {
        double acc = m[i][3];
        for (int j = i + 1; j < 3; ++j) acc -= m[i][j] * s[j];
        s[i] = acc / m[i][i];
    }
    return s;
}

}  // namespace borisfb
