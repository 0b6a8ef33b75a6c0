#include <doctest.h>

#include <random>

#include "borisfb/error.hpp"
#include "borisfb/mat3.hpp"
#include "borisfb/vec3.hpp"
#include "test_helpers.hpp"

using namespace borisfb;
using testutil::rand_vec;

namespace {
void check_close(const Vec3& got, const Vec3& want, double tol) {
    CAPTURE(got.x);
    CAPTURE(got.y);
    CAPTURE(got.z);
    CHECK((got - want).norm() <= tol);
}
}  // namespace

TEST_CASE("cross product on canonical inputs") {
    check_close(cross({1, 0, 0}, {0, 1, 0}), {0, 0, 1}, 0.0);
    const Vec3 a{0.3, -1.2, 2.5};
    check_close(cross(a, a), {0, 0, 0}, 0.0);
    check_close(cross({1, 0, 0}, {0, 0, 2}), {0, -2, 0}, 0.0);
}

TEST_CASE("cross product is bilinear and antisymmetric") {
    std::mt19937_64 rng(1234);
    for (int i = 0; i < 200; ++i) {
        const Vec3 a = rand_vec(rng, 3.0), b = rand_vec(rng, 3.0), c = rand_vec(rng, 3.0);
        const double s = 1.7, t = -0.4;
        check_close(cross(a * s + b * t, c), cross(a, c) * s + cross(b, c) * t,
                    1e-13 * (a.norm() + b.norm()) * c.norm());
        check_close(cross(a, b), -cross(b, a), 0.0);
        const double ab = a.norm() * b.norm();
        CHECK(std::fabs(dot(cross(a, b), a)) <= 1e-14 * ab * a.norm());
        CHECK(std::fabs(dot(cross(a, b), b)) <= 1e-14 * ab * b.norm());
    }
}

TEST_CASE("hat_apply matches B x v and its kernel") {
    check_close(hat_apply({0, 0, 1}, {1, 0, 0}), {0, 1, 0}, 0.0);
    const Vec3 B{0.4, -2.0, 1.1};
    check_close(hat_apply(B, B), {0, 0, 0}, 0.0);
}

TEST_CASE("triple hat application satisfies hat^3 = -|B|^2 hat") {
    std::mt19937_64 rng(99);
    for (int i = 0; i < 200; ++i) {
        const Vec3 B = rand_vec(rng, 4.0), v = rand_vec(rng, 2.0);
        const Vec3 lhs = hat_apply(B, hat_apply(B, hat_apply(B, v)));
        const Vec3 rhs = -B.norm2() * hat_apply(B, v);
        check_close(lhs, rhs, 1e-12 * rhs.norm());
    }
}

TEST_CASE("solve3 on diagonal systems") {
    check_close(solve3(Mat3::identity(), {1, 2, 3}), {1, 2, 3}, 0.0);
    Mat3 d;
    d(0, 0) = 2;
    d(1, 1) = 4;
    d(2, 2) = 8;
    check_close(solve3(d, {2, 4, 8}), {1, 1, 1}, 0.0);
}

TEST_CASE("solve3 recovers a constructed solution with bounded residual") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 200; ++i) {
        const Vec3 a = rand_vec(rng, 2.0);
        const Mat3 A = Mat3::hat(a) + Mat3::identity() * (1.5 + std::fabs(a.x));
        const Vec3 want{1, -1, 2};
        const Vec3 rhs = A * want;
        const Vec3 got = solve3(A, rhs);
        check_close(got, want, 1e-12 * want.norm());
        CHECK((A * got - rhs).norm() <= 1e-12 * (A.max_row_norm() * got.norm() + rhs.norm()));
    }
}

TEST_CASE("solve3 rejects singular matrices") {
    Mat3 s;  // two identical rows
    s(0, 0) = 1;
    s(0, 1) = 2;
    s(0, 2) = 3;
    s(1, 0) = 1;
    s(1, 1) = 2;
    s(1, 2) = 3;
    s(2, 2) = 1;
    CHECK_THROWS_AS(solve3(s, {1, 1, 1}), Error);
    try {
        solve3(s, {1, 1, 1});
    } catch (const Error& e) {
        CHECK(e.code() == errc::singular_matrix);
    }
}
