#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "labeldense/clustering.hpp"
#include "labeldense/types.hpp"
#include "labeldense/rng.hpp"
#include "oracles.hpp"

using namespace labeldense;

namespace {

Mat random_points(Rng& rng, int n, int d, double lo = -5.0, double hi = 5.0) {
    Mat m(n, d);
    for (auto& v : m.d) v = rng.uniform(lo, hi);
    return m;
}

bool non_increasing(const std::vector<double>& t) {
    for (std::size_t i = 1; i < t.size(); ++i)
        if (t[i] > t[i - 1] + 1e-9) return false;
    return true;
}

}  // namespace

TEST_CASE("kmeans 1-D canonical instance {0,1,9,10}") {
    Mat pts(4, 1);
    pts(0, 0) = 0.0;
    pts(1, 0) = 1.0;
    pts(2, 0) = 9.0;
    pts(3, 0) = 10.0;
    const double opt = oracle::exhaustive_kmeans_inertia(pts, 2);
    CHECK(opt == doctest::Approx(1.0));

    const KmeansResult km = kmeans(pts, 2, 3);
    CHECK(km.inertia_trace.back() == doctest::Approx(1.0));
    std::vector<double> cs{km.centroids(0, 0), km.centroids(1, 0)};
    std::sort(cs.begin(), cs.end());
    CHECK(cs[0] == doctest::Approx(0.5));
    CHECK(cs[1] == doctest::Approx(9.5));
}

TEST_CASE("kmeans with K distinct points reaches zero inertia") {
    Rng rng(8);
    Mat pts = random_points(rng, 5, 3);
    const KmeansResult km = kmeans(pts, 5, 17);
    CHECK(km.inertia_trace.back() == doctest::Approx(0.0));
    // centroids are the points, up to order
    for (std::size_t i = 0; i < pts.rows; ++i) {
        bool found = false;
        for (std::size_t c = 0; c < 5; ++c) {
            double d2 = 0.0;
            for (std::size_t j = 0; j < 3; ++j) {
                const double diff = pts(i, j) - km.centroids(c, j);
                d2 += diff * diff;
            }
            if (d2 < 1e-18) found = true;
        }
        CHECK(found);
    }
}

TEST_CASE("kmeans inertia trace is non-increasing") {
    Rng rng(21);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 10 + static_cast<int>(rng.uniform_int(30));
        const int d = 1 + static_cast<int>(rng.uniform_int(4));
        const int k = 2 + static_cast<int>(rng.uniform_int(4));
        Mat pts = random_points(rng, n, d);
        const KmeansResult km = kmeans(pts, k, 1000 + trial);
        CHECK(non_increasing(km.inertia_trace));
    }
}

TEST_CASE("kmeans hits the exhaustive optimum on most small instances") {
    // clusterable instances: k gaussian blobs, n ≤ 10 points, K ≤ 4
    int hits = 0;
    for (int s = 0; s < 10; ++s) {
        Rng rng(5000 + s);
        const int k = 2 + static_cast<int>(rng.uniform_int(3));
        const int n = 6 + static_cast<int>(rng.uniform_int(5));
        Mat centers = random_points(rng, k, 2);
        Mat pts(n, 2);
        for (int i = 0; i < n; ++i) {
            const int g = static_cast<int>(rng.uniform_int(k));
            pts(i, 0) = centers(g, 0) + rng.normal(0, 0.6);
            pts(i, 1) = centers(g, 1) + rng.normal(0, 0.6);
        }
        const KmeansResult km = kmeans(pts, k, 9000 + s);
        const double opt = oracle::exhaustive_kmeans_inertia(pts, k);
        CHECK(non_increasing(km.inertia_trace));
        if (km.inertia_trace.back() <= opt + 1e-9) ++hits;
    }
    CHECK(hits >= 8);
}

TEST_CASE("kmeans determinism and preconditions") {
    Rng rng(77);
    Mat pts = random_points(rng, 25, 3);
    const KmeansResult a = kmeans(pts, 4, 42);
    const KmeansResult b = kmeans(pts, 4, 42);
    CHECK(a.centroids.d == b.centroids.d);  // bit-for-bit
    CHECK(a.labels == b.labels);

    CHECK_THROWS_AS(kmeans(random_points(rng, 3, 2), 4, 0), DataError);
}

TEST_CASE("compute_primitives recovers separated clusters") {
    // identity encoder: 2→2→2 with identity activation and unit weights
    EncoderParams enc;
    enc.activation = Activation::Identity;
    enc.w1 = Mat(2, 2);
    enc.w1(0, 0) = enc.w1(1, 1) = 1.0;
    enc.b1 = Mat(1, 2);
    enc.w2 = Mat(2, 2);
    enc.w2(0, 0) = enc.w2(1, 1) = 1.0;
    enc.b2 = Mat(1, 2);

    // three angularly separated blobs (normalization maps to the circle)
    Rng rng(3);
    const double angles[3] = {0.1, 1.6, 3.3};
    Mat sv(30, 2);
    std::vector<int> truth(30);
    for (int i = 0; i < 30; ++i) {
        const int g = i / 10;
        const double a = angles[g] + rng.uniform(-0.05, 0.05);
        const double r = rng.uniform(0.5, 2.0);
        sv(i, 0) = r * std::cos(a);
        sv(i, 1) = r * std::sin(a);
        truth[i] = g;
    }
    PrimitiveSet prims = compute_primitives(enc, sv, 3, false, 11);
    REQUIRE(prims.count() == 3);
    const AffinityMatrix aff = assign_affinity(sv, prims);
    // same ground group ⇒ same primitive, different ⇒ different
    for (int i = 0; i < 30; ++i)
        for (int j = 0; j < 30; ++j)
            CHECK((truth[i] == truth[j]) == (aff[i] == aff[j]));
}

TEST_CASE("compute_primitives warmup keeps output dimensionality") {
    EncoderParams enc = init_encoder({4, 6, 3}, 123);
    Rng rng(9);
    Mat sv(20, 4);
    for (auto& v : sv.d) v = rng.uniform(0.0, 1.0);
    PrimitiveSet plain = compute_primitives(enc, sv, 5, false, 7);
    PrimitiveSet warm = compute_primitives(enc, sv, 5, true, 7);
    CHECK(plain.centroids.cols == 3);
    CHECK(warm.centroids.cols == 3);
    // warmup changes the clustering input, so centroids may differ, but
    // norms stay unit
    for (int c = 0; c < 5; ++c) {
        CHECK(l2_norm(plain.centroids.row(c), 3) == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(l2_norm(warm.centroids.row(c), 3) == doctest::Approx(1.0).epsilon(1e-9));
    }

    CHECK_THROWS_AS(compute_primitives(enc, sv, 21, false, 7), DataError);
}

TEST_CASE("assign_affinity nearest and tie rules") {
    PrimitiveSet prims;
    prims.centroids = Mat(6, 2);
    for (int c = 0; c < 6; ++c) {
        const double a = 0.7 * c;
        prims.centroids(c, 0) = std::cos(a);
        prims.centroids(c, 1) = std::sin(a);
    }
    // identical centroids at 2 and 5 → equidistant point goes to 2
    std::copy_n(prims.centroids.row(2), 2, prims.centroids.row(5));

    Mat f(7, 2);
    for (int c = 0; c < 6; ++c) std::copy_n(prims.centroids.row(c), 2, f.row(c));
    f(6, 0) = prims.centroids(2, 0) * 3.0;  // scaled copy, same direction
    f(6, 1) = prims.centroids(2, 1) * 3.0;

    const AffinityMatrix aff = assign_affinity(f, prims);
    for (int c = 0; c < 5; ++c) CHECK(aff[c] == c);
    CHECK(aff[5] == 2);  // tie with identical centroid resolves low
    CHECK(aff[6] == 2);
    for (int id : aff) {
        CHECK(id >= 0);
        CHECK(id < 6);
    }
}
