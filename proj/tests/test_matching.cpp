#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "earsift/errors.hpp"
#include "earsift/matching.hpp"
#include "earsift/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

using namespace earsift;

namespace {

Keypoint kp_with_descriptor(const std::vector<double>& sparse_entries) {
    // descriptor from (index, value) given as flat pairs; normalized
    Keypoint kp;
    kp.descriptor.fill(0.0);
    for (std::size_t i = 0; i + 1 < sparse_entries.size(); i += 2)
        kp.descriptor[static_cast<int>(sparse_entries[i])] = sparse_entries[i + 1];
    double norm = 0.0;
    for (double v : kp.descriptor)
        norm += v * v;
    norm = std::sqrt(norm);
    for (double& v : kp.descriptor)
        v /= norm;
    return kp;
}

Template template_of(std::vector<Keypoint> kps, const std::string& id = "t") {
    Template t;
    t.subject_id = id;
    t.keypoints = std::move(kps);
    t.region_provenance.assign(t.keypoints.size(), 0);
    t.k_count = 1;
    return t;
}

// random near-unit descriptors; distinct enough to avoid ratio-test ties
Template random_template(Rng& rng, int n, const std::string& id = "r") {
    std::vector<Keypoint> kps;
    for (int i = 0; i < n; ++i) {
        Keypoint kp;
        double norm = 0.0;
        for (auto& v : kp.descriptor) {
            v = std::abs(rng.next_gaussian());
            norm += v * v;
        }
        norm = std::sqrt(norm);
        for (auto& v : kp.descriptor)
            v /= norm;
        kp.x = rng.uniform(0, 100);
        kp.y = rng.uniform(0, 100);
        kps.push_back(kp);
    }
    return template_of(std::move(kps), id);
}

} // namespace

TEST_CASE("fuse_template concatenates regions in index order") {
    RegionKeypoints a{2, {}}, b{0, {}};
    for (int i = 0; i < 5; ++i)
        a.keypoints.push_back(Keypoint{});
    for (int i = 0; i < 7; ++i)
        b.keypoints.push_back(Keypoint{});

    const Template t = fuse_template({a, b}, "subject", MixtureModel{{GaussianComponent{}}});
    REQUIRE(t.size() == 12);
    CHECK(t.k_count == 2);
    // region 0's seven keypoints come first
    for (int i = 0; i < 7; ++i)
        CHECK(t.region_provenance[i] == 0);
    for (int i = 7; i < 12; ++i)
        CHECK(t.region_provenance[i] == 2);
}

TEST_CASE("fuse_template of a single region is the identity") {
    RegionKeypoints only{3, {}};
    only.keypoints.resize(4);
    for (int i = 0; i < 4; ++i)
        only.keypoints[i].x = i;
    const Template t = fuse_template({only}, "s", MixtureModel{{GaussianComponent{}}});
    REQUIRE(t.size() == 4);
    for (int i = 0; i < 4; ++i) {
        CHECK(t.keypoints[i].x == i);
        CHECK(t.region_provenance[i] == 3);
    }
}

TEST_CASE("fuse_template rejects keypoint-free regions") {
    RegionKeypoints empty_a{0, {}}, empty_b{1, {}};
    CHECK_THROWS_WITH_AS(
        fuse_template({empty_a, empty_b}, "s", MixtureModel{{GaussianComponent{}}}),
        doctest::Contains("empty-template"), Error);
    CHECK_THROWS_WITH_AS(fuse_template({}, "s", MixtureModel{{GaussianComponent{}}}),
                         doctest::Contains("empty-template"), Error);
}

TEST_CASE("match_nn on identical templates pairs everything at distance zero") {
    Rng rng(1);
    const Template t = random_template(rng, 8);
    const MatchResult r = match_nn(t, t, 0.8);
    CHECK(r.match_count == 8);
    CHECK(r.d_final == doctest::Approx(0.0));
    CHECK(r.normalized_score == doctest::Approx(1.0));
    for (const MatchPair& p : r.pairs) {
        CHECK(p.probe_index == p.ref_index);
        CHECK(p.distance == doctest::Approx(0.0));
    }
}

TEST_CASE("match_nn rejects everything when neighbors are equidistant") {
    // pairwise orthogonal unit descriptors: every cross distance is sqrt(2),
    // so nearest/second = 1 > ratio
    std::vector<Keypoint> probe_kps, ref_kps;
    for (int i = 0; i < 3; ++i)
        probe_kps.push_back(kp_with_descriptor({static_cast<double>(i), 1.0}));
    for (int i = 3; i < 6; ++i)
        ref_kps.push_back(kp_with_descriptor({static_cast<double>(i), 1.0}));
    const MatchResult r =
        match_nn(template_of(probe_kps), template_of(ref_kps), 0.8);
    CHECK(r.match_count == 0);
    CHECK(r.normalized_score == doctest::Approx(0.0));
    CHECK(r.d_final == doctest::Approx(0.0));
}

TEST_CASE("match_nn agrees with the hand-worked 3x3 greedy selection") {
    // descriptors on three axes with mixtures chosen so distances are known
    const Keypoint p0 = kp_with_descriptor({0, 1.0});
    const Keypoint p1 = kp_with_descriptor({1, 1.0});
    const Keypoint p2 = kp_with_descriptor({0, 1.0, 1, 0.35});
    const Keypoint r0 = kp_with_descriptor({0, 1.0, 1, 0.12});
    const Keypoint r1 = kp_with_descriptor({1, 1.0, 2, 0.50});
    const Keypoint r2 = kp_with_descriptor({2, 1.0});

    const Template probe = template_of({p0, p1, p2});
    const Template ref = template_of({r0, r1, r2});

    // full 3x3 distance table, by hand
    double table[3][3];
    const Keypoint* ps[3] = {&p0, &p1, &p2};
    const Keypoint* rs[3] = {&r0, &r1, &r2};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            table[i][j] = descriptor_distance(*ps[i], *rs[j]);

    // the ratio test on each probe row, then greedy ascending distance
    struct Cand {
        double d;
        int i, j;
    };
    std::vector<Cand> cands;
    for (int i = 0; i < 3; ++i) {
        int bj = 0;
        double b1 = 1e9, b2 = 1e9;
        for (int j = 0; j < 3; ++j) {
            if (table[i][j] < b1) {
                b2 = b1;
                b1 = table[i][j];
                bj = j;
            } else if (table[i][j] < b2) {
                b2 = table[i][j];
            }
        }
        if (b1 <= 0.8 * b2)
            cands.push_back({b1, i, bj});
    }
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) { return a.d < b.d; });
    std::set<int> used_i, used_j;
    std::vector<std::pair<int, int>> expected;
    for (const Cand& c : cands)
        if (!used_i.count(c.i) && !used_j.count(c.j)) {
            used_i.insert(c.i);
            used_j.insert(c.j);
            expected.emplace_back(c.i, c.j);
        }
    std::sort(expected.begin(), expected.end());

    const MatchResult r = match_nn(probe, ref, 0.8);
    REQUIRE(r.pairs.size() == expected.size());
    for (std::size_t k = 0; k < expected.size(); ++k) {
        CHECK(r.pairs[k].probe_index == expected[k].first);
        CHECK(r.pairs[k].ref_index == expected[k].second);
    }
}

TEST_CASE("match_nn accepts the single-reference special case") {
    Rng rng(7);
    const Template probe = random_template(rng, 3);
    const Template ref = random_template(rng, 1);
    const MatchResult r = match_nn(probe, ref, 0.8);
    CHECK(r.match_count == 1); // one-to-one caps at |ref|
}

TEST_CASE("match_ed on identical templates pairs everything at distance zero") {
    Rng rng(2);
    const Template t = random_template(rng, 6);
    const MatchResult r = match_ed(t, t, 0.35);
    CHECK(r.match_count == 6);
    CHECK(r.d_final == doctest::Approx(0.0));
    CHECK(r.normalized_score == doctest::Approx(1.0));
}

TEST_CASE("match_ed returns nothing when all distances exceed the cap") {
    Rng rng(3);
    const Template probe = random_template(rng, 4);
    const Template ref = random_template(rng, 4);
    const MatchResult r = match_ed(probe, ref, 1e-6);
    CHECK(r.match_count == 0);
    CHECK(r.normalized_score == doctest::Approx(0.0));
}

TEST_CASE("match_ed equals the brute-force mutual-NN table computation") {
    Rng rng(44);
    for (int trial = 0; trial < 10; ++trial) {
        const Template probe = random_template(rng, 10, "p");
        const Template ref = random_template(rng, 10, "r");
        const double d_abs = 0.9;

        // full 100-entry table
        double table[10][10];
        for (int i = 0; i < 10; ++i)
            for (int j = 0; j < 10; ++j)
                table[i][j] = descriptor_distance(probe.keypoints[i], ref.keypoints[j]);

        std::vector<std::pair<int, int>> expected;
        for (int i = 0; i < 10; ++i) {
            int jbest = 0;
            for (int j = 1; j < 10; ++j)
                if (table[i][j] < table[i][jbest])
                    jbest = j;
            int ibest = 0;
            for (int i2 = 1; i2 < 10; ++i2)
                if (table[i2][jbest] < table[ibest][jbest])
                    ibest = i2;
            if (ibest == i && table[i][jbest] <= d_abs)
                expected.emplace_back(i, jbest);
        }

        const MatchResult r = match_ed(probe, ref, d_abs);
        REQUIRE(r.pairs.size() == expected.size());
        for (std::size_t k = 0; k < expected.size(); ++k) {
            CHECK(r.pairs[k].probe_index == expected[k].first);
            CHECK(r.pairs[k].ref_index == expected[k].second);
        }
    }
}

TEST_CASE("decide applies the >= psi convention") {
    MatchResult r;
    r.normalized_score = 1.0;
    CHECK(decide(r, 0.5).accept);
    r.normalized_score = 0.0;
    CHECK_FALSE(decide(r, 0.1).accept);
    r.normalized_score = 0.37;
    CHECK(decide(r, 0.37).accept); // boundary accepts
    CHECK_THROWS_AS(decide(r, 1.5), Error);
}

TEST_CASE("matching invariants hold on seeded template pairs") {
    Rng rng(9999);
    for (int trial = 0; trial < 50; ++trial) {
        const int np = 2 + static_cast<int>(rng.next_below(10));
        const int nr = 2 + static_cast<int>(rng.next_below(10));
        const Template probe = random_template(rng, np, "p");
        const Template ref = random_template(rng, nr, "r");

        for (const MatchResult& r :
             {match_nn(probe, ref, 0.9), match_ed(probe, ref, 1.2)}) {
            // one-to-one
            std::set<int> pis, ris;
            for (const MatchPair& p : r.pairs) {
                CHECK(pis.insert(p.probe_index).second);
                CHECK(ris.insert(p.ref_index).second);
            }
            CHECK(r.match_count <= std::min(np, nr));
            CHECK(r.normalized_score >= 0.0);
            CHECK(r.normalized_score <= 1.0);
            double sq = 0.0;
            for (const MatchPair& p : r.pairs)
                sq += p.distance * p.distance;
            CHECK(r.d_final == doctest::Approx(std::sqrt(sq)));
        }

        // monotonicity in the acceptance knobs
        CHECK(match_ed(probe, ref, 0.4).match_count <= match_ed(probe, ref, 0.8).match_count);
        CHECK(match_nn(probe, ref, 0.5).match_count <= match_nn(probe, ref, 0.9).match_count);

        // permuting the reference keypoints leaves the aggregate unchanged
        Template shuffled = ref;
        std::vector<std::size_t> perm(shuffled.keypoints.size());
        std::iota(perm.begin(), perm.end(), 0);
        for (std::size_t i = perm.size(); i > 1; --i)
            std::swap(perm[i - 1], perm[rng.next_below(i)]);
        std::vector<Keypoint> permuted;
        for (std::size_t idx : perm)
            permuted.push_back(shuffled.keypoints[idx]);
        shuffled.keypoints = std::move(permuted);

        const MatchResult before = match_nn(probe, ref, 0.85);
        const MatchResult after = match_nn(probe, shuffled, 0.85);
        CHECK(before.match_count == after.match_count);
        CHECK(before.d_final == doctest::Approx(after.d_final).epsilon(1e-9));
    }
}
