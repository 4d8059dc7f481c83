#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "comotion/detect.hpp"
#include "comotion/errors.hpp"
#include "comotion/rng.hpp"
#include "test_support.hpp"

using namespace comotion;

namespace {

CorrelationMatrix random_rho(Rng& rng, int n, int k, int pair_index) {
    CorrelationMatrix rho;
    rho.labels.resize(static_cast<std::size_t>(n));
    for (auto& l : rho.labels) l = static_cast<std::uint8_t>(rng.index(k));
    rho.weight = rng.uniform(1.0, 100.0);
    rho.pair_index = pair_index;
    return rho;
}

NormalizedPattern pattern_from(std::vector<double> p, int n = 0) {
    NormalizedPattern out;
    out.n = n > 0 ? n : static_cast<int>(p.size());
    double sum = 0.0;
    for (const double v : p) sum += v;
    for (auto& v : p) v /= sum;
    out.p = std::move(p);
    return out;
}

}  // namespace

TEST_CASE("build_template samples without replacement") {
    Rng rng(10);
    std::vector<CorrelationMatrix> rhos;
    for (int i = 0; i < 50; ++i) rhos.push_back(random_rho(rng, 12, 3, i));

    SUBCASE("sample larger than the pool uses everything") {
        const RealTemplate tpl = build_template(rhos, 3000, 1);
        CHECK(tpl.source_count == 50);
    }
    SUBCASE("subsampling is deterministic in the seed") {
        const RealTemplate a = build_template(rhos, 20, 7);
        const RealTemplate b = build_template(rhos, 20, 7);
        CHECK(a.source_count == 20);
        CHECK(a.pattern.p == b.pattern.p);
        const RealTemplate c = build_template(rhos, 20, 8);
        CHECK(a.pattern.p != c.pattern.p);
    }
    SUBCASE("empty pool is an error") {
        CHECK_THROWS_AS(build_template({}, 10, 0), EmptyInputError);
    }
}

TEST_CASE("anomaly score is the divergence to the template") {
    Rng rng(11);
    std::vector<CorrelationMatrix> rhos;
    for (int i = 0; i < 30; ++i) rhos.push_back(random_rho(rng, 12, 3, i));
    const RealTemplate tpl = build_template(rhos, 3000, 2);
    CHECK(anomaly_score(tpl.pattern, tpl) == 0.0);

    const NormalizedPattern other = pattern_from(std::vector<double>(66, 1.0), 12);
    const double score = anomaly_score(other, tpl);
    CHECK(score >= 0.0);
    CHECK(score <= std::numbers::ln2);
}

TEST_CASE("anomaly score is invariant to rho pooling order") {
    Rng rng(13);
    std::vector<CorrelationMatrix> rhos;
    for (int i = 0; i < 40; ++i) rhos.push_back(random_rho(rng, 10, 4, i));
    const RealTemplate forward = build_template(rhos, 3000, 5);
    std::vector<CorrelationMatrix> reversed(rhos.rbegin(), rhos.rend());
    const RealTemplate backward = build_template(reversed, 3000, 5);
    const NormalizedPattern probe = pattern_from(std::vector<double>(45, 1.0), 10);
    CHECK(anomaly_score(probe, forward) ==
          doctest::Approx(anomaly_score(probe, backward)).epsilon(1e-9));
}

TEST_CASE("roc endpoints, monotonicity and the worked example") {
    SUBCASE("perfect separation") {
        const RocCurve curve = roc({0.1, 0.2}, {0.5, 0.9});
        CHECK(curve.auc == doctest::Approx(1.0));
        CHECK(curve.youden_accuracy == doctest::Approx(1.0));
    }
    SUBCASE("identical distributions sit at chance") {
        const RocCurve curve = roc({0.3, 0.3, 0.3}, {0.3, 0.3, 0.3});
        CHECK(curve.auc == doctest::Approx(0.5));
    }
    SUBCASE("worked example is exactly 0.75") {
        const RocCurve curve = roc({0.1, 0.2}, {0.15, 0.3});
        CHECK(curve.auc == doctest::Approx(0.75).epsilon(1e-15));
    }
    SUBCASE("curve runs from (0,0) to (1,1) monotonically") {
        Rng rng(3);
        std::vector<double> real, fake;
        for (int i = 0; i < 25; ++i) {
            real.push_back(rng.normal(0.0, 1.0));
            fake.push_back(rng.normal(0.7, 1.0));
        }
        const RocCurve curve = roc(real, fake);
        REQUIRE(curve.points.size() >= 2);
        CHECK(curve.points.front() == std::pair<double, double>{0.0, 0.0});
        CHECK(curve.points.back() == std::pair<double, double>{1.0, 1.0});
        for (std::size_t i = 1; i < curve.points.size(); ++i) {
            CHECK(curve.points[i].first >= curve.points[i - 1].first);
            CHECK(curve.points[i].second >= curve.points[i - 1].second);
        }
    }
    SUBCASE("empty input is an error") {
        CHECK_THROWS_AS(roc({}, {0.1}), EmptyInputError);
    }
}

TEST_CASE("roc auc equals the Mann-Whitney oracle") {
    Rng rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> real, fake;
        const int nr = 2 + static_cast<int>(rng.index(30));
        const int nf = 2 + static_cast<int>(rng.index(30));
        for (int i = 0; i < nr; ++i) {
            real.push_back(rng.index(8) * 0.125);  // coarse grid forces ties
        }
        for (int i = 0; i < nf; ++i) {
            fake.push_back(rng.index(8) * 0.125 + 0.0625 * rng.index(2));
        }
        const double expected = testsupport::mann_whitney_auc(real, fake);
        CHECK(roc(real, fake).auc == doctest::Approx(expected).epsilon(1e-9));
    }
}

TEST_CASE("adaboost separates one informative feature") {
    Rng rng(23);
    std::vector<NormalizedPattern> x;
    std::vector<int> y;
    for (int i = 0; i < 40; ++i) {
        const bool fake = i % 2 == 1;
        std::vector<double> p(10, 1.0);
        p[3] = fake ? 3.0 : 0.2;
        for (auto& v : p) v += rng.uniform01() * 0.01;
        x.push_back(pattern_from(p));
        y.push_back(fake ? 1 : 0);
    }
    const StumpEnsemble model = train_adaboost(x, y, 50);
    REQUIRE(!model.stumps.empty());
    int correct = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const auto [verdict, margin] = classify(model, x[i]);
        if ((verdict == Verdict::fake) == (y[i] == 1)) ++correct;
    }
    CHECK(correct == 40);
}

TEST_CASE("adaboost training error is nonincreasing in rounds") {
    Rng rng(29);
    std::vector<NormalizedPattern> x;
    std::vector<int> y;
    for (int i = 0; i < 60; ++i) {
        std::vector<double> p(12);
        const bool fake = rng.bernoulli(0.5);
        for (std::size_t j = 0; j < p.size(); ++j) {
            p[j] = rng.uniform01() + (fake ? 0.15 * (j % 3 == 0) : 0.0);
        }
        x.push_back(pattern_from(p));
        y.push_back(fake ? 1 : 0);
    }
    double previous = 1.0;
    for (const int rounds : {1, 3, 10, 30, 100}) {
        const StumpEnsemble model = train_adaboost(x, y, rounds);
        int errors = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const auto [verdict, margin] = classify(model, x[i]);
            if ((verdict == Verdict::fake) != (y[i] == 1)) ++errors;
        }
        const double rate = static_cast<double>(errors) / static_cast<double>(x.size());
        CHECK(rate <= previous + 1e-12);
        previous = rate;
    }
}

TEST_CASE("labels without signal stay near chance on held-out data") {
    Rng rng(31);
    std::vector<NormalizedPattern> train_x, test_x;
    std::vector<int> train_y, test_y;
    for (int i = 0; i < 200; ++i) {
        std::vector<double> p(20);
        for (auto& v : p) v = rng.uniform01();
        const int label = rng.bernoulli(0.5) ? 1 : 0;
        if (i < 100) {
            train_x.push_back(pattern_from(p));
            train_y.push_back(label);
        } else {
            test_x.push_back(pattern_from(p));
            test_y.push_back(label);
        }
    }
    const StumpEnsemble model = train_adaboost(train_x, train_y, 30);
    int correct = 0;
    for (std::size_t i = 0; i < test_x.size(); ++i) {
        const auto [verdict, margin] = classify(model, test_x[i]);
        if ((verdict == Verdict::fake) == (test_y[i] == 1)) ++correct;
    }
    const double accuracy = static_cast<double>(correct) / test_x.size();
    CHECK(accuracy > 0.3);
    CHECK(accuracy < 0.7);
}

TEST_CASE("classify margin rules") {
    SUBCASE("empty ensemble ties to real") {
        const StumpEnsemble empty;
        const auto [verdict, margin] = classify(empty, pattern_from({1.0, 1.0}));
        CHECK(margin == 0.0);
        CHECK(verdict == Verdict::real);
    }
    SUBCASE("a single positive stump flags values above threshold as fake") {
        StumpEnsemble model;
        model.stumps.push_back({0, 0.5, 1, 1.0});
        const auto [verdict, margin] = classify(model, pattern_from({3.0, 1.0}));
        CHECK(verdict == Verdict::fake);
        CHECK(margin == doctest::Approx(1.0));
    }
    SUBCASE("margins add over concatenated ensembles") {
        Rng rng(41);
        StumpEnsemble a, b, both;
        for (int i = 0; i < 5; ++i) {
            const Stump stump{static_cast<int>(rng.index(4)), rng.uniform01() * 0.5,
                              rng.bernoulli(0.5) ? 1 : -1, rng.uniform(0.1, 2.0)};
            (i % 2 == 0 ? a : b).stumps.push_back(stump);
            both.stumps.push_back(stump);
        }
        const NormalizedPattern probe = pattern_from({0.3, 0.9, 0.1, 0.7});
        const auto [va, ma] = classify(a, probe);
        const auto [vb, mb] = classify(b, probe);
        const auto [vboth, mboth] = classify(both, probe);
        CHECK(mboth == doctest::Approx(ma + mb).epsilon(1e-12));
    }
}

TEST_CASE("adaboost rejects degenerate inputs") {
    const auto p = pattern_from({1.0, 1.0});
    CHECK_THROWS_AS(train_adaboost({p, p}, {0, 0}, 10), std::invalid_argument);
    CHECK_THROWS_AS(train_adaboost({}, {}, 10), std::invalid_argument);
    CHECK_THROWS_AS(train_adaboost({p}, {0, 1}, 10), std::invalid_argument);
}

TEST_CASE("model json round trip") {
    const auto dir = testsupport::temp_dir("model");
    StumpEnsemble model;
    model.rounds = 7;
    model.stumps.push_back({12, 0.003, 1, 0.81});
    model.stumps.push_back({900, -0.25, -1, 1.44});
    write_model(model, dir / "m.json");
    const StumpEnsemble back = read_model(dir / "m.json");
    CHECK(back.rounds == 7);
    REQUIRE(back.stumps.size() == 2);
    CHECK(back.stumps[1].feature == 900);
    CHECK(back.stumps[1].threshold == -0.25);
    CHECK(back.stumps[1].polarity == -1);
    CHECK(back.stumps[1].alpha == 1.44);
    CHECK_THROWS_AS(read_model(dir / "missing.json"), IoError);
    std::filesystem::remove_all(dir);
}
