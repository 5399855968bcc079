#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "oracle.hpp"
#include "sce/boundary.hpp"
#include "sce/dataset.hpp"
#include "sce/distance.hpp"
#include "sce/errors.hpp"
#include "sce/gateway.hpp"
#include "sce/mock_model.hpp"
#include "sce/prompting.hpp"

using namespace sce;

namespace {

DecisionBoundary from_labels(const SpecPtr& spec, const std::vector<int>& labels) {
    return DecisionBoundary(spec, std::vector<std::uint8_t>(labels.begin(), labels.end()), {"test", "h", 0.0, 0});
}

std::vector<double> random_weights(std::mt19937_64& rng, std::size_t p) {
    std::uniform_real_distribution<double> w(-2.0, 2.0);
    std::vector<double> out;
    for (std::size_t k = 0; k < p; ++k) out.push_back(w(rng));
    return out;
}

// Fails on chosen ids, answers the mock rule elsewhere.
class FlakyBackend final : public Backend {
public:
    std::vector<std::size_t> bad;
    [[nodiscard]] std::string model_id() const override { return "flaky"; }
    [[nodiscard]] double temperature() const override { return 0.0; }
    std::string complete(const Query& q) override {
        if (std::find(bad.begin(), bad.end(), q.subject->id()) != bad.end()) {
            throw Error(Errc::transport_error, "boom");
        }
        return q.labels[q.subject->id() % 2];
    }
};

std::filesystem::path scratch(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "sce_test_boundary";
    std::filesystem::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST_CASE("boundary construction checks") {
    const auto spec = builtin_spec("income");
    CHECK_THROWS_AS(DecisionBoundary(spec, std::vector<std::uint8_t>(10, 0), {}), Error);
    CHECK_THROWS_AS(DecisionBoundary(spec, std::vector<std::uint8_t>(1920, 2), {}), Error);
    const DecisionBoundary flat(spec, std::vector<std::uint8_t>(1920, 1), {});
    CHECK(flat.uniform());
}

TEST_CASE("sweep through a mock backend reproduces its rule") {
    const auto spec = builtin_spec("house_prices");
    const auto ds = enumerate_dataset(spec);
    const auto tmpl = default_prompt_template(spec);
    MockModelSpec ms;
    ms.classifier = {{2.0, 0.5, 0.6, 0.3}, 1.5};
    MockBackend backend(ms);
    Gateway gw(backend, nullptr);
    const auto boundary = sweep_predictions(gw, ds, tmpl);
    const auto expected = oracle::linear_labels(oracle::table_of(*spec), ms.classifier.weights, 1.5);
    REQUIRE(boundary.size() == expected.size());
    for (std::size_t id = 0; id < ds.size(); ++id) {
        CHECK(boundary.label(id) == expected[id]);
        CHECK(lookup(boundary, ds[id]) == expected[id]);
    }
    CHECK(boundary.provenance().model_id == backend.model_id());
    CHECK(boundary.provenance().template_hash == tmpl.prediction_hash());
    CHECK_THROWS_AS(lookup(boundary, Instance::from_id(builtin_spec("income"), 0)), Error);
}

TEST_CASE("sweep failures are aggregated") {
    const auto spec = load_dataset_spec(asset_dir() / "datasets" / "toy_loans.json");
    const auto ds = enumerate_dataset(spec);
    const auto tmpl = load_prompt_template(spec, asset_dir() / "datasets" / "toy_loans.prompts.json");
    FlakyBackend backend;
    backend.bad = {3, 17};
    Gateway gw(backend, nullptr);
    try {
        (void)sweep_predictions(gw, ds, tmpl);
        FAIL("expected the sweep to fail");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::transport_error);
        const std::string msg = e.what();
        CHECK(msg.find('3') != std::string::npos);
        CHECK(msg.find("17") != std::string::npos);
    }
    backend.bad.clear();
    CHECK_NOTHROW((void)sweep_predictions(gw, ds, tmpl));
}

TEST_CASE("minimal counterfactual on a hand-built income boundary") {
    const auto spec = builtin_spec("income");
    const auto ds = enumerate_dataset(spec);
    const DistanceEvaluator d(ds, DistanceKind::gower());
    // class 0 only for the Doctorate column
    std::vector<int> labels(ds.size(), 1);
    for (std::size_t id = 0; id < ds.size(); ++id) {
        if (ds[id].index(1) == 23) labels[id] = 0;
    }
    const auto boundary = from_labels(spec, labels);
    const auto source = validate_instance(spec, std::vector<FeatureValue>{40.0, std::string("Bachelor's degree")});
    const auto best = minimal_counterfactual(boundary, source, d);
    CHECK(best.target == 0);
    CHECK(best.min_distance == doctest::Approx(3.0 / 23.0 / 2.0));
    REQUIRE(best.argmin_set.size() == 1);
    CHECK(ds[best.argmin_set[0]].index(0) == source.index(0));
    CHECK(ds[best.argmin_set[0]].index(1) == 23);

    // explicit target equal to the source label looks for the nearest other same-label point
    const auto same = minimal_counterfactual(boundary, source, d, 1);
    CHECK(same.min_distance == doctest::Approx(1.0 / 79.0 / 2.0));
    CHECK(same.argmin_set.size() == 2);
    CHECK(std::is_sorted(same.argmin_set.begin(), same.argmin_set.end()));
}

TEST_CASE("no counterfactual on a uniform boundary") {
    const auto spec = builtin_spec("income");
    const auto ds = enumerate_dataset(spec);
    const DistanceEvaluator d(ds, DistanceKind::gower());
    const auto boundary = from_labels(spec, std::vector<int>(ds.size(), 0));
    try {
        (void)minimal_counterfactual(boundary, ds[5], d);
        FAIL("expected no_counterfactual");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::no_counterfactual);
    }
    const auto all = minimal_counterfactuals(boundary, d);
    CHECK(all.size() == ds.size());
    CHECK(std::none_of(all.begin(), all.end(), [](const auto& r) { return r.has_value(); }));
}

TEST_CASE("property: minimal counterfactuals match the double-loop oracle") {
    const auto spec = builtin_spec("house_prices");
    const auto ds = enumerate_dataset(spec);
    const auto table = oracle::table_of(*spec);
    std::mt19937_64 rng(31337);
    for (auto kind : {DistanceKind::gower(), DistanceKind::l1_mad(), DistanceKind::l2_std()}) {
        const DistanceEvaluator d(ds, kind);
        const oracle::Distance o(table, oracle::metric_of(kind.tag));
        for (int trial = 0; trial < 5; ++trial) {
            const auto w = random_weights(rng, 4);
            const double threshold = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
            const auto labels = oracle::linear_labels(table, w, threshold);
            const auto boundary = from_labels(spec, labels);
            for (int s = 0; s < 40; ++s) {
                const std::size_t source = rng() % ds.size();
                const auto expected = oracle::nearest(o, labels, source, 1 - labels[source]);
                if (!expected) {
                    CHECK_THROWS_AS(minimal_counterfactual(boundary, ds[source], d), Error);
                    continue;
                }
                const auto got = minimal_counterfactual(boundary, ds[source], d);
                CHECK(got.min_distance == expected->distance);
                CHECK(got.argmin_set == expected->ids);
                CHECK(got.kind == kind.tag);
            }
        }
    }
}

TEST_CASE("agreement statistics") {
    const auto spec = builtin_spec("income");
    const std::size_t n = spec->size();
    std::vector<int> a(n, 0);
    std::vector<int> b(n, 0);
    b[7] = 1;
    const std::vector<DecisionBoundary> pair{from_labels(spec, a), from_labels(spec, b)};
    const auto stats = boundary_agreement(pair);
    REQUIRE(stats.class1_fraction.size() == n);
    CHECK(stats.class1_fraction[7] == 0.5);
    CHECK(stats.class1_fraction[8] == 1.0);
    CHECK(stats.unanimity == doctest::Approx(static_cast<double>(n - 1) / static_cast<double>(n)));
    CHECK(stats.max_pairwise_flips == 1);
    CHECK(stats.mean_pairwise_disagreement == doctest::Approx(1.0 / static_cast<double>(n)));
    CHECK_FALSE(stats.remain_invalid.has_value());

    // probe 7 -> 7 targets class 1: invalid under a, valid under b
    const std::vector<CounterfactualProbe> probes{{0, 7, 1}, {0, 9, 1}};
    const auto with_probes = boundary_agreement(pair, probes);
    CHECK(with_probes.invalid_probes == 2);
    CHECK(with_probes.remain_invalid == 0.5);

    CHECK_THROWS_AS(boundary_agreement(std::span(pair).first(1)), Error);
    const std::vector<DecisionBoundary> mixed{from_labels(spec, a),
                                              from_labels(builtin_spec("house_prices"), std::vector<int>(1600, 0))};
    CHECK_THROWS_AS(boundary_agreement(mixed), Error);
}

TEST_CASE("boundary files round-trip") {
    const auto spec = builtin_spec("heart_disease");
    std::vector<int> labels(spec->size());
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>((i * 7) % 3 == 0);
    const DecisionBoundary b(spec, std::vector<std::uint8_t>(labels.begin(), labels.end()), {"m", "abc", 0.5, 2});
    const auto path = scratch("heart.jsonl");
    write_boundary(b, path);
    const auto back = read_boundary(spec, path);
    CHECK(back == b);
    CHECK(back.provenance() == b.provenance());
    CHECK_THROWS_AS(read_boundary(builtin_spec("income"), path), Error);

    // drop the last line: coverage is incomplete
    std::ifstream in(path);
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) lines.push_back(line);
    lines.pop_back();
    std::ofstream out(path);
    for (const auto& l : lines) out << l << '\n';
    out.close();
    CHECK_THROWS_AS(read_boundary(spec, path), Error);
}
