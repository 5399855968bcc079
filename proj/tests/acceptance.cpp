// Acceptance run: one PASS/FAIL line per criterion, non-zero exit when any fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "oracle.hpp"
#include "sce/boundary.hpp"
#include "sce/dataset.hpp"
#include "sce/distance.hpp"
#include "sce/experiments.hpp"
#include "sce/gateway.hpp"
#include "sce/metrics.hpp"
#include "sce/mock_model.hpp"
#include "sce/prompting.hpp"

using namespace sce;

namespace {

namespace fs = std::filesystem;

struct Verdict {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok && pass) {
            pass = false;
            detail = what;
        }
    }
};

bool close(double a, double b, double tol = 1e-9) { return std::abs(a - b) <= tol; }

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

MockModelSpec mock_for(const std::string& dataset, ScePolicy policy) {
    MockModelSpec ms;
    if (dataset == "income") ms.classifier = {{1.0, 2.0}, 1.6};
    if (dataset == "house_prices") ms.classifier = {{2.0, 0.5, 0.6, 0.3}, 1.5};
    if (dataset == "heart_disease") ms.classifier = {{1.0, 0.4, 1.0, 0.8}, 1.7};
    ms.sce_policy = policy;
    ms.seed = 11;
    return ms;
}

// Sweep and minimal-setting SCEs from a mock, scored by the library and by the oracle.
struct PolicyRun {
    std::vector<int> labels;
    std::vector<SCERecord> records;
    std::shared_ptr<const DecisionBoundary> boundary;
};

PolicyRun run_policy(const Dataset& ds, const PromptTemplate& tmpl, const MockModelSpec& ms) {
    MockBackend backend(ms);
    Gateway gw(backend, nullptr);
    PolicyRun run;
    run.boundary = std::make_shared<const DecisionBoundary>(sweep_predictions(gw, ds, tmpl));
    backend.inject_boundary(run.boundary);
    run.records = elicit_sces(gw, *run.boundary, tmpl, PromptSetting::minimal);
    run.labels.assign(run.boundary->labels().begin(), run.boundary->labels().end());
    return run;
}

std::vector<oracle::Answer> answers_of(const std::vector<SCERecord>& records) {
    std::vector<oracle::Answer> out;
    for (const auto& r : records) {
        const auto* cf = r.counterfactual();
        out.push_back({r.source_id, r.predicted, cf ? std::optional(cf->id()) : std::nullopt});
    }
    return out;
}

// Library report vs oracle scores for one distance.
void compare(Verdict& v, const EvaluationReport& got, const oracle::Scores& want, const std::string& label) {
    v.require(got.valid == want.valid, label + ": valid count");
    v.require(got.validity_pct.has_value() == want.validity_pct.has_value() &&
                  (!want.validity_pct || close(*got.validity_pct, *want.validity_pct)),
              label + ": validity");
    v.require(got.mean_excess_distance.has_value() == want.mean_ed.has_value() &&
                  (!want.mean_ed || close(*got.mean_excess_distance, *want.mean_ed)),
              label + ": mean ED");
    v.require(got.exact_match_pct.has_value() == want.exact_pct.has_value() &&
                  (!want.exact_pct || close(*got.exact_match_pct, *want.exact_pct)),
              label + ": exact match");
}

Verdict dataset_fidelity() {
    Verdict v;
    const std::array<std::pair<const char*, std::size_t>, 3> sizes{
        {{"income", 1920}, {"house_prices", 1600}, {"heart_disease", 1936}}};
    for (const auto& [name, n] : sizes) {
        const auto spec = builtin_spec(name);
        const auto ds = enumerate_dataset(spec);
        v.require(ds.size() == n, fmt::format("{} has {} instances", name, ds.size()));
        const auto table = oracle::table_of(*spec);
        for (std::size_t id = 0; id < ds.size(); ++id) {
            const auto idx = ds[id].indices();
            for (std::size_t k = 0; k < idx.size(); ++k) {
                v.require(table.axes[k][idx[k]] == table.rows[id][k], fmt::format("{} id {}", name, id));
            }
            v.require(Instance::from_id(spec, id).id() == id, fmt::format("{} round-trip {}", name, id));
        }
    }
    const auto income = builtin_spec("income");
    const auto& education = income->features[1].values;
    v.require(education.size() == 24, "income education levels");
    v.require(std::get<std::string>(education.front()) == "N/A - no schooling completed", "first education level");
    v.require(std::get<std::string>(education.back()) == "Doctorate degree", "last education level");
    v.require(std::get<double>(income->features[0].values.front()) == 17.0 &&
                  std::get<double>(income->features[0].values.back()) == 96.0,
              "income age span");
    const auto house = builtin_spec("house_prices");
    v.require(house->features[0].values.size() == 20 && std::get<double>(house->features[0].values.back()) == 10000.0,
              "house area values");
    const auto heart = builtin_spec("heart_disease");
    v.require(heart->features.size() == 4, "heart feature count");
    return v;
}

Verdict gower_axioms() {
    Verdict v;
    std::mt19937_64 rng(2024);
    for (const char* name : {"income", "house_prices", "heart_disease"}) {
        const auto ds = enumerate_dataset(builtin_spec(name));
        const DistanceEvaluator d(ds, DistanceKind::gower());
        const std::size_t n = ds.size();
        for (int t = 0; t < 20000; ++t) {
            const std::size_t a = rng() % n, b = rng() % n, c = rng() % n;
            const double ab = d(a, b);
            v.require(ab >= 0.0 && ab <= 1.0, fmt::format("{}: range", name));
            v.require(d(a, a) == 0.0, fmt::format("{}: identity", name));
            v.require(a == b || ab > 0.0, fmt::format("{}: distinct points", name));
            v.require(ab == d(b, a), fmt::format("{}: symmetry", name));
            v.require(ab <= d(a, c) + d(c, b) + 1e-12, fmt::format("{}: triangle", name));
        }
        v.require(d(0, n - 1) == 1.0, fmt::format("{}: opposite corners", name));
        v.require(d.max_pairwise() == 1.0, fmt::format("{}: normalizer", name));
    }
    return v;
}

Verdict boundaries_vs_naive() {
    Verdict v;
    const auto spec = builtin_spec("house_prices");
    const auto ds = enumerate_dataset(spec);
    const auto table = oracle::table_of(*spec);
    const DistanceEvaluator d(ds, DistanceKind::gower());
    const oracle::Distance o(table, oracle::Metric::gower);
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> w(-2.0, 2.0);
    std::uniform_real_distribution<double> th(-1.5, 1.5);
    for (int b = 0; b < 100; ++b) {
        const std::vector<double> weights{w(rng), w(rng), w(rng), w(rng)};
        const auto labels = oracle::linear_labels(table, weights, th(rng));
        const DecisionBoundary boundary(spec, std::vector<std::uint8_t>(labels.begin(), labels.end()), {});
        const auto got = minimal_counterfactuals(boundary, d);
        for (int s = 0; s < 200; ++s) {
            const std::size_t id = rng() % ds.size();
            const auto want = oracle::nearest(o, labels, id, 1 - labels[id]);
            v.require(got[id].has_value() == want.has_value(), fmt::format("boundary {} id {}: existence", b, id));
            if (want && got[id]) {
                v.require(got[id]->min_distance == want->distance && got[id]->argmin_set == want->ids,
                          fmt::format("boundary {} id {}: minimum", b, id));
            }
        }
    }
    return v;
}

Verdict metric_equivalence() {
    Verdict v;
    for (const char* name : {"income", "house_prices", "heart_disease"}) {
        const auto spec = builtin_spec(name);
        const auto ds = enumerate_dataset(spec);
        const auto tmpl = default_prompt_template(spec);
        const auto table = oracle::table_of(*spec);
        for (auto policy :
             {ScePolicy::extreme_jump, ScePolicy::conservative_step, ScePolicy::oracle_minimal, ScePolicy::random_uniform}) {
            const auto run = run_policy(ds, tmpl, mock_for(name, policy));
            const auto answers = answers_of(run.records);
            for (auto kind : {DistanceKind::gower(), DistanceKind::l1_mad(), DistanceKind::l2_std()}) {
                const DistanceEvaluator d(ds, kind);
                const auto report = aggregate(run.records, *run.boundary, d);
                const auto want = oracle::score(answers, run.labels, oracle::Distance(table, oracle::metric_of(kind.tag)));
                compare(v, report, want, fmt::format("{}/{}/{}", name, to_string(policy), to_string(kind.tag)));
            }
        }
    }
    return v;
}

Verdict tradeoff() {
    Verdict v;
    const auto spec = builtin_spec("house_prices");
    const auto ds = enumerate_dataset(spec);
    const auto tmpl = default_prompt_template(spec);
    const auto table = oracle::table_of(*spec);
    const auto ms = mock_for("house_prices", ScePolicy::extreme_jump);
    const auto labels = oracle::linear_labels(table, ms.classifier.weights, ms.classifier.threshold);

    // monotone: raising any rank never moves a point from class 0 to class 1
    for (std::size_t id = 0; id < ds.size(); ++id) {
        for (std::size_t k = 0; k < spec->features.size(); ++k) {
            auto idx = decode_id(*spec, id);
            if (idx[k] + 1 >= spec->features[k].values.size()) continue;
            ++idx[k];
            const std::size_t up = encode_indices(*spec, idx);
            v.require(!(labels[id] == 0 && labels[up] == 1), "boundary is monotone");
        }
    }
    // share of instances with no opposite-label neighbour one rank step away
    std::size_t far = 0;
    for (std::size_t id = 0; id < ds.size(); ++id) {
        bool near = false;
        for (std::size_t k = 0; k < spec->features.size() && !near; ++k) {
            for (int step : {-1, 1}) {
                auto idx = decode_id(*spec, id);
                const auto moved = static_cast<long>(idx[k]) + step;
                if (moved < 0 || moved >= static_cast<long>(spec->features[k].values.size())) continue;
                idx[k] = static_cast<std::size_t>(moved);
                near = near || labels[encode_indices(*spec, idx)] != labels[id];
            }
        }
        far += near ? 0 : 1;
    }
    v.require(static_cast<double>(far) >= 0.3 * static_cast<double>(ds.size()),
              fmt::format("only {} of {} instances lie beyond one step", far, ds.size()));

    const DistanceEvaluator d(ds, DistanceKind::gower());
    const oracle::Distance o(table, oracle::Metric::gower);
    const auto jump = run_policy(ds, tmpl, ms);
    const auto step = run_policy(ds, tmpl, mock_for("house_prices", ScePolicy::conservative_step));
    const auto jump_report = aggregate(jump.records, *jump.boundary, d);
    const auto step_report = aggregate(step.records, *step.boundary, d);
    const auto step_oracle = oracle::score(answers_of(step.records), labels, o);
    v.require(jump_report.validity_pct == 100.0, "extreme jump is always valid");
    v.require(step_report.validity_pct.value_or(100.0) < 100.0, "conservative step is sometimes invalid");
    v.require(jump_report.mean_excess_distance && step_report.mean_excess_distance &&
                  *jump_report.mean_excess_distance > *step_report.mean_excess_distance,
              "extreme jump has the larger excess distance");
    v.require(step_oracle.mean_ed && step_report.mean_excess_distance &&
                  close(*step_report.mean_excess_distance, *step_oracle.mean_ed),
              "conservative step excess distance matches the oracle");
    return v;
}

Verdict mcq_baselines() {
    Verdict v;
    const auto spec = builtin_spec("house_prices");
    const auto ds = enumerate_dataset(spec);
    const auto tmpl = default_prompt_template(spec);
    const auto trials = generate_mcq_trials(ds, 1000, 5);
    auto accuracy = [&](McqPolicy policy) {
        auto ms = mock_for("house_prices", ScePolicy::extreme_jump);
        ms.mcq_policy = policy;
        MockBackend backend(ms);
        Gateway gw(backend, nullptr);
        return run_mcq_experiment(gw, tmpl, trials).accuracy_pct;
    };
    const double random = accuracy(McqPolicy::random);
    v.require(random >= 20.5 && random <= 29.5, fmt::format("random accuracy {}", random));
    v.require(accuracy(McqPolicy::oracle) == 100.0, "oracle accuracy");
    return v;
}

Verdict consistency() {
    Verdict v;
    const auto spec = builtin_spec("income");
    const auto ds = enumerate_dataset(spec);
    const auto tmpl = default_prompt_template(spec);
    const auto set = load_perturbations(asset_dir() / "perturbations" / "income_50.json", tmpl);
    auto ms = mock_for("income", ScePolicy::conservative_step);
    MockBackend backend(ms);
    Gateway gw(backend, nullptr);
    const auto base = sweep_predictions(gw, ds, tmpl);
    const auto records = elicit_sces(gw, base, tmpl, PromptSetting::minimal);
    const auto probes = invalid_probes(records, base);
    v.require(!probes.empty(), "no invalid SCEs to re-check");
    const auto result = run_boundary_consistency(gw, ds, tmpl, set, probes);
    v.require(result.boundaries.size() == 50, "fifty boundaries");
    for (double f : result.stats.class1_fraction) v.require(f == 0.0 || f == 1.0, "agreement fraction");
    v.require(result.stats.remain_invalid == 1.0, "invalid SCEs remain invalid");
    return v;
}

Verdict determinism() {
    Verdict v;
    const auto root = fs::temp_directory_path() / "sce_acceptance";
    fs::remove_all(root);
    std::vector<fs::path> outs{root / "a", root / "b"};
    for (const auto& out : outs) {
        const nlohmann::json doc = {
            {"dataset", "income"},
            {"backend", {{"type", "mock"}, {"weights", {1.0, 2.0}}, {"threshold", 1.6}, {"sce_policy", "random_uniform"}}},
            {"settings", {"unconstrained", "minimal", "self_predict"}},
            {"distances", {"gower", "l1_mad", "l2_std", "semantic"}},
            {"replicates", 2},
            {"seed", 8},
            {"output_dir", out.string()}};
        auto run = open_run(run_config_from_json(doc));
        (void)run_sce_experiment(run);
    }
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(outs[0])) {
        if (!entry.is_regular_file() || entry.path().filename().string().rfind("manifest", 0) == 0) continue;
        ++files;
        v.require(slurp(entry.path()) == slurp(outs[1] / entry.path().filename()),
                  entry.path().filename().string() + " differs");
    }
    v.require(files == 2 + 6 + 24 + 1, fmt::format("{} output files", files));
    fs::remove_all(root);
    return v;
}

Verdict golden_parsing() {
    Verdict v;
    std::ifstream in(std::string(SCE_TEST_DATA_DIR) + "/sce_golden.json");
    const auto cases = nlohmann::json::parse(in);
    v.require(cases.size() >= 20, "at least twenty golden cases");
    for (const auto& c : cases) {
        const auto name = c.at("name").get<std::string>();
        const auto outcome = parse_sce_response(c.at("response").get<std::string>(), builtin_spec(c.at("dataset").get<std::string>()));
        const auto& expect = c.at("expect");
        if (expect.at("kind") == "instance") {
            const auto* x = std::get_if<Instance>(&outcome);
            v.require(x != nullptr && std::vector<std::size_t>(x->indices().begin(), x->indices().end()) ==
                                          expect.at("indices").get<std::vector<std::size_t>>(),
                      name);
        } else {
            const auto* m = std::get_if<MalformedSCE>(&outcome);
            v.require(m != nullptr && to_string(m->reason) == expect.at("reason").get<std::string>(), name);
        }
    }
    return v;
}

Verdict normalized_ed() {
    Verdict v;
    const auto embeddings = embedding_provider_from_json({{"type", "mock"}, {"dimension", 64}});
    for (const char* name : {"income", "house_prices", "heart_disease"}) {
        const auto spec = builtin_spec(name);
        const auto ds = enumerate_dataset(spec);
        const auto tmpl = std::make_shared<const PromptTemplate>(default_prompt_template(spec));
        for (auto policy : {ScePolicy::extreme_jump, ScePolicy::random_uniform}) {
            const auto run = run_policy(ds, *tmpl, mock_for(name, policy));
            for (const auto& kind : {DistanceKind::gower(), DistanceKind::l1_mad(), DistanceKind::l2_std(),
                                     DistanceKind::semantic(embeddings, tmpl)}) {
                const DistanceEvaluator d(ds, kind);
                const auto report = aggregate(run.records, *run.boundary, d);
                const auto label = fmt::format("{}/{}/{}", name, to_string(policy), to_string(kind.tag));
                v.require(report.normalized_mean_ed.has_value(), label + ": no normalized ED");
                if (report.normalized_mean_ed) {
                    v.require(*report.normalized_mean_ed >= 0.0 && *report.normalized_mean_ed <= 1.0, label);
                }
                if (kind.tag == DistanceTag::gower) v.require(report.max_pairwise == 1.0, label + ": normalizer");
            }
        }
    }
    return v;
}

}  // namespace

int main() {
    spdlog::set_level(spdlog::level::warn);
    struct Criterion {
        const char* name;
        double limit_s;
        std::function<Verdict()> check;
    };
    const std::vector<Criterion> criteria{
        {"dataset fidelity", 1.0, dataset_fidelity},
        {"gower axioms and normalizer", 5.0, gower_axioms},
        {"minimal counterfactuals on 100 random boundaries", 60.0, boundaries_vs_naive},
        {"metric equivalence, 4 policies x 3 datasets", 120.0, metric_equivalence},
        {"validity / distance trade-off", 60.0, tradeoff},
        {"mcq baselines", 10.0, mcq_baselines},
        {"boundary consistency", 30.0, consistency},
        {"determinism", 120.0, determinism},
        {"golden parsing", 5.0, golden_parsing},
        {"normalized excess distance", 120.0, normalized_ed},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto& c = criteria[i];
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = c.check();
        } catch (const std::exception& e) {
            v.require(false, std::string("threw: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        v.require(secs <= c.limit_s, fmt::format("over the {:.0f} s budget", c.limit_s));
        failed += v.pass ? 0 : 1;
        std::printf("%s  %2zu  %-50s %7.2f s%s%s\n", v.pass ? "PASS" : "FAIL", i + 1, c.name, secs,
                    v.pass ? "" : "  ", v.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%zu of %zu criteria passed\n", criteria.size() - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
