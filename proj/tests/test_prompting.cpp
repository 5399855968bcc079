#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "sce/dataset.hpp"
#include "sce/errors.hpp"
#include "sce/prompting.hpp"

using namespace sce;

namespace {

template <typename Fn>
Errc code_of(Fn&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return Errc::parse_error;
}

std::filesystem::path scratch(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "sce_test_prompting";
    std::filesystem::create_directories(dir);
    return dir / name;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream(path) << text;
}

}  // namespace

TEST_CASE("text templates") {
    const auto t = TextTemplate::parse("a {x} and {{literal}} and {x} {y}");
    CHECK(t.count("x") == 2);
    CHECK(t.count("y") == 1);
    CHECK(t.placeholders() == std::vector<std::string>{"x", "x", "y"});
    const auto out = t.render([](std::string_view n) -> std::optional<std::string> { return n == "x" ? "1" : "2"; });
    CHECK(out == "a 1 and {literal} and 1 2");
    CHECK(code_of([&] { (void)t.render([](std::string_view) -> std::optional<std::string> { return std::nullopt; }); }) ==
          Errc::unresolved_placeholder);
    CHECK_THROWS_AS(TextTemplate::parse("unclosed {x"), Error);
}

TEST_CASE("default prompt assets load for every built-in") {
    for (const auto& name : builtin_names()) {
        const auto spec = builtin_spec(name);
        const auto tmpl = default_prompt_template(spec);
        CHECK(tmpl.mcq.has_value());
        CHECK_FALSE(tmpl.distance_definition.empty());
        CHECK(tmpl.self_prediction_plan.find("6.") != std::string::npos);
        CHECK(tmpl.prediction_hash().size() == 64);
    }
}

TEST_CASE("prediction template rules") {
    const auto spec = builtin_spec("income");
    auto check = [&](const std::string& text) {
        return code_of([&] { validate_prediction_template(*spec, TextTemplate::parse(text)); });
    };
    CHECK_NOTHROW(validate_prediction_template(*spec, TextTemplate::parse("{age} {education} {class_1} {class_2}")));
    CHECK(check("{age} {class_1} {class_2}") == Errc::unresolved_placeholder);
    CHECK(check("{age} {age} {education} {class_1} {class_2}") == Errc::unresolved_placeholder);
    CHECK(check("{age} {education} {class_1}") == Errc::unresolved_placeholder);
    CHECK(check("{age} {education} {class_1} {class_2} {salary}") == Errc::unresolved_placeholder);
}

TEST_CASE("SCE template rules per setting") {
    const auto spec = builtin_spec("income");
    const std::string base = "{age} {education} {complement} {feasible_values}";
    CHECK_NOTHROW(validate_sce_template(*spec, TextTemplate::parse(base), PromptSetting::unconstrained));
    CHECK_THROWS_AS(validate_sce_template(*spec, TextTemplate::parse(base), PromptSetting::minimal), Error);
    CHECK_NOTHROW(validate_sce_template(*spec, TextTemplate::parse(base + " {distance_definition}"),
                                        PromptSetting::minimal));
    CHECK_THROWS_AS(validate_sce_template(*spec, TextTemplate::parse(base + " {distance_definition}"),
                                          PromptSetting::self_predict),
                    Error);
    CHECK_NOTHROW(validate_sce_template(
        *spec, TextTemplate::parse(base + " {distance_definition} {self_prediction_plan}"), PromptSetting::self_predict));
    CHECK_THROWS_AS(validate_sce_template(*spec, TextTemplate::parse("{age} {complement} {feasible_values}"),
                                          PromptSetting::unconstrained),
                    Error);
}

TEST_CASE("settings round-trip") {
    for (auto s : all_settings()) CHECK(parse_setting(to_string(s)) == s);
    CHECK(code_of([] { (void)parse_setting("maximal"); }) == Errc::unknown_setting);
}

TEST_CASE("rendered prompts carry the instance and the labels") {
    const auto spec = builtin_spec("house_prices");
    const auto tmpl = default_prompt_template(spec);
    const auto x = validate_instance(spec, std::vector<FeatureValue>{2500.0, 3.0, 2.0, 1.0});

    const auto prediction = render_prediction_prompt(tmpl, x);
    CHECK(prediction.find("2500") != std::string::npos);
    CHECK(prediction.find(spec->task.class_labels[0]) != std::string::npos);
    CHECK(prediction.find(spec->task.class_labels[1]) != std::string::npos);
    CHECK(prediction.find('{') == std::string::npos);

    for (auto setting : all_settings()) {
        const auto text = render_sce_prompt(tmpl, setting, x, spec->task.class_labels[1], full_ranges(*spec));
        CHECK(text.find(spec->task.class_labels[0]) != std::string::npos);
        CHECK(text.find("10000") != std::string::npos);
        const bool has_definition = text.find(tmpl.distance_definition) != std::string::npos;
        CHECK(has_definition == (setting != PromptSetting::unconstrained));
        const bool has_plan = text.find(tmpl.self_prediction_plan) != std::string::npos;
        CHECK(has_plan == (setting == PromptSetting::self_predict));
    }
    CHECK(code_of([&] {
              (void)render_sce_prompt(tmpl, PromptSetting::minimal, x, "expensive", full_ranges(*spec));
          }) == Errc::out_of_domain);

    const auto ds = enumerate_dataset(spec);
    const std::vector<Instance> options{ds[1], ds[2], ds[3], ds[4]};
    const auto mcq = render_mcq_prompt(tmpl, ds[0], options);
    CHECK(mcq.find("D)") != std::string::npos);
    CHECK(mcq.find(render_respondent(tmpl, ds[4])) != std::string::npos);
    CHECK(code_of([&] { (void)render_mcq_prompt(tmpl, ds[0], std::span(options).first(3)); }) ==
          Errc::arity_mismatch);
}

TEST_CASE("templates reject instances from another dataset") {
    const auto tmpl = default_prompt_template(builtin_spec("income"));
    const auto other = Instance::from_id(builtin_spec("house_prices"), 0);
    CHECK_THROWS_AS(render_prediction_prompt(tmpl, other), Error);
}

TEST_CASE("response schema lists every feature") {
    const auto spec = builtin_spec("heart_disease");
    const auto schema = sce_response_schema(*spec);
    const auto text = schema.dump();
    for (const auto& f : spec->features) CHECK(text.find("\"" + f.name + "\"") != std::string::npos);
}

TEST_CASE("perturbation assets load and validate") {
    const auto income = default_prompt_template(builtin_spec("income"));
    const auto set = load_perturbations(asset_dir() / "perturbations" / "income_50.json", income);
    CHECK(set.size() == 50);
    for (const auto& t : set.templates) CHECK_NOTHROW(with_prediction_text(income, t));

    const auto house = default_prompt_template(builtin_spec("house_prices"));
    const auto sce_set =
        load_sce_perturbations(asset_dir() / "perturbations" / "house_prices_minimal_20.json", house,
                               PromptSetting::minimal);
    CHECK(sce_set.size() == 20);
    const auto variant = with_sce_text(house, PromptSetting::minimal, sce_set.templates[3]);
    CHECK(variant.prediction_hash() == house.prediction_hash());
    CHECK(variant.content_hash() != house.content_hash());

    const auto bad = scratch("bad.json");
    write_file(bad, R"({"templates": ["{age} {class_1} {class_2}"]})");
    CHECK(code_of([&] { (void)load_perturbations(bad, income); }) == Errc::invalid_entry);
    write_file(bad, R"({"templates": []})");
    CHECK(code_of([&] { (void)load_perturbations(bad, income); }) == Errc::invalid_entry);
    CHECK(code_of([&] { (void)load_perturbations(scratch("missing.json"), income); }) == Errc::io_error);
}

TEST_CASE("prompt assets must match their dataset and be complete") {
    const auto spec = builtin_spec("income");
    auto doc = nlohmann::json::parse(std::ifstream(default_prompt_path(*spec)));
    CHECK_NOTHROW(prompt_template_from_json(spec, doc));
    auto wrong = doc;
    wrong["dataset"] = "house_prices";
    CHECK_THROWS_AS(prompt_template_from_json(spec, wrong), Error);
    auto missing = doc;
    missing.erase("minimal");
    CHECK(code_of([&] { (void)prompt_template_from_json(spec, missing); }) == Errc::invalid_template);
    auto changed = doc;
    changed["prediction"] = "{age} {education}: {class_1} or {class_2}?";
    CHECK(prompt_template_from_json(spec, changed).prediction_hash() !=
          prompt_template_from_json(spec, doc).prediction_hash());
}
