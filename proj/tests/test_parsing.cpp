#include <doctest.h>

#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sce/dataset.hpp"
#include "sce/prompting.hpp"

using namespace sce;

namespace {

nlohmann::json golden() {
    std::ifstream in(std::string(SCE_TEST_DATA_DIR) + "/sce_golden.json");
    REQUIRE(in.good());
    return nlohmann::json::parse(in);
}

}  // namespace

TEST_CASE("golden SCE responses") {
    const auto cases = golden();
    REQUIRE(cases.size() >= 20);
    std::size_t instances = 0;
    std::size_t malformed = 0;
    for (const auto& c : cases) {
        const auto name = c.at("name").get<std::string>();
        CAPTURE(name);
        const auto spec = builtin_spec(c.at("dataset").get<std::string>());
        const auto outcome = parse_sce_response(c.at("response").get<std::string>(), spec);
        const auto& expect = c.at("expect");
        if (expect.at("kind") == "instance") {
            const auto* x = std::get_if<Instance>(&outcome);
            REQUIRE(x != nullptr);
            const auto indices = expect.at("indices").get<std::vector<std::size_t>>();
            CHECK(std::vector<std::size_t>(x->indices().begin(), x->indices().end()) == indices);
            ++instances;
        } else {
            const auto* m = std::get_if<MalformedSCE>(&outcome);
            REQUIRE(m != nullptr);
            CHECK(to_string(m->reason) == expect.at("reason").get<std::string>());
            CHECK(m->raw_text == c.at("response").get<std::string>());
            ++malformed;
        }
    }
    CHECK(instances >= 5);
    CHECK(malformed >= 5);
}

TEST_CASE("malformed reasons round-trip through their names") {
    for (auto r : {MalformedSCE::Reason::not_parseable, MalformedSCE::Reason::missing_field,
                   MalformedSCE::Reason::out_of_domain_value, MalformedSCE::Reason::arity_mismatch}) {
        CHECK(parse_malformed_reason(to_string(r)) == r);
    }
}

TEST_CASE("property: every enumerated instance survives a render-parse round trip") {
    for (const auto& name : builtin_names()) {
        const auto spec = builtin_spec(name);
        const auto ds = enumerate_dataset(spec);
        for (std::size_t id = 0; id < ds.size(); id += 7) {
            const auto text = "Here you go:\n" + instance_to_json(ds[id]).dump(2);
            const auto outcome = parse_sce_response(text, spec);
            const auto* x = std::get_if<Instance>(&outcome);
            REQUIRE(x != nullptr);
            CHECK(x->id() == id);
        }
    }
}

TEST_CASE("the parser never throws on arbitrary text") {
    const auto spec = builtin_spec("income");
    const std::vector<std::string> inputs{"{", "}", "{{}}", "{\"age\": }", "[1,2,3]", "\"age\"", "null",
                                          "{\"age\": [35], \"education\": \"Doctorate degree\"}",
                                          "</think>", "<think>{\"age\": 30}"};
    for (const auto& text : inputs) {
        CAPTURE(text);
        CHECK_NOTHROW((void)parse_sce_response(text, spec));
    }
}
