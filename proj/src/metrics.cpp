#include "sce/metrics.hpp"

#include <algorithm>
#include <fstream>

#include <fmt/format.h>

#include "sce/errors.hpp"
#include "sce/text.hpp"

namespace sce {

std::string_view to_string(RecordStatus status) noexcept {
    switch (status) {
        case RecordStatus::valid: return "valid";
        case RecordStatus::invalid: return "invalid";
        case RecordStatus::malformed: return "malformed";
        case RecordStatus::no_counterfactual: return "no_counterfactual";
        case RecordStatus::unchanged: return "unchanged";
    }
    return "malformed";
}

bool is_valid(const SCERecord& record, const DecisionBoundary& boundary) {
    const auto* cf = record.counterfactual();
    if (cf == nullptr || cf->id() == record.source_id) return false;
    return lookup(boundary, *cf) == record.target;
}

double excess_distance(const SCERecord& record, const MinimalCFResult& minimal, const DistanceEvaluator& distance) {
    if (distance.kind().tag != minimal.kind) {
        throw Error(Errc::kind_mismatch, fmt::format("oracle used {} but the evaluator computes {}",
                                                     to_string(minimal.kind), to_string(distance.kind().tag)));
    }
    const auto* cf = record.counterfactual();
    if (cf == nullptr) throw Error(Errc::invalid_entry, "excess distance needs a parsed counterfactual");
    if (minimal.source_id != record.source_id) {
        throw Error(Errc::invalid_entry, "oracle result belongs to a different source instance");
    }
    return distance(record.source_id, cf->id()) - minimal.min_distance;
}

bool exact_match(const SCERecord& record, const MinimalCFResult& minimal) {
    const auto* cf = record.counterfactual();
    return cf != nullptr && minimal.source_id == record.source_id && minimal.contains(cf->id());
}

namespace {

std::optional<MinimalCFResult> oracle_for(const SCERecord& record, const DecisionBoundary& boundary,
                                          const DistanceEvaluator& distance,
                                          const std::vector<std::optional<MinimalCFResult>>* minima) {
    if (minima != nullptr && boundary.label(record.source_id) == record.predicted) {
        return minima->at(record.source_id);
    }
    try {
        return minimal_counterfactual(boundary, Instance::from_id(boundary.spec_ptr(), record.source_id), distance,
                                      record.target);
    } catch (const Error& e) {
        if (e.code() == Errc::no_counterfactual) return std::nullopt;
        throw;
    }
}

void check_record(const SCERecord& record, const DecisionBoundary& boundary) {
    if (record.source_id >= boundary.size()) {
        throw Error(Errc::invalid_entry, fmt::format("record source id {} is outside the dataset", record.source_id));
    }
    if ((record.predicted != 0 && record.predicted != 1) || record.target != 1 - record.predicted) {
        throw Error(Errc::invalid_entry,
                    fmt::format("record {}: target must be the complement of the prediction", record.source_id));
    }
    if (const auto* cf = record.counterfactual(); cf != nullptr && !same_spec(cf->spec(), boundary.spec())) {
        throw Error(Errc::dataset_mismatch, fmt::format("record {}: counterfactual from another dataset", record.source_id));
    }
}

}  // namespace

Evaluation evaluate_records(std::span<const SCERecord> records, const DecisionBoundary& boundary,
                            const DistanceEvaluator& distance,
                            const std::vector<std::optional<MinimalCFResult>>* minima) {
    if (records.empty()) throw Error(Errc::empty_input, "no SCE records to evaluate");
    if (!same_spec(boundary.spec(), *distance.spec())) {
        throw Error(Errc::dataset_mismatch, "distance evaluator and boundary cover different datasets");
    }
    if (minima != nullptr && minima->size() != boundary.size()) {
        throw Error(Errc::arity_mismatch, "precomputed oracle results do not cover the dataset");
    }
    std::vector<const SCERecord*> sorted;
    sorted.reserve(records.size());
    for (const auto& r : records) {
        check_record(r, boundary);
        sorted.push_back(&r);
    }
    std::sort(sorted.begin(), sorted.end(),
              [](const SCERecord* a, const SCERecord* b) { return a->source_id < b->source_id; });
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        if (sorted[i]->source_id == sorted[i - 1]->source_id) {
            throw Error(Errc::invalid_entry, fmt::format("duplicate record for instance {}", sorted[i]->source_id));
        }
    }

    Evaluation out;
    auto& rep = out.report;
    rep.dataset = boundary.spec().name;
    rep.kind = distance.kind().tag;
    rep.setting = sorted.front()->setting;
    rep.model_id = sorted.front()->model_id;
    rep.max_pairwise = distance.max_pairwise();
    rep.total = sorted.size();

    double ed_sum = 0.0;
    std::size_t matches = 0;
    out.rows.reserve(sorted.size());
    for (const auto* r : sorted) {
        DetailRow row;
        row.instance_id = r->source_id;
        row.predicted = r->predicted;
        row.target = r->target;
        const auto* cf = r->counterfactual();
        if (cf != nullptr) {
            row.sce = *cf;
            row.distance = distance(r->source_id, cf->id());
        }
        if (const auto* bad = r->malformed()) row.malformed_reason = std::string(to_string(bad->reason));

        const auto minimal = oracle_for(*r, boundary, distance, minima);
        if (minimal) row.min_distance = minimal->min_distance;

        if (!minimal) {
            row.status = RecordStatus::no_counterfactual;
            ++rep.no_counterfactual;
        } else if (cf == nullptr) {
            row.status = RecordStatus::malformed;
            ++rep.malformed;
        } else if (cf->id() == r->source_id) {
            row.status = RecordStatus::unchanged;
            ++rep.unchanged;
        } else if (boundary.label(cf->id()) == r->target) {
            row.status = RecordStatus::valid;
            ++rep.valid;
            row.ed = *row.distance - minimal->min_distance;
            ed_sum += *row.ed;
            row.exact_match = minimal->contains(cf->id());
            if (row.exact_match) ++matches;
        } else {
            row.status = RecordStatus::invalid;
            ++rep.invalid;
        }
        out.rows.push_back(std::move(row));
    }

    const std::size_t evaluable = rep.evaluable();
    if (evaluable > 0) {
        rep.validity_pct = 100.0 * static_cast<double>(rep.valid) / static_cast<double>(evaluable);
        rep.exact_match_pct = 100.0 * static_cast<double>(matches) / static_cast<double>(evaluable);
    }
    if (rep.valid > 0) {
        rep.mean_excess_distance = ed_sum / static_cast<double>(rep.valid);
        if (rep.max_pairwise > 0.0) rep.normalized_mean_ed = *rep.mean_excess_distance / rep.max_pairwise;
    }
    return out;
}

EvaluationReport aggregate(std::span<const SCERecord> records, const DecisionBoundary& boundary,
                           const DistanceEvaluator& distance) {
    return evaluate_records(records, boundary, distance).report;
}

std::vector<std::string> report_columns() {
    return {"model",     "dataset",           "setting",      "distance",     "replicate",    "total",
            "valid",     "invalid",           "malformed",    "no_counterfactual", "unchanged",
            "validity_pct", "mean_excess_distance", "exact_match_pct", "normalized_mean_ed", "max_pairwise_distance"};
}

std::vector<std::string> report_fields(const EvaluationReport& r) {
    return {r.model_id,
            r.dataset,
            std::string(to_string(r.setting)),
            std::string(to_string(r.kind)),
            std::to_string(r.replicate),
            std::to_string(r.total),
            std::to_string(r.valid),
            std::to_string(r.invalid),
            std::to_string(r.malformed),
            std::to_string(r.no_counterfactual),
            std::to_string(r.unchanged),
            format_fixed(r.validity_pct, 2),
            format_fixed(r.mean_excess_distance, 4),
            format_fixed(r.exact_match_pct, 2),
            format_fixed(r.normalized_mean_ed, 4),
            format_real(r.max_pairwise)};
}

namespace {

std::string join_csv(const std::vector<std::string>& fields) {
    std::string line;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i > 0) line.push_back(',');
        line += csv_escape(fields[i]);
    }
    return line;
}

std::ofstream open_output(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
    return out;
}

std::optional<double> optional_number(const std::string& text) {
    if (text == "NA") return std::nullopt;
    auto v = parse_number(text);
    if (!v) throw Error(Errc::parse_error, fmt::format("'{}' is not a number", text));
    return v;
}

std::size_t count_field(const std::string& text) {
    auto v = parse_number(text);
    if (!v || *v < 0 || *v != static_cast<double>(static_cast<std::size_t>(*v))) {
        throw Error(Errc::parse_error, fmt::format("'{}' is not a count", text));
    }
    return static_cast<std::size_t>(*v);
}

}  // namespace

void write_report_csv(std::span<const EvaluationReport> reports, const std::filesystem::path& path) {
    auto out = open_output(path);
    out << join_csv(report_columns()) << '\n';
    for (const auto& r : reports) out << join_csv(report_fields(r)) << '\n';
}

std::vector<EvaluationReport> read_report_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::io_error, "cannot open report " + path.string());
    std::string line;
    if (!std::getline(in, line) || csv_split_line(line) != report_columns()) {
        throw Error(Errc::parse_error, path.string() + ": not a report file");
    }
    std::vector<EvaluationReport> reports;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto f = csv_split_line(line);
        if (f.size() != report_columns().size()) {
            throw Error(Errc::parse_error, fmt::format("{}: row has {} fields", path.string(), f.size()));
        }
        EvaluationReport r;
        r.model_id = f[0];
        r.dataset = f[1];
        r.setting = parse_setting(f[2]);
        r.kind = parse_distance_tag(f[3]);
        r.replicate = static_cast<int>(count_field(f[4]));
        r.total = count_field(f[5]);
        r.valid = count_field(f[6]);
        r.invalid = count_field(f[7]);
        r.malformed = count_field(f[8]);
        r.no_counterfactual = count_field(f[9]);
        r.unchanged = count_field(f[10]);
        r.validity_pct = optional_number(f[11]);
        r.mean_excess_distance = optional_number(f[12]);
        r.exact_match_pct = optional_number(f[13]);
        r.normalized_mean_ed = optional_number(f[14]);
        r.max_pairwise = optional_number(f[15]).value_or(0.0);
        reports.push_back(std::move(r));
    }
    return reports;
}

void write_detail_csv(const Evaluation& evaluation, const DatasetSpec& spec, const std::filesystem::path& path) {
    auto out = open_output(path);
    std::vector<std::string> header = {"instance_id", "predicted", "target"};
    for (const auto& f : spec.features) header.push_back("sce_" + f.name);
    for (const char* c : {"status", "valid", "distance", "min_distance", "ed", "exact_match", "malformed_reason"}) {
        header.emplace_back(c);
    }
    out << join_csv(header) << '\n';
    for (const auto& row : evaluation.rows) {
        std::vector<std::string> fields = {std::to_string(row.instance_id), spec.label(row.predicted),
                                           spec.label(row.target)};
        for (std::size_t k = 0; k < spec.feature_count(); ++k) {
            fields.push_back(row.sce ? format_value(row.sce->value(k)) : "");
        }
        fields.emplace_back(to_string(row.status));
        fields.emplace_back(row.status == RecordStatus::valid ? "true" : "false");
        fields.push_back(format_real(row.distance));
        fields.push_back(format_real(row.min_distance));
        fields.push_back(format_real(row.ed));
        fields.emplace_back(row.exact_match ? "true" : "false");
        fields.push_back(row.malformed_reason);
        out << join_csv(fields) << '\n';
    }
}

nlohmann::ordered_json record_to_json(const SCERecord& record, const DatasetSpec& spec) {
    nlohmann::ordered_json doc;
    doc["source_id"] = record.source_id;
    doc["predicted"] = spec.label(record.predicted);
    doc["target"] = spec.label(record.target);
    doc["setting"] = to_string(record.setting);
    doc["model_id"] = record.model_id;
    if (const auto* cf = record.counterfactual()) {
        doc["outcome"] = {{"kind", "instance"}, {"sce", instance_to_json(*cf)}};
    } else {
        const auto& bad = *record.malformed();
        doc["outcome"] = {{"kind", "malformed"}, {"reason", to_string(bad.reason)}, {"detail", bad.detail}};
    }
    doc["raw_response"] = record.raw_response;
    return doc;
}

SCERecord record_from_json(const nlohmann::json& doc, const SpecPtr& spec) {
    try {
        SCERecord r;
        r.source_id = doc.at("source_id").get<std::size_t>();
        auto label = [&](const char* key) {
            const auto text = doc.at(key).get<std::string>();
            const auto index = spec->label_index(text);
            if (!index) throw Error(Errc::parse_error, fmt::format("unknown class label '{}'", text));
            return *index;
        };
        r.predicted = label("predicted");
        r.target = label("target");
        r.setting = parse_setting(doc.at("setting").get<std::string>());
        r.model_id = doc.at("model_id").get<std::string>();
        r.raw_response = doc.at("raw_response").get<std::string>();
        const auto& outcome = doc.at("outcome");
        const auto kind = outcome.at("kind").get<std::string>();
        if (kind == "instance") {
            r.outcome = instance_from_json(spec, outcome.at("sce"));
        } else if (kind == "malformed") {
            r.outcome = MalformedSCE{parse_malformed_reason(outcome.at("reason").get<std::string>()), r.raw_response,
                                     outcome.at("detail").get<std::string>()};
        } else {
            throw Error(Errc::parse_error, fmt::format("unknown outcome kind '{}'", kind));
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::parse_error, fmt::format("bad SCE record: {}", e.what()));
    }
}

void write_records(std::span<const SCERecord> records, const DatasetSpec& spec, const std::filesystem::path& path) {
    auto out = open_output(path);
    for (const auto& r : records) out << record_to_json(r, spec).dump() << '\n';
}

std::vector<SCERecord> read_records(const std::filesystem::path& path, const SpecPtr& spec) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::io_error, "cannot open records file " + path.string());
    std::vector<SCERecord> records;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (trim(line).empty()) continue;
        auto doc = nlohmann::json::parse(line, nullptr, false);
        if (doc.is_discarded()) {
            throw Error(Errc::parse_error, fmt::format("{}:{}: not a JSON object", path.string(), number));
        }
        records.push_back(record_from_json(doc, spec));
    }
    return records;
}

}  // namespace sce
