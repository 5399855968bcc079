#include "sce/experiments.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <regex>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "sce/errors.hpp"
#include "sce/hashing.hpp"
#include "sce/mock_model.hpp"
#include "sce/text.hpp"
#include "sce/transport.hpp"

namespace sce {

namespace {

const std::vector<std::string>& run_config_keys() {
    static const std::vector<std::string> keys = {
        "name",         "dataset",       "dataset_file", "prompts",      "backend",          "settings",
        "distances",    "temperature",   "replicates",   "seed",         "output_dir",       "cache_dir",
        "boundary_file", "embedding",    "offline",      "mcq_trials",   "perturbations",    "sce_perturbations",
        "sensitivity_setting", "prior_run"};
    return keys;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::filesystem::path& p) {
    if (p.is_absolute() || base.empty()) return p;
    return base / p;
}

std::optional<std::filesystem::path> optional_path(const nlohmann::json& doc, const char* key,
                                                   const std::filesystem::path& base) {
    auto it = doc.find(key);
    if (it == doc.end() || it->is_null()) return std::nullopt;
    return resolve(base, it->get<std::string>());
}

nlohmann::json optional_path_json(const std::optional<std::filesystem::path>& p) {
    return p ? nlohmann::json(p->generic_string()) : nlohmann::json(nullptr);
}

std::string stage_name(PromptSetting setting) {
    return fmt::format("sce-{}", to_string(setting));
}

// Aggregates per-query failures into one error naming the stage and ids.
template <typename T>
void raise_failures(const std::vector<Outcome<T>>& outcomes, std::string_view stage) {
    std::vector<std::size_t> failed;
    const Error* first = nullptr;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        if (const auto* e = std::get_if<Error>(&outcomes[i])) {
            failed.push_back(i);
            if (first == nullptr) first = e;
        }
    }
    if (failed.empty()) return;
    std::string ids;
    for (std::size_t i = 0; i < failed.size() && i < 20; ++i) ids += (i ? "," : "") + std::to_string(failed[i]);
    if (failed.size() > 20) ids += ",...";
    throw Error(first->code(),
                fmt::format("stage {}: {} request(s) failed [{}]: {}", stage, failed.size(), ids, first->what()));
}

}  // namespace

void validate_run_config(const RunConfig& c) {
    if (c.dataset.empty() && !c.dataset_file) throw Error(Errc::config_error, "config needs a dataset or dataset_file");
    if (!c.backend.is_object()) throw Error(Errc::config_error, "config needs a backend object");
    if (c.replicates < 1) throw Error(Errc::config_error, "replicates must be at least 1");
    if (!std::isfinite(c.temperature) || c.temperature < 0.0) {
        throw Error(Errc::config_error, "temperature must be finite and non-negative");
    }
    if (c.settings.empty()) throw Error(Errc::config_error, "config needs at least one prompt setting");
    if (c.distances.empty()) throw Error(Errc::config_error, "config needs at least one distance");
    if (c.mcq_trials < 1) throw Error(Errc::config_error, "mcq_trials must be positive");
    if (c.output_dir.empty()) throw Error(Errc::config_error, "output_dir must not be empty");
}

RunConfig run_config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
    if (!doc.is_object()) throw Error(Errc::config_error, "run config must be a JSON object");
    for (const auto& [key, _] : doc.items()) {
        const auto& keys = run_config_keys();
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
            throw Error(Errc::config_error, fmt::format("unknown config field '{}'", key));
        }
    }
    RunConfig c;
    try {
        c.name = doc.value("name", c.name);
        c.dataset = doc.value("dataset", std::string{});
        c.dataset_file = optional_path(doc, "dataset_file", base_dir);
        c.prompts = optional_path(doc, "prompts", base_dir);
        c.backend = doc.at("backend");
        if (auto it = doc.find("settings"); it != doc.end()) {
            c.settings.clear();
            for (const auto& s : *it) c.settings.push_back(parse_setting(s.get<std::string>()));
        }
        if (auto it = doc.find("distances"); it != doc.end()) {
            c.distances.clear();
            for (const auto& d : *it) c.distances.push_back(parse_distance_tag(d.get<std::string>()));
        }
        c.temperature = doc.value("temperature", 0.0);
        c.replicates = doc.value("replicates", 1);
        c.seed = doc.value("seed", std::uint64_t{0});
        if (auto it = doc.find("output_dir"); it != doc.end()) c.output_dir = it->get<std::string>();
        if (auto it = doc.find("cache_dir"); it != doc.end() && !it->is_null()) c.cache_dir = it->get<std::string>();
        c.boundary_file = optional_path(doc, "boundary_file", base_dir);
        if (auto it = doc.find("embedding"); it != doc.end()) c.embedding = *it;
        c.offline = doc.value("offline", false);
        c.mcq_trials = doc.value("mcq_trials", c.mcq_trials);
        c.perturbations = optional_path(doc, "perturbations", base_dir);
        c.sce_perturbations = optional_path(doc, "sce_perturbations", base_dir);
        if (auto it = doc.find("sensitivity_setting"); it != doc.end()) {
            c.sensitivity_setting = parse_setting(it->get<std::string>());
        }
        c.prior_run = optional_path(doc, "prior_run", base_dir);
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::config_error, fmt::format("run config: {}", e.what()));
    }
    validate_run_config(c);
    return c;
}

nlohmann::ordered_json run_config_to_json(const RunConfig& c) {
    nlohmann::ordered_json doc;
    doc["name"] = c.name;
    doc["dataset"] = c.dataset;
    doc["dataset_file"] = optional_path_json(c.dataset_file);
    doc["prompts"] = optional_path_json(c.prompts);
    doc["backend"] = c.backend;
    auto settings = nlohmann::json::array();
    for (auto s : c.settings) settings.push_back(to_string(s));
    doc["settings"] = settings;
    auto distances = nlohmann::json::array();
    for (auto d : c.distances) distances.push_back(to_string(d));
    doc["distances"] = distances;
    doc["temperature"] = c.temperature;
    doc["replicates"] = c.replicates;
    doc["seed"] = c.seed;
    doc["output_dir"] = c.output_dir.generic_string();
    doc["cache_dir"] = optional_path_json(c.cache_dir);
    doc["boundary_file"] = optional_path_json(c.boundary_file);
    doc["embedding"] = c.embedding;
    doc["offline"] = c.offline;
    doc["mcq_trials"] = c.mcq_trials;
    doc["perturbations"] = optional_path_json(c.perturbations);
    doc["sce_perturbations"] = optional_path_json(c.sce_perturbations);
    doc["sensitivity_setting"] = to_string(c.sensitivity_setting);
    doc["prior_run"] = optional_path_json(c.prior_run);
    return doc;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::config_error, "cannot open config " + path.string());
    auto doc = nlohmann::json::parse(in, nullptr, false, true);
    if (doc.is_discarded()) throw Error(Errc::config_error, path.string() + ": not valid JSON");
    return run_config_from_json(doc, path.parent_path());
}

void apply_override(nlohmann::json& doc, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0) {
        throw Error(Errc::config_error, fmt::format("override '{}' is not key=value", assignment));
    }
    const std::string key(trim(assignment.substr(0, eq)));
    const std::string text(assignment.substr(eq + 1));
    auto value = nlohmann::json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;

    const auto path = split(key, '.');
    const auto& keys = run_config_keys();
    if (std::find(keys.begin(), keys.end(), path[0]) == keys.end()) {
        throw Error(Errc::config_error, fmt::format("override targets unknown field '{}'", path[0]));
    }
    if (path.size() > 1 && path[0] != "backend" && path[0] != "embedding") {
        throw Error(Errc::config_error, fmt::format("field '{}' has no nested keys", path[0]));
    }
    nlohmann::json* node = &doc;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        node = &(*node)[path[i]];
        if (!node->is_object()) throw Error(Errc::config_error, fmt::format("'{}' is not an object", path[i]));
    }
    (*node)[path.back()] = value;
}

std::unique_ptr<Backend> make_backend(const nlohmann::json& doc, const DatasetSpec& spec, double temperature) {
    if (!doc.is_object()) throw Error(Errc::config_error, "backend must be an object");
    if (doc.contains("temperature")) {
        throw Error(Errc::config_error, "set temperature at the run level, not inside the backend");
    }
    const std::string type = doc.value("type", std::string{});
    if (type == "mock") {
        auto mock = mock_spec_from_json(doc, &spec);
        mock.temperature = temperature;
        return std::make_unique<MockBackend>(std::move(mock));
    }
    if (type == "remote") {
        auto endpoint_doc = doc;
        endpoint_doc.erase("type");
        auto endpoint = endpoint_from_json(endpoint_doc);
        endpoint.temperature = temperature;
        validate_endpoint(endpoint);
        auto transport = std::make_shared<HttpTransport>(endpoint.base_url, endpoint.timeout);
        return std::make_unique<RemoteChatBackend>(std::move(endpoint), std::move(transport));
    }
    throw Error(Errc::config_error, fmt::format("unknown backend type '{}'", type));
}

DistanceKind make_distance(DistanceTag tag, const RunConfig& config, std::shared_ptr<const PromptTemplate> prompt) {
    switch (tag) {
        case DistanceTag::gower: return DistanceKind::gower();
        case DistanceTag::l1_mad: return DistanceKind::l1_mad();
        case DistanceTag::l2_std: return DistanceKind::l2_std();
        case DistanceTag::semantic:
            return DistanceKind::semantic(embedding_provider_from_json(config.embedding), std::move(prompt));
    }
    throw Error(Errc::config_error, "unknown distance");
}

RunContext open_run(RunConfig config) {
    validate_run_config(config);
    RunContext run;
    if (config.dataset_file) {
        run.spec = load_dataset_spec(*config.dataset_file);
        if (!config.dataset.empty() && config.dataset != run.spec->name) {
            throw Error(Errc::config_error, fmt::format("dataset '{}' does not match the spec file's '{}'",
                                                        config.dataset, run.spec->name));
        }
    } else {
        run.spec = builtin_spec(config.dataset);
    }
    run.dataset = std::make_unique<Dataset>(enumerate_dataset(run.spec));
    run.prompt = std::make_shared<const PromptTemplate>(config.prompts ? load_prompt_template(run.spec, *config.prompts)
                                                                       : default_prompt_template(run.spec));
    auto backend_doc = config.backend;
    if (backend_doc.value("type", std::string{}) == "mock") {
        // mock randomness follows the run seed unless pinned in the backend itself
        if (!backend_doc.contains("seed")) backend_doc["seed"] = derive_seed(config.seed, "mock-policy");
        if (!backend_doc.contains("noise_seed")) backend_doc["noise_seed"] = derive_seed(config.seed, "mock-noise");
    }
    run.backend = make_backend(backend_doc, *run.spec, config.temperature);
    run.cache = std::make_unique<CacheStore>(config.effective_cache_dir());
    run.config = std::move(config);
    return run;
}

RunManifest::RunManifest(const RunContext& run, std::string command)
    : dir_(run.config.output_dir), command_(std::move(command)) {
    doc_["command"] = command_;
    doc_["code_version"] = kCodeVersion;
    doc_["status"] = "started";
    doc_["config"] = run_config_to_json(run.config);
    doc_["dataset"] = run.spec->name;
    doc_["spec_hash"] = spec_hash(*run.spec);
    doc_["prompt_hash"] = run.prompt->content_hash();
    doc_["prediction_template_hash"] = run.prompt->prediction_hash();
    doc_["model_id"] = run.backend->model_id();
    doc_["inputs"] = nlohmann::ordered_json::object();
    doc_["outputs"] = nlohmann::ordered_json::object();
    const auto& c = run.config;
    for (const auto& p : {c.dataset_file, c.prompts, c.boundary_file, c.perturbations, c.sce_perturbations}) {
        if (p) add_input(*p);
    }
    if (!c.prompts) add_input(default_prompt_path(*run.spec));
}

void RunManifest::add_input(const std::filesystem::path& path) {
    doc_["inputs"][path.generic_string()] = sha256_file(path);
}

void RunManifest::add_output(const std::filesystem::path& path) {
    outputs_.push_back(path);
}

void RunManifest::set(const std::string& key, nlohmann::ordered_json value) {
    doc_[key] = std::move(value);
}

std::filesystem::path RunManifest::path() const {
    return dir_ / fmt::format("manifest_{}.json", command_);
}

void RunManifest::write(std::string_view status) {
    doc_["status"] = status;
    std::filesystem::create_directories(dir_);
    std::ofstream out(path(), std::ios::binary);
    if (!out) throw Error(Errc::io_error, "cannot write " + path().string());
    out << doc_.dump(2) << '\n';
}

void RunManifest::write_started() {
    write("started");
}

void RunManifest::finalize() {
    auto outputs = nlohmann::ordered_json::object();
    for (const auto& p : outputs_) {
        outputs[std::filesystem::relative(p, dir_).generic_string()] = sha256_file(p);
    }
    doc_["outputs"] = outputs;
    write("complete");
}

DecisionBoundary obtain_boundary(RunContext& run, Gateway& gateway, int replicate) {
    if (run.config.boundary_file) return read_boundary(run.spec, *run.config.boundary_file);
    return sweep_predictions(gateway, *run.dataset, *run.prompt, replicate);
}

std::vector<SCERecord> elicit_sces(Gateway& gateway, const DecisionBoundary& boundary, const PromptTemplate& tmpl,
                                   PromptSetting setting, int replicate) {
    if (!same_spec(boundary.spec(), *tmpl.spec)) {
        throw Error(Errc::dataset_mismatch, "prompt template and boundary cover different datasets");
    }
    const auto& spec = boundary.spec_ptr();
    const auto ranges = full_ranges(*spec);
    const auto schema = sce_response_schema(*spec);
    std::vector<Query> queries;
    queries.reserve(boundary.size());
    for (std::size_t id = 0; id < boundary.size(); ++id) {
        auto x = Instance::from_id(spec, id);
        const int predicted = boundary.label(id);
        Query q;
        q.kind = QueryKind::sce;
        q.prompt = render_sce_prompt(tmpl, setting, x, spec->label(predicted), ranges);
        q.response_schema = schema;
        q.subject = std::move(x);
        q.labels = spec->task.class_labels;
        q.predicted = predicted;
        q.setting = setting;
        q.replicate = replicate;
        queries.push_back(std::move(q));
    }
    auto outcomes = gateway.complete_all(queries);
    raise_failures(outcomes, stage_name(setting));
    std::vector<SCERecord> records;
    records.reserve(outcomes.size());
    const auto model = gateway.backend().model_id();
    for (std::size_t id = 0; id < outcomes.size(); ++id) {
        SCERecord r;
        r.source_id = id;
        r.predicted = boundary.label(id);
        r.target = 1 - r.predicted;
        r.raw_response = std::get<std::string>(outcomes[id]);
        r.outcome = parse_sce_response(r.raw_response, spec);
        r.setting = setting;
        r.model_id = model;
        records.push_back(std::move(r));
    }
    return records;
}

namespace {

void add_stats(GatewayStats& total, const GatewayStats& s) {
    total.cache_hits += s.cache_hits;
    total.cache_misses += s.cache_misses;
    total.transport_calls += s.transport_calls;
}

nlohmann::ordered_json stats_json(const GatewayStats& s) {
    return {{"cache_hits", s.cache_hits}, {"cache_misses", s.cache_misses}, {"transport_calls", s.transport_calls}};
}

}  // namespace

SceRunResult run_sce_experiment(RunContext& run) {
    const auto& cfg = run.config;
    RunManifest manifest(run, "sce");
    manifest.write_started();

    const std::string model = run.backend->model_id();
    const std::string dataset = run.spec->name;
    GatewayOptions options{cfg.offline};
    SceRunResult result;

    std::vector<std::unique_ptr<DistanceEvaluator>> evaluators;
    for (auto tag : cfg.distances) {
        evaluators.push_back(std::make_unique<DistanceEvaluator>(*run.dataset, make_distance(tag, cfg, run.prompt)));
    }

    for (int r = 0; r < cfg.replicates; ++r) {
        Gateway predict_gw(*run.backend, &run.cache->open(model, dataset, "predict"), options);
        auto boundary = std::make_shared<const DecisionBoundary>(obtain_boundary(run, predict_gw, r));
        add_stats(result.stats, predict_gw.stats());
        const auto boundary_path = cfg.output_dir / fmt::format("boundary_r{}.jsonl", r);
        write_boundary(*boundary, boundary_path);
        manifest.add_output(boundary_path);
        spdlog::info("replicate {}: boundary has {} of {} instances labelled '{}'", r,
                     std::count(boundary->labels().begin(), boundary->labels().end(), std::uint8_t{0}),
                     boundary->size(), run.spec->label(0));
        if (auto* mock = dynamic_cast<MockBackend*>(run.backend.get())) mock->inject_boundary(boundary);

        std::vector<std::vector<std::optional<MinimalCFResult>>> minima;
        for (const auto& e : evaluators) minima.push_back(minimal_counterfactuals(*boundary, *e));

        for (auto setting : cfg.settings) {
            Gateway sce_gw(*run.backend, &run.cache->open(model, dataset, stage_name(setting)), options);
            auto records = elicit_sces(sce_gw, *boundary, *run.prompt, setting, r);
            add_stats(result.stats, sce_gw.stats());
            const auto records_path = cfg.output_dir / fmt::format("records_{}_r{}.jsonl", to_string(setting), r);
            write_records(records, *run.spec, records_path);
            manifest.add_output(records_path);
            for (std::size_t d = 0; d < evaluators.size(); ++d) {
                auto evaluation = evaluate_records(records, *boundary, *evaluators[d], &minima[d]);
                evaluation.report.replicate = r;
                const auto detail_path = cfg.output_dir / fmt::format("detail_{}_{}_r{}.csv", to_string(setting),
                                                                      to_string(cfg.distances[d]), r);
                write_detail_csv(evaluation, *run.spec, detail_path);
                manifest.add_output(detail_path);
                result.detail_files.push_back(detail_path);
                result.reports.push_back(std::move(evaluation.report));
            }
        }
    }
    result.report_file = cfg.output_dir / "report.csv";
    write_report_csv(result.reports, result.report_file);
    manifest.add_output(result.report_file);
    manifest.set("cache", stats_json(result.stats));
    manifest.finalize();
    return result;
}

std::vector<MCQTrial> generate_mcq_trials(const Dataset& dataset, std::size_t count, std::uint64_t seed) {
    constexpr std::size_t kOptions = 4;
    if (count == 0) throw Error(Errc::invalid_entry, "mcq trial count must be positive");
    const std::size_t n = dataset.size();
    if (n < kOptions + 1) throw Error(Errc::invalid_entry, "mcq trials need at least 5 instances");
    const DistanceEvaluator gower_d(dataset, DistanceKind::gower());
    std::mt19937_64 rng(derive_seed(seed, "mcq-trials"));
    std::set<std::vector<std::size_t>> seen;
    std::vector<MCQTrial> trials;
    trials.reserve(count);
    const std::size_t max_attempts = 100 * count + 1000;
    for (std::size_t attempt = 0; attempt < max_attempts && trials.size() < count; ++attempt) {
        const std::size_t anchor = uniform_index(rng, n);
        std::vector<std::size_t> picks;
        while (picks.size() < kOptions) {
            const std::size_t c = uniform_index(rng, n);
            if (c != anchor && std::find(picks.begin(), picks.end(), c) == picks.end()) picks.push_back(c);
        }
        std::vector<std::size_t> key = picks;
        std::sort(key.begin(), key.end());
        key.insert(key.begin(), anchor);
        if (!seen.insert(key).second) continue;

        for (std::size_t i = kOptions - 1; i > 0; --i) std::swap(picks[i], picks[uniform_index(rng, i + 1)]);
        std::size_t best = 0;
        std::size_t ties = 1;
        double best_d = gower_d(anchor, picks[0]);
        for (std::size_t i = 1; i < kOptions; ++i) {
            const double d = gower_d(anchor, picks[i]);
            if (d < best_d) {
                best_d = d;
                best = i;
                ties = 1;
            } else if (d == best_d) {
                ++ties;
            }
        }
        if (ties > 1) continue;
        MCQTrial trial{dataset[anchor], {}, static_cast<int>(best)};
        for (auto id : picks) trial.options.push_back(dataset[id]);
        trials.push_back(std::move(trial));
    }
    if (trials.size() < count) {
        throw Error(Errc::exhaustion, fmt::format("generated only {} of {} mcq trials after {} attempts", trials.size(),
                                                  count, max_attempts));
    }
    return trials;
}

std::optional<int> parse_mcq_answer(std::string_view text) {
    if (auto end = text.rfind("</think>"); end != std::string_view::npos) text.remove_prefix(end + 8);
    const auto t = trim(text);
    auto letter = [](char c) -> std::optional<int> {
        if (c >= 'A' && c <= 'D') return c - 'A';
        if (c >= 'a' && c <= 'd') return c - 'a';
        return std::nullopt;
    };
    if (t.size() == 1) return letter(t[0]);
    if (t.size() == 2 && (t[1] == ')' || t[1] == '.' || t[1] == ':')) return letter(t[0]);
    if (t.size() == 3 && t[0] == '(' && t[2] == ')') return letter(t[1]);

    static const std::regex keyed(R"((?:[Aa]nswer|ANSWER|[Oo]ption|OPTION|[Cc]hoice)\s*(?:is)?\s*[:\-]?\s*\**\(?([A-D])\)?\**(?![A-Za-z]))");
    const std::string s(t);
    std::optional<int> last;
    for (auto it = std::sregex_iterator(s.begin(), s.end(), keyed); it != std::sregex_iterator(); ++it) {
        last = (*it)[1].str()[0] - 'A';
    }
    if (last) return last;

    static const std::regex bare(R"((?:^|[^A-Za-z0-9])([A-D])(?![A-Za-z0-9]))");
    std::set<int> found;
    for (auto it = std::sregex_iterator(s.begin(), s.end(), bare); it != std::sregex_iterator(); ++it) {
        found.insert((*it)[1].str()[0] - 'A');
    }
    if (found.size() == 1) return *found.begin();
    return std::nullopt;
}

McqResult run_mcq_experiment(Gateway& gateway, const PromptTemplate& tmpl, std::span<const MCQTrial> trials) {
    if (trials.empty()) throw Error(Errc::empty_input, "no mcq trials");
    std::vector<Query> queries;
    queries.reserve(trials.size());
    for (const auto& t : trials) {
        Query q;
        q.kind = QueryKind::mcq;
        q.prompt = render_mcq_prompt(tmpl, t.anchor, t.options);
        q.subject = t.anchor;
        q.options = t.options;
        queries.push_back(std::move(q));
    }
    auto outcomes = gateway.complete_all(queries);
    raise_failures(outcomes, "mcq");
    McqResult result;
    result.total = trials.size();
    for (std::size_t i = 0; i < trials.size(); ++i) {
        auto raw = std::get<std::string>(outcomes[i]);
        const auto answer = parse_mcq_answer(raw);
        if (!answer) {
            ++result.unresolved;
        } else if (*answer == trials[i].correct) {
            ++result.correct;
        }
        result.answers.push_back(answer);
        result.raw.push_back(std::move(raw));
    }
    result.accuracy_pct = 100.0 * static_cast<double>(result.correct) / static_cast<double>(result.total);
    return result;
}

ConsistencyResult run_boundary_consistency(Gateway& gateway, const Dataset& dataset, const PromptTemplate& base,
                                           const PerturbationSet& perturbations,
                                           std::span<const CounterfactualProbe> invalid_probes) {
    if (perturbations.size() < 2) throw Error(Errc::invalid_entry, "consistency needs at least two perturbations");
    ConsistencyResult result;
    result.boundaries.reserve(perturbations.size());
    for (std::size_t i = 0; i < perturbations.size(); ++i) {
        const auto tmpl = with_prediction_text(base, perturbations.templates[i]);
        try {
            result.boundaries.push_back(sweep_predictions(gateway, dataset, tmpl));
        } catch (const Error& e) {
            throw Error(e.code(), fmt::format("perturbation {}: {}", i, e.what()));
        }
    }
    result.stats = boundary_agreement(result.boundaries, invalid_probes);
    return result;
}

std::vector<CounterfactualProbe> invalid_probes(std::span<const SCERecord> records, const DecisionBoundary& boundary) {
    std::vector<CounterfactualProbe> probes;
    for (const auto& r : records) {
        const auto* cf = r.counterfactual();
        if (cf == nullptr || cf->id() == r.source_id) continue;
        if (lookup(boundary, *cf) != r.target) probes.push_back({r.source_id, cf->id(), r.target});
    }
    return probes;
}

std::vector<SensitivityResult> run_prompt_sensitivity(Gateway& gateway, const DecisionBoundary& boundary,
                                                      const PromptTemplate& base, PromptSetting setting,
                                                      const PerturbationSet& variants,
                                                      std::span<const DistanceEvaluator* const> distances) {
    if (variants.size() == 0) throw Error(Errc::empty_input, "no prompt variants");
    if (distances.empty()) throw Error(Errc::config_error, "sensitivity needs at least one distance");
    std::vector<std::vector<std::optional<MinimalCFResult>>> minima;
    for (const auto* d : distances) minima.push_back(minimal_counterfactuals(boundary, *d));
    std::vector<SensitivityResult> results;
    for (std::size_t v = 0; v < variants.size(); ++v) {
        const auto tmpl = with_sce_text(base, setting, variants.templates[v]);
        const auto records = elicit_sces(gateway, boundary, tmpl, setting);
        SensitivityResult entry{v, {}};
        for (std::size_t d = 0; d < distances.size(); ++d) {
            entry.reports.push_back(evaluate_records(records, boundary, *distances[d], &minima[d]).report);
        }
        results.push_back(std::move(entry));
    }
    return results;
}

}  // namespace sce
