#include "sce/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <tuple>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "sce/boundary.hpp"
#include "sce/errors.hpp"
#include "sce/experiments.hpp"
#include "sce/hashing.hpp"
#include "sce/metrics.hpp"
#include "sce/mock_model.hpp"
#include "sce/text.hpp"

namespace sce {

namespace {

struct RunOptions {
    std::string config;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    bool offline = false;
    std::string out;
};

void add_run_options(CLI::App* cmd, RunOptions& o) {
    cmd->add_option("--config", o.config, "run configuration (JSON)")->required();
    cmd->add_option("--set", o.overrides, "override a config field, key=value")->take_all();
    cmd->add_option("--seed", o.seed, "override the run seed");
    cmd->add_flag("--offline", o.offline, "serve every request from the cache; a miss is an error");
    cmd->add_option("--out", o.out, "output directory");
}

RunConfig resolve_config(const RunOptions& o) {
    std::ifstream in(o.config);
    if (!in) throw Error(Errc::config_error, "cannot open config " + o.config);
    auto doc = nlohmann::json::parse(in, nullptr, false, true);
    if (doc.is_discarded()) throw Error(Errc::config_error, o.config + ": not valid JSON");
    for (const auto& s : o.overrides) apply_override(doc, s);
    if (o.seed) doc["seed"] = *o.seed;
    if (o.offline) doc["offline"] = true;
    if (!o.out.empty()) doc["output_dir"] = o.out;
    return run_config_from_json(doc, std::filesystem::path(o.config).parent_path());
}

void setup_logging(int verbosity) {
    auto logger = spdlog::get("sce");
    if (!logger) logger = spdlog::stderr_color_mt("sce");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");
    spdlog::set_level(verbosity >= 2 ? spdlog::level::debug
                      : verbosity == 1 ? spdlog::level::info
                                       : spdlog::level::warn);
}

std::string one_line(std::string text) {
    std::replace(text.begin(), text.end(), '\n', ' ');
    std::replace(text.begin(), text.end(), '\r', ' ');
    return text;
}

void print_cache_line(const GatewayStats& s) {
    const std::size_t requests = s.cache_hits + s.cache_misses;
    const double pct = requests == 0 ? 100.0 : 100.0 * static_cast<double>(s.cache_hits) / static_cast<double>(requests);
    fmt::print("cache: hits={} misses={} hit_rate={:.2f}%\n", s.cache_hits, s.cache_misses, pct);
}

void print_reports(std::span<const EvaluationReport> reports) {
    fmt::print("{:<16} {:<10} {:>3} {:>6} {:>9} {:>10} {:>9} {:>10}\n", "setting", "distance", "rep", "total",
               "validity%", "mean_ed", "exact%", "norm_ed");
    for (const auto& r : reports) {
        fmt::print("{:<16} {:<10} {:>3} {:>6} {:>9} {:>10} {:>9} {:>10}\n", to_string(r.setting), to_string(r.kind),
                   r.replicate, r.total, format_fixed(r.validity_pct, 2), format_fixed(r.mean_excess_distance, 4),
                   format_fixed(r.exact_match_pct, 2), format_fixed(r.normalized_mean_ed, 4));
    }
}

int cmd_dataset_show(const std::string& name, const std::string& spec_file) {
    const auto spec = spec_file.empty() ? builtin_spec(name) : load_dataset_spec(spec_file);
    fmt::print("dataset: {}\n", spec->name);
    fmt::print("N = {}\n", spec->size());
    fmt::print("features: {}\n", spec->feature_count());
    for (const auto& f : spec->features) {
        fmt::print("  {} ({}): {} values [{} .. {}]\n", f.name, to_string(f.kind), f.cardinality(),
                   format_value(f.values.front()), format_value(f.values.back()));
    }
    fmt::print("class labels: \"{}\" / \"{}\"\n", spec->task.class_labels[0], spec->task.class_labels[1]);
    return 0;
}

int cmd_dataset_export(const std::string& name, const std::string& spec_file, const std::string& out) {
    const auto spec = spec_file.empty() ? builtin_spec(name) : load_dataset_spec(spec_file);
    const std::filesystem::path dir = out.empty() ? std::filesystem::path(".") : std::filesystem::path(out);
    std::filesystem::create_directories(dir);
    save_dataset_spec(*spec, dir / (spec->name + ".spec.json"));
    const auto csv_path = dir / (spec->name + ".csv");
    std::ofstream csv(csv_path, std::ios::binary);
    if (!csv) throw Error(Errc::io_error, "cannot write " + csv_path.string());
    csv << "instance_id";
    for (const auto& f : spec->features) csv << ',' << csv_escape(f.name);
    csv << '\n';
    for (const auto& x : enumerate_dataset(spec)) {
        csv << x.id();
        for (std::size_t k = 0; k < spec->feature_count(); ++k) csv << ',' << csv_escape(format_value(x.value(k)));
        csv << '\n';
    }
    fmt::print("wrote {} and {}\n", (dir / (spec->name + ".spec.json")).string(), csv_path.string());
    return 0;
}

int cmd_sweep(const RunOptions& o) {
    auto run = open_run(resolve_config(o));
    RunManifest manifest(run, "sweep");
    manifest.write_started();
    GatewayStats total;
    for (int r = 0; r < run.config.replicates; ++r) {
        Gateway gw(*run.backend, &run.cache->open(run.backend->model_id(), run.spec->name, "predict"),
                   GatewayOptions{run.config.offline});
        const auto boundary = sweep_predictions(gw, *run.dataset, *run.prompt, r);
        const auto path = run.config.output_dir / fmt::format("boundary_r{}.jsonl", r);
        write_boundary(boundary, path);
        manifest.add_output(path);
        const auto s = gw.stats();
        total.cache_hits += s.cache_hits;
        total.cache_misses += s.cache_misses;
        total.transport_calls += s.transport_calls;
        fmt::print("replicate {}: {} instances, {} labelled \"{}\" -> {}\n", r, boundary.size(),
                   std::count(boundary.labels().begin(), boundary.labels().end(), std::uint8_t{0}),
                   run.spec->label(0), path.string());
    }
    manifest.set("cache", {{"cache_hits", total.cache_hits}, {"cache_misses", total.cache_misses}});
    manifest.finalize();
    print_cache_line(total);
    return 0;
}

int cmd_sce(const RunOptions& o) {
    auto run = open_run(resolve_config(o));
    const auto result = run_sce_experiment(run);
    print_reports(result.reports);
    print_cache_line(result.stats);
    fmt::print("report: {}\n", result.report_file.string());
    return 0;
}

std::filesystem::path boundary_for_records(const std::filesystem::path& records) {
    // records_<setting>_r<k>.jsonl pairs with boundary_r<k>.jsonl
    const std::string stem = records.stem().string();
    const auto pos = stem.rfind("_r");
    const std::string suffix = pos == std::string::npos ? "_r0" : stem.substr(pos);
    return records.parent_path() / ("boundary" + suffix + ".jsonl");
}

int cmd_evaluate(const RunOptions& o, std::vector<std::string> record_files, const std::string& boundary_file) {
    auto run = open_run(resolve_config(o));
    const auto& dir = run.config.output_dir;
    if (record_files.empty()) {
        if (std::filesystem::is_directory(dir)) {
            for (const auto& entry : std::filesystem::directory_iterator(dir)) {
                const auto name = entry.path().filename().string();
                if (name.starts_with("records_") && name.ends_with(".jsonl")) record_files.push_back(entry.path().string());
            }
        }
        std::sort(record_files.begin(), record_files.end());
        if (record_files.empty()) throw Error(Errc::empty_input, "no records files found in " + dir.string());
    }
    RunManifest manifest(run, "evaluate");
    for (const auto& f : record_files) manifest.add_input(f);
    manifest.write_started();

    std::vector<std::unique_ptr<DistanceEvaluator>> evaluators;
    for (auto tag : run.config.distances) {
        evaluators.push_back(std::make_unique<DistanceEvaluator>(*run.dataset, make_distance(tag, run.config, run.prompt)));
    }
    std::vector<EvaluationReport> reports;
    for (const auto& f : record_files) {
        const std::filesystem::path records_path(f);
        const std::filesystem::path bpath = !boundary_file.empty() ? std::filesystem::path(boundary_file)
                                            : run.config.boundary_file ? *run.config.boundary_file
                                                                       : boundary_for_records(records_path);
        const auto boundary = read_boundary(run.spec, bpath);
        const auto records = read_records(records_path, run.spec);
        for (std::size_t d = 0; d < evaluators.size(); ++d) {
            auto evaluation = evaluate_records(records, boundary, *evaluators[d]);
            const auto detail = dir / fmt::format("evaluate_{}_{}.csv", records_path.stem().string(),
                                                  to_string(run.config.distances[d]));
            write_detail_csv(evaluation, *run.spec, detail);
            manifest.add_output(detail);
            reports.push_back(std::move(evaluation.report));
        }
    }
    const auto report_path = dir / "evaluate_report.csv";
    write_report_csv(reports, report_path);
    manifest.add_output(report_path);
    manifest.finalize();
    print_reports(reports);
    fmt::print("report: {}\n", report_path.string());
    return 0;
}

int cmd_mcq(const RunOptions& o) {
    auto run = open_run(resolve_config(o));
    RunManifest manifest(run, "mcq");
    manifest.write_started();
    const auto trials = generate_mcq_trials(*run.dataset, run.config.mcq_trials, run.config.seed);
    Gateway gw(*run.backend, &run.cache->open(run.backend->model_id(), run.spec->name, "mcq"),
               GatewayOptions{run.config.offline});
    const auto result = run_mcq_experiment(gw, *run.prompt, trials);

    const auto& dir = run.config.output_dir;
    const auto results_path = dir / "mcq_results.csv";
    {
        std::ofstream out(results_path, std::ios::binary);
        if (!out) throw Error(Errc::io_error, "cannot write " + results_path.string());
        out << "trial,anchor_id,option_a,option_b,option_c,option_d,correct,answer,is_correct\n";
        for (std::size_t i = 0; i < trials.size(); ++i) {
            const auto& t = trials[i];
            const auto& a = result.answers[i];
            out << i << ',' << t.anchor.id();
            for (const auto& opt : t.options) out << ',' << opt.id();
            out << ',' << static_cast<char>('A' + t.correct) << ','
                << (a ? std::string(1, static_cast<char>('A' + *a)) : std::string("NA")) << ','
                << (a && *a == t.correct ? "true" : "false") << '\n';
        }
    }
    manifest.add_output(results_path);
    const auto summary_path = dir / "mcq_summary.json";
    nlohmann::ordered_json summary = {{"model_id", run.backend->model_id()},
                                      {"dataset", run.spec->name},
                                      {"trials", result.total},
                                      {"correct", result.correct},
                                      {"unresolved", result.unresolved},
                                      {"accuracy_pct", format_fixed(result.accuracy_pct, 2)}};
    {
        std::ofstream out(summary_path, std::ios::binary);
        out << summary.dump(2) << '\n';
    }
    manifest.add_output(summary_path);
    manifest.finalize();
    fmt::print("mcq: {} trials, {} correct, {} unresolved, accuracy {:.2f}%\n", result.total, result.correct,
               result.unresolved, result.accuracy_pct);
    print_cache_line(gw.stats());
    return 0;
}

std::vector<CounterfactualProbe> prior_probes(const RunContext& run) {
    std::vector<CounterfactualProbe> probes;
    if (!run.config.prior_run) return probes;
    const auto& dir = *run.config.prior_run;
    const auto boundary = read_boundary(run.spec, dir / "boundary_r0.jsonl");
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        const auto name = entry.path().filename().string();
        if (name.starts_with("records_") && name.ends_with("_r0.jsonl")) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        const auto records = read_records(f, run.spec);
        const auto found = invalid_probes(records, boundary);
        probes.insert(probes.end(), found.begin(), found.end());
    }
    return probes;
}

int cmd_consistency(const RunOptions& o) {
    auto run = open_run(resolve_config(o));
    if (!run.config.perturbations) throw Error(Errc::config_error, "consistency needs a perturbations file");
    const auto perturbations = load_perturbations(*run.config.perturbations, *run.prompt);
    const auto probes = prior_probes(run);
    RunManifest manifest(run, "consistency");
    manifest.write_started();
    Gateway gw(*run.backend, &run.cache->open(run.backend->model_id(), run.spec->name, "predict"),
               GatewayOptions{run.config.offline});
    const auto result = run_boundary_consistency(gw, *run.dataset, *run.prompt, perturbations, probes);

    const auto& dir = run.config.output_dir;
    for (std::size_t i = 0; i < result.boundaries.size(); ++i) {
        const auto path = dir / fmt::format("boundary_p{:02}.jsonl", i);
        write_boundary(result.boundaries[i], path);
        manifest.add_output(path);
    }
    const auto agreement_path = dir / "agreement.csv";
    {
        std::ofstream out(agreement_path, std::ios::binary);
        out << "instance_id,class1_fraction\n";
        for (std::size_t id = 0; id < result.stats.class1_fraction.size(); ++id) {
            out << id << ',' << format_real(result.stats.class1_fraction[id]) << '\n';
        }
    }
    manifest.add_output(agreement_path);
    const auto& s = result.stats;
    nlohmann::ordered_json summary = {{"model_id", run.backend->model_id()},
                                      {"dataset", run.spec->name},
                                      {"perturbation_set", perturbations.name},
                                      {"perturbations", perturbations.size()},
                                      {"unanimity", s.unanimity},
                                      {"mean_pairwise_disagreement", s.mean_pairwise_disagreement},
                                      {"max_pairwise_flips", s.max_pairwise_flips},
                                      {"invalid_probes", s.invalid_probes},
                                      {"remain_invalid", s.remain_invalid ? nlohmann::json(*s.remain_invalid)
                                                                          : nlohmann::json(nullptr)}};
    const auto summary_path = dir / "consistency_summary.json";
    {
        std::ofstream out(summary_path, std::ios::binary);
        out << summary.dump(2) << '\n';
    }
    manifest.add_output(summary_path);
    manifest.finalize();
    fmt::print("consistency: {} boundaries, unanimity {:.4f}, mean pairwise disagreement {:.4f}\n",
               result.boundaries.size(), s.unanimity, s.mean_pairwise_disagreement);
    if (s.remain_invalid) fmt::print("remain-invalid: {:.4f} of {} probes\n", *s.remain_invalid, s.invalid_probes);
    print_cache_line(gw.stats());
    return 0;
}

int cmd_sensitivity(const RunOptions& o) {
    auto run = open_run(resolve_config(o));
    if (!run.config.sce_perturbations) throw Error(Errc::config_error, "sensitivity needs an sce_perturbations file");
    const auto setting = run.config.sensitivity_setting;
    const auto variants = load_sce_perturbations(*run.config.sce_perturbations, *run.prompt, setting);
    RunManifest manifest(run, "sensitivity");
    manifest.write_started();
    const GatewayOptions options{run.config.offline};
    Gateway predict_gw(*run.backend, &run.cache->open(run.backend->model_id(), run.spec->name, "predict"), options);
    auto boundary = std::make_shared<const DecisionBoundary>(obtain_boundary(run, predict_gw, 0));
    if (auto* mock = dynamic_cast<MockBackend*>(run.backend.get())) mock->inject_boundary(boundary);

    std::vector<std::unique_ptr<DistanceEvaluator>> owned;
    std::vector<const DistanceEvaluator*> evaluators;
    for (auto tag : run.config.distances) {
        owned.push_back(std::make_unique<DistanceEvaluator>(*run.dataset, make_distance(tag, run.config, run.prompt)));
        evaluators.push_back(owned.back().get());
    }
    Gateway sce_gw(*run.backend,
                   &run.cache->open(run.backend->model_id(), run.spec->name, fmt::format("sce-{}", to_string(setting))),
                   options);
    const auto results = run_prompt_sensitivity(sce_gw, *boundary, *run.prompt, setting, variants, evaluators);

    const auto path = run.config.output_dir / "sensitivity.csv";
    {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
        out << "variant";
        for (const auto& c : report_columns()) out << ',' << c;
        out << '\n';
        for (const auto& entry : results) {
            for (const auto& r : entry.reports) {
                out << entry.variant;
                for (const auto& f : report_fields(r)) out << ',' << csv_escape(f);
                out << '\n';
            }
        }
    }
    manifest.add_output(path);
    manifest.finalize();
    fmt::print("sensitivity: {} variants of the {} prompt\n", results.size(), to_string(setting));
    for (const auto& entry : results) {
        for (const auto& r : entry.reports) {
            fmt::print("  variant {:>2} {:<10} validity {:>7} mean_ed {:>8} exact {:>7}\n", entry.variant,
                       to_string(r.kind), format_fixed(r.validity_pct, 2), format_fixed(r.mean_excess_distance, 4),
                       format_fixed(r.exact_match_pct, 2));
        }
    }
    fmt::print("sensitivity report: {}\n", path.string());
    return 0;
}

// Rows are (model, dataset, distance, replicate); columns are settings x metrics.
int cmd_report(const std::vector<std::string>& inputs, const std::string& out) {
    using Key = std::tuple<std::string, std::string, std::string, int>;
    std::map<Key, std::map<PromptSetting, EvaluationReport>> table;
    std::vector<PromptSetting> settings;
    for (const auto& f : inputs) {
        for (auto& r : read_report_csv(f)) {
            if (std::find(settings.begin(), settings.end(), r.setting) == settings.end()) settings.push_back(r.setting);
            table[{r.model_id, r.dataset, std::string(to_string(r.kind)), r.replicate}][r.setting] = r;
        }
    }
    if (table.empty()) throw Error(Errc::empty_input, "no report rows to summarize");
    std::sort(settings.begin(), settings.end());

    std::vector<std::string> header = {"model", "dataset", "distance", "replicate"};
    for (auto s : settings) {
        for (const char* m : {"validity_pct", "mean_ed", "exact_match_pct"}) {
            header.push_back(fmt::format("{}:{}", to_string(s), m));
        }
    }
    std::vector<std::vector<std::string>> rows;
    for (const auto& [key, by_setting] : table) {
        std::vector<std::string> row = {std::get<0>(key), std::get<1>(key), std::get<2>(key),
                                        std::to_string(std::get<3>(key))};
        for (auto s : settings) {
            auto it = by_setting.find(s);
            if (it == by_setting.end()) {
                row.insert(row.end(), {"-", "-", "-"});
                continue;
            }
            row.push_back(format_fixed(it->second.validity_pct, 2));
            row.push_back(format_fixed(it->second.mean_excess_distance, 4));
            row.push_back(format_fixed(it->second.exact_match_pct, 2));
        }
        rows.push_back(std::move(row));
    }
    std::vector<std::size_t> width(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) {
        width[c] = header[c].size();
        for (const auto& r : rows) width[c] = std::max(width[c], r[c].size());
    }
    auto print_row = [&](const std::vector<std::string>& r) {
        std::string line = "|";
        for (std::size_t c = 0; c < r.size(); ++c) line += fmt::format(" {:<{}} |", r[c], width[c]);
        fmt::print("{}\n", line);
    };
    print_row(header);
    std::string rule = "|";
    for (auto w : width) rule += std::string(w + 2, '-') + "|";
    fmt::print("{}\n", rule);
    for (const auto& r : rows) print_row(r);

    if (!out.empty()) {
        const std::filesystem::path path(out);
        if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
        std::ofstream csv(path, std::ios::binary);
        if (!csv) throw Error(Errc::io_error, "cannot write " + out);
        auto write = [&](const std::vector<std::string>& r) {
            for (std::size_t c = 0; c < r.size(); ++c) csv << (c ? "," : "") << csv_escape(r[c]);
            csv << '\n';
        };
        write(header);
        for (const auto& r : rows) write(r);
    }
    return 0;
}

void print_error(std::string_view category, std::string_view code, const std::string& message) {
    std::cerr << fmt::format("error: category={} code={} message={}\n", category, code, one_line(message));
}

}  // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"Evaluate self-generated counterfactual explanations on complete tabular datasets", "sce"};
    app.require_subcommand(1);
    int verbosity = 0;
    app.add_flag("-v,--verbose", verbosity, "more logging (repeat for debug)");

    auto* dataset = app.add_subcommand("dataset", "inspect or export a dataset");
    dataset->require_subcommand(1);
    std::string ds_name;
    std::string ds_spec_file;
    std::string ds_out;
    auto* show = dataset->add_subcommand("show", "print N and per-feature value counts");
    show->add_option("name", ds_name, "built-in dataset name");
    show->add_option("--spec-file", ds_spec_file, "dataset spec document");
    auto* exp = dataset->add_subcommand("export", "write the spec document and every instance");
    exp->add_option("name", ds_name, "built-in dataset name");
    exp->add_option("--spec-file", ds_spec_file, "dataset spec document");
    exp->add_option("--out", ds_out, "output directory");

    RunOptions sweep_o, sce_o, eval_o, mcq_o, cons_o, sens_o;
    auto* sweep = app.add_subcommand("sweep", "record the model's decision boundary");
    add_run_options(sweep, sweep_o);
    auto* sce_cmd = app.add_subcommand("sce", "sweep, elicit SCEs and evaluate them");
    add_run_options(sce_cmd, sce_o);
    auto* evaluate = app.add_subcommand("evaluate", "re-score recorded SCEs against a boundary");
    add_run_options(evaluate, eval_o);
    std::vector<std::string> eval_records;
    std::string eval_boundary;
    evaluate->add_option("--records", eval_records, "records file(s); default: every records_*.jsonl in the run");
    evaluate->add_option("--boundary", eval_boundary, "boundary file to score against");
    auto* mcq = app.add_subcommand("mcq", "distance multiple-choice experiment");
    add_run_options(mcq, mcq_o);
    auto* consistency = app.add_subcommand("consistency", "decision-boundary agreement across prompt variants");
    add_run_options(consistency, cons_o);
    auto* sensitivity = app.add_subcommand("sensitivity", "SCE metrics across prompt variants");
    add_run_options(sensitivity, sens_o);
    auto* report = app.add_subcommand("report", "combine report CSVs into one summary table");
    std::vector<std::string> report_inputs;
    std::string report_out;
    report->add_option("reports", report_inputs, "report CSV files")->required();
    report->add_option("--out", report_out, "write the summary as CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        print_error(to_string(ErrorCategory::config), to_string(Errc::config_error), e.what());
        return exit_status(ErrorCategory::config);
    }
    setup_logging(verbosity);

    try {
        if (show->parsed() || exp->parsed()) {
            if (ds_name.empty() && ds_spec_file.empty()) {
                throw Error(Errc::config_error, "give a dataset name or --spec-file");
            }
            return show->parsed() ? cmd_dataset_show(ds_name, ds_spec_file)
                                  : cmd_dataset_export(ds_name, ds_spec_file, ds_out);
        }
        if (sweep->parsed()) return cmd_sweep(sweep_o);
        if (sce_cmd->parsed()) return cmd_sce(sce_o);
        if (evaluate->parsed()) return cmd_evaluate(eval_o, eval_records, eval_boundary);
        if (mcq->parsed()) return cmd_mcq(mcq_o);
        if (consistency->parsed()) return cmd_consistency(cons_o);
        if (sensitivity->parsed()) return cmd_sensitivity(sens_o);
        if (report->parsed()) return cmd_report(report_inputs, report_out);
    } catch (const Error& e) {
        print_error(to_string(e.category()), to_string(e.code()), e.what());
        return exit_status(e.category());
    } catch (const std::filesystem::filesystem_error& e) {
        print_error(to_string(ErrorCategory::data), to_string(Errc::io_error), e.what());
        return exit_status(ErrorCategory::data);
    } catch (const nlohmann::json::exception& e) {
        print_error(to_string(ErrorCategory::data), to_string(Errc::parse_error), e.what());
        return exit_status(ErrorCategory::data);
    } catch (const std::exception& e) {
        print_error(to_string(ErrorCategory::data), "internal", e.what());
        return exit_status(ErrorCategory::data);
    }
    return 0;
}

}  // namespace sce
