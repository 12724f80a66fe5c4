#include "hunt/cli.hpp"

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "hunt/balance.hpp"
#include "hunt/connector.hpp"
#include "hunt/error.hpp"
#include "hunt/eval.hpp"
#include "hunt/forest.hpp"
#include "hunt/pipeline.hpp"
#include "hunt/version.hpp"

namespace hunt {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::atomic<bool> g_interrupted{false};

extern "C" void on_sigint(int) { g_interrupted = true; }

struct Options {
    std::string profile;
    std::vector<std::string> inputs;
    std::string plan;
    bool binary = false;
    std::size_t trees = 100;
    std::string max_depth = "16";
    std::string features = "sqrt";
    double split = 0.7;
    bool stratified = true;
    std::size_t runs = 1;
    std::uint64_t seed = 0;
    std::string out = ".";
    std::string format = "json";
    bool text = false;
    std::string balance_mode = "train-only";
    std::size_t threads = 0;
    std::string model;
    std::string show;
    std::string show_format = "text";
    std::string spec;
    bool parquet = false;
    // serve
    std::string archive;
    std::size_t batch_size = 1000;
    std::size_t max_pending = 4;
    std::size_t trees_per_batch = 10;
    int listen = -1;
    std::string tail;
    bool follow = true;
    std::size_t idle_timeout_ms = 2000;
    std::size_t producers = 0;
    std::size_t trainer_delay_ms = 0;
    bool single_threaded = false;
};

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << content;
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

fs::path out_dir(const Options& o) {
    fs::path dir(o.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + o.out + "': " + ec.message());
    return dir;
}

std::vector<fs::path> input_paths(const Options& o) {
    std::vector<fs::path> out(o.inputs.begin(), o.inputs.end());
    return out;
}

DatasetProfile require_profile(const Options& o) {
    if (o.profile.empty()) throw UsageError("--profile is required");
    return load_profile(o.profile);
}

std::optional<BalancePlan> plan_for(const Options& o) {
    if (o.plan.empty()) return std::nullopt;
    BalancePlan plan;
    if (const auto* golden = golden_plan(o.plan); golden && !fs::exists(o.plan)) {
        plan = *golden;
    } else {
        plan = load_plan(o.plan);
    }
    plan.seed = o.seed;
    return plan;
}

ForestConfig forest_config(const Options& o) {
    ForestConfig c;
    c.n_trees = o.trees;
    if (o.max_depth == "none" || o.max_depth == "unlimited") {
        c.max_depth = std::nullopt;
    } else {
        try {
            std::size_t pos = 0;
            const auto v = std::stoull(o.max_depth, &pos);
            if (pos != o.max_depth.size() || v == 0) throw std::invalid_argument("depth");
            c.max_depth = v;
        } catch (const std::exception&) {
            throw UsageError("--max-depth must be a positive integer or 'none', got '" + o.max_depth + "'");
        }
    }
    c.features = FeatureChoice::parse(o.features);
    c.seed = o.seed;
    if (o.trees == 0) throw UsageError("--trees must be positive");
    return c;
}

std::string report_format(const Options& o) {
    if (o.text) return "both";
    if (o.format != "json" && o.format != "text" && o.format != "both") {
        throw UsageError("--format must be json, text or both");
    }
    return o.format;
}

json stamp(json doc, std::uint64_t seed) {
    doc["seed"] = seed;
    doc["tool_version"] = kToolVersion;
    return doc;
}

json histogram_json(const std::vector<std::pair<std::string, std::size_t>>& h) {
    json obj = json::object();
    for (const auto& [name, n] : h) obj[name] = n;
    return obj;
}

void emit_reports(const Options& o, const fs::path& dir, const json& report, const std::string& text,
                  std::ostream& out) {
    const auto format = report_format(o);
    if (format == "json" || format == "both") write_file(dir / "report.json", report.dump(2) + "\n");
    if (format == "text" || format == "both") {
        write_file(dir / "report.txt", text);
        out << text;
    }
}

// ---- subcommands ----

int cmd_profiles(const Options& o, std::ostream& out) {
    if (!o.show.empty()) {
        const auto profile = load_profile(o.show);
        if (o.show_format == "json") {
            out << profile_to_json(profile).dump(2) << "\n";
            return kExitOk;
        }
        out << "profile " << profile.name << "\n";
        out << "label column: " << profile.label_column << "\n";
        out << "columns:\n";
        for (const auto& c : profile.columns) {
            out << "  " << c.name << "  " << to_string(c.kind) << "  " << to_string(c.storage) << "\n";
        }
        out << "classes:\n";
        for (const auto& e : profile.classes.entries()) {
            out << "  " << e.name << "  ";
            for (std::size_t i = 0; i < e.tactics.size(); ++i) out << (i ? ", " : "") << e.tactics[i];
            out << "\n";
        }
        return kExitOk;
    }
    for (const auto& p : builtin_profiles()) {
        out << p.name << "  " << p.columns.size() << " columns  " << p.classes.size() << " classes  label "
            << p.label_column << "\n";
    }
    return kExitOk;
}

int cmd_synth(const Options& o, std::ostream& out) {
    if (o.spec.empty()) throw UsageError("--spec is required (preset name or recipe file)");
    const auto recipe = load_synth_recipe(o.spec, o.seed);
    const auto profile = load_profile(recipe.profile);
    const auto table = conform_to_profile(synthesize(recipe.spec), profile);
    fs::path path(o.out);
    const auto ext = path.extension().string();
    if (ext != ".csv" && ext != ".parquet" && ext != ".pq" && ext != ".jsonl")
        path = out_dir(o) / (o.parquet ? "synth.parquet" : "synth.csv");
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    if (path.extension() == ".jsonl") {
        std::ofstream events(path, std::ios::binary);
        if (!events) throw IoError("cannot write " + path.string());
        write_events(table, profile, events);
    } else {
        write_table(table, profile, path);
    }
    json summary = {{"path", path.string()},
                    {"profile", recipe.profile},
                    {"rows", table.row_count()},
                    {"classes", histogram_json(class_histogram(table))}};
    out << stamp(summary, o.seed).dump() << "\n";
    return kExitOk;
}

int cmd_ingest(const Options& o, std::ostream& out) {
    const auto profile = require_profile(o);
    const auto ingested = read_inputs(input_paths(o), profile);
    const auto report = validate_table(ingested.table, profile);
    const auto dir = out_dir(o);
    const auto path = dir / (o.parquet ? "table.parquet" : "table.csv");
    write_table(ingested.table, profile, path);
    json issues = json::array();
    for (const auto& i : report.issues) issues.push_back({{"subject", i.subject}, {"detail", i.detail}});
    json summary = {{"path", path.string()},
                    {"rows", ingested.table.row_count()},
                    {"skipped_rows", ingested.skips.skipped_rows},
                    {"skip_samples", ingested.skips.samples},
                    {"issues", issues},
                    {"classes", histogram_json(class_histogram(ingested.table))}};
    out << stamp(summary, o.seed).dump() << "\n";
    return kExitOk;
}

int cmd_balance(const Options& o, std::ostream& out) {
    const auto profile = require_profile(o);
    const auto plan = plan_for(o);
    if (!plan) throw UsageError("--plan is required");
    const auto ingested = read_inputs(input_paths(o), profile);
    const auto prepared = prepare(ingested.table, profile, o.binary, plan->min_class_size);
    auto [balanced, trace] = apply_plan(prepared.matrix, *plan);
    trace.removed_classes.insert(trace.removed_classes.begin(), prepared.removed_classes.begin(),
                                 prepared.removed_classes.end());
    const auto dir = out_dir(o);
    write_matrix_csv(balanced, prepared.encoding, dir / "balanced.csv");
    json doc = trace_to_json(trace);
    doc["plan"] = plan_to_json(*plan);
    write_file(dir / "trace.json", stamp(doc, o.seed).dump(2) + "\n");
    json summary = {{"path", (dir / "balanced.csv").string()},
                    {"rows", balanced.rows},
                    {"removed_classes", trace.removed_classes},
                    {"classes", histogram_json(trace.after_smote)}};
    out << stamp(summary, o.seed).dump() << "\n";
    return kExitOk;
}

HoldoutOptions holdout_options(const Options& o) {
    HoldoutOptions h;
    h.train_fraction = o.split;
    h.stratified = o.stratified;
    h.n_runs = o.runs;
    h.base_seed = o.seed;
    h.balance = parse_balance_mode(o.balance_mode);
    h.plan = plan_for(o);
    h.threads = o.threads;
    if (!(o.split > 0.0 && o.split < 1.0)) throw UsageError("--split must lie strictly between 0 and 1");
    if (o.runs == 0) throw UsageError("--runs must be positive");
    return h;
}

int cmd_train(const Options& o, std::ostream& out) {
    const auto profile = require_profile(o);
    const auto config = forest_config(o);
    auto options = holdout_options(o);
    const auto min_size = options.plan ? options.plan->min_class_size : BalancePlan{}.min_class_size;
    const auto ingested = read_inputs(input_paths(o), profile);
    const auto prepared = prepare(ingested.table, profile, o.binary, min_size);

    FeatureMatrix matrix = prepared.matrix;
    std::optional<BalanceTrace> trace;
    if (options.balance == BalanceMode::before_split && options.plan) {
        auto [m, t] = apply_plan(matrix, *options.plan);
        matrix = std::move(m);
        trace = std::move(t);
        options.balance = BalanceMode::none;
    }
    options.n_runs = 1;
    auto outcome = evaluate_once(matrix, config, options, o.seed, prepared.encoding, o.profile);
    if (!trace) trace = std::move(outcome.trace);

    const auto dir = out_dir(o);
    save_model(outcome.model, dir / "model.json");
    if (trace) {
        trace->removed_classes.insert(trace->removed_classes.begin(), prepared.removed_classes.begin(),
                                      prepared.removed_classes.end());
        json doc = trace_to_json(*trace);
        doc["balance_mode"] = o.balance_mode;
        write_file(dir / "trace.json", stamp(doc, o.seed).dump(2) + "\n");
    }
    json report = report_to_json(outcome.report);
    report["stratified"] = options.stratified;
    emit_reports(o, dir, report, render_text(outcome.report), out);
    json summary = {{"model", (dir / "model.json").string()},
                    {"trees", outcome.model.trees.size()},
                    {"classes", outcome.model.class_names},
                    {"accuracy", outcome.report.metrics.accuracy},
                    {"macro_f1", outcome.report.metrics.macro.f1}};
    out << stamp(summary, o.seed).dump() << "\n";
    return kExitOk;
}

bool is_binary_model(const ForestModel& model) {
    return model.class_names == std::vector<std::string>{kBinaryBenign, kBinaryMalicious};
}

int cmd_evaluate(const Options& o, std::ostream& out) {
    const auto dir = out_dir(o);
    if (!o.model.empty()) {
        const auto model = load_model(o.model);
        const auto profile = load_profile(o.profile.empty() ? model.profile : o.profile);
        const auto ingested = read_inputs(input_paths(o), profile);
        LogTable table = is_binary_model(model) && !o.binary
                             ? amalgamate_binary(ingested.table, profile.classes.benign_names())
                             : ingested.table;
        if (o.binary) table = amalgamate_binary(ingested.table, profile.classes.benign_names());
        auto matrix = apply_encoding(table, model.encoding);
        // Express labels in the model's class space; rows of classes the model lacks are skipped.
        std::vector<std::uint32_t> remap(matrix.class_names.size(), UINT32_MAX);
        for (std::size_t k = 0; k < matrix.class_names.size(); ++k) {
            const auto it = std::find(model.class_names.begin(), model.class_names.end(), matrix.class_names[k]);
            if (it != model.class_names.end()) remap[k] = static_cast<std::uint32_t>(it - model.class_names.begin());
        }
        std::vector<std::size_t> keep;
        for (std::size_t r = 0; r < matrix.rows; ++r)
            if (remap[matrix.labels[r]] != UINT32_MAX) keep.push_back(r);
        const auto skipped = matrix.rows - keep.size();
        if (keep.empty()) throw DataError("no input row belongs to a class of the model");
        if (skipped) matrix = matrix.select_rows(keep);
        for (auto& l : matrix.labels) l = remap[l];
        matrix.class_names = model.class_names;
        const auto report = evaluate_model(model, matrix, o.seed, 0.0);
        emit_reports(o, dir, report_to_json(report), render_text(report), out);
        out << stamp({{"accuracy", report.metrics.accuracy}, {"rows", matrix.rows}, {"skipped_unknown", skipped}},
                     o.seed)
                   .dump()
            << "\n";
        return kExitOk;
    }
    const auto profile = require_profile(o);
    const auto config = forest_config(o);
    const auto options = holdout_options(o);
    const auto min_size = options.plan ? options.plan->min_class_size : BalancePlan{}.min_class_size;
    const auto ingested = read_inputs(input_paths(o), profile);
    const auto prepared = prepare(ingested.table, profile, o.binary, min_size);
    const auto result = repeated_holdout(prepared.matrix, config, options);
    auto report = holdout_to_json(result, options);
    if (result.trace) {
        json doc = trace_to_json(*result.trace);
        doc["balance_mode"] = o.balance_mode;
        write_file(dir / "trace.json", stamp(doc, o.seed).dump(2) + "\n");
    }
    emit_reports(o, dir, report, render_text(result), out);
    out << stamp({{"n_runs", options.n_runs},
                  {"mean_accuracy", result.mean_accuracy},
                  {"std_accuracy", result.std_accuracy}},
                 o.seed)
               .dump()
        << "\n";
    return kExitOk;
}

int cmd_predict(const Options& o, std::ostream& out) {
    if (o.model.empty()) throw UsageError("--model is required");
    const auto model = load_model(o.model);
    const auto profile = load_profile(o.profile.empty() ? model.profile : o.profile);
    const auto ingested = read_inputs(input_paths(o), profile);
    const auto matrix = apply_encoding(ingested.table, model.encoding);
    const auto dir = out_dir(o);
    std::ofstream csv(dir / "predictions.csv");
    if (!csv) throw IoError("cannot write predictions");
    std::vector<std::string> fields = {"row", "label", "predicted", "votes"};
    write_csv_record(csv, fields);
    std::vector<std::size_t> counts(model.class_names.size(), 0);
    for (std::size_t r = 0; r < matrix.rows; ++r) {
        const auto p = predict(model, matrix.row(r));
        ++counts[p.label];
        fields = {std::to_string(r), matrix.class_names[matrix.labels[r]], p.class_name,
                  std::to_string(p.votes[p.label])};
        write_csv_record(csv, fields);
    }
    json hist = json::object();
    for (std::size_t k = 0; k < counts.size(); ++k) hist[model.class_names[k]] = counts[k];
    out << stamp({{"path", (dir / "predictions.csv").string()}, {"rows", matrix.rows}, {"predicted", hist}},
                 model.config.seed)
               .dump()
        << "\n";
    return kExitOk;
}

int cmd_serve(const Options& o, std::ostream& out) {
    if (o.model.empty()) throw UsageError("--model is required");
    if (o.tail.empty() == (o.listen < 0)) throw UsageError("exactly one of --tail or --listen is required");
    const auto model = load_model(o.model);
    const auto profile = load_profile(o.profile.empty() ? model.profile : o.profile);

    IncrementalOptions opts;
    opts.policy = {o.batch_size, o.max_pending, o.trees_per_batch};
    opts.policy.validate();
    opts.plan = plan_for(o);
    opts.binary = is_binary_model(model);
    if (!o.archive.empty()) opts.archive_dir = fs::path(o.archive);
    opts.archive_parquet = o.parquet;
    opts.seed = o.seed;
    opts.single_threaded = o.single_threaded;
    opts.trainer_delay = std::chrono::milliseconds(o.trainer_delay_ms);
    opts.threads = o.threads;

    const auto dir = out_dir(o);
    std::ofstream run_log(dir / "run_log.jsonl", std::ios::binary);
    if (!run_log) throw IoError("cannot write run log");
    opts.on_log = [&](const BatchLogEntry& e) { run_log << batch_log_to_json(e).dump() << "\n" << std::flush; };
    opts.on_trained = [&](const ForestModel& m, const BatchLogEntry&) { save_model(m, dir / "model.json"); };

    std::unique_ptr<EventStream> stream;
    if (!o.tail.empty()) {
        stream = subscribe(FileTail{o.tail, o.follow, std::chrono::milliseconds(o.idle_timeout_ms)});
    } else {
        if (o.listen > 65535) throw UsageError("--listen must be a port number");
        stream = subscribe(TcpListen{static_cast<std::uint16_t>(o.listen), "127.0.0.1", o.producers});
        out << json{{"listening", bound_port(*stream)}}.dump() << "\n" << std::flush;
    }

    g_interrupted = false;
    auto previous = std::signal(SIGINT, on_sigint);
    std::atomic<bool> finished{false};
    std::thread watcher([&] {
        while (!finished) {
            if (g_interrupted) {
                stream->stop();
                break;
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(50));
        }
    });
    IncrementalResult result;
    try {
        result = run_incremental(*stream, model, profile, opts);
    } catch (...) {
        finished = true;
        watcher.join();
        std::signal(SIGINT, previous);
        throw;
    }
    finished = true;
    watcher.join();
    std::signal(SIGINT, previous);

    save_model(result.model, dir / "model.json");
    const auto& c = result.counters;
    std::size_t dropped_batches = 0;
    for (const auto& e : result.log) dropped_batches += e.dropped ? 1 : 0;
    out << stamp({{"received", c.received},
                  {"trained", c.trained},
                  {"dropped", c.dropped},
                  {"filtered", c.filtered},
                  {"batches", result.log.size()},
                  {"dropped_batches", dropped_batches},
                  {"trees", result.model.trees.size()},
                  {"interrupted", g_interrupted.load()},
                  {"model", (dir / "model.json").string()}},
                 o.seed)
               .dump()
        << "\n";
    return kExitOk;
}

void add_common(CLI::App* cmd, Options& o, bool forest) {
    cmd->add_option("--profile", o.profile, "Built-in profile name or profile file");
    cmd->add_option("--input", o.inputs, "Input CSV or Parquet file (repeatable)");
    cmd->add_option("--seed", o.seed, "Random seed");
    cmd->add_option("--out", o.out, "Output directory");
    cmd->add_flag("--binary", o.binary, "Merge every attack class into Malicious");
    if (!forest) return;
    cmd->add_option("--plan", o.plan, "Balance plan file or golden plan name");
    cmd->add_option("--trees", o.trees, "Number of trees");
    cmd->add_option("--max-depth", o.max_depth, "Maximum tree depth or 'none'");
    cmd->add_option("--features", o.features, "Candidate features per split: sqrt, all or N");
    cmd->add_option("--split", o.split, "Training fraction");
    cmd->add_flag("--stratified,!--no-stratified", o.stratified, "Stratified split (default on)");
    cmd->add_option("--balance-mode", o.balance_mode, "none, train-only or before-split");
    cmd->add_option("--format", o.format, "Report format: json, text or both");
    cmd->add_flag("--text", o.text, "Also write and print the text report");
    cmd->add_option("--threads", o.threads, "Worker threads (0 = all cores)");
}

int dispatch(const std::string& name, const Options& o, std::ostream& out) {
    if (name == "profiles") return cmd_profiles(o, out);
    if (name == "synth") return cmd_synth(o, out);
    if (name == "ingest") return cmd_ingest(o, out);
    if (name == "balance") return cmd_balance(o, out);
    if (name == "train") return cmd_train(o, out);
    if (name == "evaluate") return cmd_evaluate(o, out);
    if (name == "predict") return cmd_predict(o, out);
    if (name == "serve") return cmd_serve(o, out);
    throw UsageError("unknown command '" + name + "'");
}

void print_error(std::ostream& err, const char* kind, const std::string& command, const std::string& message) {
    err << json{{"error", kind}, {"command", command}, {"message", message}}.dump() << "\n";
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Threat-hunting log classification pipeline", "hunt"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);
    Options o;

    auto* profiles = app.add_subcommand("profiles", "List built-in dataset profiles");
    profiles->add_option("--show", o.show, "Print one profile's columns and classes");
    profiles->add_option("--format", o.show_format, "text or json")->check(CLI::IsMember({"text", "json"}));

    auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
    synth->add_option("--spec", o.spec, "Preset (uwf2022, cicids2017, toniot, demo) or recipe file")->required();
    synth->add_option("--seed", o.seed, "Random seed");
    synth->add_option("--out", o.out, "Output file (.csv, .parquet, .jsonl events) or directory");
    synth->add_flag("--parquet", o.parquet, "Write Parquet when --out is a directory");

    auto* ingest = app.add_subcommand("ingest", "Read, validate and collate input files");
    add_common(ingest, o, false);
    ingest->add_flag("--parquet", o.parquet, "Write the collated table as Parquet");

    auto* balance = app.add_subcommand("balance", "Encode and rebalance a dataset");
    add_common(balance, o, false);
    balance->add_option("--plan", o.plan, "Balance plan file or golden plan name");

    auto* train = app.add_subcommand("train", "Split, balance, train and evaluate once");
    add_common(train, o, true);

    auto* evaluate = app.add_subcommand("evaluate", "Repeated holdout, or score an existing model");
    add_common(evaluate, o, true);
    evaluate->add_option("--runs", o.runs, "Number of random splits");
    evaluate->add_option("--model", o.model, "Score this model on the inputs instead");

    auto* predict_cmd = app.add_subcommand("predict", "Classify rows with a trained model");
    add_common(predict_cmd, o, false);
    predict_cmd->add_option("--model", o.model, "Model file")->required();

    auto* serve = app.add_subcommand("serve", "Train incrementally from a log stream");
    serve->add_option("--model", o.model, "Initial model file")->required();
    serve->add_option("--profile", o.profile, "Profile (defaults to the model's)");
    serve->add_option("--tail", o.tail, "Follow this file");
    serve->add_option("--listen", o.listen, "Accept TCP producers on this port (0 = ephemeral)");
    serve->add_option("--batch-size", o.batch_size, "Rows per batch");
    serve->add_option("--max-pending", o.max_pending, "Batches allowed to wait before random drops");
    serve->add_option("--trees-per-batch", o.trees_per_batch, "Trees added per trained batch");
    serve->add_option("--archive", o.archive, "Write each batch to this directory");
    serve->add_flag("--parquet", o.parquet, "Archive batches as Parquet");
    serve->add_option("--plan", o.plan, "Balance each batch with this plan");
    serve->add_option("--seed", o.seed, "Random seed for batch dropping and balancing");
    serve->add_option("--out", o.out, "Output directory for checkpoints and the run log");
    serve->add_flag("--follow,!--no-follow", o.follow, "Keep following the tailed file");
    serve->add_option("--idle-timeout", o.idle_timeout_ms, "Stop following after this many idle ms (0 = never)");
    serve->add_option("--producers", o.producers, "End after this many TCP producers disconnect (0 = never)");
    serve->add_option("--trainer-delay", o.trainer_delay_ms, "Pause before each training step (ms)");
    serve->add_flag("--single-threaded", o.single_threaded, "Receive and train on one thread");
    serve->add_option("--threads", o.threads, "Worker threads for tree growth");

    std::string command = "hunt";
    try {
        app.parse(argc, argv);
        for (const auto* sub : app.get_subcommands()) command = sub->get_name();
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << kToolVersion << "\n";
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        for (const auto* sub : app.get_subcommands()) command = sub->get_name();
        print_error(err, "usage", command, e.what());
        return kExitUsage;
    }

    try {
        return dispatch(command, o, out);
    } catch (const Error& e) {
        switch (e.kind()) {
        case ErrorKind::usage: print_error(err, "usage", command, e.what()); return kExitUsage;
        case ErrorKind::io: print_error(err, "io", command, e.what()); return kExitIo;
        case ErrorKind::unsupported: print_error(err, "unsupported", command, e.what()); return kExitData;
        case ErrorKind::data:
        default: print_error(err, "data", command, e.what()); return kExitData;
        }
    } catch (const fs::filesystem_error& e) {
        print_error(err, "io", command, e.what());
        return kExitIo;
    } catch (const std::exception& e) {
        print_error(err, "data", command, e.what());
        return kExitData;
    }
}

} // namespace hunt
