#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "rankguide/errors.hpp"
#include "rankguide/simulator.hpp"
#include "rankguide/steering.hpp"
#include "rankguide/tensor_io.hpp"
#include "rankguide/tensor_train.hpp"
#include "rankguide/trace_gen.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace rankguide;

namespace {

int exit_code_for(const Error& e) {
    switch (e.kind()) {
        case ErrorKind::Config: return 2;
        case ErrorKind::Numerical: return 3;
        case ErrorKind::Io: return 4;
    }
    return 2;
}

std::size_t worker_pool_size() {
    if (const char* env = std::getenv("RANKGUIDE_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<std::size_t>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

// Flat key = value file; '#'/';' comments, optional [section] headers ignored.
CostModel parse_cost_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw io_error("IoError", "cannot open " + path + " for reading");
    }
    CostModel cost;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        if (line[first] == '#' || line[first] == ';' || line[first] == '[') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw config_error("FormatError",
                               path + ":" + std::to_string(line_no) + ": expected key = value");
        }
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        double parsed = 0.0;
        try {
            parsed = std::stod(value);
        } catch (const std::exception&) {
            throw config_error("FormatError", path + ":" + std::to_string(line_no) +
                                                  ": bad number '" + value + "'");
        }
        if (key == "srm_step_cost") cost.srm_step_cost = parsed;
        else if (key == "lrm_step_cost") cost.lrm_step_cost = parsed;
        else if (key == "signal_cost") cost.signal_cost = parsed;
        else if (key == "route_overhead") cost.route_overhead = parsed;
        else {
            throw config_error("FormatError", path + ":" + std::to_string(line_no) +
                                                  ": unknown cost key '" + key + "'");
        }
    }
    validate_cost_model(cost);
    return cost;
}

std::vector<std::string> read_keyword_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw io_error("IoError", "cannot open " + path + " for reading");
    }
    std::vector<std::string> keywords;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        keywords.push_back(line);
    }
    if (keywords.empty()) {
        throw config_error("InvalidConfig", "keyword file " + path + " is empty");
    }
    return keywords;
}

bool wildcard_match(const std::string& pattern, const std::string& name) {
    std::size_t p = 0, n = 0, star = std::string::npos, mark = 0;
    while (n < name.size()) {
        if (p < pattern.size() && (pattern[p] == '?' || pattern[p] == name[n])) {
            ++p;
            ++n;
        } else if (p < pattern.size() && pattern[p] == '*') {
            star = p++;
            mark = n;
        } else if (star != std::string::npos) {
            p = star + 1;
            n = ++mark;
        } else {
            return false;
        }
    }
    while (p < pattern.size() && pattern[p] == '*') ++p;
    return p == pattern.size();
}

std::vector<std::string> expand_glob(const std::string& pattern) {
    const fs::path pat(pattern);
    const std::string name_pattern = pat.filename().string();
    if (name_pattern.find_first_of("*?") == std::string::npos) {
        return {pattern};
    }
    const fs::path dir = pat.parent_path().empty() ? fs::path(".") : pat.parent_path();
    if (!fs::is_directory(dir)) {
        throw io_error("IoError", "glob directory " + dir.string() + " does not exist");
    }
    std::vector<std::string> matches;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        if (wildcard_match(name_pattern, entry.path().filename().string())) {
            matches.push_back(entry.path().string());
        }
    }
    std::sort(matches.begin(), matches.end());
    return matches;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw io_error("IoError", "cannot open " + path + " for writing");
    }
    out << text;
    if (!out) {
        throw io_error("IoError", "short write to " + path);
    }
}

// ---------------------------------------------------------------------------
// Subcommand state
// ---------------------------------------------------------------------------

struct DecomposeArgs {
    std::string input;
    double epsilon = 0.1;
    std::string json_out;
};

struct SignalArgs {
    std::string trace;
    SignalConfig cfg;
    std::string out;
};

struct SteerExtractArgs {
    std::string calib_dir;
    std::size_t t_r1 = 8;
    std::size_t t_r2 = 60;
    std::string keywords_file;
    std::vector<std::string> keywords_inline;
    std::string out;
    double alpha = 1.0;
    SignalConfig cfg;
};

struct SimulateArgs {
    std::vector<std::string> srm;
    std::vector<std::string> lrm;
    RoutingConfig routing;
    std::string mode = "full";
    SignalConfig signal;
    std::string steer_file;
    std::optional<double> alpha;
    std::string cost_file;
    std::string report_file;
    std::string decision_log;
    std::string config_id = "run";
    std::string terminated_label = "srm";
};

struct ReportArgs {
    std::string runs_glob;
    std::string baseline;
    std::string csv_path;
};

struct GenArgs {
    std::string out;
    GeneratorSpec spec;
    std::uint64_t seed = 0;
    std::vector<std::string> collapse;
    std::vector<std::string> high_entropy;
    std::string role = "srm";
    std::optional<bool> correct;
};

int run_decompose(const DecomposeArgs& args) {
    const Tensor t = read_rgt(args.input);
    const TensorTrain tt = tt_decompose(t, args.epsilon);
    const Tensor rebuilt = tt_reconstruct(tt);
    const double rel = frobenius_norm(t) == 0.0 ? 0.0 : relative_error(t, rebuilt);

    json obj;
    obj["ranks"] = tt.ranks;
    obj["rel_error"] = rel;
    obj["epsilon"] = args.epsilon;
    const std::string text = obj.dump() + "\n";
    std::cout << text;
    if (!args.json_out.empty()) write_text(args.json_out, text);
    return 0;
}

int run_signal(const SignalArgs& args) {
    const Trace trace = load_trace(args.trace);
    validate_signal_config(args.cfg, trace.header.d_hid);

    std::ostringstream out;
    WindowBuffer buf(args.cfg.window, trace.header.d_hid);
    for (const StepRecord& rec : trace.steps) {
        buf.push(StepHidden{rec.step_index, rec.hidden});
        json obj;
        obj["step"] = rec.step_index;
        if (buf.full()) {
            const RankSignal sig = rank_signal(buf, args.cfg);
            obj["r1"] = sig.r1;
            obj["r2"] = sig.r2;
        } else {
            obj["r1"] = nullptr;
            obj["r2"] = nullptr;
        }
        obj["entropy"] = entropy(TopKLogits{rec.topk_logits});
        out << obj.dump() << "\n";
    }
    if (args.out.empty()) {
        std::cout << out.str();
    } else {
        write_text(args.out, out.str());
    }
    return 0;
}

int run_steer_extract(const SteerExtractArgs& args) {
    std::vector<std::string> keywords = default_validation_keywords();
    if (!args.keywords_file.empty()) keywords = read_keyword_file(args.keywords_file);
    if (!args.keywords_inline.empty()) keywords = args.keywords_inline;

    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(args.calib_dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
            files.push_back(entry.path().string());
        }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        throw config_error("InvalidConfig",
                           "no .jsonl traces found in " + args.calib_dir);
    }

    std::vector<CalibrationSample> samples;
    samples.reserve(files.size());
    for (const std::string& file : files) {
        const Trace trace = load_trace(file);
        samples.push_back(build_calibration_sample(trace, args.cfg, keywords,
                                                   fs::path(file).stem().string()));
    }

    const SteeringVector sv =
        extract_rank_filtered_steering(samples, args.t_r1, args.t_r2, keywords, args.alpha);
    save_steering(sv, args.out);
    std::cout << "kept " << sv.provenance.samples_kept << "/" << sv.provenance.samples_total
              << " samples, pooled " << sv.provenance.n_exe << " execution / "
              << sv.provenance.n_val << " validation steps -> " << args.out << "\n";
    return 0;
}

int run_simulate(const SimulateArgs& args) {
    if (args.srm.size() != args.lrm.size()) {
        throw config_error("InvalidConfig",
                           "--srm and --lrm must be given the same number of times (" +
                               std::to_string(args.srm.size()) + " vs " +
                               std::to_string(args.lrm.size()) + ")");
    }

    SimulateOptions opts;
    opts.routing = args.routing;
    opts.routing.mode = routing_mode_from_string(args.mode);
    opts.routing.window = args.signal.window;
    opts.signal = args.signal;
    if (!args.cost_file.empty()) opts.cost = parse_cost_file(args.cost_file);
    if (!args.steer_file.empty()) opts.steering = load_steering(args.steer_file);
    opts.alpha = args.alpha;
    if (args.terminated_label == "incorrect") {
        opts.terminated_label = TerminatedLabelPolicy::Incorrect;
    } else if (args.terminated_label != "srm") {
        throw config_error("InvalidConfig", "--terminated-label must be srm or incorrect");
    }

    std::vector<std::pair<Trace, Trace>> pairs;
    pairs.reserve(args.srm.size());
    for (std::size_t i = 0; i < args.srm.size(); ++i) {
        pairs.emplace_back(load_trace(args.srm[i]), load_trace(args.lrm[i]));
    }

    const SimulationReport report =
        simulate_many(pairs, opts, args.config_id, worker_pool_size());
    save_report(report, args.report_file);

    if (!args.decision_log.empty()) {
        if (report.samples.size() == 1) {
            write_text(args.decision_log, decision_log_to_jsonl(report.samples[0].decisions));
        } else {
            const fs::path base(args.decision_log);
            for (std::size_t i = 0; i < report.samples.size(); ++i) {
                fs::path p = base.parent_path() /
                             (base.stem().string() + "-" + std::to_string(i) +
                              base.extension().string());
                write_text(p.string(), decision_log_to_jsonl(report.samples[i].decisions));
            }
        }
    }

    json summary;
    summary["config_id"] = report.config_id;
    summary["samples"] = report.samples.size();
    summary["accuracy_proxy"] = report.aggregate.accuracy_proxy
                                    ? json(*report.aggregate.accuracy_proxy)
                                    : json(nullptr);
    summary["mean_latency"] = report.aggregate.mean_latency;
    summary["mean_steps"] = report.aggregate.mean_steps;
    summary["validation_ratio"] = report.aggregate.validation_ratio;
    std::cout << summary.dump() << "\n";
    return 0;
}

int run_report(const ReportArgs& args) {
    const std::vector<std::string> files = expand_glob(args.runs_glob);
    if (files.empty()) {
        throw config_error("InvalidConfig", "no reports match " + args.runs_glob);
    }
    std::vector<SimulationReport> runs;
    runs.reserve(files.size());
    for (const std::string& f : files) runs.push_back(load_report(f));
    const std::string csv = compare_runs_csv(runs, args.baseline);
    write_text(args.csv_path, csv);
    std::cout << csv;
    return 0;
}

int run_gen(GenArgs& args) {
    args.spec.role = trace_role_from_string(args.role);
    args.spec.final_answer_correct = args.correct;
    auto parse_fields = [](const std::string& s, std::size_t want) {
        std::vector<std::size_t> out;
        std::stringstream ss(s);
        std::string item;
        while (std::getline(ss, item, ':')) {
            try {
                out.push_back(static_cast<std::size_t>(std::stoull(item)));
            } catch (const std::exception&) {
                throw config_error("InvalidConfig", "bad segment spec '" + s + "'");
            }
        }
        if (out.size() != want) {
            throw config_error("InvalidConfig", "segment spec '" + s + "' needs " +
                                                    std::to_string(want) + " fields");
        }
        return out;
    };
    for (const std::string& seg : args.collapse) {
        const auto f = parse_fields(seg, 3);
        args.spec.collapse_segments.push_back({f[0], f[1], f[2]});
    }
    for (const std::string& seg : args.high_entropy) {
        const auto f = parse_fields(seg, 2);
        args.spec.high_entropy_segments.push_back({f[0], f[1]});
    }

    const Trace trace = gen_synthetic_trace(args.spec, args.seed);
    save_trace(trace, args.out);
    std::cout << "wrote " << trace.steps.size() << " steps to " << args.out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tensor-rank signal extraction, SRM/LRM routing, and steering toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "flat key=value config file with per-subcommand sections");
    // Lets --config appear after the subcommand name as well.
    app.fallthrough();

    DecomposeArgs dec;
    auto* cmd_dec = app.add_subcommand("decompose", "error-bounded TT-SVD of an .rgt tensor");
    cmd_dec->add_option("--input", dec.input, ".rgt tensor file")->required();
    cmd_dec->add_option("--epsilon", dec.epsilon, "relative reconstruction tolerance")
        ->capture_default_str();
    cmd_dec->add_option("--json-out", dec.json_out, "also write the result JSON here");

    SignalArgs sig;
    auto* cmd_sig = app.add_subcommand("signal", "per-step rank + entropy signals of a trace");
    cmd_sig->add_option("--trace", sig.trace, "trace JSONL file")->required();
    cmd_sig->add_option("--w", sig.cfg.window, "window length")->capture_default_str();
    cmd_sig->add_option("--d1", sig.cfg.d1, "first factor dim")->capture_default_str();
    cmd_sig->add_option("--d2", sig.cfg.d2, "second factor dim")->capture_default_str();
    cmd_sig->add_option("--epsilon", sig.cfg.epsilon, "TT tolerance")->capture_default_str();
    cmd_sig->add_option("--out", sig.out, "write JSONL here instead of stdout");

    SteerExtractArgs ste;
    auto* cmd_ste = app.add_subcommand("steer-extract",
                                       "rank-filtered steering vector from calibration traces");
    cmd_ste->add_option("--calib", ste.calib_dir, "directory of calibration .jsonl traces")
        ->required();
    cmd_ste->add_option("--t-r1", ste.t_r1, "step-mode rank threshold")->capture_default_str();
    cmd_ste->add_option("--t-r2", ste.t_r2, "feature-mode rank threshold")->capture_default_str();
    auto* kw_file = cmd_ste->add_option("--keywords", ste.keywords_file,
                                        "file with one validation keyword per line");
    auto* kw_inline = cmd_ste->add_option("--keyword", ste.keywords_inline,
                                          "inline validation keyword (repeatable)");
    kw_file->excludes(kw_inline);
    kw_inline->excludes(kw_file);
    cmd_ste->add_option("--out", ste.out, "output steering vector JSON")->required();
    cmd_ste->add_option("--alpha", ste.alpha, "default injection strength")
        ->capture_default_str();
    cmd_ste->add_option("--w", ste.cfg.window, "window length")->capture_default_str();
    cmd_ste->add_option("--d1", ste.cfg.d1, "first factor dim")->capture_default_str();
    cmd_ste->add_option("--d2", ste.cfg.d2, "second factor dim")->capture_default_str();
    cmd_ste->add_option("--epsilon", ste.cfg.epsilon, "TT tolerance")->capture_default_str();

    SimulateArgs sim;
    auto* cmd_sim = app.add_subcommand("simulate", "trace-replay of routing + steering");
    cmd_sim->add_option("--srm", sim.srm, "SRM trace JSONL (repeatable)")->required();
    cmd_sim->add_option("--lrm", sim.lrm, "LRM trace JSONL (repeatable)")->required();
    cmd_sim->add_option("--t-e", sim.routing.t_e, "entropy threshold")->capture_default_str();
    cmd_sim->add_option("--t-r1", sim.routing.t_r1, "step-mode rank threshold")
        ->capture_default_str();
    cmd_sim->add_option("--t-r2", sim.routing.t_r2, "feature-mode rank threshold")
        ->capture_default_str();
    cmd_sim->add_option("--collapse-window", sim.routing.collapse_window,
                        "consecutive low-rank evaluations before termination")
        ->capture_default_str();
    cmd_sim->add_flag("--reset-on-route", sim.routing.reset_on_route,
                      "clear the collapse counter after each LRM splice");
    cmd_sim->add_option("--mode", sim.mode, "full | entropy_only | rank_only")
        ->capture_default_str();
    cmd_sim->add_option("--w", sim.signal.window, "window length")->capture_default_str();
    cmd_sim->add_option("--d1", sim.signal.d1, "first factor dim")->capture_default_str();
    cmd_sim->add_option("--d2", sim.signal.d2, "second factor dim")->capture_default_str();
    cmd_sim->add_option("--epsilon", sim.signal.epsilon, "TT tolerance")->capture_default_str();
    cmd_sim->add_option("--steer", sim.steer_file, "steering vector JSON");
    cmd_sim->add_option("--alpha", [&sim](const CLI::results_t& res) {
        try {
            sim.alpha = std::stod(res[0]);
        } catch (const std::exception&) {
            return false;
        }
        return true;
    }, "override steering strength");
    cmd_sim->add_option("--cost", sim.cost_file, "cost model key=value file");
    cmd_sim->add_option("--report", sim.report_file, "output report JSON")->required();
    cmd_sim->add_option("--decision-log", sim.decision_log, "output decision JSONL");
    cmd_sim->add_option("--id", sim.config_id, "config id recorded in the report")
        ->capture_default_str();
    cmd_sim->add_option("--terminated-label", sim.terminated_label,
                        "accuracy label for terminated, never-routed replays (srm | incorrect)")
        ->capture_default_str();

    ReportArgs rep;
    auto* cmd_rep = app.add_subcommand("report", "comparison CSV across simulation reports");
    cmd_rep->add_option("--runs", rep.runs_glob, "report files (glob on the filename)")
        ->required();
    cmd_rep->add_option("--baseline", rep.baseline, "config id of the baseline run")->required();
    cmd_rep->add_option("--csv", rep.csv_path, "output CSV path")->required();

    GenArgs gen;
    auto* cmd_gen = app.add_subcommand("gen", "deterministic synthetic trace generator");
    cmd_gen->add_option("--out", gen.out, "output trace JSONL")->required();
    cmd_gen->add_option("--steps", gen.spec.total_steps, "total reasoning steps")->required();
    cmd_gen->add_option("--d-hid", gen.spec.d_hid, "hidden size")->required();
    cmd_gen->add_option("--entropy-k", gen.spec.entropy_k, "top-k size")->capture_default_str();
    cmd_gen->add_option("--seed", gen.seed, "RNG seed")->capture_default_str();
    cmd_gen->add_option("--collapse", gen.collapse,
                        "collapse segment start:end:subspace_dim (repeatable)");
    cmd_gen->add_option("--high-entropy", gen.high_entropy,
                        "high-entropy segment start:end (repeatable)");
    cmd_gen->add_option("--healthy-entropy", gen.spec.healthy_entropy,
                        "entropy target outside planted segments")
        ->capture_default_str();
    cmd_gen->add_option("--collapse-entropy", gen.spec.collapse_entropy,
                        "entropy target inside collapse segments")
        ->capture_default_str();
    cmd_gen->add_option("--high-entropy-value", gen.spec.high_entropy,
                        "entropy target inside high-entropy segments")
        ->capture_default_str();
    cmd_gen->add_option("--validation-ratio", gen.spec.validation_ratio,
                        "fraction of steps given validation-keyword text")
        ->capture_default_str();
    cmd_gen->add_option("--delimiter", gen.spec.delimiter, "step delimiter")
        ->capture_default_str();
    cmd_gen->add_option("--model-tag", gen.spec.model_tag, "header model tag")
        ->capture_default_str();
    cmd_gen->add_option("--role", gen.role, "srm | lrm | calibration")->capture_default_str();
    cmd_gen->add_option("--correct", [&gen](const CLI::results_t& res) {
        gen.correct = res[0] == "true" || res[0] == "1";
        return true;
    }, "final_answer_correct label (true/false)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp" ||
            e.get_name() == "CallForVersion") {
            return app.exit(e);
        }
        std::cerr << e.what() << "\n";
        return 2;
    }

    try {
        if (cmd_dec->parsed()) return run_decompose(dec);
        if (cmd_sig->parsed()) return run_signal(sig);
        if (cmd_ste->parsed()) return run_steer_extract(ste);
        if (cmd_sim->parsed()) return run_simulate(sim);
        if (cmd_rep->parsed()) return run_report(rep);
        if (cmd_gen->parsed()) return run_gen(gen);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
