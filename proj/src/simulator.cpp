#include "rankguide/simulator.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace rankguide {

using json = nlohmann::ordered_json;

void validate_cost_model(const CostModel& cost) {
    for (double c : {cost.srm_step_cost, cost.lrm_step_cost, cost.signal_cost,
                     cost.route_overhead}) {
        if (c < 0.0) {
            throw config_error("InvalidConfig", "cost model entries must be >= 0");
        }
    }
}

namespace {

json decision_to_json(const DecisionRecord& d) {
    json obj;
    obj["step"] = d.step;
    obj["action"] = to_string(d.action);
    obj["trigger"] = to_string(d.trigger);
    obj["r1"] = d.r1 ? json(*d.r1) : json(nullptr);
    obj["r2"] = d.r2 ? json(*d.r2) : json(nullptr);
    obj["entropy"] = d.entropy;
    obj["counter"] = d.counter;
    return obj;
}

enum class StepSource { Srm, Lrm };

}  // namespace

std::string decision_log_to_jsonl(const std::vector<DecisionRecord>& log) {
    std::string out;
    for (const DecisionRecord& d : log) {
        out += decision_to_json(d).dump();
        out.push_back('\n');
    }
    return out;
}

SampleResult simulate_pair(const Trace& srm, const Trace& lrm, const SimulateOptions& opts,
                           std::string sample_id) {
    validate_routing_config(opts.routing);
    validate_cost_model(opts.cost);
    if (srm.header.d_hid != lrm.header.d_hid) {
        throw config_error("ConfigMismatch",
                           "srm d_hid " + std::to_string(srm.header.d_hid) +
                               " != lrm d_hid " + std::to_string(lrm.header.d_hid));
    }
    if (srm.header.delimiter != lrm.header.delimiter) {
        throw config_error("ConfigMismatch", "srm and lrm delimiters differ");
    }
    const bool use_rank = opts.routing.mode != RoutingMode::EntropyOnly;
    if (use_rank) {
        validate_signal_config(opts.signal, srm.header.d_hid);
        if (opts.signal.window != opts.routing.window) {
            throw config_error("ConfigMismatch",
                               "signal window and routing window must agree");
        }
    }
    if (opts.steering && opts.steering->vector.size() != srm.header.d_hid) {
        throw config_error("DimMismatch",
                           "steering vector length " +
                               std::to_string(opts.steering->vector.size()) +
                               " does not match trace d_hid " +
                               std::to_string(srm.header.d_hid));
    }

    const double alpha =
        opts.alpha ? *opts.alpha : (opts.steering ? opts.steering->alpha_default : 1.0);

    SampleResult res;
    res.sample_id = std::move(sample_id);

    WindowBuffer buf(opts.signal.window, srm.header.d_hid);
    RouterState state;
    std::size_t srm_cursor = 0;
    std::size_t lrm_cursor = 0;
    StepSource next_source = StepSource::Srm;
    std::optional<StepSource> prev_source;
    std::int64_t position = 0;
    bool routed_any = false;

    while (true) {
        if (next_source == StepSource::Srm && srm_cursor >= srm.steps.size()) {
            break;  // SRM trace exhausted: replay complete
        }
        if (next_source == StepSource::Lrm && lrm_cursor >= lrm.steps.size()) {
            throw config_error("TraceExhausted",
                               "routing requested LRM step " + std::to_string(lrm_cursor) +
                                   " but the LRM trace has only " +
                                   std::to_string(lrm.steps.size()) + " steps");
        }
        const StepRecord& rec = next_source == StepSource::Srm ? srm.steps[srm_cursor++]
                                                               : lrm.steps[lrm_cursor++];

        std::vector<double> hidden = rec.hidden;
        if (opts.steering && next_source == StepSource::Srm) {
            hidden = apply_steering(hidden, *opts.steering, alpha, rec.is_boundary);
        }
        buf.push(StepHidden{position, std::move(hidden)});

        std::optional<RankSignal> sig;
        if (use_rank && buf.full()) {
            sig = rank_signal(buf, opts.signal);
            res.signal_count += 1;
        }
        const double h = entropy(TopKLogits{rec.topk_logits});
        const RouteDecision decision = route_step(state, sig, h, opts.routing);

        DecisionRecord log;
        log.step = position;
        log.action = decision.action;
        log.trigger = decision.trigger;
        if (sig) {
            log.r1 = sig->r1;
            log.r2 = sig->r2;
        }
        log.entropy = h;
        log.counter = state.consecutive_low_rank;
        res.decisions.push_back(log);

        res.steps_total += 1;
        if (next_source == StepSource::Srm) {
            res.steps_srm += 1;
        } else {
            res.steps_lrm += 1;
        }
        if (classify_step(rec.text, opts.keywords) == StepClass::Validation) {
            res.validation_steps += 1;
        }
        if (prev_source && *prev_source != next_source) {
            res.switch_count += 1;
        }
        prev_source = next_source;
        position += 1;

        if (decision.action == RouteAction::Terminate) {
            res.terminated_early = true;
            break;
        }
        if (decision.action == RouteAction::RouteLRM) {
            routed_any = true;
            next_source = StepSource::Lrm;
            if (opts.routing.reset_on_route) {
                reset_collapse_counter(state);
            }
        } else {
            next_source = StepSource::Srm;
        }
    }

    res.latency = static_cast<double>(res.steps_srm) * opts.cost.srm_step_cost +
                  static_cast<double>(res.steps_lrm) * opts.cost.lrm_step_cost +
                  static_cast<double>(res.signal_count) * opts.cost.signal_cost +
                  static_cast<double>(res.switch_count) * opts.cost.route_overhead;

    if (routed_any) {
        res.answer_correct = lrm.final_answer_correct;
    } else if (res.terminated_early &&
               opts.terminated_label == TerminatedLabelPolicy::Incorrect) {
        res.answer_correct = false;
    } else {
        res.answer_correct = srm.final_answer_correct;
    }
    return res;
}

namespace {

void aggregate_report(SimulationReport& report) {
    double latency_sum = 0.0;
    double steps_sum = 0.0;
    std::size_t val_steps = 0;
    std::size_t total_steps = 0;
    double correct_sum = 0.0;
    std::size_t labeled = 0;
    for (const SampleResult& s : report.samples) {
        latency_sum += s.latency;
        steps_sum += static_cast<double>(s.steps_total);
        val_steps += s.validation_steps;
        total_steps += s.steps_total;
        if (s.answer_correct) {
            correct_sum += *s.answer_correct ? 1.0 : 0.0;
            ++labeled;
        }
    }
    const double n = static_cast<double>(report.samples.size());
    report.aggregate.mean_latency = report.samples.empty() ? 0.0 : latency_sum / n;
    report.aggregate.mean_steps = report.samples.empty() ? 0.0 : steps_sum / n;
    report.aggregate.validation_ratio =
        total_steps == 0 ? 0.0 : static_cast<double>(val_steps) / static_cast<double>(total_steps);
    if (labeled > 0) {
        report.aggregate.accuracy_proxy = correct_sum / static_cast<double>(labeled);
    }
}

}  // namespace

SimulationReport simulate(const Trace& srm, const Trace& lrm, const SimulateOptions& opts,
                          std::string config_id) {
    SimulationReport report;
    report.config_id = std::move(config_id);
    report.samples.push_back(simulate_pair(srm, lrm, opts, "sample-0"));
    aggregate_report(report);
    return report;
}

SimulationReport simulate_many(const std::vector<std::pair<Trace, Trace>>& pairs,
                               const SimulateOptions& opts, std::string config_id,
                               std::size_t threads) {
    SimulationReport report;
    report.config_id = std::move(config_id);
    report.samples.resize(pairs.size());

    threads = std::max<std::size_t>(1, std::min(threads, pairs.size() ? pairs.size() : 1));
    if (threads == 1) {
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            report.samples[i] = simulate_pair(pairs[i].first, pairs[i].second, opts,
                                              "sample-" + std::to_string(i));
        }
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(threads);
        for (std::size_t w = 0; w < threads; ++w) {
            pool.emplace_back([&, w]() {
                try {
                    for (std::size_t i = w; i < pairs.size(); i += threads) {
                        report.samples[i] = simulate_pair(pairs[i].first, pairs[i].second,
                                                          opts, "sample-" + std::to_string(i));
                    }
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (auto& t : pool) t.join();
        for (const auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }
    aggregate_report(report);
    return report;
}

double validation_ratio(const std::vector<StepRecord>& steps,
                        const std::vector<std::string>& keywords) {
    if (steps.empty()) {
        throw config_error("EmptyInput", "validation_ratio needs at least one step");
    }
    std::size_t n_val = 0;
    for (const StepRecord& s : steps) {
        if (classify_step(s.text, keywords) == StepClass::Validation) ++n_val;
    }
    return static_cast<double>(n_val) / static_cast<double>(steps.size());
}

namespace {

std::string csv_number(double v) { return json(v).dump(); }

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out.push_back('"');
    return out;
}

}  // namespace

std::string compare_runs_csv(const std::vector<SimulationReport>& runs,
                             const std::string& baseline_id) {
    if (runs.empty()) {
        throw config_error("EmptyInput", "compare_runs needs at least one report");
    }
    const SimulationReport* baseline = nullptr;
    for (const SimulationReport& r : runs) {
        if (r.config_id == baseline_id) baseline = &r;
    }
    if (!baseline) {
        throw config_error("InvalidConfig",
                           "baseline run '" + baseline_id + "' not among the reports");
    }

    std::vector<const SimulationReport*> order;
    order.reserve(runs.size());
    for (const SimulationReport& r : runs) order.push_back(&r);
    std::sort(order.begin(), order.end(),
              [](const SimulationReport* a, const SimulationReport* b) {
                  if (a->aggregate.mean_latency != b->aggregate.mean_latency) {
                      return a->aggregate.mean_latency < b->aggregate.mean_latency;
                  }
                  return a->config_id < b->config_id;
              });

    std::string csv = "config_id,accuracy_proxy,latency,steps,validation_ratio,speedup\n";
    for (const SimulationReport* r : order) {
        csv += csv_field(r->config_id);
        csv.push_back(',');
        if (r->aggregate.accuracy_proxy) csv += csv_number(*r->aggregate.accuracy_proxy);
        csv.push_back(',');
        csv += csv_number(r->aggregate.mean_latency);
        csv.push_back(',');
        csv += csv_number(r->aggregate.mean_steps);
        csv.push_back(',');
        csv += csv_number(r->aggregate.validation_ratio);
        csv.push_back(',');
        csv += csv_number(baseline->aggregate.mean_latency / r->aggregate.mean_latency);
        csv.push_back('\n');
    }
    return csv;
}

std::string report_to_json(const SimulationReport& report) {
    json obj;
    obj["config_id"] = report.config_id;
    json samples = json::array();
    for (const SampleResult& s : report.samples) {
        json sj;
        sj["sample"] = s.sample_id;
        sj["steps_total"] = s.steps_total;
        sj["steps_srm"] = s.steps_srm;
        sj["steps_lrm"] = s.steps_lrm;
        sj["validation_steps"] = s.validation_steps;
        sj["signal_count"] = s.signal_count;
        sj["switch_count"] = s.switch_count;
        sj["terminated_early"] = s.terminated_early;
        sj["latency"] = s.latency;
        sj["answer_correct"] = s.answer_correct ? json(*s.answer_correct) : json(nullptr);
        json log = json::array();
        for (const DecisionRecord& d : s.decisions) log.push_back(decision_to_json(d));
        sj["decisions"] = std::move(log);
        samples.push_back(std::move(sj));
    }
    obj["samples"] = std::move(samples);
    obj["aggregate"] = json{
        {"accuracy_proxy",
         report.aggregate.accuracy_proxy ? json(*report.aggregate.accuracy_proxy) : json(nullptr)},
        {"mean_latency", report.aggregate.mean_latency},
        {"mean_steps", report.aggregate.mean_steps},
        {"validation_ratio", report.aggregate.validation_ratio}};
    return obj.dump(2) + "\n";
}

namespace {

RouteAction action_from_string(const std::string& s) {
    if (s == "ContinueSRM") return RouteAction::ContinueSRM;
    if (s == "RouteLRM") return RouteAction::RouteLRM;
    if (s == "Terminate") return RouteAction::Terminate;
    throw config_error("FormatError", "unknown action '" + s + "'");
}

RouteTrigger trigger_from_string(const std::string& s) {
    if (s == "None") return RouteTrigger::None;
    if (s == "LowRank") return RouteTrigger::LowRank;
    if (s == "HighEntropy") return RouteTrigger::HighEntropy;
    if (s == "PersistentCollapse") return RouteTrigger::PersistentCollapse;
    if (s == "Both") return RouteTrigger::Both;
    throw config_error("FormatError", "unknown trigger '" + s + "'");
}

}  // namespace

SimulationReport report_from_json(const std::string& text, const std::string& origin) {
    json obj;
    try {
        obj = json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw config_error("FormatError", origin + ": malformed JSON (" + e.what() + ")");
    }
    SimulationReport report;
    try {
        report.config_id = obj.at("config_id").get<std::string>();
        for (const auto& sj : obj.at("samples")) {
            SampleResult s;
            s.sample_id = sj.at("sample").get<std::string>();
            s.steps_total = sj.at("steps_total").get<std::size_t>();
            s.steps_srm = sj.at("steps_srm").get<std::size_t>();
            s.steps_lrm = sj.at("steps_lrm").get<std::size_t>();
            s.validation_steps = sj.at("validation_steps").get<std::size_t>();
            s.signal_count = sj.at("signal_count").get<std::size_t>();
            s.switch_count = sj.at("switch_count").get<std::size_t>();
            s.terminated_early = sj.at("terminated_early").get<bool>();
            s.latency = sj.at("latency").get<double>();
            if (!sj.at("answer_correct").is_null()) {
                s.answer_correct = sj.at("answer_correct").get<bool>();
            }
            for (const auto& dj : sj.at("decisions")) {
                DecisionRecord d;
                d.step = dj.at("step").get<std::int64_t>();
                d.action = action_from_string(dj.at("action").get<std::string>());
                d.trigger = trigger_from_string(dj.at("trigger").get<std::string>());
                if (!dj.at("r1").is_null()) d.r1 = dj.at("r1").get<std::size_t>();
                if (!dj.at("r2").is_null()) d.r2 = dj.at("r2").get<std::size_t>();
                d.entropy = dj.at("entropy").get<double>();
                d.counter = dj.at("counter").get<std::size_t>();
                s.decisions.push_back(d);
            }
            report.samples.push_back(std::move(s));
        }
        const auto& agg = obj.at("aggregate");
        if (!agg.at("accuracy_proxy").is_null()) {
            report.aggregate.accuracy_proxy = agg.at("accuracy_proxy").get<double>();
        }
        report.aggregate.mean_latency = agg.at("mean_latency").get<double>();
        report.aggregate.mean_steps = agg.at("mean_steps").get<double>();
        report.aggregate.validation_ratio = agg.at("validation_ratio").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw config_error("FormatError", origin + ": " + e.what());
    }
    return report;
}

SimulationReport load_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw io_error("IoError", "cannot open " + path + " for reading");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return report_from_json(ss.str(), path);
}

void save_report(const SimulationReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw io_error("IoError", "cannot open " + path + " for writing");
    }
    out << report_to_json(report);
    if (!out) {
        throw io_error("IoError", "short write to " + path);
    }
}

}  // namespace rankguide
