#include "rankguide/trace.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace rankguide {

using json = nlohmann::ordered_json;

namespace {

[[noreturn]] void format_error(const std::string& origin, std::size_t line,
                               const std::string& what) {
    throw config_error("FormatError",
                       origin + ":" + std::to_string(line) + ": " + what);
}

[[noreturn]] void invariant_error(const std::string& origin, std::size_t line,
                                  const std::string& field, const std::string& what) {
    throw config_error("InvariantViolation",
                       origin + ":" + std::to_string(line) + ": field '" + field +
                           "': " + what);
}

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& origin, std::size_t line) {
    for (const auto& item : obj.items()) {
        if (!allowed.count(item.key())) {
            format_error(origin, line, "unknown key '" + item.key() + "'");
        }
    }
}

std::vector<double> finite_array(const json& arr, const std::string& origin,
                                 std::size_t line, const std::string& field) {
    if (!arr.is_array()) invariant_error(origin, line, field, "expected an array");
    std::vector<double> out;
    out.reserve(arr.size());
    for (const auto& v : arr) {
        if (!v.is_number()) invariant_error(origin, line, field, "expected numbers");
        const double d = v.get<double>();
        if (!std::isfinite(d)) invariant_error(origin, line, field, "non-finite value");
        out.push_back(d);
    }
    return out;
}

TraceHeader parse_header(const json& obj, const std::string& origin,
                         std::optional<bool>& final_answer_correct) {
    const std::size_t line = 1;
    reject_unknown_keys(obj,
                        {"schema_version", "model_tag", "d_hid", "layer_index", "entropy_k",
                         "delimiter", "role", "precision", "final_answer_correct"},
                        origin, line);
    for (const char* key : {"schema_version", "model_tag", "d_hid", "layer_index",
                            "entropy_k", "delimiter", "role"}) {
        if (!obj.contains(key)) {
            format_error(origin, line, std::string("missing header key '") + key + "'");
        }
    }

    TraceHeader h;
    if (!obj["schema_version"].is_number_integer()) {
        invariant_error(origin, line, "schema_version", "expected an integer");
    }
    h.schema_version = obj["schema_version"].get<int>();
    if (h.schema_version != 1) {
        throw config_error("SchemaVersionUnsupported",
                           origin + ": schema_version " +
                               std::to_string(h.schema_version) + " (supported: 1)");
    }
    h.model_tag = obj["model_tag"].get<std::string>();
    if (!obj["d_hid"].is_number_integer() || obj["d_hid"].get<std::int64_t>() < 1) {
        invariant_error(origin, line, "d_hid", "must be an integer >= 1");
    }
    h.d_hid = obj["d_hid"].get<std::size_t>();
    h.layer_index = obj["layer_index"].get<int>();
    if (!obj["entropy_k"].is_number_integer() || obj["entropy_k"].get<std::int64_t>() < 1) {
        invariant_error(origin, line, "entropy_k", "must be an integer >= 1");
    }
    h.entropy_k = obj["entropy_k"].get<std::size_t>();
    h.delimiter = obj["delimiter"].get<std::string>();
    try {
        h.role = trace_role_from_string(obj["role"].get<std::string>());
    } catch (const Error&) {
        invariant_error(origin, line, "role", "must be one of srm/lrm/calibration");
    }
    if (obj.contains("precision")) {
        h.precision = obj["precision"].get<std::string>();
        if (h.precision != "float64" && h.precision != "float32") {
            invariant_error(origin, line, "precision", "must be float64 or float32");
        }
    }
    if (obj.contains("final_answer_correct")) {
        if (!obj["final_answer_correct"].is_boolean()) {
            invariant_error(origin, line, "final_answer_correct", "expected a boolean");
        }
        final_answer_correct = obj["final_answer_correct"].get<bool>();
    }
    return h;
}

StepRecord parse_step(const json& obj, const TraceHeader& header, const std::string& origin,
                      std::size_t line) {
    reject_unknown_keys(obj,
                        {"step_index", "hidden", "topk_logits", "text", "is_boundary",
                         "gold_class", "correct"},
                        origin, line);
    for (const char* key : {"step_index", "hidden", "topk_logits", "text", "is_boundary"}) {
        if (!obj.contains(key)) {
            format_error(origin, line, std::string("missing step key '") + key + "'");
        }
    }

    StepRecord s;
    if (!obj["step_index"].is_number_integer()) {
        invariant_error(origin, line, "step_index", "expected an integer");
    }
    s.step_index = obj["step_index"].get<std::int64_t>();
    s.hidden = finite_array(obj["hidden"], origin, line, "hidden");
    if (s.hidden.size() != header.d_hid) {
        invariant_error(origin, line, "hidden",
                        "length " + std::to_string(s.hidden.size()) +
                            " does not match d_hid " + std::to_string(header.d_hid));
    }
    s.topk_logits = finite_array(obj["topk_logits"], origin, line, "topk_logits");
    if (s.topk_logits.size() != header.entropy_k) {
        invariant_error(origin, line, "topk_logits",
                        "length " + std::to_string(s.topk_logits.size()) +
                            " does not match entropy_k " + std::to_string(header.entropy_k));
    }
    for (std::size_t i = 1; i < s.topk_logits.size(); ++i) {
        if (s.topk_logits[i] > s.topk_logits[i - 1]) {
            invariant_error(origin, line, "topk_logits", "must be sorted non-increasing");
        }
    }
    s.text = obj["text"].get<std::string>();
    if (!obj["is_boundary"].is_boolean()) {
        invariant_error(origin, line, "is_boundary", "expected a boolean");
    }
    s.is_boundary = obj["is_boundary"].get<bool>();
    if (obj.contains("gold_class")) {
        try {
            s.gold_class = step_class_from_string(obj["gold_class"].get<std::string>());
        } catch (const Error&) {
            invariant_error(origin, line, "gold_class", "must be execution or validation");
        }
    }
    if (obj.contains("correct")) {
        if (!obj["correct"].is_boolean()) {
            invariant_error(origin, line, "correct", "expected a boolean");
        }
        s.correct = obj["correct"].get<bool>();
    }
    return s;
}

json header_to_json(const Trace& trace) {
    const TraceHeader& h = trace.header;
    json obj;
    obj["schema_version"] = h.schema_version;
    obj["model_tag"] = h.model_tag;
    obj["d_hid"] = h.d_hid;
    obj["layer_index"] = h.layer_index;
    obj["entropy_k"] = h.entropy_k;
    obj["delimiter"] = h.delimiter;
    obj["role"] = to_string(h.role);
    obj["precision"] = h.precision;
    if (trace.final_answer_correct) obj["final_answer_correct"] = *trace.final_answer_correct;
    return obj;
}

json step_to_json(const StepRecord& s) {
    json obj;
    obj["step_index"] = s.step_index;
    obj["hidden"] = s.hidden;
    obj["topk_logits"] = s.topk_logits;
    obj["text"] = s.text;
    obj["is_boundary"] = s.is_boundary;
    if (s.gold_class) obj["gold_class"] = to_string(*s.gold_class);
    if (s.correct) obj["correct"] = *s.correct;
    return obj;
}

}  // namespace

Trace parse_trace_jsonl(std::istream& in, const std::string& origin) {
    Trace trace;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            if (in.peek() == std::char_traits<char>::eof()) break;
            format_error(origin, line_no, "empty line");
        }
        json obj;
        try {
            obj = json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            format_error(origin, line_no, std::string("malformed JSON (") + e.what() + ")");
        }
        if (!obj.is_object()) format_error(origin, line_no, "expected a JSON object");

        if (!have_header) {
            try {
                trace.header = parse_header(obj, origin, trace.final_answer_correct);
            } catch (const nlohmann::json::exception& e) {
                format_error(origin, line_no, e.what());
            }
            have_header = true;
            continue;
        }
        StepRecord s;
        try {
            s = parse_step(obj, trace.header, origin, line_no);
        } catch (const nlohmann::json::exception& e) {
            format_error(origin, line_no, e.what());
        }
        if (trace.steps.empty()) {
            if (s.step_index != 0) {
                invariant_error(origin, line_no, "step_index",
                                "first step must have index 0, got " +
                                    std::to_string(s.step_index));
            }
        } else if (s.step_index <= trace.steps.back().step_index) {
            invariant_error(origin, line_no, "step_index",
                            "indices must be strictly increasing; got " +
                                std::to_string(s.step_index) + " after " +
                                std::to_string(trace.steps.back().step_index));
        }
        trace.steps.push_back(std::move(s));
    }
    if (!have_header) {
        format_error(origin, 1, "missing header line");
    }
    return trace;
}

std::string trace_to_jsonl(const Trace& trace) {
    std::string out = header_to_json(trace).dump();
    out.push_back('\n');
    for (const StepRecord& s : trace.steps) {
        out += step_to_json(s).dump();
        out.push_back('\n');
    }
    return out;
}

Trace load_trace(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw io_error("IoError", "cannot open " + path + " for reading");
    }
    return parse_trace_jsonl(in, path);
}

void save_trace(const Trace& trace, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw io_error("IoError", "cannot open " + path + " for writing");
    }
    out << trace_to_jsonl(trace);
    if (!out) {
        throw io_error("IoError", "short write to " + path);
    }
}

std::string to_string(TraceRole role) {
    switch (role) {
        case TraceRole::Srm: return "srm";
        case TraceRole::Lrm: return "lrm";
        case TraceRole::Calibration: return "calibration";
    }
    return "?";
}

TraceRole trace_role_from_string(const std::string& s) {
    if (s == "srm") return TraceRole::Srm;
    if (s == "lrm") return TraceRole::Lrm;
    if (s == "calibration") return TraceRole::Calibration;
    throw config_error("InvalidConfig", "unknown trace role '" + s + "'");
}

std::string to_string(StepClass c) {
    return c == StepClass::Execution ? "execution" : "validation";
}

StepClass step_class_from_string(const std::string& s) {
    if (s == "execution") return StepClass::Execution;
    if (s == "validation") return StepClass::Validation;
    throw config_error("InvalidConfig", "unknown step class '" + s + "'");
}

}  // namespace rankguide
