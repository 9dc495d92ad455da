#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rankguide/errors.hpp"

namespace rankguide {

enum class TraceRole { Srm, Lrm, Calibration };

enum class StepClass { Execution, Validation };

struct TraceHeader {
    int schema_version = 1;
    std::string model_tag;
    std::size_t d_hid = 0;
    int layer_index = 0;
    std::size_t entropy_k = 0;
    std::string delimiter = "\n\n";
    TraceRole role = TraceRole::Srm;
    std::string precision = "float64";  // original recording precision; values stored as float64
};

/// One reasoning step: hidden state at the delimiter position, top-k logits
/// (descending), step text, and optional labels.
struct StepRecord {
    std::int64_t step_index = 0;
    std::vector<double> hidden;
    std::vector<double> topk_logits;
    std::string text;
    bool is_boundary = true;
    std::optional<StepClass> gold_class;
    std::optional<bool> correct;
};

struct Trace {
    TraceHeader header;
    std::vector<StepRecord> steps;
    std::optional<bool> final_answer_correct;
};

/// JSON Lines: line 1 is the header object, each following line one step.
/// Loading validates every invariant (lengths, ordering, finiteness) and
/// reports the offending line and field. Saving is canonical: fixed key
/// order, shortest round-trip float64, one '\n' per record.
[[nodiscard]] Trace load_trace(const std::string& path);
void save_trace(const Trace& trace, const std::string& path);

[[nodiscard]] Trace parse_trace_jsonl(std::istream& in, const std::string& origin);
[[nodiscard]] std::string trace_to_jsonl(const Trace& trace);

[[nodiscard]] std::string to_string(TraceRole role);
[[nodiscard]] TraceRole trace_role_from_string(const std::string& s);
[[nodiscard]] std::string to_string(StepClass c);
[[nodiscard]] StepClass step_class_from_string(const std::string& s);

}  // namespace rankguide
