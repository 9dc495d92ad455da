#include "rankguide/steering.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace rankguide {

using json = nlohmann::ordered_json;

std::vector<std::string> default_validation_keywords() {
    return {"alternatively", "wait",     "verify",   "let me check",
            "double-check",  "but wait", "hold on",  "re-examine"};
}

namespace {

std::string lowercase(const std::string& s) {
    std::string out = s;
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

bool contains_whole_word(const std::string& text_lower, const std::string& kw_lower) {
    if (kw_lower.empty()) return false;
    std::size_t pos = 0;
    while ((pos = text_lower.find(kw_lower, pos)) != std::string::npos) {
        const bool left_ok = pos == 0 || !is_word_char(text_lower[pos - 1]);
        const std::size_t end = pos + kw_lower.size();
        const bool right_ok = end == text_lower.size() || !is_word_char(text_lower[end]);
        if (left_ok && right_ok) return true;
        ++pos;
    }
    return false;
}

}  // namespace

StepClass classify_step(const std::string& text, const std::vector<std::string>& keywords) {
    const std::string lower = lowercase(text);
    for (const std::string& kw : keywords) {
        if (contains_whole_word(lower, lowercase(kw))) return StepClass::Validation;
    }
    return StepClass::Execution;
}

CalibrationSample build_calibration_sample(const Trace& trace, const SignalConfig& cfg,
                                           const std::vector<std::string>& keywords,
                                           std::string sample_id) {
    validate_signal_config(cfg, trace.header.d_hid);
    CalibrationSample sample;
    sample.sample_id = std::move(sample_id);
    sample.window = cfg.window;
    sample.steps.reserve(trace.steps.size());

    WindowBuffer buf(cfg.window, trace.header.d_hid);
    for (const StepRecord& rec : trace.steps) {
        buf.push(StepHidden{rec.step_index, rec.hidden});
        CalibrationStep step;
        step.record = rec;
        step.cls = classify_step(rec.text, keywords);
        if (buf.full()) step.signal = rank_signal(buf, cfg);
        sample.steps.push_back(std::move(step));
    }
    return sample;
}

std::vector<CalibrationSample> filter_calibration(const std::vector<CalibrationSample>& samples,
                                                  std::size_t t_r1, std::size_t t_r2) {
    std::vector<CalibrationSample> kept;
    for (const CalibrationSample& sample : samples) {
        bool has_low_rank = false;
        for (const CalibrationStep& step : sample.steps) {
            if (!step.signal) {
                if (step.record.step_index >= static_cast<std::int64_t>(sample.window)) {
                    throw config_error("MissingRankSignals",
                                       "sample '" + sample.sample_id + "' step " +
                                           std::to_string(step.record.step_index) +
                                           " lacks a rank signal");
                }
                continue;
            }
            if (low_rank_predicate(*step.signal, t_r1, t_r2)) {
                has_low_rank = true;
            }
        }
        if (!has_low_rank) kept.push_back(sample);
    }
    return kept;
}

SteeringVector extract_steering_vector(const std::vector<CalibrationSample>& filtered) {
    std::size_t d_hid = 0;
    for (const CalibrationSample& s : filtered) {
        if (!s.steps.empty()) {
            d_hid = s.steps.front().record.hidden.size();
            break;
        }
    }
    if (d_hid == 0) {
        throw config_error("EmptyClass", "no calibration steps available");
    }

    std::vector<double> sum_exe(d_hid, 0.0), sum_val(d_hid, 0.0);
    std::size_t n_exe = 0, n_val = 0;
    for (const CalibrationSample& sample : filtered) {
        for (const CalibrationStep& step : sample.steps) {
            const auto& h = step.record.hidden;
            if (h.size() != d_hid) {
                throw config_error("DimMismatch", "inconsistent hidden sizes across samples");
            }
            if (step.cls == StepClass::Execution) {
                for (std::size_t i = 0; i < d_hid; ++i) sum_exe[i] += h[i];
                ++n_exe;
            } else {
                for (std::size_t i = 0; i < d_hid; ++i) sum_val[i] += h[i];
                ++n_val;
            }
        }
    }
    if (n_exe == 0 || n_val == 0) {
        throw config_error("EmptyClass",
                           "need at least one execution and one validation step (got " +
                               std::to_string(n_exe) + " / " + std::to_string(n_val) + ")");
    }

    SteeringVector sv;
    sv.vector.resize(d_hid);
    for (std::size_t i = 0; i < d_hid; ++i) {
        sv.vector[i] = sum_exe[i] / static_cast<double>(n_exe) -
                       sum_val[i] / static_cast<double>(n_val);
    }
    sv.provenance.n_exe = n_exe;
    sv.provenance.n_val = n_val;
    sv.provenance.samples_kept = filtered.size();
    sv.provenance.samples_total = filtered.size();
    return sv;
}

SteeringVector extract_rank_filtered_steering(const std::vector<CalibrationSample>& samples,
                                              std::size_t t_r1, std::size_t t_r2,
                                              const std::vector<std::string>& keywords,
                                              double alpha_default) {
    const std::vector<CalibrationSample> kept = filter_calibration(samples, t_r1, t_r2);
    SteeringVector sv = extract_steering_vector(kept);
    sv.alpha_default = alpha_default;
    sv.keywords = keywords;
    sv.t_r1 = t_r1;
    sv.t_r2 = t_r2;
    sv.provenance.samples_kept = kept.size();
    sv.provenance.samples_total = samples.size();
    return sv;
}

std::vector<double> apply_steering(const std::vector<double>& h, const SteeringVector& sv,
                                   double alpha, bool is_boundary) {
    if (h.size() != sv.vector.size()) {
        throw config_error("DimMismatch",
                           "hidden size " + std::to_string(h.size()) +
                               " does not match steering vector size " +
                               std::to_string(sv.vector.size()));
    }
    if (!is_boundary) return h;
    std::vector<double> out(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) out[i] = h[i] + alpha * sv.vector[i];
    return out;
}

std::string steering_to_json(const SteeringVector& sv) {
    json obj;
    obj["d_hid"] = sv.vector.size();
    obj["vector"] = sv.vector;
    obj["alpha_default"] = sv.alpha_default;
    obj["keywords"] = sv.keywords;
    obj["thresholds"] = json{{"T_r1", sv.t_r1}, {"T_r2", sv.t_r2}};
    obj["provenance"] = json{{"n_exe", sv.provenance.n_exe},
                             {"n_val", sv.provenance.n_val},
                             {"samples_kept", sv.provenance.samples_kept},
                             {"samples_total", sv.provenance.samples_total}};
    return obj.dump(2) + "\n";
}

SteeringVector steering_from_json(const std::string& text, const std::string& origin) {
    json obj;
    try {
        obj = json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw config_error("FormatError", origin + ": malformed JSON (" + e.what() + ")");
    }
    SteeringVector sv;
    try {
        sv.vector = obj.at("vector").get<std::vector<double>>();
        sv.alpha_default = obj.at("alpha_default").get<double>();
        sv.keywords = obj.at("keywords").get<std::vector<std::string>>();
        sv.t_r1 = obj.at("thresholds").at("T_r1").get<std::size_t>();
        sv.t_r2 = obj.at("thresholds").at("T_r2").get<std::size_t>();
        const auto& prov = obj.at("provenance");
        sv.provenance.n_exe = prov.at("n_exe").get<std::size_t>();
        sv.provenance.n_val = prov.at("n_val").get<std::size_t>();
        sv.provenance.samples_kept = prov.at("samples_kept").get<std::size_t>();
        sv.provenance.samples_total = prov.at("samples_total").get<std::size_t>();
        if (obj.at("d_hid").get<std::size_t>() != sv.vector.size()) {
            throw config_error("InvariantViolation",
                               origin + ": field 'vector': length does not match d_hid");
        }
    } catch (const nlohmann::json::exception& e) {
        throw config_error("FormatError", origin + ": " + e.what());
    }
    for (double v : sv.vector) {
        if (!std::isfinite(v)) {
            throw config_error("InvariantViolation",
                               origin + ": field 'vector': non-finite entry");
        }
    }
    return sv;
}

SteeringVector load_steering(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw io_error("IoError", "cannot open " + path + " for reading");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return steering_from_json(ss.str(), path);
}

void save_steering(const SteeringVector& sv, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw io_error("IoError", "cannot open " + path + " for writing");
    }
    out << steering_to_json(sv);
    if (!out) {
        throw io_error("IoError", "short write to " + path);
    }
}

}  // namespace rankguide
