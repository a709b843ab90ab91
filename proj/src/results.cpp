#include "bitflow/results.hpp"

#include "bitflow/errors.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>

namespace bitflow {

std::string format_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void ResultsWriter::add(const std::string& metric, double value,
                        const std::string& tag, std::optional<int> layer,
                        std::optional<double> time,
                        std::optional<double> epsilon,
                        std::optional<double> width) {
    if (!std::isfinite(value))
        throw NumericalError("ResultsWriter: non-finite value for metric " + metric);
    if (tag != "measured" && tag != "bound" && tag != "diagnostic")
        throw DomainError("ResultsWriter: unknown provenance tag " + tag);
    rows_.push_back({run_id_, metric, layer, time, epsilon, width, value, tag});
}

void ResultsWriter::write_csv(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw NumericalError("ResultsWriter: cannot open " + path);
    out << "run_id,metric,layer,time,epsilon,width,value,tag\n";
    for (const ResultRecord& r : rows_) {
        out << r.run_id << ',' << r.metric << ',';
        if (r.layer) out << *r.layer;
        out << ',';
        if (r.time) out << format_g17(*r.time);
        out << ',';
        if (r.epsilon) out << format_g17(*r.epsilon);
        out << ',';
        if (r.width) out << format_g17(*r.width);
        out << ',' << format_g17(r.value) << ',' << r.tag << '\n';
    }
}

JsonlLogger::JsonlLogger(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw NumericalError("JsonlLogger: cannot open " + path);
}

void JsonlLogger::event(const std::string& name, const std::string& payload_json) {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char stamp[32];
    std::tm tm_utc{};
    gmtime_r(&t, &tm_utc);
    std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);

    nlohmann::json obj;
    obj["event"] = name;
    obj["timestamp"] = stamp;
    obj["payload"] = nlohmann::json::parse(payload_json, nullptr, false);
    if (obj["payload"].is_discarded()) obj["payload"] = payload_json;
    out_ << obj.dump() << '\n';
    out_.flush();
}

} // namespace bitflow
