#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace bitflow {

/// One measurement row. Absent indices serialize as empty CSV fields.
struct ResultRecord {
    std::string run_id;
    std::string metric;
    std::optional<int> layer;
    std::optional<double> time;
    std::optional<double> epsilon;
    std::optional<double> width;
    double value = 0.0;
    std::string tag;  // measured | bound | diagnostic
};

/// %.17g serialization; round-trips doubles exactly.
std::string format_g17(double v);

/// Collects rows in insertion order and writes the results.csv schema
/// `run_id,metric,layer,time,epsilon,width,value,tag`.
class ResultsWriter {
  public:
    explicit ResultsWriter(std::string run_id) : run_id_(std::move(run_id)) {}

    void add(const std::string& metric, double value, const std::string& tag,
             std::optional<int> layer = std::nullopt,
             std::optional<double> time = std::nullopt,
             std::optional<double> epsilon = std::nullopt,
             std::optional<double> width = std::nullopt);

    const std::vector<ResultRecord>& rows() const { return rows_; }
    void write_csv(const std::string& path) const;

  private:
    std::string run_id_;
    std::vector<ResultRecord> rows_;
};

/// run.jsonl emitter: one {"event", "timestamp", "payload"} object per line.
class JsonlLogger {
  public:
    explicit JsonlLogger(const std::string& path);
    void event(const std::string& name, const std::string& payload_json);

  private:
    std::ofstream out_;
};

} // namespace bitflow
