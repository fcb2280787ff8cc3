#pragma once

#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>

#include "fbp/io/stream_file.hpp"
#include "fbp/runtime.hpp"

namespace fbp {

inline void write_counters_csv(std::ostream& out, const RunReport& r) {
  out << "node,kind,tuples_in,tuples_out,puncts_in,puncts_out,feedback_received,feedback_sent,guard_drops,"
         "state_purged,work_units\n";
  for (std::size_t i = 0; i < r.node_ids.size(); ++i) {
    const auto& c = r.counters[i];
    out << csv_escape(r.node_ids[i]) << ',' << r.kinds[i] << ',' << c.tuples_in << ',' << c.tuples_out << ','
        << c.puncts_in << ',' << c.puncts_out << ',' << c.feedback_received << ',' << c.feedback_sent << ','
        << c.guard_drops << ',' << c.state_purged << ',' << c.work_units << '\n';
  }
}

// Tuples only; header row from the schema of the first tuple.
inline void write_tuples_csv(std::ostream& out, const std::vector<StreamItem>& items, const SchemaPtr& schema) {
  for (std::size_t i = 0; i < schema->size(); ++i) out << (i ? "," : "") << (*schema)[i].name;
  out << '\n';
  for (const auto& item : items) {
    if (!item.is_tuple()) continue;
    const auto& vs = item.tuple().values;
    for (std::size_t i = 0; i < vs.size(); ++i) out << (i ? "," : "") << (is_null(vs[i]) ? "" : csv_escape(format_value(vs[i])));
    out << '\n';
  }
}

// counters.csv plus output_<sink>.csv per sink.
inline void write_report(const std::filesystem::path& dir, const RunReport& r) {
  std::filesystem::create_directories(dir);
  std::ofstream counters(dir / "counters.csv");
  write_counters_csv(counters, r);
  for (std::size_t i = 0; i < r.node_ids.size(); ++i) {
    auto it = r.outputs.find(r.node_ids[i]);
    if (it == r.outputs.end()) continue;
    std::ofstream out(dir / ("output_" + r.node_ids[i] + ".csv"));
    write_tuples_csv(out, it->second, r.operators[i]->input_schemas().at(0));
  }
}

}  // namespace fbp
