#include "kevo/report.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace kevo {

namespace {

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

void write_atomic(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::trunc);
    if (!f) throw DataError("report: cannot write " + tmp);
    f << text;
    if (!f) throw DataError("report: write failed for " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw DataError("report: cannot rename " + tmp + " -> " + path);
}

}  // namespace

std::string report_to_csv(const std::vector<GenerationLog>& logs) {
  if (logs.empty()) throw DataError("report: no generation logs");
  std::ostringstream os;
  os << "generation,dense_metric,slim_metric,sparsity";
  for (const auto& s : logs.front().hypothesis_stats)
    os << ",mean_abs_fit_" << s.layer << ",mean_abs_reset_" << s.layer;
  os << ",s_h2d,c_h2d\n";
  for (const auto& log : logs) {
    os << log.generation << ',' << num(log.dense.primary()) << ','
       << (log.slim ? num(log.slim->primary()) : std::string()) << ','
       << num(log.sparsity);
    for (const auto& s : log.hypothesis_stats) {
      os << ',' << num(s.fit_mean_abs) << ','
         << (s.reset_mean_abs ? num(*s.reset_mean_abs) : std::string());
    }
    os << ',' << (log.s_h2d ? num(*log.s_h2d) : std::string()) << ','
       << (log.c_h2d ? num(*log.c_h2d) : std::string()) << '\n';
  }
  return os.str();
}

std::string report_to_jsonl(const std::vector<GenerationLog>& logs) {
  if (logs.empty()) throw DataError("report: no generation logs");
  std::ostringstream os;
  for (const auto& log : logs) {
    nlohmann::json j;
    j["generation"] = log.generation;
    j["epoch_losses"] = log.epoch_losses;
    auto metric = [](const MetricRecord& m) {
      nlohmann::json r;
      if (m.task == TaskKind::Classification) {
        r["top1"] = m.top1;
      } else {
        r["recall1"] = m.recall1;
        r["recall4"] = m.recall4;
        r["nmi"] = m.nmi;
      }
      return r;
    };
    j["dense"] = metric(log.dense);
    if (log.slim) j["slim"] = metric(*log.slim);
    j["sparsity"] = log.sparsity;
    nlohmann::json stats = nlohmann::json::array();
    for (const auto& s : log.hypothesis_stats) {
      nlohmann::json e;
      e["layer"] = s.layer;
      e["fit_mean_abs"] = s.fit_mean_abs;
      if (s.reset_mean_abs) e["reset_mean_abs"] = *s.reset_mean_abs;
      stats.push_back(e);
    }
    j["hypothesis_stats"] = stats;
    if (log.s_h2d) j["s_h2d"] = *log.s_h2d;
    if (log.c_h2d) j["c_h2d"] = *log.c_h2d;
    j["wall_time_sec"] = log.wall_time_sec;
    os << j.dump() << '\n';
  }
  return os.str();
}

void emit_report(const std::vector<GenerationLog>& logs,
                 const std::string& csv_path, const std::string& jsonl_path) {
  write_atomic(csv_path, report_to_csv(logs));
  write_atomic(jsonl_path, report_to_jsonl(logs));
}

}  // namespace kevo
