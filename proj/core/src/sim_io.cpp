#include <string>

#include <json.hpp>

#include "pmflow/io_util.hpp"
#include "pmflow/sim_types.hpp"

namespace pmflow {

std::string records_csv_header() {
  std::string h =
      "step,outer,omega0,inner,residual_before,residual_after,converged,"
      "mass_error,ds_inf,update_occurred,update_index,update_rmse_before,"
      "update_rmse_after";
  for (const char* name : kFeatureNames) {
    h += ',';
    h += name;
  }
  return h;
}

void write_records_csv(const std::vector<IterationRecord>& records,
                       const std::filesystem::path& path) {
  std::string out = records_csv_header();
  out += '\n';
  for (const auto& r : records) {
    out += std::to_string(r.step);
    out += ',';
    out += std::to_string(r.outer);
    out += ',';
    out += format_double(r.omega0);
    out += ',';
    out += std::to_string(r.inner);
    out += ',';
    out += format_double(r.residual_before);
    out += ',';
    out += format_double(r.residual_after);
    out += ',';
    out += r.converged ? '1' : '0';
    out += ',';
    out += format_double(r.mass_error);
    out += ',';
    out += format_double(r.ds_inf);
    out += ',';
    out += r.update_occurred ? '1' : '0';
    out += ',';
    out += std::to_string(r.update_index);
    out += ',';
    out += format_double(r.update_rmse_before);
    out += ',';
    out += format_double(r.update_rmse_after);
    for (int i = 0; i < kFeatureCount; ++i) {
      out += ',';
      out += format_double(r.features[i]);
    }
    out += '\n';
  }
  write_text_file(path, out);
}

void write_report_json(const SimulationReport& report, const std::string& label,
                       const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["format"] = "pmflow-report";
  j["version"] = 1;
  j["label"] = label;
  j["total_outer"] = report.total_outer;
  j["total_inner"] = report.total_inner;
  j["total_metric"] = report.total_metric;
  j["wall_seconds"] = report.wall_seconds;
  j["all_converged"] = report.all_converged;
  j["rejected_steps"] = report.rejected_steps;
  j["n_steps"] = report.steps.size();

  auto steps = nlohmann::ordered_json::array();
  for (const auto& s : report.steps) {
    steps.push_back({{"index", s.index},
                     {"t_end", s.t_end},
                     {"dt", s.dt},
                     {"outer", s.outer},
                     {"inner_total", s.inner_total},
                     {"converged", s.converged},
                     {"mass_error", s.mass_error},
                     {"ds_inf", s.ds_inf},
                     {"sw_min", s.sw_min},
                     {"sw_max", s.sw_max}});
  }
  j["steps"] = std::move(steps);
  j["final_p"] = report.final_p;
  j["final_sw"] = report.final_sw;
  write_text_file(path, j.dump(1, '\t') + "\n");
}

} // namespace pmflow
