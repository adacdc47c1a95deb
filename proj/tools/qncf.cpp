// Copyright 2026 The qncf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// qncf command line: gen, run, compare, accept.
// Exit codes: 0 success, 1 contract failure, 2 usage or validation error.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "qncf/acceptance.hpp"
#include "qncf/qncf.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kContractFailure = 1;
constexpr int kUsage = 2;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> backend;
  std::string out = ".";
};

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw qncf::ValidationError("cannot open config: " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw qncf::ValidationError(std::string("config: malformed JSON: ") + e.what());
  }
}

qncf::RunConfig resolve(const Common& c) {
  qncf::RunConfig config = qncf::load_run_config(c.config);
  if (c.seed) config.seed = *c.seed;
  if (c.backend) config.backend = qncf::parse_backend(*c.backend);
  return config;
}

int cmd_gen(const Common& c) {
  // Accepts a run config or a bare instance spec.
  const nlohmann::json j = read_json(c.config);
  const auto base = std::filesystem::path(c.config).parent_path();
  qncf::InstanceSpec spec;
  try {
    spec = qncf::instance_spec_from_json(j.is_object() && j.contains("instance") ? j.at("instance") : j, base);
  } catch (const nlohmann::json::exception& e) {
    throw qncf::ValidationError(std::string("instance: ") + e.what());
  }
  if (c.seed) spec.seed = *c.seed;
  const qncf::Hessian h = qncf::load_instance(spec);
  const auto path = std::filesystem::path(c.out) / "hessian.json";
  qncf::write_text(path, qncf::write_hessian_json(h));
  std::cout << "wrote " << path.string() << " (d=" << h.d << ", r=" << h.r << ")\n";
  return kOk;
}

int cmd_run(const Common& c, bool wall_time) {
  const qncf::RunResult r = qncf::run_pipeline(resolve(c));
  const auto path = std::filesystem::path(c.out) / "report.json";
  qncf::write_text(path, qncf::report_json(r, wall_time).dump(2) + "\n");
  std::cout << "status " << qncf::to_string(r.status) << ", classical "
            << qncf::to_string(r.classical.verdict);
  if (r.readout) std::cout << ", rayleigh " << r.readout->report.rayleigh;
  std::cout << "\nwrote " << path.string() << "\n";
  const bool delivered = r.status == qncf::RunStatus::kProper || r.status == qncf::RunStatus::kNoVector;
  return delivered ? kOk : kContractFailure;
}

int cmd_compare(const Common& c) {
  const qncf::ComparisonSummary s = qncf::compare(resolve(c));
  const auto path = std::filesystem::path(c.out) / "compare.json";
  qncf::write_text(path, qncf::to_json(s).dump(2) + "\n");
  auto cell = [](const std::optional<double>& v) {
    if (!v) return std::string("-");
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << *v;
    return os.str();
  };
  std::cout << std::left << std::setw(22) << "seed" << std::setw(14) << "status" << std::setw(12) << "quantum"
            << std::setw(12) << "classical" << std::setw(10) << "agree" << std::setw(10) << "rayleigh"
            << "distance\n";
  for (const auto& row : s.rows)
    std::cout << std::setw(22) << row.seed << std::setw(14) << row.status << std::setw(12) << row.quantum
              << std::setw(12) << row.classical << std::setw(10)
              << (row.excluded ? "excluded" : row.agree ? "yes" : "no") << std::setw(10) << cell(row.rayleigh)
              << cell(row.distance) << "\n";
  std::cout << "agreement " << s.agreed << "/" << s.considered << " (excluded " << s.rows.size() - s.considered
            << ")\nwrote " << path.string() << "\n";
  return kOk;
}

int cmd_accept(const std::vector<std::string>& names, const std::string& out) {
  const auto& all = qncf::acceptance::suites();
  for (const auto& n : names) {
    bool known = false;
    for (const auto& s : all) known |= n == s.name;
    if (!known) throw qncf::ValidationError("unknown suite '" + n + "'");
  }
  bool pass = true;
  auto table = nlohmann::json::array();
  for (const auto& s : all) {
    if (!names.empty() && std::find(names.begin(), names.end(), s.name) == names.end()) continue;
    const auto result = s.run();
    std::cout << qncf::acceptance::format_line(result) << std::endl;
    table.push_back(qncf::acceptance::to_json(result));
    pass &= result.pass;
  }
  if (!out.empty()) qncf::write_text(std::filesystem::path(out) / "accept.json", table.dump(2) + "\n");
  return pass ? kOk : kContractFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qncf: quantum negative curvature finding on a classical simulator"};
  app.require_subcommand(1);

  Common common;
  bool no_wall_time = false;
  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* opt = sub->add_option("--config", common.config, "JSON config path");
    if (config_required) opt->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", common.seed, "seed override");
    sub->add_option("--backend", common.backend, "statevector or analytic")
        ->check(CLI::IsMember({"statevector", "analytic"}));
    sub->add_option("--out", common.out, "output directory");
  };

  auto* gen = app.add_subcommand("gen", "write a Hessian instance as JSON");
  add_common(gen, true);
  auto* run = app.add_subcommand("run", "run the pipeline and write report.json");
  add_common(run, true);
  run->add_flag("--no-wall-time", no_wall_time, "omit wall time from the report");
  auto* cmp = app.add_subcommand("compare", "compare against the classical oracle over seeds");
  add_common(cmp, true);
  auto* accept = app.add_subcommand("accept", "run acceptance suites");
  std::vector<std::string> suites;
  std::string accept_out;
  accept->add_option("suites", suites, "suite names (default: all)");
  accept->add_option("--out", accept_out, "directory for accept.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*gen) return cmd_gen(common);
    if (*run) return cmd_run(common, !no_wall_time);
    if (*cmp) return cmd_compare(common);
    if (*accept) return cmd_accept(suites, accept_out);
  } catch (const qncf::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const qncf::PreconditionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kContractFailure;
  }
  return kUsage;
}
