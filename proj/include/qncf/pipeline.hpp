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

// End-to-end runs: config parsing, the full pipeline, JSON reports, oracle
// comparison and threaded batches.

#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "qncf/basis.hpp"
#include "qncf/error.hpp"
#include "qncf/estimation.hpp"
#include "qncf/hessian.hpp"
#include "qncf/hessian_io.hpp"
#include "qncf/ncf.hpp"
#include "qncf/oracle.hpp"
#include "qncf/random.hpp"
#include "qncf/readout.hpp"
#include "qncf/sve.hpp"

namespace qncf {

// ---------------------------------------------------------------------------
// Configuration

struct InstanceSpec {
  std::string file;  // Hessian JSON; empty means generate
  std::size_t d = 16;
  std::vector<double> spectrum;
  double lipschitz = 1.0;
  std::uint64_t seed = 0;
  double separation = 0.0;  // checked at load time when > 0
};

inline InstanceSpec instance_spec_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
  InstanceSpec s;
  if (!j.is_object()) throw ValidationError("instance: expected an object");
  if (j.contains("file")) {
    const std::filesystem::path p = j.at("file").get<std::string>();
    s.file = (p.is_absolute() || base_dir.empty() ? p : base_dir / p).string();
  } else {
    for (const char* key : {"d", "spectrum"})
      if (!j.contains(key)) throw ValidationError(std::string("instance: missing key '") + key + "'");
    s.d = j.at("d").get<std::size_t>();
    s.spectrum = j.at("spectrum").get<std::vector<double>>();
    s.lipschitz = j.value("L", 1.0);
    s.seed = j.value("seed", std::uint64_t{0});
  }
  s.separation = j.value("separation", 0.0);
  return s;
}

inline nlohmann::json to_json(const InstanceSpec& s) {
  nlohmann::json j;
  if (!s.file.empty()) {
    j["file"] = s.file;
  } else {
    j = {{"d", s.d}, {"spectrum", s.spectrum}, {"L", s.lipschitz}, {"seed", s.seed}};
  }
  if (s.separation > 0.0) j["separation"] = s.separation;
  return j;
}

/// Loads or generates the instance and checks the structural assumptions.
inline Hessian load_instance(const InstanceSpec& s) {
  Hessian h = s.file.empty() ? generate_synthetic(s.d, s.spectrum, s.lipschitz, s.seed) : load_hessian(s.file);
  validate_assumptions(h, s.separation);
  return h;
}

enum class RunMode { kBlind, kVerification };

inline const char* to_string(RunMode m) { return m == RunMode::kBlind ? "blind" : "verification"; }

inline RunMode parse_run_mode(const std::string& s) {
  if (s == "blind") return RunMode::kBlind;
  if (s == "verification") return RunMode::kVerification;
  throw ValidationError("unknown mode '" + s + "' (expected blind or verification)");
}

struct RunConfig {
  InstanceSpec instance;
  NCFParams params;
  nlohmann::json sve = nlohmann::json::object();  // overrides on the d-dependent defaults
  Backend backend = Backend::kAnalytic;
  std::uint64_t seed = 0;
  RunMode mode = RunMode::kBlind;
  std::size_t basis_attempts = 3;
  std::size_t compare_seeds = 1;
};

inline RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
  if (!j.is_object()) throw ValidationError("config: expected a JSON object");
  for (const auto& [key, value] : j.items())
    if (key != "instance" && key != "params" && key != "sve" && key != "backend" && key != "seed" &&
        key != "mode" && key != "basis_attempts" && key != "compare_seeds")
      throw ValidationError("config: unknown key '" + key + "'");
  if (!j.contains("instance")) throw ValidationError("config: missing key 'instance'");
  RunConfig c;
  try {
    c.instance = instance_spec_from_json(j.at("instance"), base_dir);
    if (j.contains("params")) {
      const auto& p = j.at("params");
      c.params.alpha = p.value("alpha", c.params.alpha);
      c.params.epsilon = p.value("epsilon", c.params.epsilon);
      c.params.delta = p.value("delta", c.params.delta);
    }
    if (j.contains("sve")) c.sve = j.at("sve");
    if (!c.sve.is_object()) throw ValidationError("config: 'sve' must be an object");
    if (j.contains("backend")) c.backend = parse_backend(j.at("backend").get<std::string>());
    c.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("mode")) c.mode = parse_run_mode(j.at("mode").get<std::string>());
    c.basis_attempts = j.value("basis_attempts", c.basis_attempts);
    c.compare_seeds = j.value("compare_seeds", c.compare_seeds);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  if (c.basis_attempts == 0) throw ValidationError("config: basis_attempts must be positive");
  if (c.compare_seeds == 0) throw ValidationError("config: compare_seeds must be positive");
  return c;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config: " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config: malformed JSON: ") + e.what());
  }
  return run_config_from_json(j, std::filesystem::path(path).parent_path());
}

inline nlohmann::json to_json(const NCFParams& p) {
  return {{"alpha", p.alpha}, {"epsilon", p.epsilon}, {"delta", p.delta}};
}

inline nlohmann::json to_json(const RunConfig& c) {
  return {{"instance", to_json(c.instance)},
          {"params", to_json(c.params)},
          {"sve", c.sve},
          {"backend", to_string(c.backend)},
          {"seed", c.seed},
          {"mode", to_string(c.mode)},
          {"basis_attempts", c.basis_attempts},
          {"compare_seeds", c.compare_seeds}};
}

// ---------------------------------------------------------------------------
// Runs

struct TallySnapshot {
  std::uint64_t u_h = 0, v_h = 0, modeled = 0;
};

inline TallySnapshot snapshot(const QueryTally& t) { return {t.u_h(), t.v_h(), t.modeled()}; }

inline TallySnapshot operator-(const TallySnapshot& a, const TallySnapshot& b) {
  return {a.u_h - b.u_h, a.v_h - b.v_h, a.modeled - b.modeled};
}

inline nlohmann::json to_json(const TallySnapshot& t) {
  return {{"u_h", t.u_h}, {"v_h", t.v_h}, {"oracle_calls", saturating_add(t.u_h, t.v_h)}, {"modeled", t.modeled}};
}

/// Final state of a run.
///   proper          reconstructed vector produced
///   no-vector       labelling found no proper eigenvalue
///   exhausted       target generation ran out of iterations
///   anchor-failed   no column passed the anchor gate
///   basis-failed    every basis attempt failed
enum class RunStatus { kProper, kNoVector, kExhausted, kAnchorFailed, kBasisFailed };

inline const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::kProper: return "proper";
    case RunStatus::kNoVector: return "no-vector";
    case RunStatus::kExhausted: return "exhausted";
    case RunStatus::kAnchorFailed: return "anchor-failed";
    case RunStatus::kBasisFailed: return "basis-failed";
  }
  return "?";
}

struct RunResult {
  RunConfig config;
  SVEConfig sve;
  Hessian hessian;
  SpectralDecomposition decomp;
  ClassicalNcfResult classical;
  QuantumNcfResult ncf;
  RunStatus status = RunStatus::kNoVector;
  std::string failure;
  std::optional<TargetSource> source;
  std::optional<std::size_t> target_index;  // eigen index the run aimed at
  std::optional<AnchorResult> anchor;
  std::vector<BasisResult> basis;           // one per attempt
  std::optional<ReadoutResult> readout;
  std::vector<std::pair<std::string, TallySnapshot>> stage_tally;
  TallySnapshot tally;
  double wall_seconds = 0.0;

  /// Verdict of the labelling stage.
  bool quantum_proper() const { return ncf.labelling.verdict == LabelVerdict::kProper; }
};

inline SVEConfig resolve_sve(const RunConfig& c, std::size_t d) {
  return sve_config_from_json(c.sve, SVEConfig::defaults(c.params, d));
}

inline RunResult run_pipeline(const RunConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  RunResult out;
  out.config = config;
  out.hessian = load_instance(config.instance);
  const Hessian& h = out.hessian;
  config.params.validate(h.lipschitz);
  if (config.backend == Backend::kStatevector && h.d > kStatevectorMaxDim)
    throw ValidationError("statevector backend requires d <= 64");
  out.sve = resolve_sve(config, h.d);
  out.decomp = eigendecompose(h);
  out.classical = classical_ncf(out.decomp, config.params);
  const KPTree tree(h);
  const RandomStream root(config.seed);
  TallySnapshot mark{};
  auto stage = [&](const char* name) {
    const TallySnapshot now = snapshot(tree.tally());
    out.stage_tally.emplace_back(name, now - mark);
    mark = now;
  };

  RandomStream ns = root.split("ncf");
  out.ncf = quantum_ncf(tree, out.decomp, config.params, out.sve, config.backend, ns);
  stage("ncf");
  auto finish = [&](RunStatus s) {
    out.status = s;
    out.tally = snapshot(tree.tally());
    out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
  };
  if (out.ncf.outcome == NcfOutcome::kNoVector) return finish(RunStatus::kNoVector);
  if (out.ncf.outcome == NcfOutcome::kExhausted) return finish(RunStatus::kExhausted);

  if (config.mode == RunMode::kVerification) {
    out.target_index = *out.ncf.target->eigen_index;
    out.source = verification_target(out.decomp, *out.target_index);
  } else {
    out.source = blind_target(out.decomp, out.ncf.labelling, config.params, out.sve);
    out.target_index = out.source->indices[out.source->primary];
  }

  RandomStream as = root.split("anchor");
  try {
    out.anchor = find_anchor_index(tree, *out.source, config.params.delta, config.backend, as);
  } catch (const AnchorError& e) {
    out.failure = e.what();
    stage("anchor");
    return finish(RunStatus::kAnchorFailed);
  }
  stage("anchor");

  ReadoutOptions ro;
  ro.backend = config.backend;
  ro.oracle_constants = config.mode == RunMode::kVerification;
  BasisOptions bo;
  bo.backend = config.backend;
  bo.oracle_constants = config.mode == RunMode::kVerification;
  bo.delta = config.params.delta;
  for (std::size_t attempt = 0; attempt < config.basis_attempts; ++attempt) {
    RandomStream bs = root.split("basis").split(attempt);
    out.basis.push_back(complete_basis_selection(tree, out.decomp, config.params.epsilon, bo, bs));
    stage("basis");
    const BasisResult& b = out.basis.back();
    if (!b.success) {
      out.failure = b.failure;
      continue;
    }
    RandomStream rs = root.split("readout").split(attempt);
    try {
      ReadoutResult r;
      r.indices = b.indices;
      r.system = assemble_gram_system(tree, *out.source, *out.anchor, b.indices, config.params.epsilon,
                                      config.params.delta, ro, rs);
      r.x = solve_coordinates(r.system);
      r.u = reconstruct(h, r.indices, r.x);
      r.report = verify_readout(h, config.params, r.u, out.decomp.vectors[*out.target_index]);
      out.readout = std::move(r);
      out.failure.clear();
      stage("readout");
      return finish(RunStatus::kProper);
    } catch (const ConditioningError& e) {
      out.failure = e.what();
      stage("readout");
    }
  }
  return finish(RunStatus::kBasisFailed);
}

inline nlohmann::json optional_index(const std::optional<std::size_t>& i) {
  return i ? nlohmann::json(*i) : nlohmann::json(nullptr);
}

/// Run report. Wall time is the only field that varies between identical runs.
inline nlohmann::json report_json(const RunResult& r, bool include_wall_time) {
  nlohmann::json j;
  j["config"] = to_json(r.config);
  j["sve"] = to_json(r.sve);
  j["instance"] = {{"d", r.hessian.d},
                   {"r", r.hessian.r},
                   {"L", r.hessian.lipschitz},
                   {"frobenius", r.decomp.frobenius},
                   {"spectrum", r.decomp.values}};
  j["status"] = to_string(r.status);
  j["verdict"] = to_string(r.ncf.labelling.verdict);
  j["failure"] = r.failure;
  j["labelling"] = to_json(r.ncf.labelling);
  if (r.ncf.target) {
    const TargetResult& t = *r.ncf.target;
    j["target"] = {{"exhausted", t.exhausted},
                   {"eigen_index", optional_index(t.eigen_index)},
                   {"from_failed_sve", t.from_failed_sve},
                   {"iterations", t.iterations},
                   {"max_iterations", t.max_iterations}};
  } else {
    j["target"] = nullptr;
  }
  j["target_index"] = optional_index(r.target_index);
  if (r.source)
    j["source"] = {{"verification", r.source->verification},
                   {"indices", r.source->indices},
                   {"weights", r.source->weights},
                   {"lambda_estimate", r.source->lambda_estimate},
                   {"regeneration_cost", r.source->regeneration_cost}};
  else
    j["source"] = nullptr;
  j["anchor"] = r.anchor ? to_json(*r.anchor) : nlohmann::json(nullptr);
  auto basis = nlohmann::json::array();
  for (const auto& b : r.basis) basis.push_back(to_json(b));
  j["basis"] = basis;
  j["readout"] = r.readout ? to_json(*r.readout) : nlohmann::json(nullptr);
  j["verification"] = r.readout ? to_json(r.readout->report) : to_json(not_applicable_report());
  j["classical"] = {{"verdict", to_string(r.classical.verdict)},
                    {"lambda_min", r.classical.lambda_min},
                    {"eigen_index", optional_index(r.classical.eigen_index)}};
  auto stages = nlohmann::json::object();
  for (const auto& [name, t] : r.stage_tally) {
    if (!stages.contains(name)) stages[name] = to_json(TallySnapshot{});
    auto& s = stages[name];
    s["u_h"] = s["u_h"].get<std::uint64_t>() + t.u_h;
    s["v_h"] = s["v_h"].get<std::uint64_t>() + t.v_h;
    s["modeled"] = s["modeled"].get<std::uint64_t>() + t.modeled;
    s["oracle_calls"] = saturating_add(s["u_h"].get<std::uint64_t>(), s["v_h"].get<std::uint64_t>());
  }
  j["queries"] = {{"total", to_json(r.tally)}, {"stages", stages}};
  j["streams"] = {{"seed", r.config.seed},
                  {"paths", {"ncf/label", "ncf/target", "anchor", "basis/<attempt>", "readout/<attempt>"}}};
  if (include_wall_time) j["wall_time_s"] = r.wall_seconds;
  return j;
}

// ---------------------------------------------------------------------------
// Comparison against the classical oracle

struct ComparisonRow {
  std::uint64_t seed = 0;
  std::string classical;
  std::string quantum;
  std::string status;
  bool excluded = false;  // boundary band: either answer admissible
  bool agree = false;
  std::optional<double> rayleigh;
  std::optional<double> distance;
  double classical_lambda_min = 0.0;
};

inline ComparisonRow compare_row(const RunResult& r) {
  ComparisonRow row;
  row.seed = r.config.seed;
  row.classical = to_string(r.classical.verdict);
  row.quantum = to_string(r.ncf.labelling.verdict);
  row.status = to_string(r.status);
  row.classical_lambda_min = r.classical.lambda_min;
  row.excluded = r.classical.verdict == NcfVerdict::kBoundary;
  row.agree = (r.classical.verdict == NcfVerdict::kProper) == r.quantum_proper();
  if (r.readout) {
    row.rayleigh = r.readout->report.rayleigh;
    row.distance = r.readout->report.distance;
  }
  return row;
}

inline nlohmann::json to_json(const ComparisonRow& c) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  return {{"seed", c.seed},         {"classical", c.classical}, {"quantum", c.quantum},
          {"status", c.status},     {"excluded", c.excluded},   {"agree", c.agree},
          {"rayleigh", opt(c.rayleigh)}, {"distance", opt(c.distance)},
          {"classical_lambda_min", c.classical_lambda_min}};
}

/// Worker count: QNCF_THREADS when set and positive, else hardware concurrency.
inline std::size_t thread_count() {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("QNCF_THREADS")) {
    char* end = nullptr;
    const long long v = std::strtoll(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) n = std::min<std::size_t>(n, static_cast<std::size_t>(v));
  }
  return n;
}

/// Applies `fn` to 0..n-1 on up to thread_count() workers. Results keep index order.
template <typename Fn>
auto parallel_map(std::size_t n, Fn fn) -> std::vector<decltype(fn(std::size_t{}))> {
  using T = decltype(fn(std::size_t{}));
  std::vector<std::optional<T>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::min(thread_count(), std::max<std::size_t>(n, 1));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<T> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

inline std::vector<RunResult> run_batch(const std::vector<RunConfig>& configs) {
  return parallel_map(configs.size(), [&](std::size_t i) { return run_pipeline(configs[i]); });
}

struct ComparisonSummary {
  std::vector<ComparisonRow> rows;
  std::size_t considered = 0;
  std::size_t agreed = 0;
  double agreement_rate() const { return considered ? static_cast<double>(agreed) / considered : 1.0; }
};

inline nlohmann::json to_json(const ComparisonSummary& s) {
  auto rows = nlohmann::json::array();
  for (const auto& r : s.rows) rows.push_back(to_json(r));
  return {{"rows", rows},
          {"considered", s.considered},
          {"agreed", s.agreed},
          {"excluded", s.rows.size() - s.considered},
          {"agreement_rate", s.agreement_rate()}};
}

/// Runs config.compare_seeds consecutive run seeds on the configured instance.
inline ComparisonSummary compare(const RunConfig& config) {
  std::vector<RunConfig> configs(config.compare_seeds, config);
  for (std::size_t k = 0; k < configs.size(); ++k) configs[k].seed = config.seed + k;
  ComparisonSummary s;
  for (const auto& r : run_batch(configs)) {
    s.rows.push_back(compare_row(r));
    if (s.rows.back().excluded) continue;
    ++s.considered;
    s.agreed += s.rows.back().agree;
  }
  return s;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << text;
}

}  // namespace qncf
