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

// Acceptance suites. Each criterion runs at fixed seeds and reports one
// quantitative line plus a pass flag that includes its runtime budget.

#pragma once

#include <boost/math/distributions/chi_squared.hpp>
#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "qncf/basis.hpp"
#include "qncf/estimation.hpp"
#include "qncf/hessian.hpp"
#include "qncf/ncf.hpp"
#include "qncf/oracle.hpp"
#include "qncf/pipeline.hpp"
#include "qncf/readout.hpp"
#include "qncf/sve.hpp"

namespace qncf::acceptance {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
  double budget = 0.0;  // seconds
};

inline nlohmann::json to_json(const CriterionResult& c) {
  return {{"id", c.id},     {"name", c.name},       {"pass", c.pass},
          {"detail", c.detail}, {"seconds", c.seconds}, {"budget_s", c.budget}};
}

inline std::string format_line(const CriterionResult& c) {
  std::ostringstream os;
  os << (c.pass ? "PASS" : "FAIL") << "  [" << c.id << "] " << c.name << ": " << c.detail << " ("
     << std::fixed;
  os.precision(2);
  os << c.seconds << " s / " << c.budget << " s)";
  return os.str();
}

namespace detail {

inline const Hessian& seed7() {
  static const Hessian h = [] {
    const double spec[] = {-0.6, 0.4, -0.2, 0.1};
    return generate_synthetic(16, spec, 1.0, 7);
  }();
  return h;
}

template <typename Fn>
CriterionResult timed(int id, std::string name, double budget, Fn fn) {
  CriterionResult c;
  c.id = id;
  c.name = std::move(name);
  c.budget = budget;
  const auto start = std::chrono::steady_clock::now();
  std::ostringstream detail;
  const bool ok = fn(detail);
  c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  c.detail = detail.str();
  c.pass = ok && c.seconds < budget;
  if (ok && !c.pass) c.detail += "; over runtime budget";
  return c;
}

inline double chi_square_pvalue(std::span<const double> observed, std::span<const double> expected) {
  double stat = 0.0;
  for (std::size_t k = 0; k < observed.size(); ++k)
    stat += (observed[k] - expected[k]) * (observed[k] - expected[k]) / expected[k];
  const boost::math::chi_squared dist(static_cast<double>(observed.size() - 1));
  return boost::math::cdf(boost::math::complement(dist, stat));
}

/// Spectrum of r magnitudes in [0.03, 0.97], pairwise gaps above eps + 0.01,
/// random signs, lambda_min on the requested side of the boundary band.
inline std::vector<double> regime_spectrum(bool negative, const NCFParams& p, std::size_t r, RandomStream& rng) {
  for (;;) {
    std::vector<double> mags(r);
    for (double& m : mags) m = rng.uniform(0.03, 0.97);
    if (!separation_check(mags, p.epsilon + 0.01)) continue;
    std::vector<double> spec(r);
    double lmin = 0.0;
    for (std::size_t k = 0; k < r; ++k) {
      spec[k] = rng.bernoulli(0.5) ? -mags[k] : mags[k];
      lmin = std::min(lmin, spec[k]);
    }
    if (negative ? lmin <= -p.alpha : lmin > p.proper_threshold()) return spec;
  }
}

struct RegimeBatch {
  std::vector<RunResult> negative, positive;
};

/// 100 instances per regime at d=32, r=4; shared by the verdict and Rayleigh criteria.
inline const RegimeBatch& regime_batch() {
  static const RegimeBatch batch = [] {
    RegimeBatch b;
    for (bool negative : {true, false}) {
      RandomStream rng(negative ? 3001 : 3002, "regime");
      std::vector<RunConfig> configs;
      for (int t = 0; t < 100; ++t) {
        RunConfig c;
        c.instance.d = 32;
        c.instance.spectrum = regime_spectrum(negative, c.params, 4, rng);
        c.instance.seed = rng();
        c.seed = rng();
        configs.push_back(c);
      }
      (negative ? b.negative : b.positive) = run_batch(configs);
    }
    return b;
  }();
  return batch;
}

struct BasisTrials {
  std::vector<BasisResult> exact, verification, blind;
};

inline const BasisTrials& basis_trials() {
  static const BasisTrials trials = [] {
    BasisTrials t;
    const auto dec = eigendecompose(seed7());
    auto run = [&](BasisOptions o) {
      return parallel_map(200, [&](std::size_t s) {
        const KPTree local(seed7());
        RandomStream rng(5000 + s, "basis-trial");
        return complete_basis_selection(local, dec, 0.2, o, rng);
      });
    };
    BasisOptions exact;
    exact.exact = true;
    t.exact = run(exact);
    t.verification = run(BasisOptions{});
    BasisOptions blind;
    blind.oracle_constants = false;
    t.blind = run(blind);
    return t;
  }();
  return trials;
}

}  // namespace detail

// ---------------------------------------------------------------------------

inline CriterionResult pned_distribution() {
  return detail::timed(1, "PNED distribution", 30.0, [](std::ostream& out) {
    const Hessian& h = detail::seed7();
    const KPTree tree(h);
    const auto dec = eigendecompose(h);
    double worst = 0.0, worst_backend = 0.0;
    for (std::size_t k = 0; k < dec.rank(); ++k) {
      const double expect = 0.5 * (1.0 - dec.values[k] / dec.frobenius);
      const double sv = pned_probability_statevector(tree, dec.vectors[k]);
      const double an = pned_probability_analytic(tree, dec.vectors[k]);
      worst_backend = std::max(worst_backend, std::abs(sv - an));
      RandomStream rng(1000 + k, "pned");
      int ones = 0;
      for (int i = 0; i < 10000; ++i) ones += pned_shot(tree, dec.vectors[k], Backend::kAnalytic, rng).bit;
      worst = std::max(worst, std::abs(ones / 10000.0 - expect));
    }
    out << "max |P1 - (1 - lambda/||H||_F)/2| = " << worst << " (tol 0.015); backend gap " << worst_backend
        << " (tol 1e-10)";
    return worst <= 0.015 && worst_backend <= 1e-10;
  });
}

inline CriterionResult sve_block_sampling() {
  return detail::timed(2, "SVE block sampling", 30.0, [](std::ostream& out) {
    const Hessian& h = detail::seed7();
    const KPTree tree(h);
    const auto dec = eigendecompose(h);
    const SVEConfig c = SVEConfig::defaults(NCFParams{}, h.d);
    const QState joint = prepare_joint_state(tree);
    RandomStream rng(2000, "sve");
    const int n = 10000;
    std::vector<double> counts(dec.rank(), 0.0), expected(dec.rank());
    for (std::size_t k = 0; k < dec.rank(); ++k)
      expected[k] = n * dec.values[k] * dec.values[k] / (dec.frobenius * dec.frobenius);
    int violations = 0;
    for (int i = 0; i < n; ++i) {
      const SVESample s = sve_channel(joint, dec, c, rng);
      counts[s.index] += 1;
      if (!s.failed && std::abs(s.estimate - std::abs(dec.values[s.index])) > 0.2 / 4 + 1e-12) ++violations;
    }
    const double p = detail::chi_square_pvalue(counts, expected);
    out << "chi-square p = " << p << " (need > 0.01); estimate violations " << violations << " (need 0)";
    return p > 0.01 && violations == 0;
  });
}

inline CriterionResult verdict_agreement() {
  return detail::timed(3, "Verdict agreement", 600.0, [](std::ostream& out) {
    const auto& b = detail::regime_batch();
    auto agree = [](const std::vector<RunResult>& runs, std::size_t& excluded) {
      int n = 0;
      for (const auto& r : runs) {
        const ComparisonRow row = compare_row(r);
        if (row.excluded) {
          ++excluded;
          continue;
        }
        n += row.agree;
      }
      return n;
    };
    std::size_t excluded = 0;
    const int neg = agree(b.negative, excluded), pos = agree(b.positive, excluded);
    out << "negative regime " << neg << "/100, positive regime " << pos << "/100 (need >= 95 each); excluded "
        << excluded;
    return neg >= 95 && pos >= 95 && excluded == 0;
  });
}

inline CriterionResult rayleigh_contract() {
  return detail::timed(4, "End-to-end Rayleigh contract", 600.0, [](std::ostream& out) {
    const auto& b = detail::regime_batch();
    int success = 0, rayleigh = 0, dist = 0;
    for (const auto& r : b.negative) {
      if (!r.readout) continue;
      ++success;
      rayleigh += r.readout->report.rayleigh_pass;
      dist += r.readout->report.distance_pass;
    }
    const double fr = success ? static_cast<double>(rayleigh) / success : 0.0;
    const double fd = success ? static_cast<double>(dist) / success : 0.0;
    out << "successful runs " << success << "/100; Rayleigh <= -alpha+eps in " << rayleigh << " (" << 100 * fr
        << "%, need 95%); distance <= eps/2 in " << dist << " (" << 100 * fd << "%, need 90%)";
    return success > 0 && fr >= 0.95 && fd >= 0.90;
  });
}

inline CriterionResult basis_success() {
  return detail::timed(5, "Basis-selection success", 300.0, [](std::ostream& out) {
    const auto& t = detail::basis_trials();
    auto count = [](const std::vector<BasisResult>& v) {
      int n = 0;
      for (const auto& b : v) n += b.success && independence_check(detail::seed7(), b.indices);
      return n;
    };
    const int exact = count(t.exact), ver = count(t.verification), blind = count(t.blind);
    out << "exact " << exact << "/200 (need 200); estimated with exact constants " << ver
        << "/200, with pilot constants " << blind << "/200 (need >= 140)";
    return exact == 200 && ver >= 140 && blind >= 140;
  });
}

inline CriterionResult perturbation_property() {
  return detail::timed(6, "Coordinate perturbation bound", 60.0, [](std::ostream& out) {
    RandomStream rng(6000, "perturbation");
    const NCFParams p;
    std::size_t total = 0, violations = 0;
    double worst = 0.0;
    for (int inst = 0; inst < 20; ++inst) {
      std::vector<double> spec = detail::regime_spectrum(true, p, 4, rng);
      const Hessian h = generate_synthetic(16, spec, 1.0, rng());
      const auto dec = eigendecompose(h);
      const KPTree tree(h);
      BasisOptions o;
      o.exact = true;
      RandomStream bs = rng.split(static_cast<std::uint64_t>(inst));
      const BasisResult basis = complete_basis_selection(tree, dec, p.epsilon, o, bs);
      if (!basis.success) return out << "exact basis failed on instance " << inst, false;
      const std::size_t t = static_cast<std::size_t>(
          std::min_element(dec.values.begin(), dec.values.end()) - dec.values.begin());
      const Matrix c = qncf::detail::exact_gram(tree, basis.indices);
      Vector b;
      for (std::size_t g : basis.indices) b.push_back(dot(dec.vectors[t], tree.column_state(g)));
      const PerturbationCheck chk = perturbation_bound_check(c, b, p.epsilon, 1000, rng);
      total += chk.trials;
      violations += chk.violations;
      worst = std::max(worst, chk.max_distance);
    }
    out << total << " perturbations, " << violations << " violations (need 0); max distance " << worst
        << " vs eps/2 = " << p.epsilon / 2;
    return total == 20000 && violations == 0;
  });
}

inline CriterionResult estimator_contracts() {
  return detail::timed(7, "Estimator contracts", 120.0, [](std::ostream& out) {
    const KPTree tree(detail::seed7());
    RandomStream rng(7000, "estimators");
    int failures = 0;
    bool shots_ok = true;
    for (int t = 0; t < 1000; ++t) {
      const std::size_t i = rng() % 16, j = rng() % 16;
      const OverlapEstimate e = hadamard_test_overlap(tree, i, j, 0.1, 0.05, Backend::kAnalytic, rng);
      failures += std::abs(e.value - column_overlap(tree, i, j)) > 0.1;
      shots_ok &= e.shots == 738;
    }
    double swap_gap = 0.0;
    for (int t = 0; t < 100; ++t) {
      Vector a(8), b(8);
      for (double& x : a) x = rng.normal();
      for (double& x : b) x = rng.normal();
      a = normalized(a);
      b = normalized(b);
      const double o = dot(a, b);
      const double p0 = swap_probability_statevector(prepare_vector_state(a, "a"), prepare_vector_state(b, "b"));
      swap_gap = std::max(swap_gap, std::abs(p0 - 0.5 * (1 + o * o)));
    }
    // Hand-evaluated shot counts.
    shots_ok &= hoeffding_shots(0.1, 0.05) == 738;    // 200 ln 40 = 737.78
    shots_ok &= hoeffding_shots(0.05, 0.01) == 4239;  // 800 ln 200 = 4238.64
    shots_ok &= pned_shot_count(1.0, 0.5, 0.05) == 25;  // 2 floor(4 ln 20 - 1/2) + 3
    shots_ok &= pned_shot_count(1.0, 0.5, 0.5) == 7;    // 2 floor(4 ln 2 - 1/2) + 3
    shots_ok &= pned_shot_count(1.0, 1.0, std::exp(-1.0)) == 3;
    out << "Hadamard failures " << failures << "/1000 (need <= 50); SWAP P0 gap " << swap_gap
        << " (need <= 1e-12); shot formulas " << (shots_ok ? "exact" : "MISMATCH");
    return failures <= 50 && swap_gap <= 1e-12 && shots_ok;
  });
}

inline CriterionResult structural_identities() {
  return detail::timed(8, "Structural identities", 120.0, [](std::ostream& out) {
    RandomStream rng(8000, "structure");
    double pq_gap = 0.0;
    for (int t = 0; t < 21; ++t) {
      Hessian h = detail::seed7();
      if (t > 0) {
        const std::size_t r = 1 + t % 4;
        std::vector<double> spec(r);
        for (double& v : spec) v = rng.uniform(0.1, 1.0) * (rng.bernoulli(0.5) ? -1 : 1);
        h = generate_synthetic(4 + t % 13, spec, 1.0, rng());
      }
      const auto pq = build_pq(h);
      const Matrix id = Matrix::identity(h.d);
      Matrix scaled_h = h.entries;
      for (double& x : scaled_h.data()) x /= frobenius_norm(h.entries);
      pq_gap = std::max({pq_gap, max_abs_diff(matmul(pq.p.transpose(), pq.p), id),
                         max_abs_diff(matmul(pq.q.transpose(), pq.q), id),
                         max_abs_diff(matmul(pq.p.transpose(), pq.q), scaled_h)});
    }
    int fro_violations = 0;
    for (int t = 0; t < 1000; ++t) {
      const std::size_t r = 1 + rng() % 6, d = r + rng() % 6;
      const double L = rng.uniform(0.5, 3.0);
      std::vector<double> spec(r);
      for (double& v : spec) {
        do v = rng.uniform(-L, L);
        while (v == 0.0);
      }
      const Hessian h = generate_synthetic(d, spec, L, rng());
      fro_violations += !(frobenius_norm(h.entries) <= std::sqrt(static_cast<double>(r)) * L + 1e-12);
    }
    double det_worst = 0.0;
    std::size_t rounds = 0;
    for (const auto* set : {&detail::basis_trials().exact, &detail::basis_trials().verification})
      for (const auto& b : *set)
        for (const auto& round : b.transcript) {
          det_worst = std::max(det_worst, round.det_residual);
          ++rounds;
        }
    int checked = 0, mismatches = 0;
    for (int t = 0; checked < 500; ++t) {
      const std::size_t d = 8, r = 3;
      std::vector<Vector> basis;
      if (t % 2 == 0) {
        basis = random_orthonormal_set(d, r, rng);
      } else {
        for (auto& v : random_orthonormal_set(d - 1, r, rng)) {
          Vector w(d);
          w[0] = w[1] = v[0] / std::sqrt(2.0);
          for (std::size_t k = 1; k < d - 1; ++k) w[k + 1] = v[k];
          basis.push_back(std::move(w));
        }
      }
      const double spec[] = {-0.7, 0.5, 0.25};
      const Hessian h = make_hessian(sum_of_outer_products(spec, basis, d), r, 1.0);
      std::vector<std::size_t> idx(d);
      std::iota(idx.begin(), idx.end(), 0);
      for (std::size_t k = 0; k < r; ++k) std::swap(idx[k], idx[k + rng() % (d - k)]);
      idx.resize(r);
      bool zero = false;
      for (std::size_t i : idx) zero |= h.column_norm(i) < 1e-12;
      if (zero) continue;
      std::vector<Vector> cols;
      for (std::size_t i : idx) cols.push_back(normalized(h.entries.column(i)));
      const auto es = jacobi_eigensystem(gram_matrix(cols));
      std::size_t rank = 0;
      for (double v : es.values) rank += std::abs(v) > 1e-9;
      mismatches += independence_check(h, idx) != (rank == r);
      ++checked;
    }
    out << "P/Q identity gap " << pq_gap << " (tol 1e-10); Frobenius bound violations " << fro_violations
        << "/1000; determinant identity worst " << det_worst << " over " << rounds
        << " rounds (tol 1e-8); independence check mismatches " << mismatches << "/" << checked;
    return pq_gap <= 1e-10 && fro_violations == 0 && det_worst <= 1e-8 && mismatches == 0;
  });
}

inline CriterionResult measurement_bounds() {
  return detail::timed(9, "Measurement-probability bounds", 300.0, [](std::ostream& out) {
    const auto& t = detail::basis_trials();
    const double fro = frobenius_norm(detail::seed7().entries);
    const std::size_t r = 4;
    const double eps = 0.2;
    bool ok = true;
    std::ostringstream rates;
    for (std::size_t l = 0; l < r; ++l) {
      double reached = 0.0, attempts = 0.0;
      for (const auto* set : {&t.verification, &t.blind})
        for (const auto& b : *set)
          if (l < b.transcript.size()) {
            reached += 1;
            attempts += static_cast<double>(b.transcript[l].repetitions);
          }
      const double bound = measurement_prob_lower_bound(l, r, eps, fro);
      const double rate = attempts > 0 ? reached / attempts : 0.0;
      const double slack = 3.0 * std::sqrt(bound * (1.0 - bound) / std::max(attempts, 1.0));
      ok &= rate >= bound - slack;
      rates << (l ? ", " : "") << "l=" << l << ": " << rate << " vs " << bound;
    }
    const double eps3 = error_constants(r, fro, eps, {}, 1.0).eps3;
    double total = 0.0;
    for (std::size_t l = 1; l < r; ++l) total += false_selection_bound(l, eps3, measurement_prob_lower_bound(l, r, eps, fro));
    out << "per-round success rate vs bound {" << rates.str() << "}; false-selection sum " << total
        << " (need <= 0.25)";
    return ok && total <= 0.25;
  });
}

inline CriterionResult reproducibility() {
  return detail::timed(10, "Reproducibility", 60.0, [](std::ostream& out) {
    RunConfig c;
    c.instance.d = 16;
    c.instance.spectrum = {-0.6, 0.4, -0.2, 0.1};
    c.instance.seed = 7;
    c.seed = 7;
    const std::string a = report_json(run_pipeline(c), false).dump(2);
    const std::string b = report_json(run_pipeline(c), false).dump(2);
    c.backend = Backend::kStatevector;
    const std::string s1 = report_json(run_pipeline(c), false).dump(2);
    const std::string s2 = report_json(run_pipeline(c), false).dump(2);
    out << "analytic reports " << (a == b ? "identical" : "DIFFER") << " (" << a.size() << " bytes); statevector "
        << (s1 == s2 ? "identical" : "DIFFER");
    return a == b && s1 == s2;
  });
}

struct Suite {
  const char* name;
  std::function<CriterionResult()> run;
};

inline const std::vector<Suite>& suites() {
  static const std::vector<Suite> all = {
      {"pned", pned_distribution},         {"sve", sve_block_sampling},
      {"verdict", verdict_agreement},      {"rayleigh", rayleigh_contract},
      {"basis", basis_success},            {"perturbation", perturbation_property},
      {"estimators", estimator_contracts}, {"structure", structural_identities},
      {"bounds", measurement_bounds},      {"repro", reproducibility}};
  return all;
}

}  // namespace qncf::acceptance
