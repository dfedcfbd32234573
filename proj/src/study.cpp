#include "nh/study.hpp"

#include "nh/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace nh {

const IsotypicComponent* Decomposition::find(int j) const noexcept {
  for (const auto& c : components)
    if (c.j == j) return &c;
  return nullptr;
}

const UnboundedCriterion* CriticalAnalysis::criterion_for(int j) const noexcept {
  for (const auto& u : unbounded)
    if (u.j == j) return &u.criterion;
  return nullptr;
}

Decomposition decompose(const SystemSpec& spec, const GroupConfig& cfg) {
  Decomposition d;
  d.bundled_s4 = cfg.bundled_s4;
  d.structural = validate_structural(spec);

  std::vector<Permutation> gens;
  CharacterTableInput table_input;
  if (cfg.bundled_s4) {
    if (spec.n != 8) {
      throw Error(ErrorCode::DimensionMismatch, "bundled:S4 acts on 8 agents, system.n = " +
                                                    std::to_string(spec.n));
    }
    gens = cube::generators();
    table_input = cube::character_table();
  } else {
    for (const auto& g : cfg.generators) gens.push_back(Permutation::parse(g, spec.n));
  }
  d.group = generate_group(gens, spec.n, cfg.max_order);
  d.classes = conjugacy_classes(d.group);
  if (!cfg.bundled_s4) {
    if (cfg.table) {
      table_input = *cfg.table;
    } else if (d.group.order() == 1) {
      table_input = trivial_table_input();
    } else {
      throw Error(ErrorCode::MissingField,
                  "group.character_table is required for a group of order " +
                      std::to_string(d.group.order()));
    }
  }
  d.table = make_character_table(d.group, d.classes, table_input);

  // Column c of the table refers to class c of `classes` only after alignment.
  d.permutation_character.assign(d.table.class_reps.size(), 0.0);
  for (std::size_t c = 0; c < d.table.class_reps.size(); ++c)
    d.permutation_character[c] = d.table.class_reps[c].fixed_points();

  d.projectors = isotypic_projectors(d.group, d.table);
  d.equivariance_defect = equivariance_check(spec.coupling, d.group);
  d.components = decompose_coupling(spec.coupling, d.group, d.projectors, spec.a);
  return d;
}

namespace {

PointChecklist make_checklist(const CriticalAnalysis& ca, const Decomposition& d,
                              std::size_t index) {
  const CriticalPoint& p = ca.points[index];
  PointChecklist c;
  c.point = index;
  c.items.push_back({"structural conditions (oddness, symmetric coupling, kappa)",
                     d.structural.all_pass()});
  c.items.push_back({"alpha > 0 and beta > 0", p.alpha > 0.0 && p.beta > 0.0});
  const double bound = 1e-10 * (1.0 + std::abs(p.alpha) + p.beta * p.beta);
  c.items.push_back({"characteristic residual within bound", p.residual <= bound});
  c.items.push_back({"transversality u' != 0", p.crossing_number.has_value()});
  c.items.push_back({"crossing number nonzero",
                     p.crossing_number.has_value() && *p.crossing_number != 0});
  c.local_branch = std::all_of(c.items.begin(), c.items.end(),
                               [](const ChecklistItem& i) { return i.pass; });
  const UnboundedCriterion* u = ca.criterion_for(p.j);
  c.items.push_back({"|gamma (tau1 - tau2)| < |tau2 (gamma - a_j) - 2|", u && u->holds});
  c.unbounded_branch = c.local_branch && u && u->holds;
  return c;
}

}  // namespace

CriticalAnalysis analyze_critical(const SystemSpec& spec, const Decomposition& d,
                                  const ScanConfig& scan) {
  CriticalAnalysis ca;
  ca.blocks = make_blocks(spec, d.components);
  for (const auto& block : ca.blocks) {
    auto pts = find_critical_points(block, scan.beta_max, scan.options);
    ca.points.insert(ca.points.end(), pts.begin(), pts.end());
    // One criterion per component; a_j of the first cluster when split.
    if (!ca.criterion_for(block.j)) {
      const IsotypicComponent* comp = d.find(block.j);
      ca.unbounded.push_back({block.j, comp ? comp->mu : block.a_j - spec.a,
                              unbounded_criterion(block)});
    }
  }
  std::stable_sort(ca.points.begin(), ca.points.end(),
                   [](const CriticalPoint& l, const CriticalPoint& r) {
                     return l.j != r.j ? l.j < r.j : l.beta < r.beta;
                   });
  ca.verdict = stability_interval(spec, ca.blocks, ca.points, scan.steady_state);
  for (std::size_t i = 0; i < ca.points.size(); ++i)
    ca.checklist.push_back(make_checklist(ca, d, i));
  return ca;
}

HorizonPlan plan_horizon(const SimulateConfig& sim, const CriticalAnalysis* critical) {
  HorizonPlan h;
  if (critical) h.reference_beta = critical->verdict.beta0;
  double period = 0.0;
  if (!sim.t_end || !sim.transient) {
    if (!(h.reference_beta > 0.0)) {
      throw Error(ErrorCode::MissingField,
                  "simulate.t_end and simulate.transient are required without a critical point");
    }
    period = 2.0 * std::numbers::pi / h.reference_beta;
  }
  h.transient = sim.transient ? *sim.transient : sim.transient_periods * period;
  h.t_end = sim.t_end ? *sim.t_end : h.transient + sim.periods * period;
  if (!(h.t_end > h.transient)) {
    throw Error(ErrorCode::InvariantViolation, "simulate: transient leaves no retained window");
  }
  return h;
}

namespace {

Eigen::VectorXd component_vector(const SimulateConfig& sim, const Decomposition& d) {
  const IsotypicComponent* c = d.find(sim.component);
  if (!c) {
    throw Error(ErrorCode::InvariantViolation,
                "simulate.perturbation.component " + std::to_string(sim.component) +
                    " is not a component of the decomposition");
  }
  if (sim.basis_index >= c->basis.cols()) {
    throw Error(ErrorCode::InvariantViolation,
                "simulate.perturbation.basis_index " + std::to_string(sim.basis_index) +
                    " exceeds dim V" + std::to_string(sim.component));
  }
  return c->basis.col(sim.basis_index);
}

}  // namespace

InitialHistory make_initial(const SimulateConfig& sim, const Decomposition& d, int n) {
  if (sim.perturbation == Perturbation::Random) return InitialHistory::random(n, sim.epsilon, sim.seed);
  return InitialHistory::along(component_vector(sim, d), sim.epsilon);
}

Eigen::VectorXd make_probe(const SimulateConfig& sim, const Decomposition& d, int n) {
  if (sim.perturbation == Perturbation::Random) return Eigen::VectorXd::Unit(n, 0);
  return component_vector(sim, d);
}

IntegrationOptions make_integration(const SimulateConfig& sim, double t_end) {
  IntegrationOptions o;
  o.t_end = t_end;
  o.dt = sim.dt;
  o.dt_out = sim.dt_out;
  o.neutral_nodes = sim.neutral_nodes;
  o.retarded_nodes = sim.retarded_nodes;
  o.interpolation = sim.interpolation;
  o.divergence_bound = sim.divergence_bound;
  return o;
}

SimulationReport simulate(const RunConfig& cfg, const Decomposition& d,
                          const CriticalAnalysis* critical) {
  SimulationReport r;
  SystemSpec spec = cfg.system;
  if (cfg.simulate.alpha) spec.alpha = *cfg.simulate.alpha;
  r.alpha = spec.alpha;
  r.horizon = plan_horizon(cfg.simulate, critical);

  const InitialHistory initial = make_initial(cfg.simulate, d, spec.n);
  r.trajectory = integrate(spec, initial, make_integration(cfg.simulate, r.horizon.t_end));
  r.trajectory.meta.seed = cfg.simulate.seed;

  const Trajectory kept = discard_transient_duration(r.trajectory, r.horizon.transient);
  r.retained_from = r.trajectory.samples() - kept.samples();
  r.trajectory.meta.t_cut = kept.meta.t_cut;
  for (const auto& c : d.components)
    r.amplitudes.push_back({c.j, isotypic_amplitude(kept, c.projector)});

  const auto last = r.trajectory.state(r.trajectory.samples() - 1);
  for (double v : last) r.final_sup = std::max(r.final_sup, std::abs(v));
  r.decayed = r.final_sup < kConsensusThreshold;

  const Eigen::VectorXd probe = make_probe(cfg.simulate, d, spec.n);
  std::vector<double> series(kept.samples());
  for (std::size_t i = 0; i < kept.samples(); ++i) series[i] = probe.dot(kept.state_vector(i));
  if (series.size() >= 64) r.spectrum = dominant_frequency(series, kept.meta.dt_out);

  char buf[256];
  if (r.decayed) {
    std::snprintf(buf, sizeof buf, "decayed to consensus (|x|<%g)", kConsensusThreshold);
    r.summary = buf;
  } else if (!r.spectrum || !r.spectrum->oscillating) {
    r.summary = "no oscillation detected";
  } else {
    const double f = r.spectrum->dominant_frequency;
    if (critical) {
      for (const auto& p : critical->points) {
        if (!r.nearest || std::abs(p.beta - f) < std::abs(r.nearest->beta - f)) r.nearest = p;
      }
    }
    if (r.nearest) {
      r.relative_error = std::abs(f - r.nearest->beta) / r.nearest->beta;
      std::snprintf(buf, sizeof buf, "freq %.8g %s 5%% of beta_{%d,%d} = %.8g (rel. error %.3g)",
                    f, r.relative_error <= kFrequencyTolerance ? "within" : "outside",
                    r.nearest->n, r.nearest->j, r.nearest->beta, r.relative_error);
    } else {
      std::snprintf(buf, sizeof buf, "oscillation at %.8g rad/time", f);
    }
    r.summary = buf;
  }
  return r;
}

SweepResult sweep(const RunConfig& cfg, const Decomposition& d, const CriticalAnalysis* critical,
                  unsigned threads) {
  if (cfg.sweep.alphas.empty()) throw Error(ErrorCode::Usage, "sweep.alphas is empty");
  const HorizonPlan h = plan_horizon(cfg.simulate, critical);
  SweepOptions o;
  o.integration = make_integration(cfg.simulate, h.t_end);
  o.epsilon = cfg.simulate.epsilon;
  o.seed = cfg.simulate.seed;
  if (cfg.simulate.perturbation == Perturbation::Component)
    o.direction = make_probe(cfg.simulate, d, cfg.system.n);
  o.probe = make_probe(cfg.simulate, d, cfg.system.n);
  o.transient = h.transient;
  o.threads = threads;
  return alpha_sweep(cfg.system, cfg.sweep.alphas, d.components, o);
}

}  // namespace nh
