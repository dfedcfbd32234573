#pragma once

#include "nh/analysis.hpp"
#include "nh/config.hpp"

#include <optional>
#include <string>
#include <vector>

namespace nh {

struct Decomposition {
  PermGroup group;
  std::vector<ConjugacyClass> classes;
  CharacterTable table;
  std::vector<double> permutation_character;  // per table column
  std::vector<IsotypicProjector> projectors;
  std::vector<IsotypicComponent> components;
  double equivariance_defect = 0.0;
  bool bundled_s4 = false;
  ConditionReport structural;

  const IsotypicComponent* find(int j) const noexcept;
};

// Group, table, projectors and coupling blocks. A table is synthesized only
// for the trivial group.
Decomposition decompose(const SystemSpec& spec, const GroupConfig& group);

struct ComponentCriterion {
  int j = 0;
  double mu = 0.0;
  UnboundedCriterion criterion;
};

struct ChecklistItem {
  std::string name;
  bool pass = false;
};

// Numerically checkable hypotheses of the bifurcation results at one point.
struct PointChecklist {
  std::size_t point = 0;  // index into CriticalAnalysis::points
  std::vector<ChecklistItem> items;
  bool local_branch = false;
  bool unbounded_branch = false;
};

struct CriticalAnalysis {
  std::vector<CharacteristicBlock> blocks;
  std::vector<CriticalPoint> points;  // ordered by (j, beta)
  StabilityVerdict verdict;
  std::vector<ComponentCriterion> unbounded;
  std::vector<PointChecklist> checklist;

  const UnboundedCriterion* criterion_for(int j) const noexcept;
};

// Throws Error(NoCriticalPointsInRange) when the scan finds nothing.
CriticalAnalysis analyze_critical(const SystemSpec& spec, const Decomposition& decomposition,
                                  const ScanConfig& scan);

struct HorizonPlan {
  double t_end = 0.0;
  double transient = 0.0;
  double reference_beta = 0.0;  // beta0 when the horizon is in periods
};

HorizonPlan plan_horizon(const SimulateConfig& sim, const CriticalAnalysis* critical);

// Initial perturbation of amplitude epsilon.
InitialHistory make_initial(const SimulateConfig& sim, const Decomposition& decomposition,
                            int n);
// Direction used for the frequency estimate: the perturbed basis vector,
// or e_1 for random perturbations.
Eigen::VectorXd make_probe(const SimulateConfig& sim, const Decomposition& decomposition,
                           int n);
IntegrationOptions make_integration(const SimulateConfig& sim, double t_end);

struct ComponentAmplitude {
  int j = 0;
  Amplitude amplitude;
};

struct SimulationReport {
  double alpha = 0.0;
  HorizonPlan horizon;
  Trajectory trajectory;  // full run
  std::size_t retained_from = 0;
  std::vector<ComponentAmplitude> amplitudes;
  std::optional<SpectrumEstimate> spectrum;
  double final_sup = 0.0;
  bool decayed = false;
  // Predicted frequency closest to the measured one.
  std::optional<CriticalPoint> nearest;
  double relative_error = 0.0;
  std::string summary;
};

inline constexpr double kConsensusThreshold = 1e-4;
inline constexpr double kFrequencyTolerance = 0.05;

SimulationReport simulate(const RunConfig& config, const Decomposition& decomposition,
                          const CriticalAnalysis* critical);

SweepResult sweep(const RunConfig& config, const Decomposition& decomposition,
                  const CriticalAnalysis* critical, unsigned threads);

}  // namespace nh
